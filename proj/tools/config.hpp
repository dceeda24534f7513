// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "compdiff/compose.hpp"
#include "compdiff/data.hpp"
#include "compdiff/eval.hpp"
#include "compdiff/model.hpp"
#include "compdiff/sample.hpp"
#include "compdiff/schedule.hpp"
#include "compdiff/scorefield.hpp"
#include "compdiff/train.hpp"

namespace compdiff::cli {

enum class FieldKind { analytic, trained };
enum class SamplerKind { ddpm, langevin };

struct ConceptEntry {
  std::string name;
  int id = 0;
  Vector mean;
  Vector var;
  bool operator==(const ConceptEntry& o) const { return name == o.name && id == o.id && mean == o.mean && var == o.var; }
};

struct SampleSection {
  std::int64_t n = 5000;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::ddpm;
  StepRule rule = StepRule::standard;
  SigmaVariant sigma = SigmaVariant::beta_tilde;
  std::optional<double> clip_denoised;
  int trajectory_stride = 0;
  int langevin_t = 1;
  int langevin_steps = 1000;
  double langevin_lambda = 0.005;
  bool operator==(const SampleSection&) const = default;
};

struct EvalSection {
  VerifierKind verifier = VerifierKind::analytic;
  double radius_cells = 1.5;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::string reference;  // optional sample CSV for energy distance
  bool operator==(const EvalSection&) const = default;
};

/// Everything one experiment needs, read from an INI file.
///
/// Sections: [experiment] [schedule] [field] [concept:<name>]... [data]
/// [model] [train] [sample] [compose] [eval] [oracle]. Unknown sections or
/// keys are rejected. to_ini() writes every key, so
/// from_ini(to_ini(c)) reproduces c.
struct ExperimentConfig {
  std::string name = "experiment";
  ScheduleKind schedule_kind = ScheduleKind::cosine;
  int schedule_steps = 1000;

  FieldKind field = FieldKind::analytic;
  Vector uncond_mean = Vector::Zero(2);
  Vector uncond_var = Vector::Ones(2);
  std::string checkpoint;  // trained field; empty means <out>/model.ckpt.json

  std::vector<ConceptEntry> concepts;
  DatasetConfig data;  // points2d concepts are filled from `concepts`
  DenoiserConfig model;
  TrainConfig train;
  SampleSection sample;
  std::string compose;
  EvalSection eval;
  // Grid oracle: nodes per axis; the box spans mean +- extent_std * std.
  int oracle_nodes = 512;
  double oracle_extent_std = 8.0;

  static ExperimentConfig from_ini(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_ini() const;

  // Cross-section checks; fills derived fields (data concepts, model
  // dimensions). Throws ValidationError.
  void finalize();

  NoiseSchedule schedule() const { return NoiseSchedule::build(schedule_kind, schedule_steps); }
  AnalyticGaussianField analytic_field() const;
  LabelResolver resolver() const;
  std::string label_name(const ConceptLabel& label) const;
  CompositionSpec parse_spec(const std::string& text) const;
  std::string format_spec(const CompositionSpec& spec) const;
  ConceptVerifier analytic_verifier() const;

  bool operator==(const ExperimentConfig& o) const { return to_ini() == o.to_ini(); }
};

}  // namespace compdiff::cli
