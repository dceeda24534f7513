// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "compdiff/model.hpp"
#include "compdiff/schedule.hpp"

namespace compdiff {

inline constexpr int kCheckpointVersion = 1;

struct TrainingMeta {
  std::int64_t steps = 0;
  std::optional<double> loss;  // absent for an untrained network
  std::uint64_t seed = 0;
};

struct Checkpoint {
  DenoiserNet net;
  ScheduleKind schedule_kind = ScheduleKind::cosine;
  int schedule_steps = 1000;
  TrainingMeta meta;
};

// JSON layout:
// {version, config:{...}, schedule:{kind,T}, params:[{name,shape,data}],
//  meta:{steps,loss,seed}}
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws ScheduleMismatch unless the checkpoint was trained with `sched`.
void require_schedule(const Checkpoint& ckpt, const NoiseSchedule& sched);

}  // namespace compdiff
