// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "compdiff/checkpoint.hpp"

#include <json.hpp>

#include "compdiff/errors.hpp"
#include "compdiff/io.hpp"

namespace compdiff {

using nlohmann::json;

namespace {

json config_to_json(const DenoiserConfig& c) {
  return json{{"data_dim", c.data_dim},
              {"hidden_widths", c.hidden_widths},
              {"time_embed_dim", c.time_embed_dim},
              {"label_embed_dim", c.label_embed_dim},
              {"num_discrete_concepts", c.num_discrete_concepts},
              {"coord_dim", c.coord_dim}};
}

DenoiserConfig config_from_json(const json& j) {
  DenoiserConfig c;
  c.data_dim = j.at("data_dim").get<int>();
  c.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
  c.time_embed_dim = j.at("time_embed_dim").get<int>();
  c.label_embed_dim = j.at("label_embed_dim").get<int>();
  c.num_discrete_concepts = j.at("num_discrete_concepts").get<int>();
  c.coord_dim = j.at("coord_dim").get<int>();
  return c;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json params = json::array();
  for (const auto& b : ckpt.net.blocks()) {
    const auto data = ckpt.net.params().subspan(b.offset, b.size());
    params.push_back({{"name", b.name}, {"shape", {b.rows, b.cols}}, {"data", std::vector<double>(data.begin(), data.end())}});
  }
  json meta{{"steps", ckpt.meta.steps}, {"seed", ckpt.meta.seed}};
  meta["loss"] = ckpt.meta.loss ? json(*ckpt.meta.loss) : json(nullptr);
  json doc{{"version", kCheckpointVersion},
           {"config", config_to_json(ckpt.net.config())},
           {"schedule", {{"kind", to_string(ckpt.schedule_kind)}, {"T", ckpt.schedule_steps}}},
           {"params", std::move(params)},
           {"meta", std::move(meta)}};
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptCheckpoint(std::string("corrupt checkpoint: ") + e.what());
  }
  try {
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ValidationError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    DenoiserNet net(config_from_json(doc.at("config")));
    const auto& params = doc.at("params");
    if (params.size() != net.blocks().size()) throw CorruptCheckpoint("checkpoint parameter block count mismatch");
    std::size_t total = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      const auto& b = net.blocks()[i];
      const auto shape = p.at("shape").get<std::vector<int>>();
      if (p.at("name").get<std::string>() != b.name || shape.size() != 2 || shape[0] != b.rows || shape[1] != b.cols) {
        throw CorruptCheckpoint("checkpoint block '" + p.at("name").get<std::string>() + "' has the wrong shape");
      }
      const auto data = p.at("data").get<std::vector<double>>();
      if (data.size() != b.size()) throw CorruptCheckpoint("checkpoint block '" + b.name + "' has the wrong size");
      std::copy(data.begin(), data.end(), net.params().begin() + static_cast<std::ptrdiff_t>(b.offset));
      total += data.size();
    }
    if (total != net.param_count()) throw CorruptCheckpoint("checkpoint parameter count mismatch");

    Checkpoint ckpt{std::move(net), parse_schedule_kind(doc.at("schedule").at("kind").get<std::string>()),
                    doc.at("schedule").at("T").get<int>(), {}};
    const auto& meta = doc.at("meta");
    ckpt.meta.steps = meta.at("steps").get<std::int64_t>();
    ckpt.meta.seed = meta.at("seed").get<std::uint64_t>();
    if (!meta.at("loss").is_null()) ckpt.meta.loss = meta.at("loss").get<double>();
    return ckpt;
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("corrupt checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_file(path)); }

void require_schedule(const Checkpoint& ckpt, const NoiseSchedule& sched) {
  if (ckpt.schedule_kind != sched.kind() || ckpt.schedule_steps != sched.steps()) {
    throw ScheduleMismatch("checkpoint was trained with " + to_string(ckpt.schedule_kind) + "/T=" +
                           std::to_string(ckpt.schedule_steps) + " but the run uses " + to_string(sched.kind()) +
                           "/T=" + std::to_string(sched.steps()));
  }
}

}  // namespace compdiff
