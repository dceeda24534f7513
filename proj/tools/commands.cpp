// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "compdiff/checkpoint.hpp"
#include "compdiff/errors.hpp"
#include "compdiff/eval.hpp"
#include "compdiff/io.hpp"
#include "compdiff/model.hpp"
#include "compdiff/sample.hpp"
#include "compdiff/train.hpp"

namespace compdiff::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Options = std::map<std::string, std::string>;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Context {
  std::optional<ExperimentConfig> config;
  Options options;
  fs::path out_dir;
  std::ostream* log;

  const ExperimentConfig& cfg() const {
    if (!config) throw ValidationError("this command needs --config");
    return *config;
  }
  std::string opt(const std::string& key, const std::string& fallback = "") const {
    auto it = options.find(key);
    return it == options.end() || it->second.empty() ? fallback : it->second;
  }
};

using Command = std::function<void(const Context&)>;

json provenance_doc(const std::string& command, const Context& ctx, const fs::path& artifact, json details) {
  json doc;
  doc["tool"] = "compdiff";
  doc["version"] = kToolVersion;
  doc["command"] = command;
  doc["artifact"] = artifact.filename().string();
  doc["options"] = ctx.options;
  doc["config"] = ctx.config ? ctx.config->to_ini() : std::string();
  doc["details"] = std::move(details);
  return doc;
}

void emit(const std::string& command, const Context& ctx, const fs::path& artifact, const std::string& contents,
          json details = json::object()) {
  fs::create_directories(artifact.parent_path().empty() ? fs::path(".") : artifact.parent_path());
  write_file_atomic(artifact, contents);
  write_file_atomic(provenance_path(artifact), provenance_doc(command, ctx, artifact, std::move(details)).dump(2) + "\n");
  *ctx.log << "wrote " << artifact.string() << "\n";
}

fs::path artifact_path(const Context& ctx, const std::string& fallback) {
  return ctx.out_dir / ctx.opt("out", fallback);
}

// --- schedule dump ---------------------------------------------------------

void cmd_schedule_dump(const Context& ctx) {
  const NoiseSchedule sched = ctx.cfg().schedule();
  std::ostringstream os;
  os << "t,beta,alpha,alpha_bar,sigma_beta,sigma_beta_tilde\n";
  for (int t = 1; t <= sched.steps(); ++t) {
    os << t << ',' << format_double(sched.beta(t)) << ',' << format_double(sched.alpha(t)) << ','
       << format_double(sched.alpha_bar(t)) << ',' << format_double(sched.posterior_sigma(t, SigmaVariant::beta))
       << ',' << format_double(sched.posterior_sigma(t, SigmaVariant::beta_tilde)) << '\n';
  }
  emit("schedule dump", ctx, artifact_path(ctx, "schedule.csv"), os.str());
}

// --- data gen --------------------------------------------------------------

std::string dataset_bytes(const ExperimentConfig& cfg, const Dataset& data) {
  if (data.kind == DatasetKind::blobs) return blobs_to_bytes(data, cfg.data.blobs, cfg.data.seed);
  Matrix m(static_cast<Eigen::Index>(data.size()), 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = data.x(static_cast<Eigen::Index>(i), 0);
    m(static_cast<Eigen::Index>(i), 1) = data.x(static_cast<Eigen::Index>(i), 1);
    m(static_cast<Eigen::Index>(i), 2) = data.labels[i].id();
  }
  return matrix_to_csv(m, {"x", "y", "label_id"});
}

void cmd_data_gen(const Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const Dataset data = generate_dataset(cfg.data);
  const std::string fallback = cfg.data.kind == DatasetKind::blobs ? "data.blobs" : "data.csv";
  emit("data gen", ctx, artifact_path(ctx, fallback), dataset_bytes(cfg, data),
       json{{"kind", to_string(cfg.data.kind)}, {"count", data.size()}, {"seed", cfg.data.seed}});
}

// --- train -----------------------------------------------------------------

void cmd_train(const Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const NoiseSchedule sched = cfg.schedule();
  const Dataset data = generate_dataset(cfg.data);
  DenoiserNet init = DenoiserNet::initialized(cfg.model, cfg.train.seed);
  std::ostream& log = *ctx.log;
  const int every = std::max(1, cfg.train.steps / 20);
  TrainResult result = train_loop(std::move(init), data, sched, cfg.train, [&](int step, double loss) {
    if ((step + 1) % every == 0) log << "step " << step + 1 << "/" << cfg.train.steps << " loss " << loss << "\n";
  });
  const std::size_t n = result.losses.size();
  const double final_loss = mean_of_range(result.losses, n - std::min<std::size_t>(n, 100), n);
  Checkpoint ckpt{std::move(result.net), cfg.schedule_kind, cfg.schedule_steps,
                  TrainingMeta{cfg.train.steps, final_loss, cfg.train.seed}};
  const fs::path out = artifact_path(ctx, "model.ckpt.json");
  const json details{{"final_loss", final_loss},
                     {"training_signal_ok", training_signal_ok(result.losses)},
                     {"null_label_fraction", result.labels_seen
                                                 ? static_cast<double>(result.null_labels_seen) / result.labels_seen
                                                 : 0.0}};
  fs::path curve = out;
  curve.replace_extension().replace_extension(".loss.csv");
  emit("train", ctx, curve, loss_curve_csv(result.losses), details);
  emit("train", ctx, out, checkpoint_to_json(ckpt), details);
}

// --- sample ----------------------------------------------------------------

fs::path checkpoint_location(const Context& ctx) {
  const std::string flag = ctx.opt("checkpoint");
  if (!flag.empty()) return flag;
  if (!ctx.cfg().checkpoint.empty()) return ctx.cfg().checkpoint;
  return ctx.out_dir / "model.ckpt.json";
}

std::unique_ptr<ScoreField> make_field(const Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  if (cfg.field == FieldKind::analytic) return std::make_unique<AnalyticGaussianField>(cfg.analytic_field());
  const fs::path path = checkpoint_location(ctx);
  if (!fs::exists(path)) throw ValidationError("checkpoint not found: " + path.string());
  Checkpoint ckpt = load_checkpoint(path);
  const NoiseSchedule sched = cfg.schedule();
  require_schedule(ckpt, sched);
  if (!(ckpt.net.config() == cfg.model)) throw ValidationError("checkpoint model does not match the [model] section");
  return std::make_unique<DenoiserField>(std::make_shared<const DenoiserNet>(std::move(ckpt.net)), sched);
}

CompositionSpec spec_for(const Context& ctx) {
  const std::string text = ctx.opt("compose", ctx.cfg().compose);
  if (text.empty()) throw ValidationError("no composition: pass --compose or set [compose] spec");
  return ctx.cfg().parse_spec(text);
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  const Eigen::Index d = traj.states.front().cols();
  os << "step,row";
  for (Eigen::Index j = 0; j < d; ++j) os << ",x" << j + 1;
  os << '\n';
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const Matrix& m = traj.states[k];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      os << traj.steps[k] << ',' << r;
      for (Eigen::Index j = 0; j < d; ++j) os << ',' << format_double(m(r, j));
      os << '\n';
    }
  }
  return os.str();
}

void cmd_sample(const Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const auto field = make_field(ctx);
  const CompositionSpec spec = spec_for(ctx);
  const std::string spec_text = cfg.format_spec(spec);
  const std::int64_t n = std::stoll(ctx.opt("n", std::to_string(cfg.sample.n)));
  const std::uint64_t seed = std::stoull(ctx.opt("seed", std::to_string(cfg.sample.seed)));
  const int stride = std::stoi(ctx.opt("trajectory_stride", std::to_string(cfg.sample.trajectory_stride)));

  SampleBatch batch;
  if (cfg.sample.sampler == SamplerKind::ddpm) {
    DdpmOptions opts;
    opts.step = {cfg.sample.rule, cfg.sample.sigma, cfg.sample.clip_denoised};
    opts.trajectory_stride = stride;
    batch = ddpm_sample(*field, spec, n, seed, opts, spec_text);
  } else {
    LangevinOptions opts{cfg.sample.langevin_t, cfg.sample.langevin_steps, cfg.sample.langevin_lambda};
    batch = langevin_sample(*field, spec, n, seed, opts, spec_text);
  }

  json details = json::parse(batch.provenance.to_json());
  json terms = json::array();
  for (const Term& t : spec.terms()) {
    terms.push_back({{"label", cfg.label_name(t.label)},
                     {"polarity", t.polarity == Polarity::positive ? "positive" : "negative"},
                     {"weight", t.weight}});
  }
  details["terms"] = terms;
  const fs::path out = artifact_path(ctx, "samples.csv");
  if (batch.trajectory) {
    fs::path traj = out;
    traj.replace_extension(".trajectory.csv");
    emit("sample", ctx, traj, trajectory_csv(*batch.trajectory), details);
  }
  emit("sample", ctx, out, matrix_to_csv(batch.samples), details);
}

// --- eval ------------------------------------------------------------------

Matrix read_samples(const std::string& path) {
  if (path.empty()) throw ValidationError("missing input sample file");
  if (!fs::exists(path)) throw ValidationError("sample file not found: " + path);
  return matrix_from_csv(read_file(path));
}

void cmd_eval(const Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg();
  const Matrix samples = read_samples(ctx.opt("samples"));
  if (samples.rows() == 0) throw ValidationError("sample file has no rows");
  const CompositionSpec spec = spec_for(ctx);

  ConceptVerifier verifier;
  if (cfg.eval.verifier == VerifierKind::analytic) {
    verifier = cfg.analytic_verifier();
  } else {
    DatasetConfig dc = cfg.data;
    dc.seed = cfg.eval.seed;
    verifier = train_binary_classifier(generate_dataset(dc), cfg.eval.seed, {}, cfg.data.blobs);
  }
  const AccuracyReport report = accuracy_report(samples, spec.terms(), verifier);

  Metrics m;
  m.accuracy = report.accuracy;
  m.n = report.n;
  m.verifier_kind = to_string(verifier.kind);
  m.per_concept_satisfaction = report.per_term;
  const std::string reference = ctx.opt("reference", cfg.eval.reference);
  if (!reference.empty()) m.energy_distance = energy_distance(samples, read_samples(reference));
  emit("eval", ctx, artifact_path(ctx, "metrics.json"), m.to_json(),
       json{{"spec", cfg.format_spec(spec)}, {"heldout_accuracy", verifier.heldout_accuracy}});
}

// --- oracle-check ----------------------------------------------------------

bool g_last_oracle_pass = true;

void cmd_oracle_check(const Context& ctx) {
  const auto checks = run_oracle_checks(ctx.cfg());
  const std::string table = format_oracle_table(checks);
  *ctx.log << table;
  g_last_oracle_pass = std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.pass; });
  emit("oracle-check", ctx, artifact_path(ctx, "oracle_check.txt"), table, json{{"all_pass", g_last_oracle_pass}});
}

// --- plot ------------------------------------------------------------------

void cmd_plot(const Context& ctx) {
  const Matrix samples = read_samples(ctx.opt("input"));
  if (samples.rows() == 0) throw ValidationError("cannot plot an empty sample file");
  std::string svg;
  if (samples.cols() == 2) {
    svg = points_svg(samples);
  } else {
    int h = 0;
    int w = 0;
    if (ctx.config) {
      h = ctx.config->data.blobs.height;
      w = ctx.config->data.blobs.width;
    } else {
      w = static_cast<int>(std::lround(std::sqrt(static_cast<double>(samples.cols()))));
      h = w;
    }
    if (static_cast<Eigen::Index>(h) * w != samples.cols()) {
      throw ValidationError("sample width " + std::to_string(samples.cols()) + " is neither 2 nor a blob grid");
    }
    svg = blobs_svg(samples, h, w);
  }
  emit("plot", ctx, artifact_path(ctx, "plot.svg"), svg);
}

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table{
      {"schedule dump", cmd_schedule_dump}, {"data gen", cmd_data_gen}, {"train", cmd_train},
      {"sample", cmd_sample},               {"eval", cmd_eval},         {"oracle-check", cmd_oracle_check},
      {"plot", cmd_plot},
  };
  return table;
}

// --- reproduce -------------------------------------------------------------

bool same_file(const fs::path& a, const fs::path& b) {
  return fs::exists(a) && fs::exists(b) && read_file(a) == read_file(b);
}

int cmd_reproduce(const fs::path& prov, const fs::path& out_dir, std::ostream& out) {
  if (!fs::exists(prov)) throw ValidationError("provenance file not found: " + prov.string());
  json doc;
  try {
    doc = json::parse(read_file(prov));
  } catch (const json::exception& e) {
    throw ValidationError("malformed provenance file: " + std::string(e.what()));
  }
  const std::string command = doc.at("command").get<std::string>();
  const auto it = commands().find(command);
  if (it == commands().end()) throw ValidationError("provenance names unknown command '" + command + "'");

  Context ctx;
  const std::string config_text = doc.at("config").get<std::string>();
  if (!config_text.empty()) ctx.config = ExperimentConfig::from_ini(config_text);
  ctx.options = doc.at("options").get<Options>();
  ctx.out_dir = out_dir;
  std::ostringstream sink;
  ctx.log = &sink;
  fs::create_directories(out_dir);
  it->second(ctx);

  const std::string name = doc.at("artifact").get<std::string>();
  const fs::path original = prov.parent_path() / fs::path(ctx.opt("out", name)).parent_path() / name;
  const fs::path fresh = out_dir / fs::path(ctx.opt("out", name)).parent_path() / name;
  const bool artifact_ok = same_file(original, fresh);
  const bool prov_ok = same_file(prov, provenance_path(fresh));
  out << "artifact   " << (artifact_ok ? "identical" : "DIFFERS") << "  " << fresh.string() << "\n";
  out << "provenance " << (prov_ok ? "identical" : "DIFFERS") << "  " << provenance_path(fresh).string() << "\n";
  return artifact_ok && prov_ok ? 0 : 2;
}

}  // namespace

fs::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "out";
}

fs::path provenance_path(const fs::path& artifact) {
  return fs::path(artifact.string() + ".provenance.json");
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"compdiff: composable diffusion toy experiments", "compdiff"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  std::string out_dir_flag;
  std::string out_name;
  Options opts;
  std::string provenance_file;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* o = sub->add_option("--config,-c", config_path, "experiment INI file");
    if (needs_config) o->required();
    sub->add_option("--out-dir", out_dir_flag, std::string("output directory (default $") + kOutDirEnv + " or ./out)");
    sub->add_option("--out,-o", out_name, "artifact file name inside the output directory");
  };

  auto* schedule = app.add_subcommand("schedule", "noise schedule utilities");
  schedule->require_subcommand(1);
  auto* dump = schedule->add_subcommand("dump", "write beta, alpha, alpha_bar and sigmas as CSV");
  common(dump, true);

  auto* data = app.add_subcommand("data", "dataset utilities");
  data->require_subcommand(1);
  auto* gen = data->add_subcommand("gen", "generate the configured dataset");
  common(gen, true);

  auto* train = app.add_subcommand("train", "train a denoiser on the configured dataset");
  common(train, true);

  std::string compose;
  std::string n;
  std::string seed;
  std::string stride;
  std::string checkpoint;
  auto* sample = app.add_subcommand("sample", "sample a composition");
  common(sample, true);
  sample->add_option("--compose", compose, "composition, e.g. \"c2:1.0,~c1:1.0\"");
  sample->add_option("--n", n, "number of samples");
  sample->add_option("--seed", seed, "sampling seed");
  sample->add_option("--trajectory-stride", stride, "also store every k-th intermediate state");
  sample->add_option("--checkpoint", checkpoint, "checkpoint for a trained field");

  std::string samples_file;
  std::string reference;
  auto* eval = app.add_subcommand("eval", "accuracy and energy distance of a sample file");
  common(eval, true);
  eval->add_option("--samples", samples_file, "sample CSV")->required();
  eval->add_option("--compose", compose, "concepts to verify (defaults to [compose] spec)");
  eval->add_option("--reference", reference, "reference sample CSV for energy distance");

  auto* oracle = app.add_subcommand("oracle-check", "analytic vs grid oracle and composition identities");
  common(oracle, true);

  std::string input;
  auto* plot = app.add_subcommand("plot", "render a sample CSV as SVG");
  common(plot, false);
  plot->add_option("--input,-i", input, "sample CSV")->required();

  auto* reproduce = app.add_subcommand("reproduce", "regenerate an artifact from its provenance and compare bytes");
  reproduce->add_option("--provenance,-p", provenance_file, "provenance JSON")->required();
  reproduce->add_option("--out-dir", out_dir_flag, "where to write the regenerated artifact");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    if (reproduce->parsed()) {
      const fs::path dir = out_dir_flag.empty() ? resolve_out_dir("") / "reproduce" : fs::path(out_dir_flag);
      return cmd_reproduce(provenance_file, dir, out);
    }
    std::string name;
    CLI::App* chosen = nullptr;
    for (auto* sub : {dump, gen, train, sample, eval, oracle, plot}) {
      if (sub->parsed()) chosen = sub;
    }
    name = chosen == dump ? "schedule dump" : chosen == gen ? "data gen" : chosen->get_name();

    Context ctx;
    if (!config_path.empty()) ctx.config = ExperimentConfig::load(config_path);
    ctx.out_dir = resolve_out_dir(out_dir_flag);
    ctx.log = &out;
    auto set = [&](const char* key, const std::string& v) {
      if (!v.empty()) ctx.options[key] = v;
    };
    set("out", out_name);
    set("compose", compose);
    set("n", n);
    set("seed", seed);
    set("trajectory_stride", stride);
    set("checkpoint", checkpoint);
    set("samples", samples_file);
    set("reference", reference);
    set("input", input);
    for (const char* key : {"n", "seed", "trajectory_stride"}) {
      auto it = ctx.options.find(key);
      if (it == ctx.options.end()) continue;
      if (it->second.find_first_not_of("0123456789") != std::string::npos) {
        throw ValidationError(std::string("--") + key + " must be a nonnegative integer");
      }
    }
    if (name == "sample" && ctx.config && ctx.config->field == FieldKind::trained) {
      ctx.options["checkpoint"] = checkpoint_location(ctx).string();
    }
    g_last_oracle_pass = true;
    commands().at(name)(ctx);
    return g_last_oracle_pass ? 0 : 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeFailure& e) {
    err << "failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return 2;
  }
}

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, out, err);
}

}  // namespace compdiff::cli
