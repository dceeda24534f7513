// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "compdiff/errors.hpp"
#include "compdiff/io.hpp"

namespace compdiff::cli {
namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"name"}},
      {"schedule", {"kind", "T"}},
      {"field", {"kind", "uncond_mean", "uncond_var", "checkpoint"}},
      {"concept", {"id", "mean", "var"}},
      {"data", {"kind", "count", "seed", "height", "width", "blob_std", "min_objects", "max_objects", "retry_budget"}},
      {"model", {"hidden", "time_embed_dim", "label_embed_dim"}},
      {"train",
       {"steps", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "weight_decay", "label_dropout", "seed"}},
      {"sample",
       {"n", "seed", "sampler", "rule", "sigma_variant", "clip_denoised", "trajectory_stride", "langevin_t",
        "langevin_steps", "langevin_lambda"}},
      {"compose", {"spec"}},
      {"eval", {"verifier", "radius_cells", "threshold", "seed", "reference"}},
      {"oracle", {"nodes", "extent_std"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!text.empty() && text.back() == ',') out.push_back("");
  return out;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string str(const std::string& key, const std::string& fallback) const { return raw(key).value_or(fallback); }

  template <typename T>
  T num(const std::string& key, T fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    return parse<T>(key, *v);
  }

  template <typename T>
  T parse(const std::string& key, const std::string& text) const {
    T value{};
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty()) {
      throw ValidationError("[" + name_ + "] " + key + ": '" + text + "' is not a valid number");
    }
    return value;
  }

  Vector vec(const std::string& key, const Vector& fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    const auto items = split_list(*v);
    Vector out(static_cast<Eigen::Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) out[static_cast<Eigen::Index>(i)] = parse<double>(key, items[i]);
    return out;
  }

  std::vector<int> ints(const std::string& key, const std::vector<int>& fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<int> out;
    for (const auto& item : split_list(*v)) out.push_back(parse<int>(key, item));
    return out;
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

std::string join(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out;
}

FieldKind parse_field_kind(const std::string& s) {
  if (s == "analytic") return FieldKind::analytic;
  if (s == "trained") return FieldKind::trained;
  throw ValidationError("[field] kind must be analytic or trained, got '" + s + "'");
}

SamplerKind parse_sampler(const std::string& s) {
  if (s == "ddpm") return SamplerKind::ddpm;
  if (s == "langevin") return SamplerKind::langevin;
  throw ValidationError("[sample] sampler must be ddpm or langevin, got '" + s + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_ini(const std::string& text) {
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  ExperimentConfig c;
  std::map<std::string, const pt::ptree*> sections;
  for (const auto& [name, child] : root) {
    if (child.empty() && !child.data().empty()) throw ValidationError("config key '" + name + "' outside any section");
    std::string kind = name;
    if (name.rfind("concept:", 0) == 0) kind = "concept";
    const auto it = known_keys().find(kind);
    if (it == known_keys().end()) throw ValidationError("unknown config section [" + name + "]");
    for (const auto& [key, value] : child) {
      if (!it->second.contains(key)) throw ValidationError("unknown key '" + key + "' in [" + name + "]");
    }
    if (kind == "concept") {
      const Section s(&child, name);
      ConceptEntry e;
      e.name = trim(name.substr(8));
      if (e.name.empty()) throw ValidationError("concept section needs a name: [concept:<name>]");
      if (!s.raw("id") || !s.raw("mean") || !s.raw("var")) {
        throw ValidationError("[" + name + "] needs id, mean and var");
      }
      e.id = s.num<int>("id", 0);
      e.mean = s.vec("mean", {});
      e.var = s.vec("var", {});
      c.concepts.push_back(std::move(e));
    } else {
      sections[name] = &child;
    }
  }
  auto sec = [&](const std::string& n) {
    auto it = sections.find(n);
    return Section(it == sections.end() ? nullptr : it->second, n);
  };

  const Section experiment = sec("experiment");
  c.name = experiment.str("name", c.name);

  const Section schedule = sec("schedule");
  c.schedule_kind = parse_schedule_kind(schedule.str("kind", to_string(c.schedule_kind)));
  c.schedule_steps = schedule.num<int>("T", c.schedule_steps);

  const Section field = sec("field");
  c.field = parse_field_kind(field.str("kind", "analytic"));
  c.uncond_mean = field.vec("uncond_mean", c.uncond_mean);
  c.uncond_var = field.vec("uncond_var", c.uncond_var);
  c.checkpoint = field.str("checkpoint", "");

  const Section data = sec("data");
  c.data.kind = parse_dataset_kind(data.str("kind", to_string(c.data.kind)));
  c.data.count = data.num<int>("count", c.data.count);
  c.data.seed = data.num<std::uint64_t>("seed", c.data.seed);
  c.data.blobs.height = data.num<int>("height", c.data.blobs.height);
  c.data.blobs.width = data.num<int>("width", c.data.blobs.width);
  c.data.blobs.blob_std = data.num<double>("blob_std", c.data.blobs.blob_std);
  c.data.blobs.min_objects = data.num<int>("min_objects", c.data.blobs.min_objects);
  c.data.blobs.max_objects = data.num<int>("max_objects", c.data.blobs.max_objects);
  c.data.blobs.retry_budget = data.num<int>("retry_budget", c.data.blobs.retry_budget);

  const Section model = sec("model");
  c.model.hidden_widths = model.ints("hidden", c.model.hidden_widths);
  c.model.time_embed_dim = model.num<int>("time_embed_dim", c.model.time_embed_dim);
  c.model.label_embed_dim = model.num<int>("label_embed_dim", c.model.label_embed_dim);

  const Section train = sec("train");
  c.train.steps = train.num<int>("steps", c.train.steps);
  c.train.batch_size = train.num<int>("batch_size", c.train.batch_size);
  c.train.adam.learning_rate = train.num<double>("learning_rate", c.train.adam.learning_rate);
  c.train.adam.beta1 = train.num<double>("beta1", c.train.adam.beta1);
  c.train.adam.beta2 = train.num<double>("beta2", c.train.adam.beta2);
  c.train.adam.epsilon = train.num<double>("epsilon", c.train.adam.epsilon);
  c.train.adam.weight_decay = train.num<double>("weight_decay", c.train.adam.weight_decay);
  c.train.label_dropout = train.num<double>("label_dropout", c.train.label_dropout);
  c.train.seed = train.num<std::uint64_t>("seed", c.train.seed);

  const Section sample = sec("sample");
  c.sample.n = sample.num<std::int64_t>("n", c.sample.n);
  c.sample.seed = sample.num<std::uint64_t>("seed", c.sample.seed);
  c.sample.sampler = parse_sampler(sample.str("sampler", "ddpm"));
  c.sample.rule = parse_step_rule(sample.str("rule", to_string(c.sample.rule)));
  c.sample.sigma = parse_sigma_variant(sample.str("sigma_variant", to_string(c.sample.sigma)));
  const std::string clip = sample.str("clip_denoised", "none");
  if (clip != "none") c.sample.clip_denoised = sample.parse<double>("clip_denoised", clip);
  c.sample.trajectory_stride = sample.num<int>("trajectory_stride", c.sample.trajectory_stride);
  c.sample.langevin_t = sample.num<int>("langevin_t", c.sample.langevin_t);
  c.sample.langevin_steps = sample.num<int>("langevin_steps", c.sample.langevin_steps);
  c.sample.langevin_lambda = sample.num<double>("langevin_lambda", c.sample.langevin_lambda);

  c.compose = sec("compose").str("spec", "");

  const Section ev = sec("eval");
  c.eval.verifier = parse_verifier_kind(ev.str("verifier", "analytic"));
  c.eval.radius_cells = ev.num<double>("radius_cells", c.eval.radius_cells);
  c.eval.threshold = ev.num<double>("threshold", c.eval.threshold);
  c.eval.seed = ev.num<std::uint64_t>("seed", c.eval.seed);
  c.eval.reference = ev.str("reference", "");

  const Section oracle = sec("oracle");
  c.oracle_nodes = oracle.num<int>("nodes", c.oracle_nodes);
  c.oracle_extent_std = oracle.num<double>("extent_std", c.oracle_extent_std);

  std::sort(c.concepts.begin(), c.concepts.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  c.finalize();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file not found: " + path.string());
  return from_ini(read_file(path));
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream os;
  auto f = [](double v) { return format_double(v); };
  os << "[experiment]\nname = " << name << "\n\n";
  os << "[schedule]\nkind = " << to_string(schedule_kind) << "\nT = " << schedule_steps << "\n\n";
  os << "[field]\nkind = " << (field == FieldKind::analytic ? "analytic" : "trained") << "\n";
  os << "uncond_mean = " << join(uncond_mean) << "\nuncond_var = " << join(uncond_var) << "\n";
  os << "checkpoint = " << checkpoint << "\n\n";
  for (const auto& e : concepts) {
    os << "[concept:" << e.name << "]\nid = " << e.id << "\nmean = " << join(e.mean) << "\nvar = " << join(e.var)
       << "\n\n";
  }
  const auto& b = data.blobs;
  os << "[data]\nkind = " << to_string(data.kind) << "\ncount = " << data.count << "\nseed = " << data.seed << "\n";
  os << "height = " << b.height << "\nwidth = " << b.width << "\nblob_std = " << f(b.blob_std) << "\n";
  os << "min_objects = " << b.min_objects << "\nmax_objects = " << b.max_objects << "\nretry_budget = " << b.retry_budget
     << "\n\n";
  os << "[model]\nhidden = " << join(model.hidden_widths) << "\ntime_embed_dim = " << model.time_embed_dim
     << "\nlabel_embed_dim = " << model.label_embed_dim << "\n\n";
  const auto& a = train.adam;
  os << "[train]\nsteps = " << train.steps << "\nbatch_size = " << train.batch_size
     << "\nlearning_rate = " << f(a.learning_rate) << "\nbeta1 = " << f(a.beta1) << "\nbeta2 = " << f(a.beta2)
     << "\nepsilon = " << f(a.epsilon) << "\nweight_decay = " << f(a.weight_decay)
     << "\nlabel_dropout = " << f(train.label_dropout) << "\nseed = " << train.seed << "\n\n";
  os << "[sample]\nn = " << sample.n << "\nseed = " << sample.seed
     << "\nsampler = " << (sample.sampler == SamplerKind::ddpm ? "ddpm" : "langevin") << "\nrule = " << to_string(sample.rule)
     << "\nsigma_variant = " << to_string(sample.sigma)
     << "\nclip_denoised = " << (sample.clip_denoised ? f(*sample.clip_denoised) : std::string("none"))
     << "\ntrajectory_stride = " << sample.trajectory_stride << "\nlangevin_t = " << sample.langevin_t
     << "\nlangevin_steps = " << sample.langevin_steps << "\nlangevin_lambda = " << f(sample.langevin_lambda) << "\n\n";
  os << "[compose]\nspec = " << compose << "\n\n";
  os << "[eval]\nverifier = " << to_string(eval.verifier) << "\nradius_cells = " << f(eval.radius_cells)
     << "\nthreshold = " << f(eval.threshold) << "\nseed = " << eval.seed << "\nreference = " << eval.reference << "\n\n";
  os << "[oracle]\nnodes = " << oracle_nodes << "\nextent_std = " << f(oracle_extent_std) << "\n";
  return os.str();
}

void ExperimentConfig::finalize() {
  if (schedule_steps < 1) throw ValidationError("[schedule] T must be at least 1");
  if (name.empty()) throw ValidationError("[experiment] name must not be empty");

  std::set<int> ids;
  std::set<std::string> names;
  for (const auto& e : concepts) {
    if (!ids.insert(e.id).second) throw ValidationError("duplicate concept id " + std::to_string(e.id));
    if (!names.insert(e.name).second) throw ValidationError("duplicate concept name " + e.name);
    if (e.id < 0) throw ValidationError("concept ids must be nonnegative");
    GaussianConceptSpec{e.mean, e.var}.validate();
  }

  if (data.kind == DatasetKind::points2d) {
    data.concepts.clear();
    for (const auto& e : concepts) {
      if (e.mean.size() != 2) throw ValidationError("points2d concept " + e.name + " must be 2-D");
      data.concepts.push_back({e.id, {e.mean, e.var}});
    }
    model.data_dim = 2;
    model.num_discrete_concepts = concepts.empty() ? 0 : concepts.back().id + 1;
    model.coord_dim = 0;
  } else {
    model.data_dim = data.blobs.height * data.blobs.width;
    model.num_discrete_concepts = 0;
    model.coord_dim = 2;
  }

  if (field == FieldKind::analytic) {
    GaussianConceptSpec{uncond_mean, uncond_var}.validate();
    for (const auto& e : concepts) {
      if (e.mean.size() != uncond_mean.size()) {
        throw ValidationError("concept " + e.name + " dimension differs from the unconditional spec");
      }
    }
  }
  if (sample.n < 1) throw ValidationError("[sample] n must be at least 1");
  if (sample.clip_denoised && !(*sample.clip_denoised > 0.0)) {
    throw ValidationError("[sample] clip_denoised must be positive or none");
  }
  if (sample.clip_denoised && sample.rule != StepRule::standard) {
    throw ValidationError("[sample] clip_denoised applies to the standard rule only");
  }
  if (sample.trajectory_stride < 0) throw ValidationError("[sample] trajectory_stride must be nonnegative");
  if (sample.langevin_t < 1 || sample.langevin_t > schedule_steps) {
    throw ValidationError("[sample] langevin_t must lie in [1, T]");
  }
  if (sample.langevin_steps < 1) throw ValidationError("[sample] langevin_steps must be at least 1");
  if (!(sample.langevin_lambda > 0.0)) throw ValidationError("[sample] langevin_lambda must be positive");
  if (oracle_nodes < 16) throw ValidationError("[oracle] nodes must be at least 16");
  if (!(oracle_extent_std >= 4.0)) throw ValidationError("[oracle] extent_std must be at least 4");
  if (!(eval.radius_cells >= 0.0)) throw ValidationError("[eval] radius_cells must be nonnegative");
  if (!compose.empty()) parse_spec(compose);
}

AnalyticGaussianField ExperimentConfig::analytic_field() const {
  std::map<ConceptLabel, GaussianConceptSpec> table;
  for (const auto& e : concepts) table.emplace(ConceptLabel::discrete(e.id), GaussianConceptSpec{e.mean, e.var});
  return AnalyticGaussianField(schedule(), {uncond_mean, uncond_var}, std::move(table));
}

LabelResolver ExperimentConfig::resolver() const {
  return [this](std::string_view token) -> std::optional<ConceptLabel> {
    for (const auto& e : concepts) {
      if (e.name == token) return ConceptLabel::discrete(e.id);
    }
    return std::nullopt;
  };
}

std::string ExperimentConfig::label_name(const ConceptLabel& label) const {
  if (label.is_discrete()) {
    for (const auto& e : concepts) {
      if (e.id == label.id()) return e.name;
    }
  }
  return label.str();
}

CompositionSpec ExperimentConfig::parse_spec(const std::string& text) const {
  return parse_compose_spec(text, resolver(), 2);
}

std::string ExperimentConfig::format_spec(const CompositionSpec& spec) const {
  return format_compose_spec(spec, [this](const ConceptLabel& l) { return label_name(l); });
}

ConceptVerifier ExperimentConfig::analytic_verifier() const {
  if (data.kind == DatasetKind::blobs) {
    return ConceptVerifier::analytic_blobs(data.blobs, eval.radius_cells, eval.threshold);
  }
  std::vector<PointConcept> table;
  for (const auto& e : concepts) table.push_back({e.id, {e.mean, e.var}});
  return ConceptVerifier::analytic_points(std::move(table));
}

}  // namespace compdiff::cli
