#include "qtag/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qtag/cache.hpp"
#include "qtag/errors.hpp"
#include "qtag/rng.hpp"
#include "qtag/serialize.hpp"

namespace qtag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed streams hanging off master_seed; member indices use 0..N-1, so these
// tags are far outside that range.
constexpr std::uint64_t kSplitStream = 0x53504C4954ull;
constexpr std::uint64_t kTrainEvalStream = 0x5452455641ull;
constexpr std::uint64_t kBaseAngleStream = 0x414E474C45ull;

std::string cache_dir_from_env() {
  const char* dir = std::getenv("QTAG_CACHE_DIR");
  return dir ? dir : "";
}

template <typename T>
T require_field(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

template <typename T>
T field_or(const json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

std::size_t as_positive_integer(double v, const std::string& what) {
  if (!(v >= 1.0) || v != std::floor(v)) {
    throw ConfigError(what + ": must be a positive integer, got " + std::to_string(v));
  }
  return static_cast<std::size_t>(v);
}

std::string format6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ParseError("write failed for '" + path + "'");
}

Dataset load_source(const DataSource& src) {
  if (src.synthetic) return generate_synthetic(*src.synthetic);
  if (src.path.empty()) throw ConfigError("data: either path or synthetic is required");
  return load_events(src.path);
}

}  // namespace

Preprocessing fit_preprocessing(const Dataset& train, const PreprocessSpec& spec) {
  Preprocessing p;
  Dataset current = train;
  if (spec.standardize) {
    p.scaler = fit_standardizer(current);
    current = apply_standardizer(current, *p.scaler);
  }
  if (spec.pca_k) {
    p.pca = fit_pca(current, *spec.pca_k);
  }
  return p;
}

Dataset apply_preprocessing(const Dataset& d, const Preprocessing& p) {
  Dataset current = d;
  if (p.scaler) current = apply_standardizer(current, *p.scaler);
  if (p.pca) current = apply_pca(current, *p.pca);
  return current;
}

EmbeddingSpec BackendConfig::resolve(std::size_t feature_count,
                                     std::uint64_t angle_seed) const {
  if (kind == "qubit") {
    return QubitEmbeddingSpec::from_seed(n_qubits, depth, angle_seed);
  }
  if (kind == "cv") {
    CvEmbeddingSpec spec;
    spec.n_modes = static_cast<int>(feature_count);
    spec.layers = layers;
    spec.beta = beta;
    spec.gamma = gamma;
    spec.truncation = truncation;
    spec.memory_budget = memory_budget;
    spec.validate();
    return spec;
  }
  throw ConfigError("backend.kind: must be 'qubit' or 'cv', got '" + kind + "'");
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "generation") return SweepAxis::Generation;
  if (name == "N") return SweepAxis::Members;
  if (name == "n_train") return SweepAxis::TrainPerMember;
  if (name == "pca_k") return SweepAxis::PcaK;
  if (name == "depth") return SweepAxis::Depth;
  if (name == "C_reg") return SweepAxis::CReg;
  throw ConfigError("sweep.axis: unknown axis '" + name +
                    "' (expected generation|N|n_train|pca_k|depth|C_reg)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Generation: return "generation";
    case SweepAxis::Members: return "N";
    case SweepAxis::TrainPerMember: return "n_train";
    case SweepAxis::PcaK: return "pca_k";
    case SweepAxis::Depth: return "depth";
    case SweepAxis::CReg: return "C_reg";
  }
  return "?";
}

ExperimentConfig parse_experiment_config(const json& j, bool require_sweep) {
  ExperimentConfig c;

  if (!j.contains("data")) throw ConfigError("data: missing section");
  const json& jd = j.at("data");
  if (jd.contains("synthetic")) {
    const json& js = jd.at("synthetic");
    SyntheticSpec spec;
    spec.count = require_field<std::size_t>(js, "data.synthetic", "count");
    spec.feature_count = require_field<std::size_t>(js, "data.synthetic", "features");
    spec.informative_count = require_field<std::size_t>(js, "data.synthetic", "informative");
    spec.class_separation = require_field<double>(js, "data.synthetic", "separation");
    spec.seed = require_field<std::uint64_t>(js, "data.synthetic", "seed");
    c.data.synthetic = spec;
  } else if (jd.contains("path")) {
    c.data.path = require_field<std::string>(jd, "data", "path");
  } else {
    throw ConfigError("data: needs either 'path' or 'synthetic'");
  }

  const json jp = j.value("preprocess", json::object());
  c.preprocess.standardize = field_or<bool>(jp, "preprocess", "standardize", true);
  if (jp.contains("pca") && !jp.at("pca").is_null()) {
    c.preprocess.pca_k = require_field<std::size_t>(jp, "preprocess", "pca");
    if (*c.preprocess.pca_k < 1) throw ConfigError("preprocess.pca: must be >= 1");
  }

  if (!j.contains("backend")) throw ConfigError("backend: missing section");
  const json& jb = j.at("backend");
  c.backend.kind = require_field<std::string>(jb, "backend", "kind");
  if (c.backend.kind == "qubit") {
    c.backend.n_qubits = require_field<int>(jb, "backend", "qubits");
    c.backend.depth = require_field<int>(jb, "backend", "depth");
    c.backend.share_angles = field_or<bool>(jb, "backend", "share_angles", false);
  } else if (c.backend.kind == "cv") {
    c.backend.layers = field_or<int>(jb, "backend", "layers", 1);
    c.backend.beta = field_or<double>(jb, "backend", "beta", 0.1);
    c.backend.gamma = field_or<double>(jb, "backend", "gamma", 0.1);
    c.backend.truncation = field_or<int>(jb, "backend", "truncation", 8);
    c.backend.memory_budget = field_or<std::uint64_t>(jb, "backend", "memory_budget",
                                                      std::uint64_t{1} << 20);
  } else {
    throw ConfigError("backend.kind: must be 'qubit' or 'cv'");
  }

  if (!j.contains("ensemble")) throw ConfigError("ensemble: missing section");
  const json& je = j.at("ensemble");
  c.ensemble.members = require_field<std::size_t>(je, "ensemble", "members");
  c.ensemble.train_per_member = require_field<std::size_t>(je, "ensemble", "train_per_member");
  c.ensemble.generations = require_field<std::size_t>(je, "ensemble", "generations");
  c.ensemble.c_reg = field_or<double>(je, "ensemble", "c_reg", 1.0);
  c.ensemble.master_seed = require_field<std::uint64_t>(je, "ensemble", "master_seed");
  c.ensemble.share_qubit_angles = c.backend.share_angles;
  if (c.ensemble.members < 1) throw ConfigError("ensemble.members: must be >= 1");
  if (c.ensemble.generations < 1) throw ConfigError("ensemble.generations: must be >= 1");
  if (!(c.ensemble.c_reg > 0)) throw ConfigError("ensemble.c_reg: must be positive");

  if (!j.contains("evaluation")) throw ConfigError("evaluation: missing section");
  const json& jv = j.at("evaluation");
  c.evaluation.test_count = require_field<std::size_t>(jv, "evaluation", "test_count");
  c.evaluation.binning = field_or<std::string>(jv, "evaluation", "binning", "static");
  if (c.evaluation.binning != "static" && c.evaluation.binning != "equal") {
    throw ConfigError("evaluation.binning: must be 'static' or 'equal'");
  }

  if (j.contains("sweep")) {
    const json& js = j.at("sweep");
    c.sweep_axis = sweep_axis_from_string(require_field<std::string>(js, "sweep", "axis"));
    c.sweep_values = require_field<std::vector<double>>(js, "sweep", "values");
    if (c.sweep_values.empty()) throw ConfigError("sweep.values: must be non-empty");
  } else if (require_sweep) {
    throw ConfigError("sweep: missing section (exactly one sweep axis is required)");
  }

  c.output_dir = field_or<std::string>(j, "", "output_dir", "");
  c.threads = field_or<int>(j, "", "threads", 0);
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  if (c.data.synthetic) {
    const auto& s = *c.data.synthetic;
    j["data"]["synthetic"] = {{"count", s.count},
                              {"features", s.feature_count},
                              {"informative", s.informative_count},
                              {"separation", s.class_separation},
                              {"seed", s.seed}};
  } else {
    j["data"]["path"] = c.data.path;
  }
  j["preprocess"]["standardize"] = c.preprocess.standardize;
  if (c.preprocess.pca_k) j["preprocess"]["pca"] = *c.preprocess.pca_k;
  json jb;
  jb["kind"] = c.backend.kind;
  if (c.backend.kind == "qubit") {
    jb["qubits"] = c.backend.n_qubits;
    jb["depth"] = c.backend.depth;
    jb["share_angles"] = c.backend.share_angles;
  } else {
    jb["layers"] = c.backend.layers;
    jb["beta"] = c.backend.beta;
    jb["gamma"] = c.backend.gamma;
    jb["truncation"] = c.backend.truncation;
    jb["memory_budget"] = c.backend.memory_budget;
  }
  j["backend"] = jb;
  j["ensemble"] = {{"members", c.ensemble.members},
                   {"train_per_member", c.ensemble.train_per_member},
                   {"generations", c.ensemble.generations},
                   {"c_reg", c.ensemble.c_reg},
                   {"master_seed", c.ensemble.master_seed}};
  j["evaluation"] = {{"test_count", c.evaluation.test_count},
                     {"binning", c.evaluation.binning}};
  if (c.sweep_axis) {
    j["sweep"] = {{"axis", to_string(*c.sweep_axis)}, {"values", c.sweep_values}};
  }
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  return j;
}

TagBinning make_binning(const std::string& mode, std::span<const double> qr) {
  if (mode == "static") return static_bins();
  if (mode == "equal") {
    std::vector<double> r(qr.size());
    for (std::size_t i = 0; i < qr.size(); ++i) r[i] = std::abs(qr[i]);
    return equal_population_bins(std::move(r));
  }
  throw ConfigError("binning: must be 'static' or 'equal'");
}

namespace {

struct Prepared {
  Dataset pool;        // preprocessed training pool
  Dataset test;        // preprocessed held-out test events
  Dataset train_eval;  // pool subsample used for the train-side efficiency
  EmbeddingSpec base;
};

Prepared prepare(const ExperimentConfig& c, const Dataset& raw_pool,
                 const Dataset& raw_test, const PreprocessSpec& pp,
                 const BackendConfig& bc, const EnsembleConfig& ec) {
  Prepared p;
  Preprocessing fitted = fit_preprocessing(raw_pool, pp);
  p.pool = apply_preprocessing(raw_pool, fitted);
  p.test = apply_preprocessing(raw_test, fitted);
  const std::size_t eval_n = std::min(p.pool.size(), c.evaluation.test_count);
  p.train_eval = subsample(p.pool, eval_n, derive_seed(ec.master_seed, kTrainEvalStream));
  p.base = bc.resolve(p.pool.feature_count, derive_seed(ec.master_seed, kBaseAngleStream));
  return p;
}

struct EffPair {
  double train = 0.0;
  double test = 0.0;
};

EffPair evaluate_prefix(const EnsembleModel& model, const Prepared& p,
                        const std::string& binning, int threads,
                        std::size_t member_prefix, std::size_t stage_prefix) {
  EffPair eff;
  std::vector<double> qr_test = ensemble_qr(model, p.test, threads, member_prefix, stage_prefix);
  std::vector<int> y_test = labels_of(p.test);
  eff.test = tag_report(qr_test, y_test, make_binning(binning, qr_test)).epsilon_eff;

  std::vector<double> qr_train =
      ensemble_qr(model, p.train_eval, threads, member_prefix, stage_prefix);
  std::vector<int> y_train = labels_of(p.train_eval);
  eff.train = tag_report(qr_train, y_train, make_binning(binning, qr_train)).epsilon_eff;
  return eff;
}

}  // namespace

void run_experiment(const ExperimentConfig& c) {
  if (!c.sweep_axis) throw ConfigError("sweep: missing section");
  if (c.output_dir.empty()) throw ConfigError("output_dir: missing field");
  const SweepAxis axis = *c.sweep_axis;

  Dataset raw = load_source(c.data);
  if (c.evaluation.test_count < 1 || c.evaluation.test_count >= raw.size()) {
    throw ConfigError("evaluation.test_count: must be in [1, count)");
  }
  auto perm = subsample_indices(raw.size(), raw.size(),
                                derive_seed(c.ensemble.master_seed, kSplitStream));
  std::vector<std::size_t> test_idx(perm.begin(),
                                    perm.begin() + static_cast<std::ptrdiff_t>(c.evaluation.test_count));
  std::vector<std::size_t> pool_idx(perm.begin() + static_cast<std::ptrdiff_t>(c.evaluation.test_count),
                                    perm.end());
  Dataset raw_test = select_events(raw, test_idx);
  Dataset raw_pool = select_events(raw, pool_idx);

  const std::string cache_dir = cache_dir_from_env();
  std::vector<std::array<double, 3>> rows;   // value, eff_train, eff_test
  std::vector<std::array<double, 2>> times;  // value, seconds

  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  const bool train_once = axis == SweepAxis::Generation || axis == SweepAxis::Members;
  if (train_once) {
    std::size_t max_value = 0;
    for (double v : c.sweep_values) {
      max_value = std::max(max_value, as_positive_integer(v, "sweep.values"));
    }
    EnsembleConfig ec = c.ensemble;
    if (axis == SweepAxis::Generation) {
      ec.generations = max_value;
    } else {
      ec.members = max_value;
    }
    auto t0 = clock::now();
    Prepared p = prepare(c, raw_pool, raw_test, c.preprocess, c.backend, ec);
    EnsembleModel model = train_ensemble(p.pool, p.base, ec, c.threads, cache_dir);
    double training_time = seconds_since(t0);

    // Stage/member prefixes reproduce smaller G and N exactly: stages are
    // nested and member k depends only on (master_seed, k).
    for (double v : c.sweep_values) {
      const std::size_t value = as_positive_integer(v, "sweep.values");
      auto t1 = clock::now();
      EffPair eff = evaluate_prefix(model, p, c.evaluation.binning, c.threads,
                                    axis == SweepAxis::Members ? value : kAllStages,
                                    axis == SweepAxis::Generation ? value : kAllStages);
      double elapsed = seconds_since(t1) + training_time;
      training_time = 0.0;  // charged to the first row only
      rows.push_back({v, eff.train, eff.test});
      times.push_back({v, elapsed});
    }
  } else {
    for (double v : c.sweep_values) {
      PreprocessSpec pp = c.preprocess;
      BackendConfig bc = c.backend;
      EnsembleConfig ec = c.ensemble;
      switch (axis) {
        case SweepAxis::TrainPerMember:
          ec.train_per_member = as_positive_integer(v, "sweep.values");
          break;
        case SweepAxis::PcaK:
          pp.pca_k = as_positive_integer(v, "sweep.values");
          break;
        case SweepAxis::Depth:
          if (bc.kind == "qubit") {
            bc.depth = static_cast<int>(as_positive_integer(v, "sweep.values"));
          } else {
            bc.layers = static_cast<int>(as_positive_integer(v, "sweep.values"));
          }
          break;
        case SweepAxis::CReg:
          if (!(v > 0)) throw ConfigError("sweep.values: C_reg values must be positive");
          ec.c_reg = v;
          break;
        default:
          break;
      }
      auto t0 = clock::now();
      Prepared p = prepare(c, raw_pool, raw_test, pp, bc, ec);
      EnsembleModel model = train_ensemble(p.pool, p.base, ec, c.threads, cache_dir);
      EffPair eff = evaluate_prefix(model, p, c.evaluation.binning, c.threads,
                                    kAllStages, kAllStages);
      rows.push_back({v, eff.train, eff.test});
      times.push_back({v, seconds_since(t0)});
    }
  }

  fs::create_directories(c.output_dir);
  std::string results = "sweep_value\tepsilon_eff_train\tepsilon_eff_test\n";
  for (const auto& r : rows) {
    results += format6(r[0]) + "\t" + format6(r[1]) + "\t" + format6(r[2]) + "\n";
  }
  write_text_file((fs::path(c.output_dir) / "results.tsv").string(), results);

  std::string timing = "sweep_value\twall_time_s\n";
  for (const auto& t : times) {
    timing += format6(t[0]) + "\t" + format6(t[1]) + "\n";
  }
  write_text_file((fs::path(c.output_dir) / "timings.tsv").string(), timing);

  json manifest;
  manifest["config"] = experiment_config_to_json(c);
  manifest["dataset_digest"] = hex64(dataset_digest(raw));
  manifest["results_digest"] = hex64(fnv1a(results));
  manifest["rows"] = rows.size();
  write_text_file((fs::path(c.output_dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");
}

void run_train(const ExperimentConfig& c, const std::string& model_dir) {
  Dataset raw = load_source(c.data);
  Preprocessing fitted = fit_preprocessing(raw, c.preprocess);
  Dataset pool = apply_preprocessing(raw, fitted);
  EmbeddingSpec base = c.backend.resolve(
      pool.feature_count, derive_seed(c.ensemble.master_seed, kBaseAngleStream));
  EnsembleModel model = train_ensemble(pool, base, c.ensemble, c.threads,
                                       cache_dir_from_env());
  save_ensemble(model_dir, model);

  json pp;
  pp["standardize"] = c.preprocess.standardize;
  if (fitted.scaler) pp["scaler"] = scaler_to_json(*fitted.scaler);
  if (fitted.pca) pp["pca"] = pca_to_json(*fitted.pca);
  write_text_file((fs::path(model_dir) / "preprocessing.json").string(),
                  pp.dump(2) + "\n");
}

EvaluationResult run_evaluate(const std::string& model_dir, const Dataset& raw_events,
                              const std::string& binning_mode, int threads) {
  EnsembleModel model = load_ensemble(model_dir);

  Preprocessing fitted;
  const std::string pp_path = (fs::path(model_dir) / "preprocessing.json").string();
  std::ifstream in(pp_path);
  if (in) {
    json pp;
    try {
      in >> pp;
    } catch (const json::parse_error& e) {
      throw ParseError(pp_path + ": " + e.what());
    }
    if (pp.contains("scaler")) fitted.scaler = scaler_from_json(pp.at("scaler"));
    if (pp.contains("pca")) fitted.pca = pca_from_json(pp.at("pca"));
  }
  Dataset test = apply_preprocessing(raw_events, fitted);

  EvaluationResult result;
  result.qr = ensemble_qr(model, test, threads);
  std::vector<int> labels = labels_of(test);
  result.report = tag_report(result.qr, labels, make_binning(binning_mode, result.qr));
  return result;
}

}  // namespace qtag
