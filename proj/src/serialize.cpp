#include "qtag/serialize.hpp"

#include <filesystem>
#include <fstream>

#include "qtag/errors.hpp"

namespace qtag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json dataset_to_json(const Dataset& d) {
  json j;
  j["feature_count"] = d.feature_count;
  json events = json::array();
  for (const auto& e : d.events) {
    events.push_back({{"label", e.label}, {"features", e.features}});
  }
  j["events"] = std::move(events);
  return j;
}

Dataset dataset_from_json(const json& j) {
  Dataset d;
  d.feature_count = j.at("feature_count").get<std::size_t>();
  for (const auto& je : j.at("events")) {
    Event e;
    e.label = je.at("label").get<int>();
    e.features = je.at("features").get<std::vector<double>>();
    d.events.push_back(std::move(e));
  }
  return d;
}

json json_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

void json_to_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw ParseError("write failed for '" + path + "'");
}

}  // namespace

json spec_to_json(const EmbeddingSpec& spec) {
  json j;
  if (const auto* q = std::get_if<QubitEmbeddingSpec>(&spec)) {
    j["kind"] = "qubit";
    j["n_qubits"] = q->n_qubits;
    j["depth"] = q->depth;
    j["theta"] = q->theta;
    j["phi"] = q->phi;
    j["angle_seed"] = q->angle_seed;
  } else {
    const auto& c = std::get<CvEmbeddingSpec>(spec);
    j["kind"] = "cv";
    j["n_modes"] = c.n_modes;
    j["layers"] = c.layers;
    j["beta"] = c.beta;
    j["gamma"] = c.gamma;
    j["truncation"] = c.truncation;
    j["memory_budget"] = c.memory_budget;
  }
  return j;
}

EmbeddingSpec spec_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "qubit") {
    QubitEmbeddingSpec q;
    q.n_qubits = j.at("n_qubits").get<int>();
    q.depth = j.at("depth").get<int>();
    q.theta = j.at("theta").get<std::vector<double>>();
    q.phi = j.at("phi").get<std::vector<double>>();
    q.angle_seed = j.at("angle_seed").get<std::uint64_t>();
    q.validate();
    return q;
  }
  if (kind == "cv") {
    CvEmbeddingSpec c;
    c.n_modes = j.at("n_modes").get<int>();
    c.layers = j.at("layers").get<int>();
    c.beta = j.at("beta").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.truncation = j.at("truncation").get<int>();
    if (j.contains("memory_budget")) {
      c.memory_budget = j.at("memory_budget").get<std::uint64_t>();
    }
    c.validate();
    return c;
  }
  throw ConfigError("spec_from_json: unknown backend kind '" + kind + "'");
}

json svm_to_json(const SvmModel& m) {
  return json{{"support_indices", m.support_indices},
              {"dual_coeffs", m.dual_coeffs},
              {"bias", m.bias},
              {"c_reg", m.c_reg}};
}

SvmModel svm_from_json(const json& j) {
  SvmModel m;
  m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
  m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.c_reg = j.at("c_reg").get<double>();
  if (m.support_indices.size() != m.dual_coeffs.size()) {
    throw ParseError("svm_from_json: support/coefficient count mismatch");
  }
  return m;
}

json scaler_to_json(const ScalerParams& s) {
  return json{{"means", s.means}, {"stdevs", s.stdevs}};
}

ScalerParams scaler_from_json(const json& j) {
  ScalerParams s;
  s.means = j.at("means").get<std::vector<double>>();
  s.stdevs = j.at("stdevs").get<std::vector<double>>();
  return s;
}

json pca_to_json(const PcaTransform& t) {
  json j;
  j["mean"] = std::vector<double>(t.mean.data(), t.mean.data() + t.mean.size());
  j["explained_variance"] = std::vector<double>(
      t.explained_variance.data(),
      t.explained_variance.data() + t.explained_variance.size());
  json rows = json::array();
  for (Eigen::Index i = 0; i < t.components.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(t.components.cols()));
    for (Eigen::Index c = 0; c < t.components.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = t.components(i, c);
    }
    rows.push_back(row);
  }
  j["components"] = std::move(rows);
  return j;
}

PcaTransform pca_from_json(const json& j) {
  PcaTransform t;
  auto mean = j.at("mean").get<std::vector<double>>();
  t.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                             static_cast<Eigen::Index>(mean.size()));
  auto ev = j.at("explained_variance").get<std::vector<double>>();
  t.explained_variance =
      Eigen::Map<const Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  const auto& rows = j.at("components");
  if (rows.empty()) throw ParseError("pca_from_json: empty components");
  t.components.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto row = rows[i].get<std::vector<double>>();
    for (std::size_t c = 0; c < row.size(); ++c) {
      t.components(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return t;
}

namespace {

json boosted_to_json(const BoostedModel& m) {
  json stages = json::array();
  for (const auto& s : m.stages) {
    stages.push_back({{"svm", svm_to_json(s.svm)},
                      {"stage_weight", s.stage_weight},
                      {"weighted_error", s.weighted_error}});
  }
  return json{{"stages", std::move(stages)},
              {"training_subset", m.training_subset},
              {"generations", m.generations}};
}

BoostedModel boosted_from_json(const json& j) {
  BoostedModel m;
  for (const auto& js : j.at("stages")) {
    BoostStage s;
    s.svm = svm_from_json(js.at("svm"));
    s.stage_weight = js.at("stage_weight").get<double>();
    s.weighted_error = js.at("weighted_error").get<double>();
    m.stages.push_back(std::move(s));
  }
  m.training_subset = j.at("training_subset").get<std::vector<std::size_t>>();
  m.generations = j.at("generations").get<std::size_t>();
  return m;
}

std::string member_filename(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "member_%04zu.json", k);
  return buf;
}

}  // namespace

void save_ensemble(const std::string& dir, const EnsembleModel& e) {
  fs::create_directories(dir);
  json manifest;
  manifest["members"] = e.config.members;
  manifest["train_per_member"] = e.config.train_per_member;
  manifest["generations"] = e.config.generations;
  manifest["c_reg"] = e.config.c_reg;
  manifest["master_seed"] = e.config.master_seed;
  manifest["share_qubit_angles"] = e.config.share_qubit_angles;
  manifest["base_spec"] = spec_to_json(e.base_spec);
  json files = json::array();
  for (std::size_t k = 0; k < e.members.size(); ++k) files.push_back(member_filename(k));
  manifest["member_files"] = std::move(files);
  json_to_file((fs::path(dir) / "manifest.json").string(), manifest);

  for (std::size_t k = 0; k < e.members.size(); ++k) {
    const auto& member = e.members[k];
    json j;
    j["subsample_seed"] = member.subsample_seed;
    j["angle_seed"] = member.angle_seed;
    j["spec"] = spec_to_json(member.spec);
    j["model"] = boosted_to_json(member.model);
    j["training_events"] = dataset_to_json(member.training_events);
    json_to_file((fs::path(dir) / member_filename(k)).string(), j);
  }
}

EnsembleModel load_ensemble(const std::string& dir) {
  json manifest = json_from_file((fs::path(dir) / "manifest.json").string());
  EnsembleModel e;
  e.config.members = manifest.at("members").get<std::size_t>();
  e.config.train_per_member = manifest.at("train_per_member").get<std::size_t>();
  e.config.generations = manifest.at("generations").get<std::size_t>();
  e.config.c_reg = manifest.at("c_reg").get<double>();
  e.config.master_seed = manifest.at("master_seed").get<std::uint64_t>();
  e.config.share_qubit_angles = manifest.at("share_qubit_angles").get<bool>();
  e.base_spec = spec_from_json(manifest.at("base_spec"));

  for (const auto& file : manifest.at("member_files")) {
    json j = json_from_file((fs::path(dir) / file.get<std::string>()).string());
    EnsembleMember member;
    member.subsample_seed = j.at("subsample_seed").get<std::uint64_t>();
    member.angle_seed = j.at("angle_seed").get<std::uint64_t>();
    member.spec = spec_from_json(j.at("spec"));
    member.model = boosted_from_json(j.at("model"));
    member.training_events = dataset_from_json(j.at("training_events"));
    e.members.push_back(std::move(member));
  }
  return e;
}

}  // namespace qtag
