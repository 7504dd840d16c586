#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtag/boosting.hpp"
#include "qtag/dataset.hpp"
#include "qtag/tagging.hpp"

namespace qtag {

struct DataSource {
  std::string path;  // event CSV; empty when synthetic is set
  std::optional<SyntheticSpec> synthetic;
};

struct PreprocessSpec {
  bool standardize = true;
  std::optional<std::size_t> pca_k;
};

struct Preprocessing {
  std::optional<ScalerParams> scaler;
  std::optional<PcaTransform> pca;
};

Preprocessing fit_preprocessing(const Dataset& train, const PreprocessSpec& spec);
Dataset apply_preprocessing(const Dataset& d, const Preprocessing& p);

struct BackendConfig {
  std::string kind = "qubit";  // "qubit" | "cv"
  int n_qubits = 10;
  int depth = 1;
  bool share_angles = false;
  int layers = 1;
  double beta = 0.1;
  double gamma = 0.1;
  int truncation = 8;
  std::uint64_t memory_budget = std::uint64_t{1} << 20;

  // Base spec for a given (post-preprocessing) feature count; qubit angles
  // are drawn from angle_seed and redrawn per member unless shared.
  EmbeddingSpec resolve(std::size_t feature_count, std::uint64_t angle_seed) const;
};

enum class SweepAxis { Generation, Members, TrainPerMember, PcaK, Depth, CReg };

SweepAxis sweep_axis_from_string(const std::string& name);
std::string to_string(SweepAxis axis);

struct EvaluationSpec {
  std::size_t test_count = 0;
  std::string binning = "static";  // "static" | "equal"
};

struct ExperimentConfig {
  DataSource data;
  PreprocessSpec preprocess;
  BackendConfig backend;
  EnsembleConfig ensemble;
  EvaluationSpec evaluation;
  std::optional<SweepAxis> sweep_axis;
  std::vector<double> sweep_values;
  std::string output_dir;
  int threads = 0;
};

// Throws ConfigError naming the offending field path.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, bool require_sweep);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);

// Runs the configured sweep and writes results.tsv, timings.tsv and
// manifest.json under output_dir. Deterministic given (config, input files);
// wall-clock measurements go to timings.tsv only.
void run_experiment(const ExperimentConfig& c);

// Trains one ensemble on the whole input (no held-out split) and saves the
// model directory together with its fitted preprocessing.
void run_train(const ExperimentConfig& c, const std::string& model_dir);

struct EvaluationResult {
  TagReport report;
  std::vector<double> qr;
};

// Loads a saved model directory, applies its stored preprocessing to raw
// events and reports tagging efficiency.
EvaluationResult run_evaluate(const std::string& model_dir, const Dataset& raw_events,
                              const std::string& binning_mode, int threads);

TagBinning make_binning(const std::string& mode, std::span<const double> qr);

}  // namespace qtag
