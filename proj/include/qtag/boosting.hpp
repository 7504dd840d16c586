#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qtag/dataset.hpp"
#include "qtag/embedding.hpp"
#include "qtag/svm.hpp"

namespace qtag {

inline constexpr std::size_t kAllStages = std::numeric_limits<std::size_t>::max();

struct BoostStage {
  SvmModel svm;
  double stage_weight = 0.0;    // alpha_g = ln((1 - eps) / eps) / 2
  double weighted_error = 0.0;  // eps_g under the weights the stage was trained on
};

struct BoostedModel {
  std::vector<BoostStage> stages;
  std::vector<std::size_t> training_subset;  // indices into the source dataset
  std::size_t generations = 0;               // requested G
};

struct AdaBoostOptions {
  SvmTrainOptions svm;
  // When set, receives the sample-weight vector after each reweighting step.
  std::vector<std::vector<double>>* weight_trace = nullptr;
};

// Discrete AdaBoost over weighted kernel SVM stages. Stages with weighted
// error >= 0.5 are discarded and boosting halts; a zero-error stage is kept
// and also halts the loop (further reweighting would be a no-op).
BoostedModel train_adaboost(const KernelMatrix& k_train, const std::vector<int>& labels,
                            std::size_t generations, double c_reg,
                            const AdaBoostOptions& opts = {});

// Normalised weighted vote over the first `stage_prefix` stages:
// qr = sum_g alpha_g h_g / sum_g alpha_g, in [-1, 1] by construction.
// k_cross_full is evaluation rows x the full training set of this model.
std::vector<double> boosted_qr(const BoostedModel& m, const KernelMatrix& k_cross_full,
                               std::size_t stage_prefix = kAllStages);

struct EnsembleConfig {
  std::size_t members = 1;
  std::size_t train_per_member = 0;
  std::size_t generations = 1;
  double c_reg = 1.0;
  std::uint64_t master_seed = 0;
  bool share_qubit_angles = false;  // one circuit for all members instead of per-member draws
};

struct EnsembleMember {
  BoostedModel model;
  EmbeddingSpec spec;
  Dataset training_events;  // the member's (preprocessed) training subset
  std::uint64_t subsample_seed = 0;
  std::uint64_t angle_seed = 0;
};

// N independently trained boosted models; prediction is the mean member qr.
struct EnsembleModel {
  EnsembleConfig config;
  EmbeddingSpec base_spec;
  std::vector<EnsembleMember> members;
};

// Seed scheme: member k draws subsample and angle seeds from
// derive_seed(master_seed, k), so adding members never perturbs existing
// ones. Member training runs concurrently; results are slot-indexed and
// therefore independent of scheduling.
EnsembleModel train_ensemble(const Dataset& d, const EmbeddingSpec& base_spec,
                             const EnsembleConfig& cfg, int threads = 0,
                             const std::string& gram_cache_dir = "");

std::vector<double> ensemble_qr(const EnsembleModel& e, const Dataset& test,
                                int threads = 0, std::size_t member_prefix = kAllStages,
                                std::size_t stage_prefix = kAllStages);

void save_ensemble(const std::string& dir, const EnsembleModel& e);
EnsembleModel load_ensemble(const std::string& dir);

}  // namespace qtag
