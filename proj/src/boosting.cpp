#include "qtag/boosting.hpp"

#include <algorithm>
#include <cmath>

#include "qtag/cache.hpp"
#include "qtag/errors.hpp"
#include "qtag/parallel.hpp"
#include "qtag/rng.hpp"

namespace qtag {

namespace {

constexpr double kErrClamp = 1e-10;

// Weight sums carry rounding noise, so the reweighting fixed point shows up
// as eps = 0.5 - O(1e-15). Such a stage would be accepted with a vanishing
// vote and a loss-bound factor that rounds to exactly 1; treat anything this
// close to the coin flip as rejected.
constexpr double kCoinFlipMargin = 1e-6;

}  // namespace

BoostedModel train_adaboost(const KernelMatrix& k_train, const std::vector<int>& labels,
                            std::size_t generations, double c_reg,
                            const AdaBoostOptions& opts) {
  if (generations < 1) throw ConfigError("train_adaboost: generations must be >= 1");
  const std::size_t n = labels.size();

  BoostedModel model;
  model.generations = generations;
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));

  for (std::size_t g = 0; g < generations; ++g) {
    SvmModel stage = train_svm(k_train, labels, weights, c_reg, opts.svm);
    std::vector<int> preds = predict_full(stage, k_train);

    double eps = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (preds[t] != labels[t]) eps += weights[t];
    }
    if (eps >= 0.5 - kCoinFlipMargin) break;  // no better than the coin; discard and stop

    const double eps_clamped = std::clamp(eps, kErrClamp, 1.0 - kErrClamp);
    const double alpha = 0.5 * std::log((1.0 - eps_clamped) / eps_clamped);
    model.stages.push_back({std::move(stage), alpha, eps});

    if (eps <= 0.0) break;  // separated; reweighting would be uniform rescaling

    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      weights[t] *= std::exp(-alpha * labels[t] * preds[t]);
      total += weights[t];
    }
    for (auto& w : weights) w /= total;
    if (opts.weight_trace) opts.weight_trace->push_back(weights);
  }

  if (model.stages.empty()) {
    throw NumericError("train_adaboost: no usable stage (first stage error >= 0.5)");
  }
  return model;
}

std::vector<double> boosted_qr(const BoostedModel& m, const KernelMatrix& k_cross_full,
                               std::size_t stage_prefix) {
  const std::size_t n_stages = std::min(stage_prefix, m.stages.size());
  if (n_stages == 0) throw ConfigError("boosted_qr: no stages to evaluate");

  std::vector<double> vote(k_cross_full.rows(), 0.0);
  double alpha_total = 0.0;
  for (std::size_t g = 0; g < n_stages; ++g) {
    const auto& stage = m.stages[g];
    std::vector<int> preds = predict_full(stage.svm, k_cross_full);
    for (std::size_t t = 0; t < vote.size(); ++t) {
      vote[t] += stage.stage_weight * preds[t];
    }
    alpha_total += stage.stage_weight;
  }
  if (!(alpha_total > 0.0)) throw NumericError("boosted_qr: all stage weights are zero");
  for (auto& v : vote) v /= alpha_total;
  return vote;
}

namespace {

EmbeddingSpec member_spec(const EmbeddingSpec& base, std::uint64_t angle_seed,
                          bool share_qubit_angles) {
  if (const auto* q = std::get_if<QubitEmbeddingSpec>(&base)) {
    if (!share_qubit_angles) {
      return QubitEmbeddingSpec::from_seed(q->n_qubits, q->depth, angle_seed);
    }
  }
  return base;
}

}  // namespace

EnsembleModel train_ensemble(const Dataset& d, const EmbeddingSpec& base_spec,
                             const EnsembleConfig& cfg, int threads,
                             const std::string& gram_cache_dir) {
  if (cfg.members < 1) throw ConfigError("train_ensemble: members must be >= 1");
  if (cfg.train_per_member < 1 || cfg.train_per_member > d.size()) {
    throw ConfigError("train_ensemble: train_per_member out of range [1, count]");
  }

  EnsembleModel ensemble;
  ensemble.config = cfg;
  ensemble.base_spec = base_spec;
  ensemble.members.resize(cfg.members);

  parallel_for(cfg.members, threads, [&](std::size_t k) {
    EnsembleMember& member = ensemble.members[k];
    const std::uint64_t member_seed = derive_seed(cfg.master_seed, k);
    member.subsample_seed = derive_seed(member_seed, 0);
    member.angle_seed = derive_seed(member_seed, 1);
    member.spec = member_spec(base_spec, member.angle_seed, cfg.share_qubit_angles);

    std::vector<std::size_t> subset =
        subsample_indices(d.size(), cfg.train_per_member, member.subsample_seed);
    member.training_events = select_events(d, subset);

    // Members already run in parallel; keep per-member work single-threaded.
    KernelMatrix k_train =
        gram_cached(member.training_events, member.spec, 1, gram_cache_dir);
    member.model = train_adaboost(k_train, labels_of(member.training_events),
                                  cfg.generations, cfg.c_reg);
    member.model.training_subset = std::move(subset);
  });

  return ensemble;
}

std::vector<double> ensemble_qr(const EnsembleModel& e, const Dataset& test,
                                int threads, std::size_t member_prefix,
                                std::size_t stage_prefix) {
  const std::size_t n_members = std::min(member_prefix, e.members.size());
  if (n_members == 0) throw ConfigError("ensemble_qr: no members to evaluate");
  if (test.empty()) throw ConfigError("ensemble_qr: empty test set");

  std::vector<std::vector<double>> member_qr(n_members);
  parallel_for(n_members, threads, [&](std::size_t k) {
    const EnsembleMember& member = e.members[k];
    KernelMatrix cross = cross_gram(test, member.training_events, member.spec, 1);
    member_qr[k] = boosted_qr(member.model, cross, stage_prefix);
  });

  std::vector<double> qr(test.size(), 0.0);
  for (std::size_t k = 0; k < n_members; ++k) {
    for (std::size_t t = 0; t < qr.size(); ++t) qr[t] += member_qr[k][t];
  }
  for (auto& v : qr) v /= static_cast<double>(n_members);
  return qr;
}

}  // namespace qtag
