#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qtag {

// One labelled event: a fixed-length feature vector with flavour label +-1.
struct Event {
  std::vector<double> features;
  int label = 1;
};

struct Dataset {
  std::vector<Event> events;
  std::size_t feature_count = 0;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
};

// Per-column mean / population stdev; zero-variance columns get stdev 1.
struct ScalerParams {
  std::vector<double> means;
  std::vector<double> stdevs;
};

struct PcaTransform {
  Eigen::VectorXd mean;                // length F
  Eigen::MatrixXd components;          // k x F, rows orthonormal
  Eigen::VectorXd explained_variance;  // length k, non-increasing
};

// Class-conditional Gaussian generator: the first `informative_count`
// features are centred at +-separation/2 depending on the label, the rest
// are pure unit noise. Fully determined by `seed`.
struct SyntheticSpec {
  std::size_t feature_count = 0;
  std::size_t informative_count = 0;
  double class_separation = 0.0;
  std::uint64_t seed = 0;
  std::size_t count = 0;
};

Dataset load_events(const std::string& path);
void save_events(const std::string& path, const Dataset& d);

ScalerParams fit_standardizer(const Dataset& d);
Dataset apply_standardizer(const Dataset& d, const ScalerParams& s);

PcaTransform fit_pca(const Dataset& d, std::size_t k);
Dataset apply_pca(const Dataset& d, const PcaTransform& t);

Dataset generate_synthetic(const SyntheticSpec& spec);

// n events drawn uniformly without replacement, deterministic in seed.
Dataset subsample(const Dataset& d, std::size_t n, std::uint64_t seed);
std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t n,
                                           std::uint64_t seed);
Dataset select_events(const Dataset& d, const std::vector<std::size_t>& indices);

Eigen::MatrixXd feature_matrix(const Dataset& d);  // events x features
std::vector<int> labels_of(const Dataset& d);

}  // namespace qtag
