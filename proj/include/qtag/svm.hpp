#pragma once

#include <cstddef>
#include <vector>

#include "qtag/kernel_matrix.hpp"

namespace qtag {

struct SvmModel {
  std::vector<std::size_t> support_indices;  // indices into the training set
  std::vector<double> dual_coeffs;           // alpha_i * y_i per support vector
  double bias = 0.0;
  double c_reg = 1.0;
};

struct SvmTrainOptions {
  double tol = 1e-3;                 // max KKT violation at termination
  std::size_t max_iter = 4'000'000;  // working-set updates before giving up
  // When set, receives the dual objective after every update; the objective
  // is non-decreasing, which the tests assert.
  std::vector<double>* objective_trace = nullptr;
};

// Soft-margin dual on a precomputed Gram, solved by SMO-style pairwise
// coordinate ascent with working-set selection by maximal KKT violation.
// Per-sample boxes are C_i = c_reg * n * w_i, which makes boosting weights
// enter the margin exactly (no resampling) and makes scaling all weights by
// c while dividing c_reg by c an algebraic identity.
SvmModel train_svm(const KernelMatrix& k_train, const std::vector<int>& labels,
                   const std::vector<double>& sample_weights, double c_reg,
                   const SvmTrainOptions& opts = {});

// k_cross rows = evaluation points, columns = the model's support vectors.
std::vector<double> decision_values(const SvmModel& m, const KernelMatrix& k_cross);
// Same, against a full (evaluation x training) matrix; support columns are
// gathered internally.
std::vector<double> decision_values_full(const SvmModel& m, const KernelMatrix& k_full);

std::vector<int> predict(const SvmModel& m, const KernelMatrix& k_cross);
std::vector<int> predict_full(const SvmModel& m, const KernelMatrix& k_full);

// Tie rule fixed for determinism: sign(0) = +1.
inline int sign_with_tie(double v) { return v < 0.0 ? -1 : 1; }

}  // namespace qtag
