#include "qtag/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qtag/errors.hpp"

namespace qtag {

namespace {

constexpr double kTau = 1e-12;  // curvature floor for degenerate pairs

struct Problem {
  const Eigen::MatrixXd& K;
  const std::vector<int>& y;
  std::vector<double> box;     // C_i
  std::vector<double> alpha;
  std::vector<double> grad;    // d/d alpha_i of (1/2 a'Qa - e'a), = y_i f_i - 1
};

// Feasible-direction extrema over the index sets
//   I_up  = {t : alpha_t < C_t, y_t = +1} u {t : alpha_t > 0, y_t = -1}
//   I_low = {t : alpha_t < C_t, y_t = -1} u {t : alpha_t > 0, y_t = +1}
// The pair (argmax over I_up, argmin over I_low) of -y_t grad_t is the
// maximal KKT violating pair; optimality is m - M <= tol.
struct Selection {
  int i = -1;
  int j = -1;
  double m = -std::numeric_limits<double>::infinity();
  double M = std::numeric_limits<double>::infinity();
};

Selection select_pair(const Problem& p) {
  Selection s;
  const int n = static_cast<int>(p.y.size());
  for (int t = 0; t < n; ++t) {
    const double v = -p.y[t] * p.grad[t];
    const bool in_up = (p.y[t] > 0 && p.alpha[t] < p.box[t]) ||
                       (p.y[t] < 0 && p.alpha[t] > 0.0);
    const bool in_low = (p.y[t] < 0 && p.alpha[t] < p.box[t]) ||
                        (p.y[t] > 0 && p.alpha[t] > 0.0);
    if (in_up && v > s.m) {
      s.m = v;
      s.i = t;
    }
    if (in_low && v < s.M) {
      s.M = v;
      s.j = t;
    }
  }
  return s;
}

}  // namespace

SvmModel train_svm(const KernelMatrix& k_train, const std::vector<int>& labels,
                   const std::vector<double>& sample_weights, double c_reg,
                   const SvmTrainOptions& opts) {
  const std::size_t n = labels.size();
  if (!k_train.symmetric || k_train.rows() != n || k_train.cols() != n) {
    throw ConfigError("train_svm: kernel must be a symmetric n x n Gram");
  }
  if (sample_weights.size() != n) {
    throw ConfigError("train_svm: weight count must match label count");
  }
  if (!(c_reg > 0.0)) throw ConfigError("train_svm: c_reg must be positive");

  bool has_pos = false, has_neg = false;
  double weight_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (labels[t] != 1 && labels[t] != -1) {
      throw ConfigError("train_svm: labels must be -1 or +1");
    }
    if (sample_weights[t] < 0.0) {
      throw ConfigError("train_svm: sample weights must be non-negative");
    }
    weight_sum += sample_weights[t];
    if (sample_weights[t] > 0.0) {
      (labels[t] > 0 ? has_pos : has_neg) = true;
    }
  }
  if (!(weight_sum > 0.0)) throw ConfigError("train_svm: weights sum to zero");
  if (!has_pos || !has_neg) {
    throw ConfigError("train_svm: labels must contain both classes");
  }

  Problem p{k_train.entries, labels, {}, {}, {}};
  p.box.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    p.box[t] = c_reg * static_cast<double>(n) * sample_weights[t];
  }
  p.alpha.assign(n, 0.0);
  p.grad.assign(n, -1.0);  // alpha = 0 => grad_i = -1

  double objective = 0.0;  // dual value sum(alpha) - 1/2 a'Qa, tracked incrementally
  std::size_t iter = 0;
  double violation = std::numeric_limits<double>::infinity();

  for (; iter < opts.max_iter; ++iter) {
    Selection s = select_pair(p);
    violation = s.m - s.M;
    if (s.i < 0 || s.j < 0 || violation <= opts.tol) break;

    const int i = s.i, j = s.j;
    // Symmetric storage, so column i is row i.
    const auto Ki = p.K.col(i);
    const auto Kj = p.K.col(j);
    const double sgn = static_cast<double>(p.y[i] * p.y[j]);
    double quad = p.K(i, i) + p.K(j, j) - 2.0 * p.K(i, j);
    if (quad < kTau) quad = kTau;

    // Minimize along alpha_i + d, alpha_j - sgn*d.
    const double slope = p.grad[i] - sgn * p.grad[j];
    double d = -slope / quad;

    double lo = -p.alpha[i], hi = p.box[i] - p.alpha[i];
    if (sgn > 0.0) {
      lo = std::max(lo, p.alpha[j] - p.box[j]);
      hi = std::min(hi, p.alpha[j]);
    } else {
      lo = std::max(lo, -p.alpha[j]);
      hi = std::min(hi, p.box[j] - p.alpha[j]);
    }
    d = std::clamp(d, lo, hi);
    const double di = d;
    const double dj = -sgn * d;
    if (p.alpha[static_cast<std::size_t>(i)] + di == p.alpha[static_cast<std::size_t>(i)] &&
        p.alpha[static_cast<std::size_t>(j)] + dj == p.alpha[static_cast<std::size_t>(j)]) {
      // Numerically pinned; counts as converged at the current violation.
      break;
    }
    objective -= slope * di + 0.5 * quad * di * di;
    p.alpha[static_cast<std::size_t>(i)] += di;
    p.alpha[static_cast<std::size_t>(j)] += dj;
    const double ci = p.y[i] * di;
    const double cj = p.y[j] * dj;
    for (std::size_t t = 0; t < n; ++t) {
      p.grad[t] += p.y[t] * (ci * Ki[static_cast<Eigen::Index>(t)] +
                             cj * Kj[static_cast<Eigen::Index>(t)]);
    }
    if (opts.objective_trace) opts.objective_trace->push_back(objective);
  }

  if (violation > opts.tol && iter >= opts.max_iter) {
    throw NumericError("train_svm: no convergence after " + std::to_string(iter) +
                       " iterations (max KKT violation " + std::to_string(violation) + ")");
  }

  // Bias: y_t - f_t averaged over unbounded support vectors, which equals
  // -y_t grad_t there; fall back to the midpoint of the feasibility interval.
  double bias_sum = 0.0;
  std::size_t bias_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double margin = 1e-8 * std::max(1.0, p.box[t]);
    if (p.alpha[t] > margin && p.alpha[t] < p.box[t] - margin) {
      bias_sum += -p.y[t] * p.grad[t];
      ++bias_count;
    }
  }
  double bias;
  if (bias_count > 0) {
    bias = bias_sum / static_cast<double>(bias_count);
  } else {
    Selection s = select_pair(p);
    bias = (s.m + s.M) / 2.0;
    if (!std::isfinite(bias)) bias = 0.0;
  }

  SvmModel model;
  model.bias = bias;
  model.c_reg = c_reg;
  for (std::size_t t = 0; t < n; ++t) {
    if (p.alpha[t] > 1e-12) {
      model.support_indices.push_back(t);
      model.dual_coeffs.push_back(p.alpha[t] * p.y[t]);
    }
  }
  if (model.support_indices.empty()) {
    throw NumericError("train_svm: optimization produced no support vectors");
  }
  return model;
}

std::vector<double> decision_values(const SvmModel& m, const KernelMatrix& k_cross) {
  if (k_cross.cols() != m.support_indices.size()) {
    throw ConfigError("decision_values: column count must equal support count");
  }
  std::vector<double> f(k_cross.rows(), m.bias);
  for (std::size_t t = 0; t < k_cross.rows(); ++t) {
    double acc = 0.0;
    for (std::size_t s = 0; s < m.dual_coeffs.size(); ++s) {
      acc += m.dual_coeffs[s] * k_cross.entries(static_cast<Eigen::Index>(t),
                                                static_cast<Eigen::Index>(s));
    }
    f[t] += acc;
  }
  return f;
}

std::vector<double> decision_values_full(const SvmModel& m, const KernelMatrix& k_full) {
  for (std::size_t s : m.support_indices) {
    if (s >= k_full.cols()) {
      throw ConfigError("decision_values_full: support index outside kernel");
    }
  }
  std::vector<double> f(k_full.rows(), m.bias);
  for (std::size_t t = 0; t < k_full.rows(); ++t) {
    double acc = 0.0;
    for (std::size_t s = 0; s < m.dual_coeffs.size(); ++s) {
      acc += m.dual_coeffs[s] *
             k_full.entries(static_cast<Eigen::Index>(t),
                            static_cast<Eigen::Index>(m.support_indices[s]));
    }
    f[t] += acc;
  }
  return f;
}

namespace {

std::vector<int> signs(const std::vector<double>& f) {
  std::vector<int> out(f.size());
  for (std::size_t t = 0; t < f.size(); ++t) out[t] = sign_with_tie(f[t]);
  return out;
}

}  // namespace

std::vector<int> predict(const SvmModel& m, const KernelMatrix& k_cross) {
  return signs(decision_values(m, k_cross));
}

std::vector<int> predict_full(const SvmModel& m, const KernelMatrix& k_full) {
  return signs(decision_values_full(m, k_full));
}

}  // namespace qtag
