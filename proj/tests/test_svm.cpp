#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "qtag/errors.hpp"
#include "qtag/rng.hpp"
#include "qtag/svm.hpp"

using namespace qtag;

namespace {

KernelMatrix identity_kernel(std::size_t n) {
  KernelMatrix k;
  k.symmetric = true;
  k.entries = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(n));
  return k;
}

// Random full-rank Gram with unit diagonal.
KernelMatrix random_kernel(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n + 4));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.next_normal();
  Eigen::MatrixXd g = X * X.transpose();
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (i != j) g(i, j) /= std::sqrt(g(i, i) * g(j, j));
    }
  }
  for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, i) = 1.0;
  // exact symmetry after the normalisation
  Eigen::MatrixXd sym = (g + g.transpose()) / 2.0;
  KernelMatrix k;
  k.symmetric = true;
  k.entries = sym;
  return k;
}

std::vector<int> random_labels(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (;;) {
    bool pos = false, neg = false;
    for (auto& v : y) {
      v = (rng.next_u64() & 1u) ? 1 : -1;
      (v > 0 ? pos : neg) = true;
    }
    if (pos && neg) return y;
  }
}

// Independent brute-force oracle: projected gradient on the dual, with the
// box-and-hyperplane projection done by bisection on the multiplier.
std::vector<double> pg_solve(const KernelMatrix& k, const std::vector<int>& y,
                             const std::vector<double>& box, std::size_t iters) {
  const std::size_t n = y.size();
  Eigen::MatrixXd q = k.entries;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *= y[i] * y[j];

  auto project = [&](std::vector<double> v) {
    double lo = -1.0, hi = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, -(std::abs(v[i]) + box[i] + 1.0));
      hi = std::max(hi, std::abs(v[i]) + box[i] + 1.0);
    }
    auto balance = [&](double lambda) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double a = std::clamp(v[i] - lambda * y[i], 0.0, box[i]);
        s += y[i] * a;
      }
      return s;
    };
    for (int it = 0; it < 200; ++it) {
      double mid = (lo + hi) / 2.0;
      if (balance(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    double lambda = (lo + hi) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = std::clamp(v[i] - lambda * y[i], 0.0, box[i]);
    }
    return v;
  };

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
  const double step = 1.0 / std::max(es.eigenvalues().maxCoeff(), 1e-9);

  std::vector<double> alpha(n, 0.0);
  alpha = project(alpha);
  for (std::size_t it = 0; it < iters; ++it) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      double grad = -1.0;
      for (std::size_t j = 0; j < n; ++j) {
        grad += q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * alpha[j];
      }
      v[i] = alpha[i] - step * grad;
    }
    alpha = project(v);
  }
  return alpha;
}

std::vector<double> oracle_decisions(const KernelMatrix& k, const std::vector<int>& y,
                                     const std::vector<double>& alpha,
                                     const std::vector<double>& box) {
  const std::size_t n = y.size();
  std::vector<double> f_raw(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      f_raw[t] += alpha[j] * y[j] *
                  k.entries(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
    }
  }
  double bias_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 1e-6 && alpha[i] < box[i] - 1e-6) {
      bias_sum += y[i] - f_raw[i];
      ++count;
    }
  }
  const double bias = count ? bias_sum / static_cast<double>(count) : 0.0;
  for (auto& f : f_raw) f += bias;
  return f_raw;
}

}  // namespace

TEST_CASE("two orthogonal points give the analytic solution") {
  KernelMatrix k = identity_kernel(2);
  std::vector<int> y = {1, -1};
  std::vector<double> w = {0.5, 0.5};

  for (double c_reg : {1.0, 5.0}) {
    SvmModel m = train_svm(k, y, w, c_reg);
    REQUIRE(m.support_indices.size() == 2);
    CHECK(std::abs(m.dual_coeffs[0] - 1.0) < 1e-8);   // alpha_1 y_1 = 1
    CHECK(std::abs(m.dual_coeffs[1] + 1.0) < 1e-8);   // alpha_2 y_2 = -1
    CHECK(std::abs(m.bias) < 1e-8);
    std::vector<double> f = decision_values_full(m, k);
    CHECK(std::abs(f[0] - 1.0) < 1e-8);
    CHECK(std::abs(f[1] + 1.0) < 1e-8);
    std::vector<int> preds = predict_full(m, k);
    CHECK(preds == std::vector<int>{1, -1});
  }
}

TEST_CASE("dual constraint sum(alpha_i y_i) = 0 holds at termination") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    KernelMatrix k = random_kernel(10, seed);
    auto y = random_labels(10, seed + 100);
    std::vector<double> w(10, 0.1);
    SvmModel m = train_svm(k, y, w, 1.0);
    double balance = 0.0;
    for (double c : m.dual_coeffs) balance += c;  // coeffs are alpha_i y_i
    CHECK(std::abs(balance) < 1e-8);
  }
}

TEST_CASE("unbounded support vectors sit on the margin") {
  KernelMatrix k = random_kernel(12, 9);
  auto y = random_labels(12, 77);
  std::vector<double> w(12, 1.0 / 12.0);
  SvmModel m = train_svm(k, y, w, 1.0);
  std::vector<double> f = decision_values_full(m, k);
  const double box = 1.0;  // c_reg * n * w_i = 1
  bool saw_unbounded = false;
  for (std::size_t s = 0; s < m.support_indices.size(); ++s) {
    double alpha = std::abs(m.dual_coeffs[s]);
    if (alpha < box * (1.0 - 1e-6)) {
      saw_unbounded = true;
      std::size_t i = m.support_indices[s];
      CHECK(std::abs(y[i] * f[i] - 1.0) < 2e-3);
    }
  }
  CHECK(saw_unbounded);
}

TEST_CASE("duplicating every point with halved weights keeps the decision function") {
  const std::size_t n = 6;
  KernelMatrix k = random_kernel(n, 55);
  auto y = random_labels(n, 56);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  const double c_reg = 50.0;  // large enough that no alpha touches its box

  SvmModel base = train_svm(k, y, w, c_reg);
  for (double c : base.dual_coeffs) {
    CHECK(std::abs(c) < c_reg * 0.999);  // interior solution, see above
  }
  std::vector<double> f_base = decision_values_full(base, k);

  KernelMatrix k2;
  k2.symmetric = true;
  k2.entries.resize(2 * n, 2 * n);
  std::vector<int> y2(2 * n);
  std::vector<double> w2(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    y2[i] = y[i % n];
    w2[i] = w[i % n] / 2.0;
    for (std::size_t j = 0; j < 2 * n; ++j) {
      k2.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          k.entries(static_cast<Eigen::Index>(i % n), static_cast<Eigen::Index>(j % n));
    }
  }
  SvmModel dup = train_svm(k2, y2, w2, c_reg);

  // evaluate the duplicated model on the original points
  KernelMatrix cross;
  cross.entries.resize(static_cast<Eigen::Index>(n), 2 * n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < 2 * n; ++j) {
      cross.entries(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          k.entries(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j % n));
    }
  }
  std::vector<double> f_dup = decision_values_full(dup, cross);
  for (std::size_t t = 0; t < n; ++t) {
    CHECK(std::abs(f_base[t] - f_dup[t]) < 1e-6);
  }
}

TEST_CASE("predict applies the sign(0) = +1 tie rule") {
  CHECK(sign_with_tie(0.3) == 1);
  CHECK(sign_with_tie(-2.0) == -1);
  CHECK(sign_with_tie(0.0) == 1);

  // single support vector with unit coefficient and zero bias: f = K column
  SvmModel m;
  m.support_indices = {0};
  m.dual_coeffs = {1.0};
  m.bias = 0.0;
  KernelMatrix cross;
  cross.entries.resize(3, 1);
  cross.entries << 0.3, -2.0, 0.0;
  CHECK(predict(m, cross) == std::vector<int>{1, -1, 1});

  KernelMatrix empty;
  empty.entries.resize(0, 1);
  CHECK(decision_values(m, empty).empty());
}

TEST_CASE("flipping all labels flips predictions and negates the bias") {
  KernelMatrix k = random_kernel(8, 21);
  auto y = random_labels(8, 22);
  std::vector<double> w(8, 0.125);
  SvmModel m = train_svm(k, y, w, 1.0);

  std::vector<int> y_flip(8);
  for (std::size_t i = 0; i < 8; ++i) y_flip[i] = -y[i];
  SvmModel m_flip = train_svm(k, y_flip, w, 1.0);

  CHECK(std::abs(m.bias + m_flip.bias) < 1e-6);
  std::vector<double> f = decision_values_full(m, k);
  std::vector<double> f_flip = decision_values_full(m_flip, k);
  for (std::size_t t = 0; t < 8; ++t) {
    CHECK(std::abs(f[t] + f_flip[t]) < 1e-6);
  }
}

TEST_CASE("dual objective is non-decreasing across iterations") {
  KernelMatrix k = random_kernel(16, 31);
  auto y = random_labels(16, 32);
  std::vector<double> w(16, 1.0 / 16.0);
  std::vector<double> trace;
  SvmTrainOptions opts;
  opts.objective_trace = &trace;
  train_svm(k, y, w, 2.0, opts);
  REQUIRE(trace.size() > 1);
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    CHECK(trace[i + 1] >= trace[i] - 1e-12);
  }
}

TEST_CASE("scaling weights against c_reg is an exact identity") {
  KernelMatrix k = random_kernel(9, 41);
  auto y = random_labels(9, 42);
  Rng rng(43);
  std::vector<double> w(9);
  double sum = 0.0;
  for (auto& v : w) {
    v = rng.next_double() + 0.1;
    sum += v;
  }
  for (auto& v : w) v /= sum;

  SvmModel a = train_svm(k, y, w, 2.0);
  std::vector<double> w_scaled(w);
  for (auto& v : w_scaled) v *= 10.0;
  SvmModel b = train_svm(k, y, w_scaled, 0.2);

  std::vector<double> fa = decision_values_full(a, k);
  std::vector<double> fb = decision_values_full(b, k);
  for (std::size_t t = 0; t < fa.size(); ++t) {
    CHECK(std::abs(fa[t] - fb[t]) < 1e-8);
  }
}

TEST_CASE("decisions match the projected-gradient oracle on random problems") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 8;
    KernelMatrix k = random_kernel(n, 1000 + seed);
    auto y = random_labels(n, 2000 + seed);
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    const double c_reg = 1.0;

    // tighten the stopping rule so solver error stays below the comparison
    SvmTrainOptions opts;
    opts.tol = 1e-6;
    SvmModel m = train_svm(k, y, w, c_reg, opts);
    std::vector<double> f = decision_values_full(m, k);

    std::vector<double> box(n, c_reg);  // c_reg * n * (1/n)
    std::vector<double> alpha = pg_solve(k, y, box, 60000);
    std::vector<double> f_oracle = oracle_decisions(k, y, alpha, box);

    for (std::size_t t = 0; t < n; ++t) {
      CHECK(std::abs(f[t] - f_oracle[t]) < 1e-4);
    }
  }
}

TEST_CASE("invalid inputs are rejected") {
  KernelMatrix k = identity_kernel(3);
  std::vector<double> w = {0.4, 0.3, 0.3};
  CHECK_THROWS_AS(train_svm(k, {1, 1, 1}, w, 1.0), ConfigError);   // one class
  CHECK_THROWS_AS(train_svm(k, {1, -1, 2}, w, 1.0), ConfigError);  // bad label
  CHECK_THROWS_AS(train_svm(k, {1, -1, 1}, {0.5, 0.5}, 1.0), ConfigError);
  CHECK_THROWS_AS(train_svm(k, {1, -1, 1}, {-0.1, 0.6, 0.5}, 1.0), ConfigError);
  CHECK_THROWS_AS(train_svm(k, {1, -1, 1}, w, 0.0), ConfigError);

  KernelMatrix asym;
  asym.symmetric = false;
  asym.entries = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(train_svm(asym, {1, -1, 1}, w, 1.0), ConfigError);

  SvmModel m;
  m.support_indices = {0, 1};
  m.dual_coeffs = {1.0, -1.0};
  KernelMatrix wrong;
  wrong.entries.resize(2, 3);
  CHECK_THROWS_AS(decision_values(m, wrong), ConfigError);
}

TEST_CASE("hitting the iteration cap reports the remaining KKT violation") {
  KernelMatrix k = random_kernel(12, 61);
  auto y = random_labels(12, 62);
  std::vector<double> w(12, 1.0 / 12.0);
  SvmTrainOptions opts;
  opts.max_iter = 1;
  CHECK_THROWS_WITH_AS(train_svm(k, y, w, 1.0, opts),
                       doctest::Contains("KKT violation"), NumericError);
}

TEST_CASE("separable data is classified perfectly on the training set") {
  // block kernel: strong within-class similarity, none across
  const std::size_t n = 8;
  KernelMatrix k;
  k.symmetric = true;
  k.entries = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i < n / 2 ? 1 : -1;
    for (std::size_t j = 0; j < n; ++j) {
      bool same = (i < n / 2) == (j < n / 2);
      k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          same ? (i == j ? 1.0 : 0.5) : 0.0;
    }
  }
  std::vector<double> w(n, 1.0 / n);
  SvmModel m = train_svm(k, y, w, 10.0);
  CHECK(predict_full(m, k) == y);
}
