#include "qtag/cv_kernel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "qtag/errors.hpp"
#include "qtag/parallel.hpp"

namespace qtag {

namespace {

using cd = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

// Eigendecomposition of a Hermitian generator H, reused to form the unitary
// family exp(-i t H) for many t. Read-only after construction, so safe to
// share across Gram worker threads.
class HermitianExpCache {
 public:
  explicit HermitianExpCache(const Eigen::MatrixXcd& herm) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm);
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
  }

  Eigen::MatrixXcd unitary(double t) const {
    Eigen::VectorXcd phases(eigenvalues_.size());
    for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
      phases[k] = std::polar(1.0, -t * eigenvalues_[k]);
    }
    return eigenvectors_ * phases.asDiagonal() * eigenvectors_.adjoint();
  }

  // exp(-i t H) |0>: only the first column is needed for vacuum inputs.
  Eigen::VectorXcd column0(double t) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(eigenvalues_.size());
    for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
      cd coeff = std::polar(1.0, -t * eigenvalues_[k]) * std::conj(eigenvectors_(0, k));
      out += coeff * eigenvectors_.col(k);
    }
    return out;
  }

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXcd eigenvectors_;
};

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Eigen::MatrixXcd displacement_hermitian(int D) {
  auto ops = ladder_operators(D);
  return cd(0, 1) * (ops.a_dag - ops.a);  // i(a_dag - a), Hermitian
}

Eigen::MatrixXcd squeeze_hermitian(int D) {
  auto ops = ladder_operators(D);
  return cd(0, 1) * (kron(ops.a, ops.a) - kron(ops.a_dag, ops.a_dag));
}

// Applies a D x D operator to mode q of a full tensor state (mode 0 slowest).
void apply_mode_op(Eigen::VectorXcd& amp, int n, int D, int q,
                   const Eigen::MatrixXcd& u) {
  std::size_t stride = 1;
  for (int k = 0; k < n - 1 - q; ++k) stride *= static_cast<std::size_t>(D);
  const std::size_t block = stride * static_cast<std::size_t>(D);
  const std::size_t size = static_cast<std::size_t>(amp.size());
  std::vector<cd> tmp(static_cast<std::size_t>(D));
  for (std::size_t base = 0; base < size; base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      for (int m = 0; m < D; ++m) tmp[static_cast<std::size_t>(m)] = amp[base + off + m * stride];
      for (int r = 0; r < D; ++r) {
        cd acc(0, 0);
        for (int m = 0; m < D; ++m) acc += u(r, m) * tmp[static_cast<std::size_t>(m)];
        amp[base + off + r * stride] = acc;
      }
    }
  }
}

// Applies a D^2 x D^2 operator to adjacent modes (q, q+1); their joint index
// m_q * D + m_{q+1} is contiguous with stride D^(n-2-q).
void apply_pair_op(Eigen::VectorXcd& amp, int n, int D, int q,
                   const Eigen::MatrixXcd& u) {
  std::size_t stride = 1;
  for (int k = 0; k < n - 2 - q; ++k) stride *= static_cast<std::size_t>(D);
  const std::size_t dim = static_cast<std::size_t>(D) * static_cast<std::size_t>(D);
  const std::size_t block = stride * dim;
  const std::size_t size = static_cast<std::size_t>(amp.size());
  std::vector<cd> tmp(dim);
  for (std::size_t base = 0; base < size; base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      for (std::size_t m = 0; m < dim; ++m) tmp[m] = amp[base + off + m * stride];
      for (std::size_t r = 0; r < dim; ++r) {
        cd acc(0, 0);
        for (std::size_t m = 0; m < dim; ++m) {
          acc += u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m)) * tmp[m];
        }
        amp[base + off + r * stride] = acc;
      }
    }
  }
}

std::uint64_t full_dimension(int n_modes, int truncation) {
  std::uint64_t dim = 1;
  for (int i = 0; i < n_modes; ++i) {
    if (dim > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(truncation)) {
      return std::uint64_t{1} << 63;  // saturate; caller checks the budget
    }
    dim *= static_cast<std::uint64_t>(truncation);
  }
  return dim;
}

}  // namespace

void CvEmbeddingSpec::validate() const {
  if (n_modes < 1) throw ConfigError("cv spec: n_modes must be >= 1");
  if (layers < 1) throw ConfigError("cv spec: layers must be >= 1");
  if (truncation < 2) throw ConfigError("cv spec: truncation must be >= 2");
  if (!std::isfinite(beta) || !std::isfinite(gamma)) {
    throw ConfigError("cv spec: beta/gamma must be finite");
  }
}

LadderOperators ladder_operators(int truncation) {
  if (truncation < 2) throw ConfigError("ladder_operators: truncation must be >= 2");
  LadderOperators ops;
  ops.a = Eigen::MatrixXcd::Zero(truncation, truncation);
  for (int m = 0; m + 1 < truncation; ++m) {
    ops.a(m, m + 1) = std::sqrt(static_cast<double>(m + 1));
  }
  ops.a_dag = ops.a.adjoint();
  return ops;
}

Eigen::MatrixXcd displacement_generator(double x, double beta, int truncation) {
  auto ops = ladder_operators(truncation);
  return beta * x * (ops.a_dag - ops.a);
}

Eigen::MatrixXcd single_mode_displacement(double x, double beta, int truncation) {
  return HermitianExpCache(displacement_hermitian(truncation)).unitary(beta * x);
}

Eigen::MatrixXcd two_mode_squeeze(double x, double gamma, int truncation) {
  return HermitianExpCache(squeeze_hermitian(truncation)).unitary(gamma * x);
}

Eigen::MatrixXcd single_mode_squeeze(double r, int truncation) {
  auto ops = ladder_operators(truncation);
  Eigen::MatrixXcd herm = cd(0, 0.5) * (ops.a * ops.a - ops.a_dag * ops.a_dag);
  return HermitianExpCache(herm).unitary(r);
}

Eigen::VectorXcd FockState::full() const {
  if (!is_product()) return amplitudes;
  Eigen::VectorXcd out = mode_vectors.front();
  for (std::size_t q = 1; q < mode_vectors.size(); ++q) {
    Eigen::VectorXcd next(out.size() * mode_vectors[q].size());
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      for (Eigen::Index j = 0; j < mode_vectors[q].size(); ++j) {
        next[pos++] = out[i] * mode_vectors[q][j];
      }
    }
    out = std::move(next);
  }
  return out;
}

double FockState::norm_sq() const {
  if (is_product()) {
    double n = 1.0;
    for (const auto& v : mode_vectors) n *= v.squaredNorm();
    return n;
  }
  return amplitudes.squaredNorm();
}

FockState build_cv_state(const std::vector<double>& x, const CvEmbeddingSpec& spec) {
  spec.validate();
  if (x.size() != static_cast<std::size_t>(spec.n_modes)) {
    throw ConfigError("build_cv_state: feature count must equal n_modes");
  }
  const int n = spec.n_modes;
  const int D = spec.truncation;

  FockState state;
  state.n_modes = n;
  state.truncation = D;

  if (spec.layers == 1) {
    HermitianExpCache disp(displacement_hermitian(D));
    state.mode_vectors.reserve(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
      state.mode_vectors.push_back(disp.column0(spec.beta * x[static_cast<std::size_t>(q)]));
    }
    return state;
  }

  const std::uint64_t dim = full_dimension(n, D);
  if (dim > spec.memory_budget) {
    throw BudgetError(
        "build_cv_state: D^n = " + std::to_string(dim) + " amplitudes exceed the budget of " +
        std::to_string(spec.memory_budget) + "; use layers=1 or reduce dimensionality with PCA");
  }

  HermitianExpCache disp(displacement_hermitian(D));
  HermitianExpCache sq(squeeze_hermitian(D));

  // Per-event operator matrices are identical across repeated layers.
  std::vector<Eigen::MatrixXcd> disp_ops;
  disp_ops.reserve(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) disp_ops.push_back(disp.unitary(spec.beta * x[static_cast<std::size_t>(q)]));
  std::vector<Eigen::MatrixXcd> sq_ops;
  if (n > 1) {
    sq_ops.reserve(static_cast<std::size_t>(n - 1));
    for (int q = 0; q + 1 < n; ++q) sq_ops.push_back(sq.unitary(spec.gamma * x[static_cast<std::size_t>(q)]));
  }

  state.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  state.amplitudes[0] = cd(1, 0);
  for (int op = 0; op < spec.layers; ++op) {
    if (op % 2 == 0) {
      for (int q = 0; q < n; ++q) {
        apply_mode_op(state.amplitudes, n, D, q, disp_ops[static_cast<std::size_t>(q)]);
      }
    } else {
      // Open chain, pairs applied left to right; these do not commute.
      for (int q = 0; q + 1 < n; ++q) {
        apply_pair_op(state.amplitudes, n, D, q, sq_ops[static_cast<std::size_t>(q)]);
      }
    }
  }
  return state;
}

namespace {

// Contiguous per-mode displaced-vacuum vectors for the layers == 1 fast path.
struct ProductStates {
  int n_modes = 0;
  int truncation = 0;
  std::vector<cd> data;  // event-major, then mode, then Fock index

  const cd* mode(std::size_t event, int q) const {
    return data.data() +
           (event * static_cast<std::size_t>(n_modes) + static_cast<std::size_t>(q)) *
               static_cast<std::size_t>(truncation);
  }
};

ProductStates build_product_states(const Dataset& d, const CvEmbeddingSpec& spec,
                                   int threads) {
  ProductStates ps;
  ps.n_modes = spec.n_modes;
  ps.truncation = spec.truncation;
  ps.data.resize(d.size() * static_cast<std::size_t>(spec.n_modes) *
                 static_cast<std::size_t>(spec.truncation));
  HermitianExpCache disp(displacement_hermitian(spec.truncation));
  parallel_for(d.size(), threads, [&](std::size_t i) {
    for (int q = 0; q < spec.n_modes; ++q) {
      Eigen::VectorXcd v = disp.column0(spec.beta * d.events[i].features[static_cast<std::size_t>(q)]);
      cd* out = ps.data.data() +
                (i * static_cast<std::size_t>(spec.n_modes) + static_cast<std::size_t>(q)) *
                    static_cast<std::size_t>(spec.truncation);
      for (int m = 0; m < spec.truncation; ++m) out[static_cast<std::size_t>(m)] = v[m];
    }
  });
  return ps;
}

double product_overlap(const ProductStates& a, std::size_t i, const ProductStates& b,
                       std::size_t j) {
  cd acc(1, 0);
  const int D = a.truncation;
  for (int q = 0; q < a.n_modes; ++q) {
    const cd* va = a.mode(i, q);
    const cd* vb = b.mode(j, q);
    cd dot(0, 0);
    for (int m = 0; m < D; ++m) dot += std::conj(va[static_cast<std::size_t>(m)]) * vb[static_cast<std::size_t>(m)];
    acc *= dot;
  }
  return std::norm(acc);
}

std::vector<Eigen::VectorXcd> build_full_states(const Dataset& d,
                                                const CvEmbeddingSpec& spec,
                                                int threads) {
  std::vector<Eigen::VectorXcd> states(d.size());
  parallel_for(d.size(), threads, [&](std::size_t i) {
    states[i] = build_cv_state(d.events[i].features, spec).amplitudes;
  });
  return states;
}

void check_mode_count(const Dataset& d, const CvEmbeddingSpec& spec, const char* what) {
  if (d.feature_count != static_cast<std::size_t>(spec.n_modes)) {
    throw ConfigError(std::string(what) + ": dataset feature count must equal n_modes");
  }
}

}  // namespace

double cv_kernel(const std::vector<double>& x, const std::vector<double>& y,
                 const CvEmbeddingSpec& spec) {
  if (x.size() != y.size()) throw ConfigError("cv_kernel: length mismatch");
  FockState sx = build_cv_state(x, spec);
  FockState sy = build_cv_state(y, spec);
  if (sx.is_product()) {
    cd acc(1, 0);
    for (int q = 0; q < spec.n_modes; ++q) {
      acc *= sx.mode_vectors[static_cast<std::size_t>(q)].dot(sy.mode_vectors[static_cast<std::size_t>(q)]);
    }
    return std::norm(acc);
  }
  return std::norm(sx.amplitudes.dot(sy.amplitudes));
}

KernelMatrix cv_gram(const Dataset& X, const CvEmbeddingSpec& spec, int threads) {
  if (X.empty()) throw ConfigError("cv_gram: empty dataset");
  check_mode_count(X, spec, "cv_gram");
  spec.validate();
  const std::size_t n = X.size();

  KernelMatrix k;
  k.symmetric = true;
  k.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  auto fill = [&](auto&& entry) {
    parallel_for(n, threads, [&](std::size_t i) {
      k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double v = entry(i, j);
        k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        k.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
    });
  };

  if (spec.layers == 1) {
    ProductStates ps = build_product_states(X, spec, threads);
    fill([&](std::size_t i, std::size_t j) { return product_overlap(ps, i, ps, j); });
  } else {
    auto states = build_full_states(X, spec, threads);
    fill([&](std::size_t i, std::size_t j) {
      return std::norm(states[i].dot(states[j]));
    });
  }
  return k;
}

KernelMatrix cv_cross_gram(const Dataset& X, const Dataset& Y,
                           const CvEmbeddingSpec& spec, int threads) {
  if (X.empty() || Y.empty()) throw ConfigError("cv_cross_gram: empty dataset");
  if (X.feature_count != Y.feature_count) {
    throw ConfigError("cv_cross_gram: feature count mismatch");
  }
  check_mode_count(X, spec, "cv_cross_gram");
  spec.validate();

  KernelMatrix k;
  k.symmetric = false;
  k.entries.resize(static_cast<Eigen::Index>(X.size()),
                   static_cast<Eigen::Index>(Y.size()));

  if (spec.layers == 1) {
    ProductStates px = build_product_states(X, spec, threads);
    ProductStates py = build_product_states(Y, spec, threads);
    parallel_for(X.size(), threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < Y.size(); ++j) {
        k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            product_overlap(px, i, py, j);
      }
    });
  } else {
    auto sx = build_full_states(X, spec, threads);
    auto sy = build_full_states(Y, spec, threads);
    parallel_for(X.size(), threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < Y.size(); ++j) {
        k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::norm(sx[i].dot(sy[j]));
      }
    });
  }
  return k;
}

std::vector<double> WignerGrid::x_values() const {
  std::vector<double> v;
  for (double x = x_min; x <= x_max + step / 2; x += step) v.push_back(x);
  return v;
}

std::vector<double> WignerGrid::p_values() const {
  std::vector<double> v;
  for (double p = p_min; p <= p_max + step / 2; p += step) v.push_back(p);
  return v;
}

Eigen::MatrixXd wigner(const Eigen::VectorXcd& state, const WignerGrid& grid) {
  if (state.size() < 1) throw ConfigError("wigner: empty state");
  if (!(grid.step > 0) || grid.x_max < grid.x_min || grid.p_max < grid.p_min) {
    throw ConfigError("wigner: invalid grid");
  }
  const int D = static_cast<int>(state.size());

  // psi(t) = sum_m c_m phi_m(t) with phi_m the oscillator eigenfunctions,
  // via the normalized Hermite-function recurrence.
  auto psi = [&](double t) -> cd {
    double prev = 0.0;
    double cur = 0.7511255444649425 * std::exp(-t * t / 2);  // pi^(-1/4)
    cd acc = state[0] * cur;
    for (int m = 1; m < D; ++m) {
      double next = std::sqrt(2.0 / m) * t * cur -
                    std::sqrt(static_cast<double>(m - 1) / m) * prev;
      prev = cur;
      cur = next;
      acc += state[m] * cur;
    }
    return acc;
  };

  const auto xs = grid.x_values();
  const auto ps = grid.p_values();

  // Quadrature over y: the integrand decays as a Gaussian envelope, so a
  // fixed wide range suffices. Simpson weights need an odd point count.
  const double reach = std::max(std::abs(grid.x_min), std::abs(grid.x_max)) + 8.0;
  const double h = 0.01;
  std::size_t half = static_cast<std::size_t>(std::ceil(reach / h));
  const std::size_t ny = 2 * half + 1;

  std::vector<double> yv(ny), wq(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    yv[j] = (static_cast<double>(j) - static_cast<double>(half)) * h;
    wq[j] = (j == 0 || j == ny - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    wq[j] *= h / 3.0;
  }

  Eigen::MatrixXd w(static_cast<Eigen::Index>(xs.size()),
                    static_cast<Eigen::Index>(ps.size()));
  std::vector<cd> g(ny);
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    const double x = xs[xi];
    for (std::size_t j = 0; j < ny; ++j) {
      g[j] = wq[j] * psi(x - yv[j]) * std::conj(psi(x + yv[j]));
    }
    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
      const double p = ps[pi];
      cd acc(0, 0);
      for (std::size_t j = 0; j < ny; ++j) {
        acc += std::polar(1.0, 4.0 * yv[j] * p) * g[j];
      }
      w(static_cast<Eigen::Index>(xi), static_cast<Eigen::Index>(pi)) =
          (2.0 / kPi) * acc.real();
    }
  }
  return w;
}

Eigen::MatrixXd wigner(const FockState& state, const WignerGrid& grid) {
  if (state.n_modes != 1) {
    throw ConfigError("wigner: state must be single-mode");
  }
  return wigner(state.is_product() ? state.mode_vectors.front() : state.amplitudes,
                grid);
}

void write_wigner_tsv(const std::string& path, const WignerGrid& grid,
                      const Eigen::MatrixXd& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << "x\tp\tW\n";
  const auto xs = grid.x_values();
  const auto ps = grid.p_values();
  char buf[96];
  for (std::size_t xi = 0; xi < xs.size(); ++xi) {
    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
      std::snprintf(buf, sizeof(buf), "%.6g\t%.6g\t%.6g\n", xs[xi], ps[pi],
                    w(static_cast<Eigen::Index>(xi), static_cast<Eigen::Index>(pi)));
      out << buf;
    }
  }
  if (!out) throw ParseError("write failed for '" + path + "'");
}

}  // namespace qtag
