#include "qtag/qubit_kernel.hpp"

#include <array>
#include <cmath>

#include "qtag/errors.hpp"
#include "qtag/parallel.hpp"
#include "qtag/rng.hpp"

namespace qtag {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 6.28318530717958647692;

// 2x2 gate, row-major {u00, u01, u10, u11}
using Gate2 = std::array<cd, 4>;

Gate2 rotation_y(double lambda) {
  double c = std::cos(lambda / 2), s = std::sin(lambda / 2);
  return {cd(c, 0), cd(-s, 0), cd(s, 0), cd(c, 0)};
}

Gate2 rotation_z(double lambda) {
  double c = std::cos(lambda / 2), s = std::sin(lambda / 2);
  return {cd(c, -s), cd(0, 0), cd(0, 0), cd(c, s)};
}

Gate2 rotation_x(double lambda) {
  double c = std::cos(lambda / 2), s = std::sin(lambda / 2);
  return {cd(c, 0), cd(0, -s), cd(0, -s), cd(c, 0)};
}

void apply_single(std::vector<cd>& amp, int n, int qubit, const Gate2& u) {
  const std::size_t stride = std::size_t{1} << (n - 1 - qubit);
  const std::size_t size = amp.size();
  for (std::size_t base = 0; base < size; base += 2 * stride) {
    for (std::size_t off = 0; off < stride; ++off) {
      const std::size_t i0 = base + off;
      const std::size_t i1 = i0 + stride;
      const cd a0 = amp[i0], a1 = amp[i1];
      amp[i0] = u[0] * a0 + u[1] * a1;
      amp[i1] = u[2] * a0 + u[3] * a1;
    }
  }
}

// Applies u to `target` on the subspace where `control` is |1>.
void apply_controlled(std::vector<cd>& amp, int n, int control, int target,
                      const Gate2& u) {
  const std::size_t cbit = std::size_t{1} << (n - 1 - control);
  const std::size_t tbit = std::size_t{1} << (n - 1 - target);
  const std::size_t size = amp.size();
  for (std::size_t i = 0; i < size; ++i) {
    if ((i & cbit) && !(i & tbit)) {
      const std::size_t j = i | tbit;
      const cd a0 = amp[i], a1 = amp[j];
      amp[i] = u[0] * a0 + u[1] * a1;
      amp[j] = u[2] * a0 + u[3] * a1;
    }
  }
}

void apply_hadamard_all(std::vector<cd>& amp, int n) {
  const double inv_sqrt2 = 0.70710678118654752440;
  const Gate2 h = {cd(inv_sqrt2, 0), cd(inv_sqrt2, 0), cd(inv_sqrt2, 0),
                   cd(-inv_sqrt2, 0)};
  for (int q = 0; q < n; ++q) apply_single(amp, n, q, h);
}

cd inner_product(const std::vector<cd>& a, const std::vector<cd>& b) {
  cd acc(0, 0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

}  // namespace

QubitEmbeddingSpec QubitEmbeddingSpec::from_seed(int n_qubits, int depth,
                                                 std::uint64_t angle_seed) {
  QubitEmbeddingSpec spec;
  spec.n_qubits = n_qubits;
  spec.depth = depth;
  spec.angle_seed = angle_seed;
  if (n_qubits >= 1 && depth >= 1) {
    const std::size_t count =
        static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(depth);
    Rng rng(angle_seed);
    spec.theta.resize(count);
    spec.phi.resize(count);
    for (auto& t : spec.theta) t = rng.next_double() * kTwoPi;
    for (auto& p : spec.phi) p = rng.next_double() * kTwoPi;
  }
  spec.validate();
  return spec;
}

void QubitEmbeddingSpec::validate() const {
  if (n_qubits < 1) throw ConfigError("qubit spec: n_qubits must be >= 1");
  if (n_qubits > 24) throw BudgetError("qubit spec: n_qubits > 24 exceeds the statevector budget");
  if (depth < 1) throw ConfigError("qubit spec: depth must be >= 1");
  const std::size_t count =
      static_cast<std::size_t>(n_qubits) * static_cast<std::size_t>(depth);
  if (theta.size() != count || phi.size() != count) {
    throw ConfigError("qubit spec: theta/phi must hold n_qubits*depth angles");
  }
}

double QubitState::norm_sq() const {
  double n = 0.0;
  for (const auto& a : amplitudes) n += std::norm(a);
  return n;
}

QubitState build_qubit_state(const std::vector<double>& x,
                             const QubitEmbeddingSpec& spec) {
  spec.validate();
  if (x.empty()) throw ConfigError("build_qubit_state: empty feature vector");

  const int n = spec.n_qubits;
  const std::size_t F = x.size();
  QubitState state;
  state.amplitudes.assign(std::size_t{1} << n, cd(0, 0));
  state.amplitudes[0] = cd(1, 0);
  auto& amp = state.amplitudes;

  for (int layer = 0; layer < spec.depth; ++layer) {
    apply_hadamard_all(amp, n);
    const std::size_t base = static_cast<std::size_t>(n) * layer;
    for (int q = 0; q < n; ++q) {
      const std::size_t a = base + static_cast<std::size_t>(q);
      apply_single(amp, n, q, rotation_z(x[a % F]));
      apply_single(amp, n, q, rotation_y(spec.theta[a]));
    }
    if (n > 1) {
      for (int q = 0; q < n; ++q) {
        const std::size_t a = base + static_cast<std::size_t>(q);
        apply_controlled(amp, n, q, (q + 1) % n, rotation_x(spec.phi[a]));
      }
    }
  }
  return state;
}

double qubit_kernel(const std::vector<double>& x, const std::vector<double>& y,
                    const QubitEmbeddingSpec& spec) {
  if (x.size() != y.size()) throw ConfigError("qubit_kernel: length mismatch");
  QubitState sx = build_qubit_state(x, spec);
  QubitState sy = build_qubit_state(y, spec);
  return std::norm(inner_product(sx.amplitudes, sy.amplitudes));
}

namespace {

std::vector<QubitState> build_states(const Dataset& d, const QubitEmbeddingSpec& spec,
                                     int threads) {
  std::vector<QubitState> states(d.size());
  parallel_for(d.size(), threads, [&](std::size_t i) {
    states[i] = build_qubit_state(d.events[i].features, spec);
  });
  return states;
}

}  // namespace

KernelMatrix qubit_gram(const Dataset& X, const QubitEmbeddingSpec& spec, int threads) {
  if (X.empty()) throw ConfigError("qubit_gram: empty dataset");
  const std::size_t n = X.size();
  auto states = build_states(X, spec, threads);

  KernelMatrix k;
  k.symmetric = true;
  k.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n, threads, [&](std::size_t i) {
    k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = std::norm(inner_product(states[i].amplitudes, states[j].amplitudes));
      k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      k.entries(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  });
  return k;
}

KernelMatrix qubit_cross_gram(const Dataset& X, const Dataset& Y,
                              const QubitEmbeddingSpec& spec, int threads) {
  if (X.empty() || Y.empty()) throw ConfigError("qubit_cross_gram: empty dataset");
  if (X.feature_count != Y.feature_count) {
    throw ConfigError("qubit_cross_gram: feature count mismatch");
  }
  auto sx = build_states(X, spec, threads);
  auto sy = build_states(Y, spec, threads);

  KernelMatrix k;
  k.symmetric = false;
  k.entries.resize(static_cast<Eigen::Index>(X.size()),
                   static_cast<Eigen::Index>(Y.size()));
  parallel_for(X.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < Y.size(); ++j) {
      k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::norm(inner_product(sx[i].amplitudes, sy[j].amplitudes));
    }
  });
  return k;
}

}  // namespace qtag
