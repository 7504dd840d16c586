#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "qtag/dataset.hpp"
#include "qtag/kernel_matrix.hpp"

namespace qtag {

// Embedding circuit: depth layers, each applying H on every qubit, then per
// qubit a data rotation R_z(x) followed by R_y(theta), then a ring of
// controlled-R_x(phi) gates (control k, target k+1 mod n; skipped for n=1).
// Feature indices wrap cyclically when n*depth exceeds the feature count, so
// the full event is encoded multiple times on deep circuits.
//
// theta and phi hold n*depth angles each. When built from a seed they are
// drawn uniformly from [0, 2pi); they stay fixed, nothing is trained.
struct QubitEmbeddingSpec {
  int n_qubits = 1;
  int depth = 1;
  std::vector<double> theta;
  std::vector<double> phi;
  std::uint64_t angle_seed = 0;

  static QubitEmbeddingSpec from_seed(int n_qubits, int depth, std::uint64_t angle_seed);
  void validate() const;
};

// Dense statevector; qubit 0 owns the most significant index bit.
struct QubitState {
  std::vector<std::complex<double>> amplitudes;
  double norm_sq() const;
};

QubitState build_qubit_state(const std::vector<double>& x, const QubitEmbeddingSpec& spec);

// |<psi(x)|psi(y)>|^2
double qubit_kernel(const std::vector<double>& x, const std::vector<double>& y,
                    const QubitEmbeddingSpec& spec);

// Gram over X (symmetric; embedded states are built once per event and
// reused) or cross-kernel X rows vs Y columns.
KernelMatrix qubit_gram(const Dataset& X, const QubitEmbeddingSpec& spec, int threads = 0);
KernelMatrix qubit_cross_gram(const Dataset& X, const Dataset& Y,
                              const QubitEmbeddingSpec& spec, int threads = 0);

}  // namespace qtag
