#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qtag/dataset.hpp"
#include "qtag/kernel_matrix.hpp"

namespace qtag {

// Continuous-variable embedding simulated directly in a D-dimensional
// photon-number truncation per mode (one mode per input feature).
// `layers` counts total operations in the alternating sequence, displacement
// first: layers=1 is displacement only (an unentangled product state),
// layers=2 adds one squeezing layer, and so on.
struct CvEmbeddingSpec {
  int n_modes = 1;
  int layers = 1;
  double beta = 0.1;   // displacement scale
  double gamma = 0.1;  // two-mode squeezing scale (unused when layers == 1)
  int truncation = 8;  // Fock cutoff D per mode
  std::uint64_t memory_budget = std::uint64_t{1} << 20;  // max amplitudes, layers > 1

  void validate() const;
};

struct LadderOperators {
  Eigen::MatrixXcd a;      // annihilation: a[m][m+1] = sqrt(m+1)
  Eigen::MatrixXcd a_dag;  // conjugate transpose of a
};

LadderOperators ladder_operators(int truncation);

// G = beta * x * (a_dag - a), anti-Hermitian for real features.
Eigen::MatrixXcd displacement_generator(double x, double beta, int truncation);
// exp(G): unitary D x D displacement.
Eigen::MatrixXcd single_mode_displacement(double x, double beta, int truncation);
// exp(gamma * x * (a (x) a - a_dag (x) a_dag)) on two adjacent modes,
// D^2 x D^2 with the first mode as the slower tensor index.
Eigen::MatrixXcd two_mode_squeeze(double x, double gamma, int truncation);
// exp(r (a a - a_dag a_dag) / 2): single-mode squeezer used for phase-space plots.
Eigen::MatrixXcd single_mode_squeeze(double r, int truncation);

struct FockState {
  int n_modes = 0;
  int truncation = 0;
  // Product form (one vector per mode), used when layers == 1.
  std::vector<Eigen::VectorXcd> mode_vectors;
  // Full tensor otherwise; mode 0 is the slowest index.
  Eigen::VectorXcd amplitudes;

  bool is_product() const { return !mode_vectors.empty(); }
  Eigen::VectorXcd full() const;  // expands the product form when needed
  double norm_sq() const;
};

FockState build_cv_state(const std::vector<double>& x, const CvEmbeddingSpec& spec);

double cv_kernel(const std::vector<double>& x, const std::vector<double>& y,
                 const CvEmbeddingSpec& spec);
KernelMatrix cv_gram(const Dataset& X, const CvEmbeddingSpec& spec, int threads = 0);
KernelMatrix cv_cross_gram(const Dataset& X, const Dataset& Y,
                           const CvEmbeddingSpec& spec, int threads = 0);

struct WignerGrid {
  double x_min = -4.0;
  double x_max = 4.0;
  double p_min = -4.0;
  double p_max = 4.0;
  double step = 0.1;

  std::vector<double> x_values() const;
  std::vector<double> p_values() const;
};

// Phase-space quasi-probability of a single-mode state, W[x index][p index],
// with x_hat = (a_dag + a)/sqrt(2) and p_hat = i(a_dag - a)/sqrt(2).
// Evaluated from Hermite-function position wavefunctions by quadrature.
Eigen::MatrixXd wigner(const Eigen::VectorXcd& state, const WignerGrid& grid);
Eigen::MatrixXd wigner(const FockState& state, const WignerGrid& grid);

void write_wigner_tsv(const std::string& path, const WignerGrid& grid,
                      const Eigen::MatrixXd& w);

}  // namespace qtag
