#pragma once

#include <string>

#include <Eigen/Dense>

namespace qtag {

// Dense matrix of pairwise embedded-state overlaps. Symmetric Grams are
// assembled over the upper triangle and mirrored, so symmetry is exact.
struct KernelMatrix {
  Eigen::MatrixXd entries;
  bool symmetric = false;

  std::size_t rows() const { return static_cast<std::size_t>(entries.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(entries.cols()); }
};

// Binary cache format, little-endian: magic "QGRM", u32 version, u64 n_rows,
// u64 n_cols, u8 symmetric flag, then row-major 64-bit floats.
void save_kernel(const std::string& path, const KernelMatrix& k);
KernelMatrix load_kernel(const std::string& path);

double min_eigenvalue(const KernelMatrix& k);

// Throws NumericError when a symmetric Gram violates its invariants:
// exact symmetry, diagonal within 1e-9 of 1, entries in [-1e-12, 1+1e-9],
// minimum eigenvalue >= -1e-8 * n.
void check_gram(const KernelMatrix& k);

}  // namespace qtag
