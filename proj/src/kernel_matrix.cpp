#include "qtag/kernel_matrix.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "qtag/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "kernel cache I/O assumes a little-endian host");

namespace qtag {

namespace {

constexpr char kMagic[4] = {'Q', 'G', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_kernel(const std::string& path, const KernelMatrix& k) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out.write(kMagic, 4);
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint64_t>(k.rows()));
  write_raw(out, static_cast<std::uint64_t>(k.cols()));
  write_raw(out, static_cast<std::uint8_t>(k.symmetric ? 1 : 0));
  std::vector<double> row(k.cols());
  for (std::size_t i = 0; i < k.rows(); ++i) {
    for (std::size_t j = 0; j < k.cols(); ++j) {
      row[j] = k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw ParseError("write failed for '" + path + "'");
}

KernelMatrix load_kernel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError(path + ": not a kernel cache file");
  }
  auto version = read_raw<std::uint32_t>(in);
  if (version != kVersion) {
    throw ParseError(path + ": unsupported cache version " + std::to_string(version));
  }
  auto n_rows = read_raw<std::uint64_t>(in);
  auto n_cols = read_raw<std::uint64_t>(in);
  auto symmetric = read_raw<std::uint8_t>(in);
  KernelMatrix k;
  k.symmetric = symmetric != 0;
  k.entries.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
  std::vector<double> row(n_cols);
  for (std::uint64_t i = 0; i < n_rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw ParseError(path + ": truncated cache file");
    for (std::uint64_t j = 0; j < n_cols; ++j) {
      k.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return k;
}

double min_eigenvalue(const KernelMatrix& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k.entries,
                                                        Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void check_gram(const KernelMatrix& k) {
  if (!k.symmetric || k.rows() != k.cols()) {
    throw NumericError("check_gram: matrix is not a symmetric Gram");
  }
  const Eigen::Index n = k.entries.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(k.entries(i, i) - 1.0) > 1e-9) {
      throw NumericError("check_gram: diagonal entry deviates from 1");
    }
    for (Eigen::Index j = i; j < n; ++j) {
      double v = k.entries(i, j);
      if (v != k.entries(j, i)) throw NumericError("check_gram: asymmetric entries");
      if (v < -1e-12 || v > 1.0 + 1e-9) {
        throw NumericError("check_gram: entry outside [0, 1]");
      }
    }
  }
  double lambda_min = min_eigenvalue(k);
  if (lambda_min < -1e-8 * static_cast<double>(n)) {
    throw NumericError("check_gram: matrix is not PSD (lambda_min = " +
                       std::to_string(lambda_min) + ")");
  }
}

}  // namespace qtag
