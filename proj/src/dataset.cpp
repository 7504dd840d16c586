#include "qtag/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "qtag/errors.hpp"
#include "qtag/rng.hpp"

namespace qtag {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                     std::string(cell) + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ": non-finite value");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset load_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header line");
  auto header = split_csv(trim(line));
  if (header.empty() || trim(header[0]) != "label") {
    throw ParseError(path + ": header must start with 'label'");
  }
  const std::size_t feature_count = header.size() - 1;

  Dataset d;
  d.feature_count = feature_count;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty()) continue;
    auto cells = split_csv(row);
    if (cells.size() != feature_count + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(feature_count + 1) + " columns, got " +
                       std::to_string(cells.size()));
    }
    Event e;
    std::string_view label_cell = trim(cells[0]);
    if (label_cell == "1" || label_cell == "+1") {
      e.label = 1;
    } else if (label_cell == "-1") {
      e.label = -1;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": label '" +
                       std::string(label_cell) + "' is not -1 or 1");
    }
    e.features.reserve(feature_count);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      e.features.push_back(parse_double(trim(cells[i]), line_no));
    }
    d.events.push_back(std::move(e));
  }
  return d;
}

void save_events(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);  // keep LF endings everywhere
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << "label";
  for (std::size_t i = 0; i < d.feature_count; ++i) out << ",f" << i;
  out << "\n";
  for (const auto& e : d.events) {
    out << e.label;
    for (double v : e.features) out << ',' << format_double(v);
    out << "\n";
  }
  if (!out) throw ParseError("write failed for '" + path + "'");
}

ScalerParams fit_standardizer(const Dataset& d) {
  if (d.empty()) throw ConfigError("fit_standardizer: empty dataset");
  const std::size_t F = d.feature_count;
  const double n = static_cast<double>(d.size());
  ScalerParams s;
  s.means.assign(F, 0.0);
  s.stdevs.assign(F, 0.0);
  for (const auto& e : d.events)
    for (std::size_t j = 0; j < F; ++j) s.means[j] += e.features[j];
  for (std::size_t j = 0; j < F; ++j) s.means[j] /= n;
  for (const auto& e : d.events)
    for (std::size_t j = 0; j < F; ++j) {
      double diff = e.features[j] - s.means[j];
      s.stdevs[j] += diff * diff;
    }
  for (std::size_t j = 0; j < F; ++j) {
    double sd = std::sqrt(s.stdevs[j] / n);
    s.stdevs[j] = sd < 1e-12 ? 1.0 : sd;
  }
  return s;
}

Dataset apply_standardizer(const Dataset& d, const ScalerParams& s) {
  if (d.feature_count != s.means.size() || s.means.size() != s.stdevs.size()) {
    throw ConfigError("apply_standardizer: dimension mismatch");
  }
  Dataset out;
  out.feature_count = d.feature_count;
  out.events.reserve(d.size());
  for (const auto& e : d.events) {
    Event t;
    t.label = e.label;
    t.features.resize(e.features.size());
    for (std::size_t j = 0; j < e.features.size(); ++j) {
      t.features[j] = (e.features[j] - s.means[j]) / s.stdevs[j];
    }
    out.events.push_back(std::move(t));
  }
  return out;
}

PcaTransform fit_pca(const Dataset& d, std::size_t k) {
  if (d.empty()) throw ConfigError("fit_pca: empty dataset");
  const std::size_t F = d.feature_count;
  const std::size_t n = d.size();
  if (k < 1 || k > std::min(F, n)) {
    throw ConfigError("fit_pca: k out of range [1, min(F, count)]");
  }

  Eigen::MatrixXd X = feature_matrix(d);
  PcaTransform t;
  t.mean = X.colwise().mean();
  X.rowwise() -= t.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
  const auto& V = svd.matrixV();  // F x min(n, F)
  const auto& S = svd.singularValues();

  t.components.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(F));
  t.explained_variance.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::VectorXd c = V.col(static_cast<Eigen::Index>(i));
    // Sign convention: make the largest-magnitude entry positive.
    Eigen::Index imax = 0;
    c.cwiseAbs().maxCoeff(&imax);
    if (c[imax] < 0.0) c = -c;
    t.components.row(static_cast<Eigen::Index>(i)) = c.transpose();
    double s = S[static_cast<Eigen::Index>(i)];
    t.explained_variance[static_cast<Eigen::Index>(i)] =
        s * s / static_cast<double>(n);
  }
  return t;
}

Dataset apply_pca(const Dataset& d, const PcaTransform& t) {
  if (static_cast<Eigen::Index>(d.feature_count) != t.components.cols()) {
    throw ConfigError("apply_pca: dimension mismatch");
  }
  const std::size_t k = static_cast<std::size_t>(t.components.rows());
  Dataset out;
  out.feature_count = k;
  out.events.reserve(d.size());
  Eigen::VectorXd x(t.components.cols());
  for (const auto& e : d.events) {
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = e.features[static_cast<std::size_t>(j)];
    Eigen::VectorXd y = t.components * (x - t.mean);
    Event proj;
    proj.label = e.label;
    proj.features.assign(y.data(), y.data() + y.size());
    out.events.push_back(std::move(proj));
  }
  return out;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.count < 1) throw ConfigError("generate_synthetic: count must be >= 1");
  if (spec.informative_count > spec.feature_count) {
    throw ConfigError("generate_synthetic: informative_count exceeds feature_count");
  }
  if (!(spec.class_separation >= 0.0)) {
    throw ConfigError("generate_synthetic: class_separation must be >= 0");
  }
  Rng rng(spec.seed);
  Dataset d;
  d.feature_count = spec.feature_count;
  d.events.reserve(spec.count);
  const double half = spec.class_separation / 2.0;
  for (std::size_t i = 0; i < spec.count; ++i) {
    Event e;
    e.label = (rng.next_u64() & 1u) ? 1 : -1;
    e.features.resize(spec.feature_count);
    for (std::size_t j = 0; j < spec.feature_count; ++j) {
      double centre = (j < spec.informative_count) ? e.label * half : 0.0;
      e.features[j] = centre + rng.next_normal();
    }
    d.events.push_back(std::move(e));
  }
  return d;
}

std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t n,
                                           std::uint64_t seed) {
  if (n < 1 || n > count) throw ConfigError("subsample: n out of range [1, count]");
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_below(count - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

Dataset subsample(const Dataset& d, std::size_t n, std::uint64_t seed) {
  return select_events(d, subsample_indices(d.size(), n, seed));
}

Dataset select_events(const Dataset& d, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.feature_count = d.feature_count;
  out.events.reserve(indices.size());
  for (std::size_t i : indices) out.events.push_back(d.events.at(i));
  return out;
}

Eigen::MatrixXd feature_matrix(const Dataset& d) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(d.size()),
                    static_cast<Eigen::Index>(d.feature_count));
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.feature_count; ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          d.events[i].features[j];
  return X;
}

std::vector<int> labels_of(const Dataset& d) {
  std::vector<int> y;
  y.reserve(d.size());
  for (const auto& e : d.events) y.push_back(e.label);
  return y;
}

}  // namespace qtag
