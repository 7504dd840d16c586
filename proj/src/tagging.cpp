#include "qtag/tagging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "qtag/errors.hpp"
#include "qtag/svm.hpp"

namespace qtag {

TagBinning static_bins() {
  return TagBinning{{0.0, 0.1, 0.25, 0.5, 0.625, 0.75, 0.875, 1.0}};
}

TagBinning equal_population_bins(std::vector<double> r_values, std::size_t k) {
  if (k < 1) throw ConfigError("equal_population_bins: k must be >= 1");
  if (r_values.size() < k) {
    throw ConfigError("equal_population_bins: need at least k values");
  }
  std::sort(r_values.begin(), r_values.end());

  TagBinning binning;
  binning.edges.push_back(0.0);
  const std::size_t m = r_values.size();
  for (std::size_t j = 1; j < k; ++j) {
    // j/k-quantile; an exact boundary between order statistics takes their midpoint
    const double pos = static_cast<double>(j) * static_cast<double>(m) /
                       static_cast<double>(k);
    const auto idx = static_cast<std::size_t>(pos);
    double edge;
    if (static_cast<double>(idx) == pos && idx > 0) {
      edge = (r_values[idx - 1] + r_values[idx]) / 2.0;
    } else {
      edge = r_values[idx];
    }
    binning.edges.push_back(edge);
  }
  binning.edges.push_back(1.0);

  for (std::size_t i = 1; i < binning.edges.size(); ++i) {
    if (!(binning.edges[i] > binning.edges[i - 1])) {
      throw NumericError("equal_population_bins: degenerate r distribution");
    }
  }
  return binning;
}

std::size_t bin_index(const TagBinning& binning, double r) {
  const auto& e = binning.edges;
  // upper_bound gives the first edge > r; the final bin is closed at 1
  auto it = std::upper_bound(e.begin(), e.end(), r);
  std::size_t idx = static_cast<std::size_t>(it - e.begin());
  if (idx == 0) return 0;
  if (idx >= e.size()) return e.size() - 2;
  return idx - 1;
}

double effective_efficiency(std::span<const double> epsilons,
                            std::span<const double> wrong_fractions) {
  if (epsilons.size() != wrong_fractions.size()) {
    throw ConfigError("effective_efficiency: length mismatch");
  }
  double eff = 0.0;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const double factor = 1.0 - 2.0 * wrong_fractions[i];
    eff += epsilons[i] * factor * factor;
  }
  return eff;
}

TagReport tag_report(std::span<const double> qr, std::span<const int> labels,
                     const TagBinning& binning) {
  if (qr.size() != labels.size()) throw ConfigError("tag_report: length mismatch");
  if (qr.empty()) throw ConfigError("tag_report: no events");

  const std::size_t n_bins = binning.bin_count();
  TagReport report;
  report.total = qr.size();
  report.bins.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    report.bins[i].lo = binning.edges[i];
    report.bins[i].hi = binning.edges[i + 1];
  }

  std::vector<std::size_t> wrong(n_bins, 0);
  std::vector<double> r_sum(n_bins, 0.0);
  for (std::size_t t = 0; t < qr.size(); ++t) {
    if (!(qr[t] >= -1.0 - 1e-12 && qr[t] <= 1.0 + 1e-12)) {
      throw ConfigError("tag_report: qr outside [-1, 1]");
    }
    const int q = sign_with_tie(qr[t]);
    const double r = std::min(std::abs(qr[t]), 1.0);
    const std::size_t b = bin_index(binning, r);
    report.bins[b].count += 1;
    r_sum[b] += r;
    if (q != labels[t]) wrong[b] += 1;
  }

  std::vector<double> eps(n_bins), w(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    auto& bin = report.bins[i];
    bin.epsilon = static_cast<double>(bin.count) / static_cast<double>(report.total);
    if (bin.count > 0) {
      bin.wrong_fraction = static_cast<double>(wrong[i]) / static_cast<double>(bin.count);
      bin.mean_r = r_sum[i] / static_cast<double>(bin.count);
    }
    eps[i] = bin.epsilon;
    w[i] = bin.wrong_fraction;
  }
  report.epsilon_eff = effective_efficiency(eps, w);
  return report;
}

std::vector<std::pair<double, double>> calibration_check(const TagReport& report) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& bin : report.bins) {
    if (bin.count == 0) continue;
    pairs.emplace_back(bin.mean_r, 1.0 - 2.0 * bin.wrong_fraction);
  }
  return pairs;
}

void write_tag_report_tsv(const std::string& path, const TagReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << "bin_lo\tbin_hi\tepsilon_i\tw_i\tmean_r_i\n";
  char buf[160];
  for (const auto& bin : report.bins) {
    std::snprintf(buf, sizeof(buf), "%.6g\t%.6g\t%.6g\t%.6g\t%.6g\n", bin.lo, bin.hi,
                  bin.epsilon, bin.wrong_fraction, bin.mean_r);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "epsilon_eff\t%.6g\n", report.epsilon_eff);
  out << buf;
  if (!out) throw ParseError("write failed for '" + path + "'");
}

}  // namespace qtag
