#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qtag {

// Confidence bins over r = |qr| in [0, 1]. Intervals are half-open
// [e_i, e_{i+1}) with the final bin closed at 1.
struct TagBinning {
  std::vector<double> edges;  // strictly ascending, first 0, last 1

  std::size_t bin_count() const { return edges.size() - 1; }
};

// The seven-bin convention: (0, 0.1, 0.25, 0.5, 0.625, 0.75, 0.875, 1).
TagBinning static_bins();

// Edges at the j/k-quantiles of the observed r distribution; quantiles that
// land between order statistics use their midpoint.
TagBinning equal_population_bins(std::vector<double> r_values, std::size_t k = 7);

std::size_t bin_index(const TagBinning& binning, double r);  // 0-based

struct TagBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double epsilon = 0.0;         // fraction of all events in this bin
  double wrong_fraction = 0.0;  // w_i; 0 for empty bins
  double mean_r = 0.0;          // 0 for empty bins
};

struct TagReport {
  std::vector<TagBin> bins;
  double epsilon_eff = 0.0;
  std::size_t total = 0;
};

// sum_i eps_i (1 - 2 w_i)^2
double effective_efficiency(std::span<const double> epsilons,
                            std::span<const double> wrong_fractions);

// q = sign(qr) with sign(0) = +1, r = |qr|; events are binned by r.
TagReport tag_report(std::span<const double> qr, std::span<const int> labels,
                     const TagBinning& binning);

// Per-bin (<r_i>, 1 - 2 w_i) pairs for non-empty bins.
std::vector<std::pair<double, double>> calibration_check(const TagReport& report);

// One row per bin (bin_lo, bin_hi, epsilon_i, w_i, mean_r_i), then a trailing
// epsilon_eff line.
void write_tag_report_tsv(const std::string& path, const TagReport& report);

}  // namespace qtag
