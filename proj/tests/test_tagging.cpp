#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "qtag/errors.hpp"
#include "qtag/rng.hpp"
#include "qtag/tagging.hpp"

using namespace qtag;

TEST_CASE("static bins follow the seven-bin convention") {
  TagBinning b = static_bins();
  REQUIRE(b.bin_count() == 7);
  CHECK(b.edges.front() == 0.0);
  CHECK(b.edges.back() == 1.0);

  CHECK(bin_index(b, 0.7) == 4);    // [0.625, 0.75), fifth bin
  CHECK(bin_index(b, 0.0) == 0);    // first bin
  CHECK(bin_index(b, 1.0) == 6);    // closed top
  CHECK(bin_index(b, 0.25) == 2);   // half-open: edge belongs to the upper bin
  CHECK(bin_index(b, 0.875) == 6);
  CHECK(bin_index(b, 0.0999999) == 0);
}

TEST_CASE("equal-population bins split distinct values evenly") {
  std::vector<double> r(700);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = (static_cast<double>(i) + 0.5) / 700.0;
  }
  TagBinning b = equal_population_bins(r);
  REQUIRE(b.bin_count() == 7);
  std::vector<std::size_t> counts(7, 0);
  for (double v : r) counts[bin_index(b, v)]++;
  for (std::size_t c : counts) {
    CHECK(c >= 99);
    CHECK(c <= 101);
  }
}

TEST_CASE("degenerate r distributions are rejected") {
  std::vector<double> same(100, 0.4);
  CHECK_THROWS_WITH_AS(equal_population_bins(same), doctest::Contains("degenerate"),
                       NumericError);
  std::vector<double> few = {0.1, 0.5};
  CHECK_THROWS_AS(equal_population_bins(few, 7), ConfigError);
}

TEST_CASE("k=1 gives the single bin [0, 1]") {
  std::vector<double> r = {0.2, 0.9, 0.5};
  TagBinning b = equal_population_bins(r, 1);
  REQUIRE(b.bin_count() == 1);
  CHECK(b.edges[0] == 0.0);
  CHECK(b.edges[1] == 1.0);
}

TEST_CASE("published bin table reproduces the headline efficiency") {
  std::vector<double> eps = {0.159, 0.215, 0.292, 0.120, 0.103, 0.074, 0.036};
  std::vector<double> w = {0.482, 0.400, 0.272, 0.158, 0.091, 0.043, 0.015};
  double eff = effective_efficiency(eps, w);
  CHECK(std::abs(eff - 0.2903) < 0.003);
}

TEST_CASE("perfect tagging gives efficiency one, coin flipping gives zero") {
  TagBinning b = static_bins();

  std::vector<double> qr(50, 1.0);
  std::vector<int> y(50, 1);
  TagReport perfect = tag_report(qr, y, b);
  CHECK(perfect.epsilon_eff == doctest::Approx(1.0));

  // exactly half wrong in every populated bin
  std::vector<double> qr2;
  std::vector<int> y2;
  for (double r : {0.05, 0.2, 0.3, 0.55, 0.7, 0.8, 0.95}) {
    qr2.push_back(r);
    y2.push_back(1);
    qr2.push_back(r);
    y2.push_back(-1);
  }
  TagReport guess = tag_report(qr2, y2, b);
  CHECK(guess.epsilon_eff == doctest::Approx(0.0));
}

TEST_CASE("report fractions sum to one and empty bins contribute zero") {
  TagBinning b = static_bins();
  std::vector<double> qr = {0.05, -0.07, 0.3};  // bins 0 and 2 only
  std::vector<int> y = {1, 1, -1};
  TagReport rep = tag_report(qr, y, b);
  double eps_total = 0.0;
  for (const auto& bin : rep.bins) eps_total += bin.epsilon;
  CHECK(eps_total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.bins[1].count == 0);
  CHECK(rep.bins[1].epsilon == 0.0);
  CHECK(rep.bins[1].wrong_fraction == 0.0);

  // sign(0) = +1: a zero qr counts as predicting +1
  std::vector<double> qr0 = {0.0};
  std::vector<int> y_pos = {1}, y_neg = {-1};
  CHECK(tag_report(qr0, y_pos, b).bins[0].wrong_fraction == 0.0);
  CHECK(tag_report(qr0, y_neg, b).bins[0].wrong_fraction == 1.0);
}

TEST_CASE("efficiency is invariant under event permutation") {
  Rng rng(99);
  std::vector<double> qr(200);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < qr.size(); ++i) {
    qr[i] = rng.next_double() * 2.0 - 1.0;
    y[i] = (rng.next_u64() & 1u) ? 1 : -1;
  }
  TagBinning b = static_bins();
  double base = tag_report(qr, y, b).epsilon_eff;

  std::vector<std::size_t> perm(qr.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937{42});
  std::vector<double> qr_p(qr.size());
  std::vector<int> y_p(y.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    qr_p[i] = qr[perm[i]];
    y_p[i] = y[perm[i]];
  }
  CHECK(tag_report(qr_p, y_p, b).epsilon_eff == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("correcting a wrong prediction never lowers the efficiency") {
  // Holds for bins that tag no worse than chance (w <= 1/2). The quadratic
  // (1-2w)^2 is symmetric about w = 1/2, so an anti-correlated bin can only
  // lose mass when corrected; a usable tagger never operates there.
  Rng rng(7);
  TagBinning b = static_bins();
  int flips = 0;
  for (int trial = 0; trial < 80; ++trial) {
    std::vector<double> qr(60);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < qr.size(); ++i) {
      qr[i] = rng.next_double() * 2.0 - 1.0;
      // correct with probability 3/4 keeps every bin below w = 1/2
      int q = qr[i] < 0.0 ? -1 : 1;
      y[i] = (rng.next_below(4) < 3) ? q : -q;
    }
    TagReport before_rep = tag_report(qr, y, b);

    // flip one misclassified event, keeping |qr|, in a bin with w <= 1/2
    bool flipped = false;
    for (std::size_t i = 0; i < qr.size() && !flipped; ++i) {
      int q = qr[i] < 0.0 ? -1 : 1;
      if (q == y[i]) continue;
      std::size_t bin = bin_index(b, std::abs(qr[i]));
      if (before_rep.bins[bin].wrong_fraction <= 0.5) {
        qr[i] = -qr[i];
        flipped = true;
      }
    }
    if (!flipped) continue;
    ++flips;
    double after = tag_report(qr, y, b).epsilon_eff;
    CHECK(after >= before_rep.epsilon_eff - 1e-15);
  }
  CHECK(flips > 50);
}

TEST_CASE("static binning is a pure lookup") {
  Rng rng(3);
  TagBinning b = static_bins();
  std::vector<double> qr(100);
  std::vector<int> y(100);
  for (std::size_t i = 0; i < qr.size(); ++i) {
    qr[i] = rng.next_double() * 2.0 - 1.0;
    y[i] = (rng.next_u64() & 1u) ? 1 : -1;
  }
  TagReport a = tag_report(qr, y, b);
  TagReport c = tag_report(qr, y, b);
  CHECK(a.epsilon_eff == c.epsilon_eff);
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    CHECK(a.bins[i].count == c.bins[i].count);
  }
}

TEST_CASE("calibrated synthetic tagger matches <r> to 1 - 2w per bin") {
  // draw r uniformly, make the prediction correct with probability (1+r)/2
  Rng rng(2718);
  const std::size_t n = 10000;
  std::vector<double> qr(n);
  std::vector<int> y(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double r = rng.next_double();
    bool correct = rng.next_double() < (1.0 + r) / 2.0;
    qr[i] = correct ? r : -r;
  }
  TagReport rep = tag_report(qr, y, static_bins());
  auto pairs = calibration_check(rep);
  REQUIRE(!pairs.empty());
  for (const auto& [mean_r, one_minus_2w] : pairs) {
    CHECK(std::abs(mean_r - one_minus_2w) < 0.05);
  }
}

TEST_CASE("calibration pairs report only populated bins") {
  std::vector<double> qr(5, 0.8);
  std::vector<int> y(5, 1);
  TagBinning single = equal_population_bins(std::vector<double>(qr), 1);
  TagReport rep = tag_report(qr, y, single);
  auto pairs = calibration_check(rep);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].first == doctest::Approx(0.8));
  CHECK(pairs[0].second == doctest::Approx(1.0));

  TagReport sparse = tag_report(std::vector<double>{0.05}, std::vector<int>{1},
                                static_bins());
  CHECK(calibration_check(sparse).size() == 1);  // six empty bins omitted
}

TEST_CASE("tag_report validates its inputs") {
  TagBinning b = static_bins();
  CHECK_THROWS_AS(tag_report(std::vector<double>{0.1}, std::vector<int>{1, -1}, b),
                  ConfigError);
  CHECK_THROWS_AS(tag_report(std::vector<double>{1.5}, std::vector<int>{1}, b),
                  ConfigError);
  CHECK_THROWS_AS(tag_report(std::vector<double>{}, std::vector<int>{}, b), ConfigError);
}

TEST_CASE("report TSV has one row per bin plus the efficiency line") {
  std::vector<double> qr = {0.05, 0.3, 0.7, -0.9};
  std::vector<int> y = {1, -1, 1, -1};
  TagReport rep = tag_report(qr, y, static_bins());
  auto path = (std::filesystem::temp_directory_path() / "qtag_report.tsv").string();
  write_tag_report_tsv(path, rep);

  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 9);  // header + 7 bins + epsilon_eff
  CHECK(lines[0] == "bin_lo\tbin_hi\tepsilon_i\tw_i\tmean_r_i");
  CHECK(lines[8].rfind("epsilon_eff\t", 0) == 0);
}
