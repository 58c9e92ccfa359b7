#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <thread>

#include "ljchain/ensemble.hpp"

using namespace ljchain;

namespace {

std::shared_ptr<const Ensemble> strong_weak_iid(double p_strong, double p_weak,
                                                double weak_depth = 0.5) {
  return Ensemble::make_iid(
      {make_twelve_six(1.0, 1.0, "strong"), make_twelve_six(weak_depth, 1.0, "weak")},
      {p_strong, p_weak});
}

}  // namespace

TEST_CASE("periodic tiling and degenerate iid") {
  auto per = Ensemble::make_periodic(
      {make_twelve_six(1.0, 1.0, "a"), make_twelve_six(0.5, 1.0, "b")}, {0, 1});
  const auto chain = sample_realization(per, 4, 0);
  CHECK(chain.bond_index == std::vector<std::uint32_t>{0, 1, 0, 1});

  auto degenerate = strong_weak_iid(1.0, 0.0);
  const auto all0 = sample_realization(degenerate, 100, 7);
  for (auto k : all0.bond_index) CHECK(k == 0);

  CHECK_THROWS_AS(sample_realization(per, 0, 0), std::invalid_argument);
}

TEST_CASE("iid fractions concentrate at the law") {
  auto half = strong_weak_iid(0.5, 0.5);
  const auto chain = sample_realization(half, 100000, 12345);
  std::size_t ones = 0;
  for (auto k : chain.bond_index) ones += k;
  const double frac = static_cast<double>(ones) / chain.n;
  CHECK(std::abs(frac - 0.5) < 0.01);  // ~6 sigma of a fair binomial
}

TEST_CASE("exact expectations") {
  auto single = Ensemble::make_periodic({make_twelve_six(1.0, 1.0)}, {0});
  CHECK(expectation_inverse_stiffness(*single) == doctest::Approx(1.0 / 36).epsilon(1e-9));

  auto half = strong_weak_iid(0.5, 0.5);  // alpha 36 and 18
  CHECK(expectation_inverse_stiffness(*half) == doctest::Approx(1.0 / 24).epsilon(1e-9));

  auto per = Ensemble::make_periodic(
      {make_twelve_six(1.0, 1.0, "a"), make_twelve_six(0.5, 1.0, "b")}, {0, 1, 1});
  CHECK(expectation_inverse_stiffness(*per) == doctest::Approx(5.0 / 108).epsilon(1e-9));
}

TEST_CASE("beta infimum respects the effective support") {
  auto single = Ensemble::make_periodic({make_twelve_six(1.0, 1.0)}, {0});
  CHECK(beta_infimum(*single) == doctest::Approx(1.0).epsilon(1e-9));

  auto both = strong_weak_iid(0.5, 0.5, 0.4);
  CHECK(beta_infimum(*both) == doctest::Approx(0.4).epsilon(1e-9));

  auto zero_weight = strong_weak_iid(1.0, 0.0, 0.4);
  CHECK(beta_infimum(*zero_weight) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("empirical averages") {
  auto single = Ensemble::make_periodic({make_twelve_six(1.0, 1.0)}, {0});
  const auto homog = sample_realization(single, 1000, 1);
  CHECK(empirical_average(homog, Quantity::inverse_alpha(), 0.0, 1.0) ==
        doctest::Approx(1.0 / 36).epsilon(1e-12));
  CHECK(empirical_average(homog, Quantity::inverse_alpha(), 0.3, 0.62) ==
        doctest::Approx(1.0 / 36).epsilon(1e-12));

  auto per = Ensemble::make_periodic(
      {make_twelve_six(1.0, 1.0, "a"), make_twelve_six(0.5, 1.0, "b")}, {0, 1});
  const auto alt = sample_realization(per, 1000, 1);
  CHECK(empirical_average(alt, Quantity::inverse_alpha(), 0.0, 1.0) ==
        doctest::Approx(0.5 / 36 + 0.5 / 18).epsilon(1e-12));

  auto half = strong_weak_iid(0.5, 0.5);  // 1/alpha in {1/36, 1/18}
  const auto big = sample_realization(half, 1000000, 99);
  const double got = empirical_average(big, Quantity::inverse_alpha(), 0.0, 1.0);
  const double se = 0.5 * (1.0 / 18 - 1.0 / 36) / std::sqrt(1e6);
  CHECK(std::abs(got - 1.0 / 24) <= 3.0 * se);

  CHECK_THROWS_AS(empirical_average(homog, Quantity::inverse_alpha(), 0.4001, 0.4005),
                  std::invalid_argument);
}

TEST_CASE("ckappa averages match the exact expectation for periodic laws") {
  auto per = Ensemble::make_periodic(
      {make_twelve_six(1.0, 1.0, "a"), make_twelve_six(0.5, 1.0, "b")}, {0, 1});
  const auto chain = sample_realization(per, 2000, 1);
  const Quantity q = Quantity::ckappa(0.05);
  CHECK(empirical_average(chain, q, 0.0, 1.0) ==
        doctest::Approx(expectation(*per, q)).epsilon(1e-9));
}

TEST_CASE("indicator averages") {
  auto mix = strong_weak_iid(0.5, 0.5, 0.4);  // depths 1 and 0.4
  const auto chain = sample_realization(mix, 1000000, 4);

  CHECK(empirical_indicator_cdf(chain, 0.5, 0.25, 0.1) == doctest::Approx(0.0));
  // full event, up to the lattice edge count
  CHECK(empirical_indicator_cdf(chain, 0.5, 0.25, 2.0) == doctest::Approx(1.0).epsilon(1e-4));

  const double got = empirical_indicator_cdf(chain, 0.5, 0.25, 0.5);
  const double se = std::sqrt(0.25 / (0.5 * 1e6));
  CHECK(std::abs(got - 0.5) <= 3.0 * se);

  // boundary windows stay comparable to interior ones
  const double at0 = empirical_indicator_cdf(chain, 0.0, 0.1, 0.5);
  const double se0 = std::sqrt(0.25 / (0.1 * 1e6));
  CHECK(std::abs(at0 - 0.5) <= 3.0 * se0);

  CHECK_THROWS_AS(empirical_indicator_cdf(chain, -0.5, 0.1, 0.5), std::invalid_argument);
}

TEST_CASE("window infimum: homogeneous, planted weak bond, tie break") {
  auto single = Ensemble::make_periodic({make_twelve_six(1.0, 1.0)}, {0});
  const auto homog = sample_realization(single, 1000, 1);
  const auto w = window_infimum_beta_n(homog, 0.5, 0.1);
  CHECK(w.beta_n == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(w.index == 401);  // smallest index in the open window

  auto mix = strong_weak_iid(0.5, 0.5, 0.4);
  const auto chain = sample_realization(mix, 64, 11);
  const auto wi = window_infimum_beta_n(chain, 0.5, 0.2);
  bool weak_in_window = false;
  for (std::uint64_t i = 20; i <= 44; ++i) weak_in_window |= chain.bond_index[i] == 1;
  if (weak_in_window) {
    CHECK(wi.beta_n == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(chain.bond_index[wi.index] == 1);
    for (std::uint64_t i = 0; i < wi.index; ++i) {
      if (i > 20) CHECK(chain.bond_index[i] == 0);  // first weak bond wins
    }
  }
}

TEST_CASE("window infimum miss probability matches the exact binomial") {
  // window (3/8, 5/8) on n=16 holds lattice bonds {7, 8, 9}; all-strong
  // probability is 2^-3
  auto mix = strong_weak_iid(0.5, 0.5, 0.4);
  int misses = 0;
  const int trials = 4000;
  for (int s = 0; s < trials; ++s) {
    const auto chain = sample_realization(mix, 16, 1000 + s);
    if (window_infimum_beta_n(chain, 0.5, 0.125).beta_n > 0.5) ++misses;
  }
  const double p = 1.0 / 8.0;
  const double se = std::sqrt(p * (1 - p) / trials);
  CHECK(std::abs(misses / static_cast<double>(trials) - p) <= 4.0 * se);
  // and the infimum never goes below the ensemble beta
  auto single = sample_realization(mix, 128, 5);
  CHECK(window_infimum_beta_n(single, 0.3, 0.05).beta_n >= beta_infimum(*mix) - 1e-12);
}

TEST_CASE("markov laws verify stationarity and sample their marginal") {
  std::vector<PotentialSpec> specs{make_twelve_six(1.0, 1.0, "a"),
                                   make_twelve_six(0.5, 1.0, "b")};
  // two-state chain with stationary pi = (2/3, 1/3)
  const std::vector<std::vector<double>> p{{0.9, 0.1}, {0.2, 0.8}};
  CHECK_THROWS_AS(Ensemble::make_markov(specs, p, {0.5, 0.5}), std::invalid_argument);
  auto mk = Ensemble::make_markov(specs, p, {2.0 / 3.0, 1.0 / 3.0});
  const auto chain = sample_realization(mk, 200000, 3);
  double ones = 0;
  for (auto k : chain.bond_index) ones += k;
  // autocorrelated chain: generous 0.01 band around 1/3
  CHECK(std::abs(ones / chain.n - 1.0 / 3.0) < 0.01);

  CHECK_THROWS_AS(Ensemble::make_markov(specs, {{1.0, 0.1}, {0.2, 0.8}}, {0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("stationarity: shifted windows agree within the sampling band") {
  auto mix = strong_weak_iid(0.7, 0.3);
  double diff_sum = 0.0, diff_sq = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const auto chain = sample_realization(mix, 20000, 500 + s);
    const double a = empirical_average(chain, Quantity::inverse_alpha(), 0.0, 0.4);
    const double b = empirical_average(chain, Quantity::inverse_alpha(), 0.5, 0.9);
    diff_sum += a - b;
    diff_sq += (a - b) * (a - b);
  }
  const double mean = diff_sum / seeds;
  const double sd = std::sqrt((diff_sq / seeds - mean * mean) / seeds);
  CHECK(std::abs(mean) <= 3.0 * sd + 1e-12);
}

TEST_CASE("ergodic decay of the empirical average error") {
  auto mix = strong_weak_iid(0.5, 0.5);
  const double exact = expectation_inverse_stiffness(*mix);
  std::vector<double> log_n, log_rmse;
  for (std::uint64_t n : {1000ull, 10000ull, 100000ull, 1000000ull}) {
    double sq = 0.0;
    const int seeds = 16;
    for (int s = 0; s < seeds; ++s) {
      const auto chain = sample_realization(mix, n, 40 + s);
      const double err = empirical_average(chain, Quantity::inverse_alpha(), 0.0, 1.0) - exact;
      sq += err * err;
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_rmse.push_back(0.5 * std::log(sq / seeds));
  }
  // least-squares slope on the log-log cloud
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    mx += log_n[i];
    my += log_rmse[i];
  }
  mx /= log_n.size();
  my /= log_n.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    num += (log_n[i] - mx) * (log_rmse[i] - my);
    den += (log_n[i] - mx) * (log_n[i] - mx);
  }
  const double slope = num / den;
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("same (ensemble, n, seed) reproduces bit-identical realizations across threads") {
  auto mix = strong_weak_iid(0.5, 0.5);
  const auto reference = sample_realization(mix, 50000, 777);
  std::vector<std::vector<std::uint32_t>> results(4);
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t]() { results[t] = sample_realization(mix, 50000, 777).bond_index; });
  }
  for (auto& t : pool) t.join();
  for (const auto& r : results) CHECK(r == reference.bond_index);

  const auto other = sample_realization(mix, 50000, 778);
  CHECK(other.bond_index != reference.bond_index);
}

TEST_CASE("probability validation") {
  CHECK_THROWS_AS(strong_weak_iid(0.5, 0.4), std::invalid_argument);
  CHECK_THROWS_AS(Ensemble::make_periodic({make_twelve_six(1.0, 1.0)}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Ensemble::make_periodic({make_twelve_six(1.0, 1.0)}, {1}),
                  std::invalid_argument);
}
