#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ljchain/homogenize.hpp"

using namespace ljchain;

namespace {

std::shared_ptr<const Ensemble> homogeneous() {
  return Ensemble::make_periodic({make_twelve_six(1.0, 1.0)}, {0});
}

std::shared_ptr<const Ensemble> two_stiffness_periodic() {
  // alpha 36 / 18, deltas both 1, depths 1 / 0.5
  return Ensemble::make_periodic(
      {make_twelve_six(1.0, 1.0, "stiff"), make_twelve_six(0.5, 1.0, "soft")}, {0, 1});
}

std::shared_ptr<const Ensemble> scaled_homogeneous(double s) {
  return Ensemble::make_periodic({make_twelve_six(s, 1.0)}, {0});
}

}  // namespace

TEST_CASE("limit prediction: reference values") {
  const auto p = predict_limit(*homogeneous(), 0.1);
  CHECK(p.alpha_bar == doctest::Approx(36.0).epsilon(1e-9));
  CHECK(p.beta == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.predicted_min == doctest::Approx(0.36).epsilon(1e-9));
  CHECK(p.gamma_star == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  CHECK(p.regime == Regime::elastic);

  auto mixed = Ensemble::make_iid(
      {make_twelve_six(1.0, 1.0, "a"), make_twelve_six(0.5, 1.0, "b")}, {0.5, 0.5});
  const auto q = predict_limit(*mixed, 0.3);
  CHECK(q.alpha_bar == doctest::Approx(24.0).epsilon(1e-9));
  // 24 * 0.09 = 2.16 exceeds the weakest depth 0.5
  CHECK(q.predicted_min == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(q.regime == Regime::fractured);

  const auto z = predict_limit(*homogeneous(), 0.0);
  CHECK(z.predicted_min == 0.0);
  CHECK(z.regime == Regime::elastic);

  const auto c = predict_limit(*homogeneous(), z.gamma_star);
  CHECK(predict_limit(*homogeneous(), predict_limit(*homogeneous(), 0).gamma_star).regime ==
        Regime::critical);
  (void)c;
}

TEST_CASE("limit energy on canonical profiles") {
  const auto pred = predict_limit(*homogeneous(), 0.4);
  const double gamma = 0.4;

  LimitProfile affine;
  affine.gamma = gamma;
  affine.segments.push_back({0.0, 1.0, {0.0, gamma}});
  CHECK(limit_energy(affine, pred) == doctest::Approx(36.0 * gamma * gamma).epsilon(1e-12));

  LimitProfile step;
  step.gamma = gamma;
  step.segments.push_back({0.0, 0.5, {0.0}});
  step.segments.push_back({0.5, 1.0, {gamma}});
  CHECK(limit_energy(step, pred) == doctest::Approx(1.0).epsilon(1e-12));

  LimitProfile half;
  half.gamma = gamma;
  half.segments.push_back({0.0, 0.5, {0.0, gamma / 2}});
  half.segments.push_back({0.5, 1.0, {gamma / 4 + gamma / 2, gamma / 2}});
  // slope gamma/2 throughout plus one jump of gamma/2 at x = 1/2
  CHECK(limit_energy(half, pred) ==
        doctest::Approx(36.0 * gamma * gamma / 4 + 1.0).epsilon(1e-12));

  LimitProfile negative = step;
  negative.segments[1].poly[0] = -0.1;  // downward jump
  CHECK(std::isinf(limit_energy(negative, pred)));
}

TEST_CASE("step target profile matches its closed-form limit energy") {
  const double gamma = 0.5, slope = 0.3, rho = 0.2;
  const StepTarget t{gamma, slope, rho, 0.0};
  const auto pred = predict_limit(*homogeneous(), gamma);
  CHECK(limit_energy(t.profile(), pred) ==
        doctest::Approx(36.0 * slope * slope * (1.0 - rho) + 1.0).epsilon(1e-12));
  CHECK(t.height() == doctest::Approx(gamma - slope * (1.0 - rho)).epsilon(1e-14));
  // interior jump keeps one jump and the same energy
  const StepTarget ti{gamma, slope, rho, 0.3};
  CHECK(limit_energy(ti.profile(), pred) ==
        doctest::Approx(36.0 * slope * slope * (1.0 - rho) + 1.0).epsilon(1e-12));
}

TEST_CASE("scaling covariance of the prediction") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double s = 0.25 + 4.0 * u01(gen);
    const double gamma = 0.8 * u01(gen);
    const auto base = predict_limit(*homogeneous(), gamma);
    const auto scaled = predict_limit(*scaled_homogeneous(s), gamma);
    CHECK(scaled.alpha_bar == doctest::Approx(s * base.alpha_bar).epsilon(1e-9));
    CHECK(scaled.beta == doctest::Approx(s * base.beta).epsilon(1e-9));
    CHECK(scaled.predicted_min == doctest::Approx(s * base.predicted_min).epsilon(1e-9));
    CHECK(scaled.gamma_star == doctest::Approx(base.gamma_star).epsilon(1e-9));
  }
}

TEST_CASE("prediction is invariant under support relabeling") {
  auto a = Ensemble::make_iid(
      {make_twelve_six(1.0, 1.0, "x"), make_twelve_six(0.5, 1.0, "y")}, {0.3, 0.7});
  auto b = Ensemble::make_iid(
      {make_twelve_six(0.5, 1.0, "y"), make_twelve_six(1.0, 1.0, "x")}, {0.7, 0.3});
  const auto pa = predict_limit(*a, 0.2);
  const auto pb = predict_limit(*b, 0.2);
  CHECK(pa.alpha_bar == doctest::Approx(pb.alpha_bar).epsilon(1e-12));
  CHECK(pa.beta == doctest::Approx(pb.beta).epsilon(1e-12));
  CHECK(pa.predicted_min == doctest::Approx(pb.predicted_min).epsilon(1e-12));
}

TEST_CASE("recovery: homogeneous blocks collapse to the affine interpolant") {
  const auto chain = sample_realization(homogeneous(), 1000, 1);
  const StepTarget t{0.5, 0.3, 0.2, 0.0};
  const auto rb = build_recovery_sequence(chain, t, /*gamma_n=*/0.5, /*mu=*/0.1, /*eps=*/0.05);
  CHECK(rb.h_n_eps == 0);  // all depths tie; smallest index wins
  CHECK(rb.beta_n == doctest::Approx(1.0).epsilon(1e-9));
  // boundary identity
  CHECK(std::abs(rb.v.values.back() - 0.5) <= 1e-12);
  CHECK(rb.v.values.front() == 0.0);
  // inside the ramp the slope is exactly z per bond
  const double lambda = chain.lambda();
  for (std::uint64_t i = rb.t_n + 2; i < chain.n; ++i) {
    const double inc = rb.v.values[i + 1] - rb.v.values[i];
    CHECK(inc == doctest::Approx(0.3 * lambda).epsilon(1e-9));
  }
}

TEST_CASE("recovery: block endpoints match the target up to the boundary shift") {
  const auto chain = sample_realization(two_stiffness_periodic(), 2000, 7);
  const double gamma = 0.5, gamma_n = 0.515;  // exercise the gamma_n - gamma correction
  const StepTarget t{gamma, 0.3, 0.2, 0.0};
  const auto rb = build_recovery_sequence(chain, t, gamma_n, 0.1, 0.05);
  CHECK(std::abs(rb.v.values.back() - gamma_n) <= 1e-12);
  const double lambda = chain.lambda();
  for (const auto& blk : rb.blocks) {
    const double x = static_cast<double>(blk.i_max) * lambda;
    const double expected = t.value(x) + (blk.right_of_jump ? gamma_n - gamma : 0.0);
    CHECK(std::abs(rb.v.values[blk.i_max] - expected) <= 1e-12);
  }
  // harmonic weights stay between the species stiffnesses
  for (const auto& blk : rb.blocks) {
    CHECK(blk.harmonic >= 18.0 - 1e-9);
    CHECK(blk.harmonic <= 36.0 + 1e-9);
  }
}

TEST_CASE("recovery energy approaches the limit functional along the schedule") {
  const auto ens = two_stiffness_periodic();
  const double gamma = 0.5, slope = 0.3, rho = 0.2;
  const StepTarget t{gamma, slope, rho, 0.0};
  const auto pred = predict_limit(*ens, gamma);
  const double target_energy = limit_energy(t.profile(), pred);

  double mu = 0.1;
  double last_overshoot = 0.0, last_l1 = 1.0;
  for (std::uint64_t n : {1000ull, 10000ull, 100000ull}) {
    const auto chain = sample_realization(ens, n, 1);
    const auto rb = build_recovery_sequence(chain, t, gamma, mu, mu);
    const double e = energy_rescaled(chain, rb.v);
    last_overshoot = e - target_energy;
    // L1 distance shrinks with the schedule
    DisplacementField v = rb.v;
    double l1 = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      l1 += std::abs(v.values[i] - t.value(x)) / static_cast<double>(n);
    }
    CHECK(l1 <= last_l1 + 1e-9);
    last_l1 = l1;
    CHECK(std::abs(rb.v.values.back() - gamma) <= 1e-12);
    mu *= 0.5;
  }
  CHECK(last_overshoot <= 0.02);
  CHECK(last_l1 < 0.05);
}

TEST_CASE("recovery with an interior jump location") {
  const auto chain = sample_realization(two_stiffness_periodic(), 5000, 3);
  const StepTarget t{0.5, 0.3, 0.2, 0.37};
  const auto rb = build_recovery_sequence(chain, t, 0.5, 0.05, 0.04);
  CHECK(std::abs(rb.v.values.back() - 0.5) <= 1e-12);
  CHECK(rb.v.values.front() == 0.0);
  // the step bond sits inside the eps-window around the jump
  CHECK(std::abs(static_cast<double>(rb.h_n_eps) / 5000.0 - 0.37) < 0.04);
  const double e = energy_rescaled(chain, rb.v);
  const auto pred = predict_limit(*two_stiffness_periodic(), 0.5);
  CHECK(e == doctest::Approx(limit_energy(t.profile(), pred)).epsilon(0.15));
}

TEST_CASE("recovery parameter validation") {
  const auto chain = sample_realization(homogeneous(), 500, 1);
  const StepTarget ok{0.5, 0.3, 0.2, 0.0};
  CHECK_THROWS_AS(build_recovery_sequence(chain, ok, 0.5, 0.1, 0.3), std::invalid_argument);
  const StepTarget flat{0.2, 0.3, 0.2, 0.0};  // height would be negative
  CHECK_THROWS_AS(build_recovery_sequence(chain, flat, 0.2, 0.1, 0.05), std::invalid_argument);
  const StepTarget wide{0.5, 0.3, 1.1, 0.0};
  CHECK_THROWS_AS(build_recovery_sequence(chain, wide, 0.5, 0.1, 0.05), std::invalid_argument);
}

TEST_CASE("discrete minima sit under the elastic/step upper envelope") {
  const auto ens = two_stiffness_periodic();
  const double gamma = 0.6;  // fractured regime: 24 * 0.36 > 0.5
  const auto pred = predict_limit(*ens, gamma);
  double envelope = 0.0;
  for (std::uint64_t n : {100ull, 1000ull, 10000ull}) {
    const auto chain = sample_realization(ens, n, 1);
    const double gn = BoundaryProgram{gamma}.boundary_value(chain);
    const double linear = energy_rescaled(chain, linear_displacement(n, gn));
    // step at the weakest bond
    const auto weakest = window_infimum_beta_n(chain, 0.5, 0.5);
    DisplacementField step;
    step.n = n;
    step.gamma_n = gn;
    step.values.assign(n + 1, gn);
    for (std::uint64_t i = 0; i <= weakest.index; ++i) step.values[i] = 0.0;
    const double stepped = energy_rescaled(chain, step);
    envelope = std::min(linear, stepped);
    const auto best = minimize_global(chain, gn);
    CHECK(best.energy <= envelope + 1e-9);
  }
  CHECK(envelope == doctest::Approx(pred.predicted_min).epsilon(0.05));
}

TEST_CASE("convergence study: gaps shrink and zero loading is exact") {
  StudyOptions opt;
  opt.mode = StudyMode::global_min;
  const auto table =
      convergence_study(homogeneous(), 0.05, {100, 1000, 10000}, {1, 2}, opt);
  REQUIRE(table.cells.size() == 6);
  double prev = 1e9;
  for (std::size_t i = 0; i < 3; ++i) {
    const double gap = table.cells[2 * i].gap;  // seed 1 column
    CHECK(gap <= prev + 1e-6);
    prev = gap;
  }
  CHECK(prev <= 0.05 * 0.09);
  for (const auto& c : table.cells) CHECK(c.regime == "elastic");

  const auto zero = convergence_study(homogeneous(), 0.0, {100}, {1, 2, 3}, opt);
  for (const auto& c : zero.cells) {
    CHECK(c.energy == 0.0);
    CHECK(c.gap == 0.0);
  }
}

TEST_CASE("convergence study is deterministic in the worker count") {
  auto ens = Ensemble::make_iid(
      {make_twelve_six(1.0, 1.0, "a"), make_twelve_six(0.5, 1.0, "b")}, {0.5, 0.5});
  StudyOptions serial;
  serial.workers = 1;
  StudyOptions parallel;
  parallel.workers = 3;
  const auto a = convergence_study(ens, 0.4, {64, 256}, {1, 2, 3, 4, 5}, serial);
  const auto b = convergence_study(ens, 0.4, {64, 256}, {1, 2, 3, 4, 5}, parallel);
  CHECK(a.to_csv() == b.to_csv());
}

TEST_CASE("recovery study validates its schedule") {
  StudyOptions opt;
  opt.mode = StudyMode::recovery;
  opt.target = StepTarget{0.5, 0.3, 0.2, 0.0};
  opt.mu_list = {0.1};  // wrong length
  CHECK_THROWS_AS(convergence_study(homogeneous(), 0.5, {100, 1000}, {1}, opt),
                  std::invalid_argument);
}
