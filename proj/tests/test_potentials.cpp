#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ljchain/potentials.hpp"

using namespace ljchain;

namespace {

// Finite-difference oracle. Orders 1 and 2 use plain central differences at
// step 1e-5 z. The third difference at that step is rounding-noise dominated
// in doubles, so order 3 uses a Richardson-extrapolated central difference at
// base step 1e-3 z. The target is 1e-6 relative agreement plus the oracle's
// own rounding-noise and truncation budget (which dominates near derivative
// zeros and where |J| stays O(1) while the absolute step shrinks).
struct FdResult {
  double value;
  double tolerance;  // relative part excluded
};

FdResult fd_derivative(const PotentialSpec& spec, double z, int order) {
  auto J = [&](double x) { return eval(spec, x, 0); };
  constexpr double kEps = 2.220446049250313e-16;
  const double j_mag =
      std::max({std::abs(J(0.9 * z)), std::abs(J(z)), std::abs(J(1.1 * z)), std::abs(eval(spec, z, 1)) * z});
  if (order == 1) {
    const double h = 1e-5 * z;
    const double value = (J(z + h) - J(z - h)) / (2.0 * h);
    const double noise = 2.0 * kEps * j_mag / h;
    const double trunc = 0.5 * h * h * std::abs(eval(spec, z, 3));
    return {value, 16.0 * noise + trunc};
  }
  if (order == 2) {
    const double h = 1e-5 * z;
    const double value = (J(z + h) - 2.0 * J(z) + J(z - h)) / (h * h);
    const double noise = 4.0 * kEps * j_mag / (h * h);
    const double h2 = 1e-3 * z;  // fourth-derivative estimate for the truncation budget
    const double j4 = std::abs(eval(spec, z + h2, 3) - eval(spec, z - h2, 3)) / (2.0 * h2);
    return {value, 16.0 * noise + 0.5 * h * h * j4};
  }
  auto d3 = [&](double h) {
    return (J(z + 2.0 * h) - 2.0 * J(z + h) + 2.0 * J(z - h) - J(z - 2.0 * h)) /
           (2.0 * h * h * h);
  };
  const double h = 1e-3 * z;
  const double value = (4.0 * d3(0.5 * h) - d3(h)) / 3.0;
  const double noise = 33.0 * kEps * j_mag / (h * h * h);
  const double h2 = 1e-2 * z;
  const double j5 =
      std::abs(eval(spec, z + h2, 3) - 2.0 * eval(spec, z, 3) + eval(spec, z - h2, 3)) /
      (h2 * h2);
  return {value, 16.0 * noise + h * h * h * h * j5};
}

void check_derivatives_match_fd(const PotentialSpec& spec, double lo = 1e-2, double hi = 1e2,
                                int points = 60) {
  for (int i = 0; i <= points; ++i) {
    const double z = lo * std::pow(hi / lo, static_cast<double>(i) / points);
    for (int order = 1; order <= 3; ++order) {
      const double exact = eval(spec, z, order);
      const FdResult fd = fd_derivative(spec, z, order);
      const double scale = std::max(std::abs(exact), std::abs(fd.value));
      if (scale < 1e-280) continue;  // deep in an exponential tail
      INFO("family ", std::string(spec.family_name()), " z ", z, " order ", order);
      CHECK(std::abs(exact - fd.value) <= 1e-6 * scale + fd.tolerance);
    }
  }
}

}  // namespace

TEST_CASE("12-6 evaluation at the well") {
  const auto lj = make_twelve_six(1.0, 1.0);
  CHECK(eval(lj, 1.0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(eval(lj, 1.0, 1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(eval(lj, 1.0, 2) == doctest::Approx(72.0).epsilon(1e-14));
  CHECK(eval(lj, 1.0, 3) == doctest::Approx(-1512.0).epsilon(1e-13));
  CHECK_THROWS_AS(eval(lj, 0.0, 0), std::domain_error);
  CHECK_THROWS_AS(eval(lj, -1.0, 0), std::domain_error);
  CHECK_THROWS_AS(eval(lj, 1.0, 4), std::invalid_argument);
}

TEST_CASE("analytic derivatives match the finite-difference oracle") {
  check_derivatives_match_fd(make_twelve_six(1.0, 1.0));
  check_derivatives_match_fd(make_twelve_six(0.4, 1.3));
  check_derivatives_match_fd(make_morse(1.0, 1.0, 1.0), 1e-2, 30.0);
  check_derivatives_match_fd(make_shifted_quadratic_tail(18.0, -0.5, 3.0), 1e-2, 50.0);
}

TEST_CASE("derivative oracle over random family draws") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int rep = 0; rep < 350; ++rep) {
    const double pick = u01(gen);
    PotentialSpec spec = make_twelve_six(1.0, 1.0);
    if (pick < 0.4) {
      spec = make_twelve_six(0.2 + 2.0 * u01(gen), 0.5 + 1.5 * u01(gen));
    } else if (pick < 0.7) {
      spec = make_morse(0.2 + 2.0 * u01(gen), 0.5 + 2.0 * u01(gen), 0.5 + 1.5 * u01(gen));
    } else {
      const double alpha = 5.0 + 30.0 * u01(gen);
      const double depth = -(0.3 + 1.2 * u01(gen));
      const double qmax = std::sqrt(2.0 * alpha / -depth);
      const double q = (0.5 + 0.4 * u01(gen)) * qmax;
      spec = make_shifted_quadratic_tail(alpha, depth, q, 0.6 + 0.9 * u01(gen));
    }
    const double z = 0.3 * std::pow(30.0, u01(gen));
    for (int order = 1; order <= 3; ++order) {
      const double exact = eval(spec, z, order);
      const FdResult fd = fd_derivative(spec, z, order);
      const double scale = std::max(std::abs(exact), std::abs(fd.value));
      if (scale < 1e-280) continue;
      INFO("family ", std::string(spec.family_name()), " z ", z, " order ", order);
      CHECK(std::abs(exact - fd.value) <= 2e-6 * scale + fd.tolerance);
    }
  }
}

TEST_CASE("find_minimizer closed forms") {
  const Well a = find_minimizer(make_twelve_six(1.0, 1.0));
  CHECK(a.delta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.well_depth == doctest::Approx(-1.0).epsilon(1e-12));

  const Well b = find_minimizer(make_twelve_six(2.0, 1.5));
  CHECK(b.delta == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(b.well_depth == doctest::Approx(-2.0).epsilon(1e-12));

  const Well c = find_minimizer(make_shifted_quadratic_tail(18.0, -0.5, 3.0, 1.0));
  CHECK(c.delta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.well_depth == doctest::Approx(-0.5).epsilon(1e-12));

  const Well d = find_minimizer(make_morse(1.3, 2.0, 0.8));
  CHECK(d.delta == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(d.well_depth == doctest::Approx(-1.3).epsilon(1e-12));
}

TEST_CASE("minimizer stationarity over random draws") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    PotentialSpec spec = rep % 2 == 0
                             ? make_twelve_six(0.2 + 2.0 * u01(gen), 0.5 + 1.5 * u01(gen))
                             : make_morse(0.2 + 2.0 * u01(gen), 0.5 + 2.0 * u01(gen),
                                          0.5 + 1.5 * u01(gen));
    const Well w = find_minimizer(spec);
    const double d2 = eval(spec, w.delta, 2);
    CHECK(std::abs(eval(spec, w.delta, 1)) <= 1e-12 * std::max(1.0, std::abs(d2) * w.delta));
    CHECK(w.well_depth < 0.0);
  }
}

TEST_CASE("stiffness closed forms and scaling") {
  const auto w = [](const PotentialSpec& s) { return find_minimizer(s); };
  CHECK(stiffness(make_twelve_six(1.0, 1.0), w(make_twelve_six(1.0, 1.0))) ==
        doctest::Approx(36.0).epsilon(1e-8));
  CHECK(stiffness(make_twelve_six(0.5, 1.0), w(make_twelve_six(0.5, 1.0))) ==
        doctest::Approx(18.0).epsilon(1e-8));
  CHECK(stiffness(make_twelve_six(1.0, 2.0), w(make_twelve_six(1.0, 2.0))) ==
        doctest::Approx(9.0).epsilon(1e-8));
  // placed-well family hits its stiffness parameter exactly
  const auto sqt = make_shifted_quadratic_tail(18.0, -0.5, 3.0);
  CHECK(stiffness(sqt, w(sqt)) == doctest::Approx(18.0).epsilon(1e-10));
}

TEST_CASE("third derivative bound") {
  const auto lj = make_twelve_six(1.0, 1.0);
  const auto d = describe(lj);
  CHECK(third_derivative_bound(lj, d.delta, 0.0).value == doctest::Approx(1512.0).epsilon(1e-8));
  // |J'''| grows toward 0+, so the sup sits at the left endpoint
  const SupBound sb = third_derivative_bound(lj, d.delta, 0.1);
  CHECK(sb.arg == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(sb.value == doctest::Approx(std::abs(eval(lj, 0.9, 3))).epsilon(1e-9));
  // monotone in kappa
  double prev = 0.0;
  for (double kappa : {0.0, 0.02, 0.05, 0.1, 0.15, 0.2}) {
    const double v = third_derivative_bound(lj, d.delta, kappa).value;
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS_AS(third_derivative_bound(lj, d.delta, 1.5), std::domain_error);
}

TEST_CASE("class certification: 12-6 passes the reference parameters") {
  ClassParams params;
  params.b = 1.1;
  params.c = 1.0;
  params.d = 4.0;
  params.eta = 0.1;
  params.psi = {12.0, 0.0};
  const CertReport rep = validate_class(make_twelve_six(1.0, 1.0), params);
  for (const auto& c : rep.conditions) {
    INFO(c.condition, " margin ", c.margin, " witness ", c.witness_z, " ", c.detail);
    CHECK(c.pass);
  }
  CHECK(rep.k1 == doctest::Approx(1.0));
  CHECK(rep.k2 > 0.0);
  CHECK(rep.to_json().find("\"condition\"") != std::string::npos);
}

TEST_CASE("class certification: morse fails the blow-up condition") {
  const CertReport rep = validate_class(make_morse(1.0, 1.0, 1.0), ClassParams{});
  bool blowup_failed = false;
  for (const auto& c : rep.conditions) {
    if (c.condition == "LJ1-blowup") blowup_failed = !c.pass;
  }
  CHECK(blowup_failed);
  CHECK_FALSE(rep.all_pass());
  // the finite limit at 0+ is D(e^{2 a r0} - 2 e^{a r0})
  const double limit0 = std::exp(2.0) - 2.0 * std::exp(1.0);
  CHECK(eval(make_morse(1.0, 1.0, 1.0), 1e-9, 0) == doctest::Approx(limit0).epsilon(1e-6));
}

TEST_CASE("class certification: oversized eta breaks the harmonic bound") {
  ClassParams params;
  params.eta = 1.5;  // window reaches far into the concave tail
  params.c = 1.0;
  params.d = 4.0;
  const CertReport rep = validate_class(make_twelve_six(1.0, 1.0), params);
  bool lj4_failed = false;
  for (const auto& c : rep.conditions)
    if (c.condition == "LJ4-harmonic") lj4_failed = !c.pass;
  CHECK(lj4_failed);
}

TEST_CASE("sqt certifies with a wide sandwich constant") {
  // the family's exponential left flank outgrows any small multiple of the
  // barrier, so membership holds for a larger d than the 12-6 reference
  ClassParams params;
  params.b = 1.1;
  params.c = 1.0;
  params.d = 40.0;
  params.eta = 0.05;
  params.psi = {12.0, 0.0};
  const CertReport rep = validate_class(make_shifted_quadratic_tail(18.0, -0.5, 3.0), params);
  for (const auto& c : rep.conditions) {
    INFO(c.condition, " margin ", c.margin, " witness ", c.witness_z, " ", c.detail);
    CHECK(c.pass);
  }
}

TEST_CASE("tabulated potentials evaluate but are rejected from certification") {
  const auto base = make_twelve_six(1.0, 1.0);
  std::vector<double> knots, values;
  for (int i = 0; i <= 400; ++i) {
    const double z = 0.75 + 2.5 * i / 400.0;
    knots.push_back(z);
    values.push_back(eval(base, z, 0));
  }
  const auto tab = make_tabulated(knots, values);
  for (double z : {0.9, 1.0, 1.2, 2.0}) {
    CHECK(eval(tab, z, 0) == doctest::Approx(eval(base, z, 0)).epsilon(1e-6));
    CHECK(eval(tab, z, 1) == doctest::Approx(eval(base, z, 1)).epsilon(1e-3));
  }
  const CertReport rep = validate_class(tab, ClassParams{});
  bool regularity_failed = false;
  for (const auto& c : rep.conditions)
    if (c.condition == "LJ1-regularity") regularity_failed = !c.pass;
  CHECK(regularity_failed);

  CHECK_THROWS_AS(make_tabulated({1.0, 0.5, 2.0, 3.0}, {0, 0, 0, 0}), std::invalid_argument);
}
