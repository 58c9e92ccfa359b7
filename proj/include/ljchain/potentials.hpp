#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

// Lennard-Jones-type interaction potentials: evaluation up to the third
// derivative, well location/depth, stiffness at the well, and certification
// against the convex-concave class the chain model requires.
namespace ljchain {

// J(z) = depth * ((length/z)^12 - 2 (length/z)^6); well at z=length, J = -depth.
struct TwelveSix {
  double depth = 1.0;   // eps > 0
  double length = 1.0;  // sigma > 0
  bool operator==(const TwelveSix&) const = default;
};

// J(z) = depth * (exp(-2 width (z-equilibrium)) - 2 exp(-width (z-equilibrium))).
// Finite at z -> 0+, so it is evaluable but fails class certification.
struct Morse {
  double depth = 1.0;
  double width = 1.0;
  double equilibrium = 1.0;
  bool operator==(const Morse&) const = default;
};

// Exact quadratic well w + a (z-w0)^2 on [w0-eta0, w0+eta0], a C3 power
// barrier below, and a C3-matched cubic-times-exponential tail above that
// decays to zero at rate decay_rate. Places well position/depth/stiffness
// exactly by construction.
struct ShiftedQuadraticTail {
  double stiffness = 18.0;    // alpha = J''(well)/2
  double well_depth = -0.5;   // J(well) < 0
  double decay_rate = 3.0;
  double well_position = 1.0;
  bool operator==(const ShiftedQuadraticTail&) const = default;
};

// Natural cubic spline through (knots, values); C2 only, which the class
// validator flags unless c3_extension certifies an external smoothness rule.
struct Tabulated {
  std::vector<double> knots;  // strictly increasing, > 0
  std::vector<double> values;
  bool c3_extension = false;
  bool operator==(const Tabulated&) const = default;
};

struct PotentialSpec {
  std::string label;
  std::variant<TwelveSix, Morse, ShiftedQuadraticTail, Tabulated> params;

  const char* family_name() const;
  bool operator==(const PotentialSpec&) const = default;
};

PotentialSpec make_twelve_six(double depth, double length, std::string label = "lj");
PotentialSpec make_morse(double depth, double width, double equilibrium,
                         std::string label = "morse");
PotentialSpec make_shifted_quadratic_tail(double stiffness, double well_depth,
                                          double decay_rate, double well_position = 1.0,
                                          std::string label = "sqt");
PotentialSpec make_tabulated(std::vector<double> knots, std::vector<double> values,
                             bool c3_extension = false, std::string label = "tab");

// J^(order)(z); order in 0..3. Throws std::domain_error for z <= 0
// (the potential is +inf there) and std::invalid_argument for bad order.
double eval(const PotentialSpec& spec, double z, int order);

struct Well {
  double delta;       // minimizer
  double well_depth;  // J(delta), negative for class members
};

// Bracketed root finding on J' (scan + bisection + Newton polish).
// Throws if no interior stationary point lies in `bracket`.
Well find_minimizer(const PotentialSpec& spec,
                    std::pair<double, double> bracket = {1e-3, 1e3});

// alpha = J''(delta)/2. Throws if J''(delta) <= 0 (class violation).
double stiffness(const PotentialSpec& spec, const Well& well);

struct SupBound {
  double value;  // sup |J'''| over [delta-kappa, delta+kappa]
  double arg;    // sample point attaining it
};
// Dense sampling (default 10^4 points) with local refinement at the max.
SupBound third_derivative_bound(const PotentialSpec& spec, double delta, double kappa,
                                int samples = 10000);

// delta, J(delta), stiffness, cached once per potential.
struct PotentialDescriptor {
  double delta = 0.0;
  double well_depth = 0.0;
  double alpha = 0.0;
  double ckappa(const PotentialSpec& spec, double kappa) const {
    return third_derivative_bound(spec, delta, kappa).value;
  }
};

PotentialDescriptor describe(const PotentialSpec& spec);

// Comparison barrier Psi(z) = z^-power + slope*z (convex, +inf at 0+).
struct PsiBarrier {
  double power = 12.0;
  double slope = 0.0;
  double operator()(double z) const;
  bool operator==(const PsiBarrier&) const = default;
};

struct ClassParams {
  double alpha_floor = 1e-3;  // C_alpha
  double b = 1.1;
  double c = 1.0;
  double d = 4.0;
  double eta = 0.1;
  PsiBarrier psi;

  bool operator==(const ClassParams&) const = default;
  void check() const;  // throws std::invalid_argument on bad parameters
};

struct ConditionResult {
  std::string condition;
  bool pass = false;
  double witness_z = 0.0;  // where the margin is tightest / violated
  double margin = 0.0;     // >= 0 means satisfied at the witness
  std::string detail;
};

struct CertReport {
  std::string label;
  std::vector<ConditionResult> conditions;
  double k1 = 0.0;  // quadratic-or-constant lower bound constants
  double k2 = 0.0;
  bool all_pass() const;
  std::string to_json() const;  // one object per condition
};

// Sampled certification of (LJ1)-(LJ4) plus the stiffness floor; failures are
// report entries, never exceptions.
CertReport validate_class(const PotentialSpec& spec, const ClassParams& params);

}  // namespace ljchain
