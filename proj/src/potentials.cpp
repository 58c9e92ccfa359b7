#include "ljchain/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace ljchain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mirrors the kernel scalar path so single-point and batch evaluation agree
// bit-for-bit.
double lj126_u6(double sigma, double z) {
  double t = sigma / z;
  double t2 = t * t;
  double t4 = t2 * t2;
  return t4 * t2;
}

double eval_twelve_six(const TwelveSix& p, double z, int order) {
  const double u = lj126_u6(p.length, z);
  switch (order) {
    case 0: return p.depth * (u * (u - 2.0));
    case 1: return 12.0 * p.depth * (u * (1.0 - u)) / z;
    case 2: return 12.0 * p.depth * (u * (13.0 * u - 7.0)) / (z * z);
    default: return 24.0 * p.depth * (u * (28.0 - 91.0 * u)) / (z * z * z);
  }
}

double eval_morse(const Morse& p, double z, int order) {
  const double a = p.width;
  const double e1 = std::exp(-a * (z - p.equilibrium));
  const double e2 = e1 * e1;
  switch (order) {
    case 0: return p.depth * (e2 - 2.0 * e1);
    case 1: return 2.0 * a * p.depth * (e1 - e2);
    case 2: return 2.0 * a * a * p.depth * (2.0 * e2 - e1);
    default: return 2.0 * a * a * a * p.depth * (e1 - 4.0 * e2);
  }
}

// Derived constants of the shifted-quadratic-with-tail family. The well is a
// two-rate exponential with exact (position, depth, stiffness); a compactly
// supported power barrier below z_barrier supplies the blow-up at 0+.
struct SqtDerived {
  double p, q, big_a, big_b;  // A e^{-p s} - B e^{-q s}, s = z - delta
  double z_barrier;           // barrier support (0, z_barrier)
  double coeff;               // barrier coefficient
};

SqtDerived sqt_derived(const ShiftedQuadraticTail& sp) {
  const double alpha = sp.stiffness;
  const double depth = -sp.well_depth;  // > 0
  const double q = sp.decay_rate;
  const double p = 2.0 * alpha / (depth * q);
  const double big_a = q * depth / (p - q);
  const double z_barrier = 0.5 * sp.well_position;
  const double coeff = 2.0 / std::pow(z_barrier, 12.0);
  return {p, q, big_a, big_a + depth, z_barrier, coeff};
}

double eval_sqt(const ShiftedQuadraticTail& sp, double z, int order) {
  const SqtDerived d = sqt_derived(sp);
  const double s = z - sp.well_position;
  const double ep = std::exp(-d.p * s);
  const double eq = std::exp(-d.q * s);
  double val;
  switch (order) {
    case 0: val = d.big_a * ep - d.big_b * eq; break;
    case 1: val = -d.p * d.big_a * ep + d.q * d.big_b * eq; break;
    case 2: val = d.p * d.p * d.big_a * ep - d.q * d.q * d.big_b * eq; break;
    default:
      val = -d.p * d.p * d.p * d.big_a * ep + d.q * d.q * d.q * d.big_b * eq;
      break;
  }
  if (z < d.z_barrier) {
    // h^12 joins C3 at z_barrier (first three derivatives vanish there)
    const double h = d.z_barrier / z - 1.0;
    const double h1 = -d.z_barrier / (z * z);
    const double h2 = 2.0 * d.z_barrier / (z * z * z);
    const double h3 = -6.0 * d.z_barrier / (z * z * z * z);
    const double h9 = std::pow(h, 9.0);
    const double h10 = h9 * h;
    const double h11 = h10 * h;
    switch (order) {
      case 0: val += d.coeff * h11 * h; break;
      case 1: val += d.coeff * 12.0 * h11 * h1; break;
      case 2: val += d.coeff * (132.0 * h10 * h1 * h1 + 12.0 * h11 * h2); break;
      default:
        val += d.coeff *
               (1320.0 * h9 * h1 * h1 * h1 + 396.0 * h10 * h1 * h2 + 12.0 * h11 * h3);
        break;
    }
  }
  return val;
}

// Natural cubic spline moments (second derivatives at the knots).
std::vector<double> spline_moments(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hl = x[i] - x[i - 1];
    const double hr = x[i + 1] - x[i];
    diag[i] = (hl + hr) / 3.0;
    upper[i] = hr / 6.0;
    rhs[i] = (y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl;
  }
  // Thomas sweep on the interior block; natural ends stay zero.
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double hl = x[i] - x[i - 1];
    const double w = (hl / 6.0) / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    if (i == 1) break;
  }
  return m;
}

const std::vector<double>& cached_moments(const Tabulated& t) {
  // Specs live in stable storage (ensemble support vectors); key on the data.
  thread_local const double* key = nullptr;
  thread_local std::size_t key_n = 0;
  thread_local std::vector<double> moments;
  if (key != t.knots.data() || key_n != t.knots.size()) {
    moments = spline_moments(t.knots, t.values);
    key = t.knots.data();
    key_n = t.knots.size();
  }
  return moments;
}

double eval_tabulated(const Tabulated& t, double z, int order) {
  const auto& x = t.knots;
  const auto& y = t.values;
  const auto& m = cached_moments(t);
  const std::size_t n = x.size();
  // end pieces extrapolate; the domain is still (0, inf)
  std::size_t i = std::upper_bound(x.begin(), x.end(), z) - x.begin();
  i = (i == 0) ? 0 : std::min(i - 1, n - 2);
  const double h = x[i + 1] - x[i];
  const double a = (x[i + 1] - z) / h;
  const double b = (z - x[i]) / h;
  switch (order) {
    case 0:
      return a * y[i] + b * y[i + 1] +
             ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    case 1:
      return (y[i + 1] - y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m[i] +
             (3.0 * b * b - 1.0) / 6.0 * h * m[i + 1];
    case 2:
      return a * m[i] + b * m[i + 1];
    default:
      return (m[i + 1] - m[i]) / h;
  }
}

}  // namespace

const char* PotentialSpec::family_name() const {
  switch (params.index()) {
    case 0: return "twelve-six";
    case 1: return "morse";
    case 2: return "shifted-quadratic-with-tail";
    default: return "tabulated";
  }
}

PotentialSpec make_twelve_six(double depth, double length, std::string label) {
  if (!(depth > 0.0) || !(length > 0.0))
    throw std::invalid_argument("twelve-six: depth and length must be positive");
  return {std::move(label), TwelveSix{depth, length}};
}

PotentialSpec make_morse(double depth, double width, double equilibrium, std::string label) {
  if (!(depth > 0.0) || !(width > 0.0) || !(equilibrium > 0.0))
    throw std::invalid_argument("morse: parameters must be positive");
  return {std::move(label), Morse{depth, width, equilibrium}};
}

PotentialSpec make_shifted_quadratic_tail(double stiffness, double well_depth,
                                          double decay_rate, double well_position,
                                          std::string label) {
  if (!(stiffness > 0.0)) throw std::invalid_argument("sqt: stiffness must be positive");
  if (!(well_depth < 0.0)) throw std::invalid_argument("sqt: well depth must be negative");
  if (!(well_position > 0.0)) throw std::invalid_argument("sqt: well position must be positive");
  const double qmax = std::sqrt(2.0 * stiffness / -well_depth);
  if (!(decay_rate > 0.0) || !(decay_rate < qmax))
    throw std::invalid_argument("sqt: decay rate must lie in (0, sqrt(2*stiffness/depth))");
  return {std::move(label),
          ShiftedQuadraticTail{stiffness, well_depth, decay_rate, well_position}};
}

PotentialSpec make_tabulated(std::vector<double> knots, std::vector<double> values,
                             bool c3_extension, std::string label) {
  if (knots.size() < 4 || knots.size() != values.size())
    throw std::invalid_argument("tabulated: need >= 4 knots with matching values");
  if (knots.front() <= 0.0)
    throw std::invalid_argument("tabulated: knots must be positive");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1]))
      throw std::invalid_argument("tabulated: knots must be strictly increasing");
  return {std::move(label), Tabulated{std::move(knots), std::move(values), c3_extension}};
}

double eval(const PotentialSpec& spec, double z, int order) {
  if (!(z > 0.0)) throw std::domain_error("eval: potential domain is z > 0");
  if (order < 0 || order > 3) throw std::invalid_argument("eval: order must be 0..3");
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TwelveSix>) return eval_twelve_six(p, z, order);
        else if constexpr (std::is_same_v<T, Morse>) return eval_morse(p, z, order);
        else if constexpr (std::is_same_v<T, ShiftedQuadraticTail>) return eval_sqt(p, z, order);
        else return eval_tabulated(p, z, order);
      },
      spec.params);
}

Well find_minimizer(const PotentialSpec& spec, std::pair<double, double> bracket) {
  const double lo = bracket.first, hi = bracket.second;
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("find_minimizer: bad bracket");

  // Scan J' on a log grid for the first - to + sign change.
  constexpr int kScan = 1024;
  const double log_lo = std::log(lo), log_hi = std::log(hi);
  double a = 0.0, b = 0.0;
  bool found = false;
  double prev_z = lo, prev_d = eval(spec, lo, 1);
  for (int i = 1; i <= kScan; ++i) {
    const double z = std::exp(log_lo + (log_hi - log_lo) * i / kScan);
    const double dz = eval(spec, z, 1);
    if (prev_d < 0.0 && dz >= 0.0) {
      a = prev_z;
      b = z;
      found = true;
      break;
    }
    prev_z = z;
    prev_d = dz;
  }
  if (!found) throw std::runtime_error("find_minimizer: no interior minimum in bracket");

  while (b - a > 1e-6 * std::max(1.0, a)) {
    const double mid = 0.5 * (a + b);
    (eval(spec, mid, 1) < 0.0 ? a : b) = mid;
  }

  // Newton polish down to machine resolution; every downstream constant
  // (stiffness, rest length, boundary data) inherits this accuracy.
  double delta = 0.5 * (a + b);
  for (int it = 0; it < 50; ++it) {
    const double d1 = eval(spec, delta, 1);
    const double d2 = eval(spec, delta, 2);
    if (d2 == 0.0) break;
    double next = delta - d1 / d2;
    if (!(next > a && next < b)) next = 0.5 * (a + b);  // keep the bracket
    const double step = std::abs(next - delta);
    (eval(spec, next, 1) < 0.0 ? a : b) = next;
    delta = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * delta) break;
  }
  return {delta, eval(spec, delta, 0)};
}

double stiffness(const PotentialSpec& spec, const Well& well) {
  const double d2 = eval(spec, well.delta, 2);
  if (!(d2 > 0.0))
    throw std::runtime_error("stiffness: J'' at the minimizer is not positive (class violation)");
  return 0.5 * d2;
}

SupBound third_derivative_bound(const PotentialSpec& spec, double delta, double kappa,
                                int samples) {
  if (kappa < 0.0 || kappa >= delta)
    throw std::domain_error("third_derivative_bound: need 0 <= kappa < delta");
  if (kappa == 0.0) return {std::abs(eval(spec, delta, 3)), delta};

  double lo = delta - kappa, hi = delta + kappa;
  double best = -1.0, arg = delta;
  const double step = (hi - lo) / samples;
  for (int i = 0; i <= samples; ++i) {
    const double z = lo + step * i;
    const double v = std::abs(eval(spec, z, 3));
    if (v > best) {
      best = v;
      arg = z;
    }
  }
  // local refinement around the coarse max
  double half = step;
  for (int round = 0; round < 3; ++round) {
    const double rlo = std::max(lo, arg - half), rhi = std::min(hi, arg + half);
    const double rstep = (rhi - rlo) / 64.0;
    for (int i = 0; i <= 64; ++i) {
      const double z = rlo + rstep * i;
      const double v = std::abs(eval(spec, z, 3));
      if (v > best) {
        best = v;
        arg = z;
      }
    }
    half = rstep;
  }
  return {best, arg};
}

PotentialDescriptor describe(const PotentialSpec& spec) {
  const Well w = find_minimizer(spec);
  return {w.delta, w.well_depth, stiffness(spec, w)};
}

double PsiBarrier::operator()(double z) const {
  if (!(z > 0.0)) return kInf;
  return std::pow(z, -power) + slope * z;
}

void ClassParams::check() const {
  if (!(alpha_floor > 0.0) || !(b > 0.0) || !(c > 0.0) || !(eta > 0.0))
    throw std::invalid_argument("class params: alpha_floor, b, c, eta must be positive");
  if (!(d > 1.0)) throw std::invalid_argument("class params: d must exceed 1");
  if (!(psi.power > 0.0) || psi.slope < 0.0)
    throw std::invalid_argument("class params: psi barrier needs power > 0, slope >= 0");
}

bool CertReport::all_pass() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return c.pass; });
}

std::string CertReport::to_json() const {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["k1"] = k1;
  j["k2"] = k2;
  j["all_pass"] = all_pass();
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : conditions) {
    arr.push_back({{"condition", c.condition},
                   {"pass", c.pass},
                   {"witness_z", c.witness_z},
                   {"margin", c.margin},
                   {"detail", c.detail}});
  }
  j["conditions"] = arr;
  return j.dump(2);
}

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n + 1);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i <= n; ++i) g[i] = std::exp(llo + (lhi - llo) * i / n);
  return g;
}

}  // namespace

CertReport validate_class(const PotentialSpec& spec, const ClassParams& params) {
  params.check();
  CertReport rep;
  rep.label = spec.label;

  // (LJ1) regularity: analytic families are C3 on (0, inf); cubic splines are
  // C2 and need an explicit extension certificate.
  {
    ConditionResult c{"LJ1-regularity", true, 0.0, 0.0, "C3 on (0, inf)"};
    if (const auto* t = std::get_if<Tabulated>(&spec.params)) {
      c.pass = t->c3_extension;
      c.detail = t->c3_extension ? "tabulated with C3 extension rule"
                                 : "cubic spline is C2 only; no C3 extension rule supplied";
    }
    rep.conditions.push_back(c);
  }

  // (LJ1) blow-up at 0+ on the decade grid 1e-1 .. 1e-6.
  {
    ConditionResult c{"LJ1-blowup", true, 1e-6, 0.0, ""};
    constexpr double kBlowup = 1e6;
    double prev = -kInf;
    for (int k = 1; k <= 6; ++k) {
      const double z = std::pow(10.0, -k);
      const double v = eval(spec, z, 0);
      if (v < prev) {
        c.pass = false;
        c.witness_z = z;
        c.detail = "J not increasing toward 0+";
      }
      prev = v;
    }
    c.margin = prev - kBlowup;
    if (prev < kBlowup) {
      c.pass = false;
      c.detail = "J(1e-6) below blow-up threshold " + std::to_string(kBlowup);
    }
    rep.conditions.push_back(c);
  }

  // (LJ2) minimum and its location; later conditions reuse the well.
  Well well{0.0, 0.0};
  bool have_well = false;
  {
    ConditionResult c{"LJ2-minimum", false, 0.0, 0.0, ""};
    try {
      well = find_minimizer(spec);
      have_well = true;
      c.witness_z = well.delta;
      const double lo_gap = well.delta - 1.0 / params.d;
      const double hi_gap = params.d - well.delta;
      c.margin = std::min({lo_gap, hi_gap, -well.well_depth});
      c.pass = lo_gap > 0.0 && hi_gap > 0.0 && well.well_depth < 0.0;
      if (!c.pass) c.detail = "minimizer outside (1/d, d) or J(delta) >= 0";
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    rep.conditions.push_back(c);
  }
  if (!have_well) {
    // Remaining conditions depend on delta; report and stop.
    rep.conditions.push_back({"LJ2-convexity", false, 0.0, 0.0, "no minimizer"});
    rep.conditions.push_back({"LJ2-sandwich", false, 0.0, 0.0, "no minimizer"});
    rep.conditions.push_back({"LJ2-bound-b", false, 0.0, 0.0, "no minimizer"});
    rep.conditions.push_back({"LJ3-decay", false, 0.0, 0.0, "no minimizer"});
    rep.conditions.push_back({"LJ4-harmonic", false, 0.0, 0.0, "no minimizer"});
    rep.conditions.push_back({"alpha-floor", false, 0.0, 0.0, "no minimizer"});
    rep.conditions.push_back({"K1K2", false, 0.0, 0.0, "no minimizer"});
    return rep;
  }
  const double delta = well.delta;
  const double jmin = well.well_depth;

  // (LJ2) strict convexity on (0, delta).
  {
    ConditionResult c{"LJ2-convexity", true, delta, kInf, ""};
    for (double z : log_grid(std::min(1e-3, delta * 1e-3), delta * (1.0 - 1e-9), 2048)) {
      const double d2 = eval(spec, z, 2);
      if (d2 < c.margin) {
        c.margin = d2;
        c.witness_z = z;
      }
    }
    c.pass = c.margin > 0.0;
    if (!c.pass) c.detail = "J'' not positive on (0, delta)";
    rep.conditions.push_back(c);
  }

  // (LJ2) sandwich (1/d) Psi - d <= J <= d max(Psi, |z|).
  {
    ConditionResult c{"LJ2-sandwich", true, 0.0, kInf, ""};
    for (double z : log_grid(1e-3, 1e3, 4096)) {
      const double j = eval(spec, z, 0);
      const double psi = params.psi(z);
      const double lower_gap = j - (psi / params.d - params.d);
      const double upper_gap = params.d * std::max(psi, std::abs(z)) - j;
      const double gap = std::min(lower_gap, upper_gap);
      if (gap < c.margin) {
        c.margin = gap;
        c.witness_z = z;
        c.detail = lower_gap < upper_gap ? "lower bound tightest" : "upper bound tightest";
      }
    }
    c.pass = c.margin >= 0.0;
    rep.conditions.push_back(c);
  }

  // (LJ2) sup |J| on (delta, inf) below b.
  {
    ConditionResult c{"LJ2-bound-b", true, delta, 0.0, ""};
    double sup = 0.0, arg = delta;
    for (double z : log_grid(delta * (1.0 + 1e-9), 1e3, 2048)) {
      const double v = std::abs(eval(spec, z, 0));
      if (v > sup) {
        sup = v;
        arg = z;
      }
    }
    c.witness_z = arg;
    c.margin = params.b - sup;
    c.pass = sup < params.b;
    rep.conditions.push_back(c);
  }

  // (LJ3) decay to zero at large z.
  {
    ConditionResult c{"LJ3-decay", true, 1e3, 0.0, ""};
    const double tol = 1e-6 * std::max(1.0, std::abs(jmin));
    double prev = std::abs(eval(spec, 1e2, 0));
    for (double z : {3e2, 1e3}) {
      const double v = std::abs(eval(spec, z, 0));
      if (v > prev * (1.0 + 1e-9)) {
        c.pass = false;
        c.witness_z = z;
        c.detail = "|J| not decaying on tail grid";
      }
      prev = v;
    }
    c.margin = tol - prev;
    if (prev > tol) {
      c.pass = false;
      c.detail = "|J(1e3)| above decay tolerance";
    }
    rep.conditions.push_back(c);
  }

  // (LJ4) harmonic lower bound near the well.
  bool lj4_pass = false;
  {
    ConditionResult c{"LJ4-harmonic", true, delta, kInf, ""};
    const double lo = std::max(delta - params.eta, 1e-9);
    const double hi = delta + params.eta;
    for (int i = 0; i <= 2048; ++i) {
      const double z = lo + (hi - lo) * i / 2048;
      const double gap = eval(spec, z, 0) - jmin - (z - delta) * (z - delta) / params.c;
      if (gap < c.margin) {
        c.margin = gap;
        c.witness_z = z;
      }
    }
    c.pass = c.margin >= -1e-12;
    if (!c.pass) c.detail = "quadratic lower bound fails inside |z-delta| < eta";
    lj4_pass = c.pass;
    rep.conditions.push_back(c);
  }

  // Stiffness floor (uniform over the class).
  {
    ConditionResult c{"alpha-floor", false, delta, 0.0, ""};
    try {
      const double alpha = stiffness(spec, well);
      c.margin = alpha - params.alpha_floor;
      c.pass = alpha >= params.alpha_floor;
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    rep.conditions.push_back(c);
  }

  // Derived constants for the quadratic-or-constant lower bound
  // J(z) - J(delta) >= min(K1 (z-delta)^2, K2).
  {
    ConditionResult c{"K1K2", true, 0.0, kInf, ""};
    rep.k1 = lj4_pass ? 1.0 / params.c : 0.0;
    const double right = eval(spec, delta + params.eta, 0) - jmin;
    const double left =
        delta - params.eta > 0.0 ? eval(spec, delta - params.eta, 0) - jmin : kInf;
    rep.k2 = std::min(left, right);
    if (!(rep.k1 > 0.0) || !(rep.k2 > 0.0)) {
      c.pass = false;
      c.detail = "constants not positive";
    } else {
      for (double z : log_grid(1e-3, 1e3, 4096)) {
        const double lhs = eval(spec, z, 0) - jmin;
        const double rhs = std::min(rep.k1 * (z - delta) * (z - delta), rep.k2);
        const double gap = lhs - rhs;
        if (gap < c.margin) {
          c.margin = gap;
          c.witness_z = z;
        }
      }
      c.pass = c.margin >= -1e-12;
      if (!c.pass) c.detail = "quadratic-or-constant bound fails";
    }
    rep.conditions.push_back(c);
  }

  return rep;
}

}  // namespace ljchain
