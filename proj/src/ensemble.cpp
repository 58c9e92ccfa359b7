#include "ljchain/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "ljchain/kernels.hpp"

namespace ljchain {

namespace {

constexpr double kProbTol = 1e-12;
constexpr double kStationaryTol = 1e-10;

std::vector<SupportEntry> build_support(std::vector<PotentialSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("ensemble: support must be nonempty");
  std::vector<SupportEntry> entries;
  entries.reserve(specs.size());
  for (auto& s : specs) {
    PotentialDescriptor d = describe(s);  // throws if the well is degenerate
    entries.push_back({std::move(s), d});
  }
  return entries;
}

void check_distribution(const std::vector<double>& p, std::size_t size, const char* what) {
  if (p.size() != size) throw std::invalid_argument(std::string(what) + ": size mismatch");
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument(std::string(what) + ": negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbTol)
    throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
}

bool support_all_twelve_six(const std::vector<SupportEntry>& support) {
  return std::all_of(support.begin(), support.end(), [](const SupportEntry& e) {
    return std::holds_alternative<TwelveSix>(e.spec.params);
  });
}

// Inverse-CDF lookup; cdf is nondecreasing with back() == 1.
std::uint32_t pick(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cdf.begin());
  return static_cast<std::uint32_t>(std::min(i, cdf.size() - 1));
}

std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  return cdf;
}

}  // namespace

double ChainRealization::sqrt_lambda() const { return std::sqrt(1.0 / static_cast<double>(n)); }

double ChainRealization::rest_length() const {
  return lambda() * kernels::sum(std::span<const double>(delta));
}

std::shared_ptr<const Ensemble> Ensemble::make_iid(std::vector<PotentialSpec> support,
                                                   std::vector<double> probabilities,
                                                   std::string label) {
  auto e = std::shared_ptr<Ensemble>(new Ensemble());
  e->law_ = LawKind::iid;
  e->support_ = build_support(std::move(support));
  check_distribution(probabilities, e->support_.size(), "iid probabilities");
  e->probabilities_ = std::move(probabilities);
  e->marginal_ = e->probabilities_;
  e->label_ = std::move(label);
  e->all_twelve_six_ = support_all_twelve_six(e->support_);
  return e;
}

std::shared_ptr<const Ensemble> Ensemble::make_markov(std::vector<PotentialSpec> support,
                                                      std::vector<std::vector<double>> transition,
                                                      std::vector<double> initial,
                                                      std::string label) {
  auto e = std::shared_ptr<Ensemble>(new Ensemble());
  e->law_ = LawKind::markov;
  e->support_ = build_support(std::move(support));
  const std::size_t m = e->support_.size();
  if (transition.size() != m) throw std::invalid_argument("markov: transition size mismatch");
  for (const auto& row : transition) check_distribution(row, m, "markov transition row");
  check_distribution(initial, m, "markov initial distribution");
  // stationarity of the supplied marginal: pi P = pi
  for (std::size_t j = 0; j < m; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < m; ++i) v += initial[i] * transition[i][j];
    if (std::abs(v - initial[j]) > kStationaryTol)
      throw std::invalid_argument("markov: initial distribution is not stationary");
  }
  e->transition_ = std::move(transition);
  e->initial_ = std::move(initial);
  e->marginal_ = e->initial_;
  e->label_ = std::move(label);
  e->all_twelve_six_ = support_all_twelve_six(e->support_);
  return e;
}

std::shared_ptr<const Ensemble> Ensemble::make_periodic(std::vector<PotentialSpec> support,
                                                        std::vector<std::uint32_t> pattern,
                                                        std::string label) {
  auto e = std::shared_ptr<Ensemble>(new Ensemble());
  e->law_ = LawKind::periodic;
  e->support_ = build_support(std::move(support));
  if (pattern.empty()) throw std::invalid_argument("periodic: pattern must be nonempty");
  for (std::uint32_t k : pattern)
    if (k >= e->support_.size()) throw std::invalid_argument("periodic: pattern index out of range");
  e->pattern_ = std::move(pattern);
  e->marginal_.assign(e->support_.size(), 0.0);
  for (std::uint32_t k : e->pattern_) e->marginal_[k] += 1.0 / e->pattern_.size();
  e->label_ = std::move(label);
  e->all_twelve_six_ = support_all_twelve_six(e->support_);
  return e;
}

ChainRealization sample_realization(std::shared_ptr<const Ensemble> ensemble, std::uint64_t n,
                                    std::uint64_t seed) {
  if (!ensemble) throw std::invalid_argument("sample_realization: null ensemble");
  if (n == 0) throw std::invalid_argument("sample_realization: n must be >= 1");

  ChainRealization chain;
  chain.ensemble = ensemble;
  chain.n = n;
  chain.seed = seed;
  chain.bond_index.resize(n);

  switch (ensemble->law()) {
    case LawKind::periodic: {
      const auto& pat = ensemble->pattern();
      for (std::uint64_t i = 0; i < n; ++i) chain.bond_index[i] = pat[i % pat.size()];
      break;
    }
    case LawKind::iid: {
      const auto cdf = cumulative(ensemble->probabilities());
      std::vector<double> u(n);
      kernels::uniform_fill(seed, /*stream=*/0, /*counter0=*/0, u);
      for (std::uint64_t i = 0; i < n; ++i) chain.bond_index[i] = pick(cdf, u[i]);
      break;
    }
    case LawKind::markov: {
      const auto& rows = ensemble->transition();
      std::vector<std::vector<double>> row_cdf(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) row_cdf[r] = cumulative(rows[r]);
      const auto init_cdf = cumulative(ensemble->initial());
      std::vector<double> u(n);
      kernels::uniform_fill(seed, 0, 0, u);
      std::uint32_t state = pick(init_cdf, u[0]);
      chain.bond_index[0] = state;
      for (std::uint64_t i = 1; i < n; ++i) {
        state = pick(row_cdf[state], u[i]);
        chain.bond_index[i] = state;
      }
      break;
    }
  }

  const auto& sup = ensemble->support();
  chain.delta.resize(n);
  chain.alpha.resize(n);
  chain.well_depth.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const PotentialDescriptor& d = sup[chain.bond_index[i]].desc;
    chain.delta[i] = d.delta;
    chain.alpha[i] = d.alpha;
    chain.well_depth[i] = d.well_depth;
  }
  if (ensemble->all_twelve_six()) {
    chain.lj_eps.resize(n);
    chain.lj_sigma.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto& p = std::get<TwelveSix>(sup[chain.bond_index[i]].spec.params);
      chain.lj_eps[i] = p.depth;
      chain.lj_sigma[i] = p.length;
    }
  }
  return chain;
}

namespace {

std::vector<double> per_state_values(const Ensemble& ensemble, Quantity q) {
  const auto& sup = ensemble.support();
  std::vector<double> v(sup.size());
  for (std::size_t k = 0; k < sup.size(); ++k) {
    switch (q.kind) {
      case Quantity::Kind::inverse_alpha: v[k] = 1.0 / sup[k].desc.alpha; break;
      case Quantity::Kind::ckappa: v[k] = sup[k].desc.ckappa(sup[k].spec, q.kappa); break;
    }
  }
  return v;
}

struct LatticeWindow {
  std::uint64_t lo = 0;
  std::uint64_t len = 0;
};

// Closed window [a, b]: lattice indices i with a <= i/n <= b, clamped to bonds.
LatticeWindow closed_window(std::uint64_t n, double a, double b) {
  const double dn = static_cast<double>(n);
  std::int64_t lo = static_cast<std::int64_t>(std::ceil(a * dn));
  std::int64_t hi = static_cast<std::int64_t>(std::floor(b * dn));
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(n) - 1);
  if (hi < lo) return {0, 0};
  return {static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi - lo + 1)};
}

// Open window |i/n - x| < eps, clamped to bonds.
LatticeWindow open_window(std::uint64_t n, double x, double eps) {
  const double dn = static_cast<double>(n);
  std::int64_t lo = static_cast<std::int64_t>(std::floor((x - eps) * dn)) + 1;
  std::int64_t hi = static_cast<std::int64_t>(std::ceil((x + eps) * dn)) - 1;
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(n) - 1);
  if (hi < lo) return {0, 0};
  return {static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi - lo + 1)};
}

}  // namespace

double expectation(const Ensemble& ensemble, Quantity q) {
  const auto v = per_state_values(ensemble, q);
  const auto& m = ensemble.marginal();
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) s += m[k] * v[k];
  return s;
}

double expectation_inverse_stiffness(const Ensemble& ensemble) {
  return expectation(ensemble, Quantity::inverse_alpha());
}

double beta_infimum(const Ensemble& ensemble) {
  const auto& sup = ensemble.support();
  const auto& m = ensemble.marginal();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sup.size(); ++k) {
    if (m[k] > 0.0) best = std::min(best, -sup[k].desc.well_depth);
  }
  return best;
}

double empirical_average(const ChainRealization& chain, Quantity q, double a, double b) {
  if (!(a <= b)) throw std::invalid_argument("empirical_average: window must satisfy a <= b");
  const LatticeWindow w = closed_window(chain.n, a, b);
  if (w.len == 0) throw std::invalid_argument("empirical_average: window holds no lattice point");
  if (q.kind == Quantity::Kind::inverse_alpha) {
    std::span<const double> alpha(chain.alpha.data() + w.lo, w.len);
    return kernels::sum_reciprocal(alpha) / static_cast<double>(w.len);
  }
  const auto values = per_state_values(*chain.ensemble, q);
  double s = 0.0;
  for (std::uint64_t i = w.lo; i < w.lo + w.len; ++i) s += values[chain.bond_index[i]];
  return s / static_cast<double>(w.len);
}

double empirical_indicator_cdf(const ChainRealization& chain, double x, double eps, double k) {
  if (!(eps > 0.0)) throw std::invalid_argument("empirical_indicator_cdf: eps must be positive");
  const double clipped = std::min(x + eps, 1.0) - std::max(x - eps, 0.0);
  const LatticeWindow w = open_window(chain.n, x, eps);
  if (clipped <= 0.0 || w.len == 0)
    throw std::invalid_argument("empirical_indicator_cdf: degenerate window");
  // depth_i <= k  <=>  well_depth_i >= -k
  std::span<const double> wd(chain.well_depth.data() + w.lo, w.len);
  const std::size_t count = w.len - kernels::count_lt(wd, -k);
  return static_cast<double>(count) / (static_cast<double>(chain.n) * clipped);
}

WindowInfimum window_infimum_beta_n(const ChainRealization& chain, double x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("window_infimum_beta_n: eps must be positive");
  const LatticeWindow w = open_window(chain.n, x, eps);
  if (w.len == 0) throw std::invalid_argument("window_infimum_beta_n: empty window");
  std::span<const double> wd(chain.well_depth.data() + w.lo, w.len);
  // smallest depth = largest well value; max_first keeps the smallest index on ties
  const kernels::MinLoc loc = kernels::max_first(wd);
  return {-loc.value, w.lo + loc.index};
}

}  // namespace ljchain
