#include "ljchain/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "ljchain/kernels.hpp"

namespace ljchain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxBisect = 200;       // dual bisection cap
constexpr double kLengthRelTol = 1e-12;

// Convex/concave branch geometry of one support species.
struct BranchData {
  double delta = 0.0;
  double well = 0.0;
  double z_infl = 0.0;  // root of J'' right of the well
  double mu_max = 0.0;  // J'(z_infl), the largest transmissible force
  double z_cap = 0.0;   // broken-strain cap
  double mu_cap = 0.0;  // J'(z_cap)
};

// J'(z) = mu on an interval where J' is strictly monotone: Newton with
// bracket safeguard, converging on the position so the force residual scales
// with the local stiffness. `increasing` tells the bisection which side to
// keep.
double invert_force(const PotentialSpec& spec, double mu, double a, double b, double guess,
                    bool increasing) {
  double z = std::min(std::max(guess, a), b);
  for (int it = 0; it < 100; ++it) {
    const double f = eval(spec, z, 1) - mu;
    const bool below = increasing ? (f < 0.0) : (f > 0.0);
    (below ? a : b) = z;
    const double d2 = eval(spec, z, 2);
    double next = d2 != 0.0 ? z - f / d2 : 0.0;
    if (!(next > a && next < b)) next = (b / a > 4.0) ? std::sqrt(a * b) : 0.5 * (a + b);
    if (std::abs(next - z) <= 1e-13 * std::max(1.0, std::abs(next))) return next;
    z = next;
  }
  return z;
}

BranchData make_branch_data(const PotentialSpec& spec, const PotentialDescriptor& desc,
                            double z_cap) {
  BranchData bd;
  bd.delta = desc.delta;
  bd.well = desc.well_depth;
  bd.z_cap = z_cap;

  // First sign change of J'' right of the well.
  const double lo = desc.delta * (1.0 + 1e-9);
  const double hi = desc.delta * 64.0;
  double a = lo, b = 0.0;
  bool found = false;
  double prev = eval(spec, lo, 2);
  for (int i = 1; i <= 512; ++i) {
    const double z = lo * std::pow(hi / lo, static_cast<double>(i) / 512.0);
    const double d2 = eval(spec, z, 2);
    if (prev > 0.0 && d2 <= 0.0) {
      b = z;
      found = true;
      break;
    }
    a = z;
    prev = d2;
  }
  if (!found) throw SolveError("solve: no inflection point right of the well for '" +
                               spec.label + "'");
  while (b - a > 1e-14 * b) {
    const double mid = 0.5 * (a + b);
    (eval(spec, mid, 2) > 0.0 ? a : b) = mid;
  }
  bd.z_infl = 0.5 * (a + b);
  bd.mu_max = eval(spec, bd.z_infl, 1);
  bd.mu_cap = eval(spec, z_cap, 1);
  return bd;
}

// One species-side of the dual problem: `count` identical bonds pinned to one
// branch, all at the common force mu.
struct Group {
  std::uint32_t species = 0;
  std::uint64_t count = 0;
  bool broken = false;
  double warm = 0.0;  // last inverted strain, reused across mu evaluations
};

struct GroupSolution {
  double mu = 0.0;
  double energy = 0.0;
  int iterations = 0;
  bool capped = false;
  std::vector<double> strain;  // per group entry
};

class DualSolver {
 public:
  DualSolver(const ChainRealization& chain, std::span<const std::uint32_t> crack_set)
      : chain_(chain) {
    const auto& sup = chain.ensemble->support();
    const double z_cap = 1e6 * kernels::max_first(chain.delta).value;
    branch_.reserve(sup.size());
    for (const auto& entry : sup) branch_.push_back(make_branch_data(entry.spec, entry.desc, z_cap));

    std::vector<std::uint32_t> sorted(crack_set.begin(), crack_set.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("solve_elastic: duplicate crack index");

    std::vector<std::uint64_t> unbroken_count(sup.size(), 0);
    for (std::uint64_t i = 0; i < chain.n; ++i) unbroken_count[chain.bond_index[i]]++;
    for (std::uint32_t b : crack_set) {
      if (b >= chain.n) throw std::invalid_argument("solve_elastic: crack index out of range");
      unbroken_count[chain.bond_index[b]]--;
    }
    for (std::uint32_t s = 0; s < sup.size(); ++s) {
      if (unbroken_count[s] > 0) groups_.push_back({s, unbroken_count[s], false, branch_[s].delta});
    }
    for (std::uint32_t b : crack_set) {
      const std::uint32_t s = chain.bond_index[b];
      groups_.push_back({s, 1, true, 4.0 * branch_[s].z_infl});
      any_broken_ = true;
    }

    mu_hi_ = kInf;
    for (const Group& g : groups_) mu_hi_ = std::min(mu_hi_, branch_[g.species].mu_max);
    mu_hi_ *= 1.0 - 1e-9;
  }

  GroupSolution solve(double gamma_n) {
    const double target = gamma_n * std::sqrt(static_cast<double>(chain_.n));  // sum (z_i - delta_i)
    const double excess_tol =
        kLengthRelTol * static_cast<double>(chain_.n) *
        std::max(chain_.rest_length() + gamma_n * chain_.sqrt_lambda(), 1e-300);

    double lo = 0.0, hi = 0.0;
    int iters = 0;
    if (!any_broken_) {
      // excess is increasing in mu; excess(0) = 0 <= target
      lo = 0.0;
      hi = mu_hi_;
      if (excess(hi) < target)
        throw SolveError("infeasible branch assignment: elastic branch cannot reach the length");
    } else {
      // Smallest root on the initially decreasing part of the excess: scan a
      // geometric force grid upward and bracket the first crossing.
      constexpr int kScan = 320;
      constexpr double kScanDecades = 80.0;  // mu_hi * 2^-80 .. mu_hi
      double prev_mu = mu_hi_ * std::pow(2.0, -kScanDecades);
      if (excess(prev_mu) < target)
        throw SolveError("infeasible branch assignment: capped crack cannot absorb the length");
      bool bracketed = false;
      for (int i = 1; i <= kScan; ++i) {
        const double mu =
            mu_hi_ * std::pow(2.0, -kScanDecades * (1.0 - static_cast<double>(i) / kScan));
        ++iters;
        if (excess(mu) < target) {
          lo = prev_mu;
          hi = mu;
          bracketed = true;
          break;
        }
        prev_mu = mu;
      }
      if (!bracketed) throw SolveError("no dual root: crack branch never meets the length");
    }

    // Bisection on the force; the predicate side depends on whether the
    // excess is increasing (elastic) or decreasing (first crack root).
    double mu = 0.5 * (lo + hi);
    for (int it = 0; it < kMaxBisect; ++it) {
      mu = any_broken_ && (hi / std::max(lo, 1e-300) > 16.0) ? std::sqrt(std::max(lo, 1e-300) * hi)
                                                             : 0.5 * (lo + hi);
      const double ex = excess(mu);
      ++iters;
      if (std::abs(ex - target) <= excess_tol) break;
      const bool above = ex > target;
      if (any_broken_) {
        (above ? lo : hi) = mu;
      } else {
        (above ? hi : lo) = mu;
      }
      if (hi - lo <= 1e-320 + 1e-16 * hi) break;
    }

    GroupSolution sol;
    sol.mu = mu;
    sol.iterations = iters;
    sol.strain.resize(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      sol.strain[g] = strain_at(groups_[g], mu);
      const BranchData& bd = branch_[groups_[g].species];
      if (groups_[g].broken && sol.strain[g] >= bd.z_cap) sol.capped = true;
      const PotentialSpec& spec = chain_.ensemble->support()[groups_[g].species].spec;
      sol.energy += static_cast<double>(groups_[g].count) *
                    (eval(spec, sol.strain[g], 0) - bd.well);
    }
    return sol;
  }

  const std::vector<Group>& groups() const { return groups_; }

 private:
  double strain_at(const Group& g, double mu) {
    const BranchData& bd = branch_[g.species];
    const PotentialSpec& spec = chain_.ensemble->support()[g.species].spec;
    double z;
    if (!g.broken) {
      // convex branch: J' increasing from -inf to mu_max
      double a = bd.delta;
      while (eval(spec, a, 1) > mu) a *= 0.5;
      z = invert_force(spec, mu, a, bd.z_infl, g.warm, /*increasing=*/true);
    } else if (mu <= bd.mu_cap) {
      z = bd.z_cap;  // pegged
    } else {
      z = invert_force(spec, mu, bd.z_infl, bd.z_cap, g.warm, /*increasing=*/false);
    }
    const_cast<Group&>(g).warm = z;
    return z;
  }

  double excess(double mu) {
    double ex = 0.0;
    for (const Group& g : groups_) {
      ex += static_cast<double>(g.count) * (strain_at(g, mu) - branch_[g.species].delta);
    }
    return ex;
  }

  const ChainRealization& chain_;
  std::vector<BranchData> branch_;
  std::vector<Group> groups_;
  double mu_hi_ = 0.0;
  bool any_broken_ = false;
};

MinimizationResult materialize(const ChainRealization& chain, double gamma_n,
                               std::vector<std::uint32_t> crack_sorted, const DualSolver& solver,
                               const GroupSolution& sol) {
  MinimizationResult res;
  res.multiplier = sol.mu;
  res.energy = sol.energy;
  res.iterations = sol.iterations;
  res.broken_set = std::move(crack_sorted);
  res.status = res.broken_set.empty()
                   ? SolveStatus::elastic
                   : (sol.capped ? SolveStatus::boundary_capped : SolveStatus::fractured);

  // Unbroken strain per species, broken strain per crack entry (in the group
  // order the solver built: unbroken groups first, then cracks in input order).
  const auto& groups = solver.groups();
  std::vector<double> unbroken_strain(chain.ensemble->support().size(), 0.0);
  std::vector<double> broken_strain;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].broken) broken_strain.push_back(sol.strain[g]);
    else unbroken_strain[groups[g].species] = sol.strain[g];
  }

  res.strains.resize(chain.n);
  for (std::uint64_t i = 0; i < chain.n; ++i)
    res.strains[i] = unbroken_strain[chain.bond_index[i]];
  for (std::size_t k = 0; k < res.broken_set.size(); ++k)
    res.strains[res.broken_set[k]] = broken_strain[k];

  res.v_star.n = chain.n;
  res.v_star.gamma_n = gamma_n;
  res.v_star.values.resize(chain.n + 1);
  res.v_star.values[0] = 0.0;
  const double sqrt_lambda = chain.sqrt_lambda();
  for (std::uint64_t i = 0; i < chain.n; ++i) {
    res.v_star.values[i + 1] =
        res.v_star.values[i] + sqrt_lambda * (res.strains[i] - chain.delta[i]);
  }
  res.v_star.values[chain.n] = gamma_n;  // constraint holds to solver tolerance
  return res;
}

MinimizationResult zero_result(const ChainRealization& chain) {
  MinimizationResult res;
  res.v_star.n = chain.n;
  res.v_star.gamma_n = 0.0;
  res.v_star.values.assign(chain.n + 1, 0.0);
  res.strains.assign(chain.delta.begin(), chain.delta.end());
  res.energy = 0.0;
  res.multiplier = 0.0;
  res.status = SolveStatus::elastic;
  return res;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::elastic: return "elastic";
    case SolveStatus::fractured: return "fractured";
    default: return "boundary-capped";
  }
}

std::string MinimizationResult::to_json() const {
  nlohmann::ordered_json j;
  j["energy"] = energy;
  j["status"] = to_string(status);
  j["broken_set"] = broken_set;
  j["multiplier"] = multiplier;
  return j.dump(2);
}

MinimizationResult solve_elastic(const ChainRealization& chain, double gamma_n,
                                 std::span<const std::uint32_t> crack_set) {
  if (gamma_n < 0.0) throw std::invalid_argument("solve_elastic: gamma_n must be >= 0");
  if (crack_set.size() > 8) throw std::invalid_argument("solve_elastic: crack set too large");
  std::vector<std::uint32_t> sorted(crack_set.begin(), crack_set.end());
  std::sort(sorted.begin(), sorted.end());
  if (gamma_n == 0.0 && sorted.empty()) return zero_result(chain);

  DualSolver solver(chain, crack_set);
  const GroupSolution sol = solver.solve(gamma_n);
  return materialize(chain, gamma_n, std::move(sorted), solver, sol);
}

MinimizationResult minimize_global(const ChainRealization& chain, double gamma_n, int k_max,
                                   CandidateRule rule) {
  if (gamma_n < 0.0) throw std::invalid_argument("minimize_global: gamma_n must be >= 0");
  if (k_max < 0) throw std::invalid_argument("minimize_global: k_max must be >= 0");
  if (gamma_n == 0.0) return zero_result(chain);

  // Crack candidates: the weakest bonds, ranked by well depth then index.
  const std::uint32_t m =
      static_cast<std::uint32_t>(std::min<std::uint64_t>(chain.n, rule.weakest_count));
  std::vector<std::uint32_t> order(chain.n);
  for (std::uint32_t i = 0; i < chain.n; ++i) order[i] = i;
  std::partial_sort(order.begin(), order.begin() + m, order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      const double da = -chain.well_depth[a], db = -chain.well_depth[b];
                      return da != db ? da < db : a < b;
                    });
  order.resize(m);

  std::vector<std::vector<std::uint32_t>> candidates;
  candidates.push_back({});
  if (k_max >= 1)
    for (std::uint32_t b : order) candidates.push_back({b});
  if (k_max >= 2) {
    for (std::uint32_t i = 0; i < m; ++i)
      for (std::uint32_t j = i + 1; j < m; ++j) {
        std::vector<std::uint32_t> pair{order[i], order[j]};
        std::sort(pair.begin(), pair.end());
        candidates.push_back(std::move(pair));
      }
  }

  bool have_best = false;
  double best_energy = kInf;
  std::vector<std::uint32_t> best_set;
  std::string last_error = "no candidates";
  for (const auto& cand : candidates) {
    try {
      DualSolver solver(chain, cand);
      const GroupSolution sol = solver.solve(gamma_n);
      const bool better =
          !have_best || sol.energy < best_energy ||
          (sol.energy == best_energy && cand < best_set);
      if (better) {
        have_best = true;
        best_energy = sol.energy;
        best_set = cand;
      }
    } catch (const SolveError& e) {
      last_error = e.what();
    }
  }
  if (!have_best) throw SolveError("minimize_global: all crack candidates infeasible (" +
                                   last_error + ")");

  DualSolver solver(chain, best_set);
  const GroupSolution sol = solver.solve(gamma_n);
  return materialize(chain, gamma_n, std::move(best_set), solver, sol);
}

OracleResult oracle_grid_dp(const ChainRealization& chain, double gamma_n, DpGrid grid) {
  if (chain.n > 12) throw std::invalid_argument("oracle_grid_dp: n must be <= 12");
  if (gamma_n < 0.0) throw std::invalid_argument("oracle_grid_dp: gamma_n must be >= 0");
  const int n = static_cast<int>(chain.n);
  const int nz = grid.strain_points;
  const int nb = grid.length_bins;

  double delta_sum = 0.0, dmin = kInf, dmax = 0.0;
  for (double d : chain.delta) {
    delta_sum += d;
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  const double total = delta_sum + gamma_n * std::sqrt(static_cast<double>(chain.n));
  const double z_lo = 0.05 * dmin;
  const double z_hi = std::min(1e6 * dmax, total);
  const double bin_w = total / nb;

  // Per-bond energies on the shared log-spaced strain grid.
  std::vector<double> zgrid(nz);
  for (int k = 0; k < nz; ++k)
    zgrid[k] = z_lo * std::pow(z_hi / z_lo, static_cast<double>(k) / (nz - 1));

  std::vector<double> dp(static_cast<std::size_t>(nb + 1), kInf);
  std::vector<double> dp_next(dp.size(), kInf);
  // parent[j][b] = (previous bin << 16) | strain index
  std::vector<std::vector<std::uint64_t>> parent(
      n, std::vector<std::uint64_t>(dp.size(), 0));
  dp[0] = 0.0;

  std::vector<double> bond_energy(nz);
  for (int j = 0; j < n; ++j) {
    const PotentialSpec& spec = chain.bond_spec(j);
    for (int k = 0; k < nz; ++k) bond_energy[k] = eval(spec, zgrid[k], 0) - chain.well_depth[j];
    std::fill(dp_next.begin(), dp_next.end(), kInf);
    for (int b = 0; b <= nb; ++b) {
      if (dp[b] == kInf) continue;
      const double base = dp[b];
      const double c0 = b * bin_w;
      for (int k = 0; k < nz; ++k) {
        const double c1 = c0 + zgrid[k];
        if (c1 > total + 0.5 * bin_w) break;  // grid is ascending
        const int b1 = static_cast<int>(std::lround(c1 / bin_w));
        if (b1 > nb) continue;
        const double cand = base + bond_energy[k];
        if (cand < dp_next[b1]) {
          dp_next[b1] = cand;
          parent[j][b1] = (static_cast<std::uint64_t>(b) << 16) | static_cast<std::uint64_t>(k);
        }
      }
    }
    dp.swap(dp_next);
  }
  if (dp[nb] == kInf) throw SolveError("oracle_grid_dp: no grid-feasible configuration");

  // Path reconstruction.
  std::vector<double> z(n);
  {
    int b = nb;
    for (int j = n - 1; j >= 0; --j) {
      const std::uint64_t p = parent[j][b];
      z[j] = zgrid[p & 0xFFFF];
      b = static_cast<int>(p >> 16);
    }
  }
  // Exact constraint repair, then grid-free pairwise descent (independent of
  // the dual solver: only potential evaluations). The DP resolves the global
  // structure only down to its grid, so the descent also starts from the
  // crack-shaped configurations the compactness structure allows (no crack,
  // one crack, two cracks) and keeps the best.
  {
    double sum_z = 0.0;
    for (double v : z) sum_z += v;
    const double shift = (total - sum_z) / n;
    for (double& v : z) v += shift;
  }
  const double z_floor = 1e-3 * dmin;
  auto bond_e = [&](int i, double zi) { return eval(chain.bond_spec(i), zi, 0); };
  auto config_e = [&](const std::vector<double>& zz) {
    double e = 0.0;
    for (int i = 0; i < n; ++i) e += bond_e(i, zz[i]);
    return e;
  };
  auto descend = [&](std::vector<double>& zz) {
    for (int sweep = 0; sweep < 120; ++sweep) {
      double improved = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double lo = -(zz[i] - z_floor);
          const double hi = zz[j] - z_floor;
          const double e0 = bond_e(i, zz[i]) + bond_e(j, zz[j]);
          // coarse scan picks the basin, golden section refines it
          double best_t = 0.0, best_e = e0;
          for (int s = 0; s <= 40; ++s) {
            const double t = lo + (hi - lo) * s / 40.0;
            const double e = bond_e(i, zz[i] + t) + bond_e(j, zz[j] - t);
            if (e < best_e) {
              best_e = e;
              best_t = t;
            }
          }
          double a = std::max(lo, best_t - (hi - lo) / 40.0);
          double b = std::min(hi, best_t + (hi - lo) / 40.0);
          const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
          double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
          double f1 = bond_e(i, zz[i] + x1) + bond_e(j, zz[j] - x1);
          double f2 = bond_e(i, zz[i] + x2) + bond_e(j, zz[j] - x2);
          for (int it = 0; it < 90; ++it) {
            if (f1 < f2) {
              b = x2; x2 = x1; f2 = f1;
              x1 = b - gr * (b - a);
              f1 = bond_e(i, zz[i] + x1) + bond_e(j, zz[j] - x1);
            } else {
              a = x1; x1 = x2; f1 = f2;
              x2 = a + gr * (b - a);
              f2 = bond_e(i, zz[i] + x2) + bond_e(j, zz[j] - x2);
            }
          }
          const double t = 0.5 * (a + b);
          const double e = bond_e(i, zz[i] + t) + bond_e(j, zz[j] - t);
          if (e < e0 - 1e-15 * (1.0 + std::abs(e0))) {
            zz[i] += t;
            zz[j] -= t;
            improved += e0 - e;
          }
        }
      }
      if (improved < 1e-13) break;
    }
    return config_e(zz);
  };

  std::vector<std::vector<double>> starts;
  starts.push_back(z);                             // DP path
  starts.emplace_back(n, total / n);               // uniform split
  const double excess = total - delta_sum;
  for (int i = 0; i < n; ++i) {                    // one overloaded bond
    std::vector<double> s(chain.delta.begin(), chain.delta.end());
    s[i] += excess;
    starts.push_back(std::move(s));
  }
  for (int i = 0; i < n; ++i) {                    // two overloaded bonds
    for (int j = i + 1; j < n; ++j) {
      std::vector<double> s(chain.delta.begin(), chain.delta.end());
      s[i] += 0.5 * excess;
      s[j] += 0.5 * excess;
      starts.push_back(std::move(s));
    }
  }
  double best_e = std::numeric_limits<double>::infinity();
  for (auto& s : starts) {
    const double e = descend(s);
    if (e < best_e) {
      best_e = e;
      z = s;
    }
  }

  OracleResult out;
  MinimizationResult& res = out.result;
  res.strains = z;
  res.energy = 0.0;
  double max_force = 0.0;
  for (int i = 0; i < n; ++i) {
    res.energy += bond_e(i, z[i]) - chain.well_depth[i];
    max_force = std::max(max_force, std::abs(eval(chain.bond_spec(i), z[i], 1)));
  }
  // broken = past the inflection of its own potential
  for (int i = 0; i < n; ++i) {
    const PotentialSpec& spec = chain.bond_spec(i);
    const PotentialDescriptor& d = chain.ensemble->support()[chain.bond_index[i]].desc;
    if (z[i] > d.delta && eval(spec, z[i], 2) < 0.0)
      res.broken_set.push_back(static_cast<std::uint32_t>(i));
  }
  res.status = res.broken_set.empty() ? SolveStatus::elastic : SolveStatus::fractured;
  // informative force level: mean over convex-branch bonds
  double mu_acc = 0.0;
  int mu_cnt = 0;
  for (int i = 0; i < n; ++i) {
    if (std::find(res.broken_set.begin(), res.broken_set.end(), static_cast<std::uint32_t>(i)) ==
        res.broken_set.end()) {
      mu_acc += eval(chain.bond_spec(i), z[i], 1);
      ++mu_cnt;
    }
  }
  res.multiplier = mu_cnt > 0 ? mu_acc / mu_cnt : 0.0;

  res.v_star.n = chain.n;
  res.v_star.gamma_n = gamma_n;
  res.v_star.values.resize(chain.n + 1);
  res.v_star.values[0] = 0.0;
  const double sqrt_lambda = chain.sqrt_lambda();
  for (int i = 0; i < n; ++i)
    res.v_star.values[i + 1] = res.v_star.values[i] + sqrt_lambda * (z[i] - chain.delta[i]);
  res.v_star.values[chain.n] = gamma_n;

  const double mean_step = std::log(z_hi / z_lo) / (nz - 1);  // relative grid spacing
  out.grid_slack = max_force * (bin_w + mean_step * total / n) ;
  return out;
}

JumpReport detect_jumps(const MinimizationResult& result, JumpRule rule) {
  JumpReport rep;
  const std::uint64_t n = result.v_star.n;
  const double lambda = 1.0 / static_cast<double>(n);
  const double threshold = std::pow(lambda, rule.exponent);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double inc = result.v_star.values[i + 1] - result.v_star.values[i];
    if (std::abs(inc) > threshold) {
      rep.jump_locations.push_back(static_cast<std::uint32_t>(i));
      rep.jump_heights.push_back(inc);
    }
  }
  rep.count = rep.jump_locations.size();
  return rep;
}

}  // namespace ljchain
