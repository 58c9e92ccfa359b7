#include "ljchain/homogenize.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "ljchain/kernels.hpp"

namespace ljchain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::elastic: return "elastic";
    case Regime::fractured: return "fractured";
    default: return "critical";
  }
}

std::string LimitPrediction::to_json() const {
  nlohmann::ordered_json j;
  j["alpha_bar"] = alpha_bar;
  j["beta"] = beta;
  j["gamma"] = gamma;
  j["gamma_star"] = gamma_star;
  j["predicted_min"] = predicted_min;
  j["regime"] = to_string(regime);
  return j.dump(2);
}

LimitPrediction predict_limit(const Ensemble& ensemble, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("predict_limit: gamma must be >= 0");
  LimitPrediction p;
  p.alpha_bar = 1.0 / expectation_inverse_stiffness(ensemble);
  p.beta = beta_infimum(ensemble);
  p.gamma = gamma;
  p.gamma_star = std::sqrt(p.beta / p.alpha_bar);
  p.predicted_min = std::min(p.alpha_bar * gamma * gamma, p.beta);
  if (std::abs(gamma - p.gamma_star) <= 1e-12) p.regime = Regime::critical;
  else p.regime = gamma < p.gamma_star ? Regime::elastic : Regime::fractured;
  return p;
}

void LimitProfile::check() const {
  if (segments.empty()) throw std::invalid_argument("profile: no segments");
  if (segments.front().x0 != 0.0 || segments.back().x1 != 1.0)
    throw std::invalid_argument("profile: segments must tile [0, 1]");
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!(segments[s].x1 > segments[s].x0))
      throw std::invalid_argument("profile: empty segment");
    if (s > 0 && segments[s].x0 != segments[s - 1].x1)
      throw std::invalid_argument("profile: segments must be contiguous");
  }
}

namespace {

double poly_at(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
  return v;
}

}  // namespace

double LimitProfile::value(double x) const {
  for (const auto& s : segments) {
    if (x < s.x1 || &s == &segments.back()) return poly_at(s.poly, x - s.x0);
  }
  return 0.0;
}

std::vector<LimitProfile::Jump> LimitProfile::jumps() const {
  std::vector<Jump> out;
  const double at0 = poly_at(segments.front().poly, 0.0);
  if (at0 != 0.0) out.push_back({0.0, at0});  // trace v(0-) = 0
  for (std::size_t s = 1; s < segments.size(); ++s) {
    const double left = poly_at(segments[s - 1].poly, segments[s - 1].x1 - segments[s - 1].x0);
    const double right = poly_at(segments[s].poly, 0.0);
    if (right != left) out.push_back({segments[s].x0, right - left});
  }
  const auto& last = segments.back();
  const double at1 = poly_at(last.poly, last.x1 - last.x0);
  if (at1 != gamma) out.push_back({1.0, gamma - at1});  // trace v(1+) = gamma
  return out;
}

double limit_energy(const LimitProfile& profile, const LimitPrediction& prediction) {
  profile.check();
  const auto js = profile.jumps();
  for (const auto& j : js) {
    if (j.height <= 0.0) return kInf;  // only nonnegative jumps are admissible
  }
  double dirichlet = 0.0;
  for (const auto& s : profile.segments) {
    // derivative coefficients, then exact integral of the square
    std::vector<double> d(s.poly.size() > 1 ? s.poly.size() - 1 : 1, 0.0);
    for (std::size_t k = 1; k < s.poly.size(); ++k) d[k - 1] = s.poly[k] * static_cast<double>(k);
    const double len = s.x1 - s.x0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        dirichlet += d[i] * d[j] * std::pow(len, static_cast<double>(i + j + 1)) /
                     static_cast<double>(i + j + 1);
      }
    }
  }
  return prediction.alpha_bar * dirichlet + prediction.beta * static_cast<double>(js.size());
}

double StepTarget::value(double x) const {
  if (x < jump_x) return slope * x;
  if (x <= jump_x + rho) return slope * jump_x + height();
  return slope * jump_x + height() + slope * (x - jump_x - rho);
}

LimitProfile StepTarget::profile() const {
  LimitProfile p;
  p.gamma = gamma;
  const double plateau = slope * jump_x + height();
  if (jump_x > 0.0) p.segments.push_back({0.0, jump_x, {0.0, slope}});
  p.segments.push_back({jump_x, jump_x + rho, {plateau}});
  p.segments.push_back({jump_x + rho, 1.0, {plateau, slope}});
  return p;
}

namespace {

// Fills nodes of one ramp with stiffness-weighted block increments.
// Partition of (x_start, x_end] into k blocks; v[i] for i in Z cap n*I_j.
// Returns the last node index written.
std::uint64_t build_blocks(std::vector<double>& v, const ChainRealization& chain, double x_start,
                           double x_end, std::uint64_t k, double z, double value_offset,
                           bool right_of_jump, std::vector<BlockInfo>& blocks) {
  const double n = static_cast<double>(chain.n);
  const double lambda = chain.lambda();
  const double mu_star = (x_end - x_start) / static_cast<double>(k);
  if (mu_star * n < 2.0)
    throw std::invalid_argument("build_recovery_sequence: mu too fine for this n");
  std::uint64_t last = 0;
  for (std::uint64_t j = 0; j < k; ++j) {
    const double lo_x = x_start + static_cast<double>(j) * mu_star;
    const double hi_x = (j + 1 == k) ? x_end : x_start + static_cast<double>(j + 1) * mu_star;
    const std::uint64_t i_min = static_cast<std::uint64_t>(std::floor(lo_x * n)) + 1;
    const std::uint64_t i_max = static_cast<std::uint64_t>(std::floor(hi_x * n));
    if (i_max < i_min) throw std::invalid_argument("build_recovery_sequence: empty block");
    // block bonds i_min-1 .. i_max-1
    const std::size_t count = static_cast<std::size_t>(i_max - i_min + 1);
    std::span<const double> alpha(chain.alpha.data() + (i_min - 1), count);
    const double inv_sum = kernels::sum_reciprocal(alpha);
    const double harmonic = static_cast<double>(count) / inv_sum;
    const double base = value_offset + z * ((static_cast<double>(i_min) - 1.0) * lambda - x_start);
    double prefix = 0.0;
    for (std::uint64_t i = i_min; i <= i_max; ++i) {
      prefix += 1.0 / chain.alpha[i - 1];
      v[i] = base + harmonic * lambda * z * prefix;
    }
    blocks.push_back({i_min, i_max, harmonic, right_of_jump});
    last = i_max;
  }
  return last;
}

}  // namespace

RecoveryBuild build_recovery_sequence(const ChainRealization& chain, const StepTarget& target,
                                      double gamma_n, double mu, double eps) {
  const std::uint64_t n = chain.n;
  const double lambda = chain.lambda();
  const double z = target.slope;
  const double xj = target.jump_x;
  const double rho_end = xj + target.rho;
  if (!(target.rho > 0.0) || xj < 0.0 || !(rho_end < 1.0))
    throw std::invalid_argument("build_recovery_sequence: need 0 <= jump_x, jump_x + rho < 1");
  if (!(target.height() > 0.0))
    throw std::invalid_argument("build_recovery_sequence: jump height must be positive");
  if (!(eps > 0.0) || !(eps < target.rho))
    throw std::invalid_argument("build_recovery_sequence: need 0 < eps < rho");
  if (!(mu > 0.0)) throw std::invalid_argument("build_recovery_sequence: mu must be positive");

  RecoveryBuild out;
  out.t_n = static_cast<std::uint64_t>(std::floor(rho_end * static_cast<double>(n)));
  if (xj == 0.0 && !(eps < static_cast<double>(out.t_n) * lambda))
    throw std::invalid_argument("build_recovery_sequence: need eps < T_n * lambda");

  const WindowInfimum wi = window_infimum_beta_n(chain, xj, eps);
  out.h_n_eps = wi.index;
  out.beta_n = wi.beta_n;

  out.v.n = n;
  out.v.gamma_n = gamma_n;
  out.v.values.assign(n + 1, 0.0);

  // Left ramp blocks on (0, xj - eps], when the jump sits in the interior.
  std::uint64_t a_n = 0;
  if (xj > 0.0) {
    const double left_len = xj - eps;
    if (left_len * static_cast<double>(n) >= 2.0) {
      const std::uint64_t k_l =
          std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(left_len / mu)));
      a_n = build_blocks(out.v.values, chain, 0.0, left_len, k_l, z, 0.0, false, out.blocks);
    }
  }
  const double v_left = out.v.values[a_n];
  for (std::uint64_t i = a_n + 1; i <= out.h_n_eps; ++i) out.v.values[i] = v_left;

  // Step and plateau, carrying the gamma_n - gamma boundary correction and
  // the block-start offset z (T_n lambda - rho_end).
  const double offset = z * xj + target.height() + (gamma_n - target.gamma);
  const double plateau = offset + z * (static_cast<double>(out.t_n) * lambda - rho_end);
  for (std::uint64_t i = out.h_n_eps + 1; i <= out.t_n; ++i) out.v.values[i] = plateau;

  // Main ramp blocks on (rho_end, 1]; the admissible block lengths are
  // (1 - rho_end)/k, so snap mu to the nearest one.
  const double right_len = 1.0 - rho_end;
  const std::uint64_t k_r =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(right_len / mu)));
  out.mu_snapped = right_len / static_cast<double>(k_r);
  build_blocks(out.v.values, chain, rho_end, 1.0, k_r, z, offset, true, out.blocks);

  return out;
}

namespace {

// Exact integral of |v_n - target| per lattice cell (both affine there, up to
// the O(lambda) cells holding the target's kinks).
double l1_distance(const DisplacementField& v, const StepTarget& target) {
  const std::uint64_t n = v.n;
  const double lambda = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double d0 = v.values[i] - target.value(static_cast<double>(i) * lambda);
    const double d1 = v.values[i + 1] - target.value(static_cast<double>(i + 1) * lambda);
    if (d0 * d1 >= 0.0) {
      acc += 0.5 * (std::abs(d0) + std::abs(d1)) * lambda;
    } else {
      acc += 0.5 * lambda * (d0 * d0 + d1 * d1) / std::abs(d1 - d0);
    }
  }
  return acc;
}

}  // namespace

std::string ConvergenceTable::to_csv() const {
  std::string out = "n,seed,gamma_n,energy,predicted,gap,regime,broken_depth";
  if (mode == StudyMode::recovery) out += ",l1_distance,boundary_residual";
  out += "\n";
  for (const auto& c : cells) {
    out += std::to_string(c.n) + "," + std::to_string(c.seed) + "," + fmt_double(c.gamma_n) +
           "," + fmt_double(c.energy) + "," + fmt_double(c.predicted) + "," + fmt_double(c.gap) +
           "," + c.regime + "," + fmt_double(c.broken_depth);
    if (mode == StudyMode::recovery)
      out += "," + fmt_double(c.l1_distance) + "," + fmt_double(c.boundary_residual);
    out += "\n";
  }
  return out;
}

ConvergenceTable convergence_study(std::shared_ptr<const Ensemble> ensemble, double gamma,
                                   const std::vector<std::uint64_t>& n_list,
                                   const std::vector<std::uint64_t>& seeds,
                                   StudyOptions options) {
  if (n_list.empty()) throw std::invalid_argument("convergence_study: n_list must be nonempty");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw std::invalid_argument("convergence_study: n_list must be ascending");
  if (options.mode == StudyMode::recovery && options.mu_list.size() != n_list.size())
    throw std::invalid_argument("convergence_study: recovery mode needs one mu per n");

  const LimitPrediction pred = predict_limit(*ensemble, gamma);
  const double target_energy = options.mode == StudyMode::recovery
                                   ? limit_energy(options.target.profile(), pred)
                                   : pred.predicted_min;

  ConvergenceTable table;
  table.mode = options.mode;
  table.cells.resize(n_list.size() * seeds.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= table.cells.size()) return;
      try {
        const std::size_t ni = idx / seeds.size();
        const std::size_t si = idx % seeds.size();
        const std::uint64_t n = n_list[ni];
        const std::uint64_t seed = seeds[si];
        ChainRealization chain = sample_realization(ensemble, n, seed);
        const double gn = BoundaryProgram{gamma}.boundary_value(chain);
        StudyCell cell;
        cell.n = n;
        cell.seed = seed;
        cell.gamma_n = gn;
        cell.predicted = target_energy;
        cell.l1_distance = kNaN;
        cell.boundary_residual = kNaN;
        if (options.mode == StudyMode::global_min) {
          const MinimizationResult res = minimize_global(chain, gn, options.k_max, options.rule);
          cell.energy = res.energy;
          cell.regime = to_string(res.status);
          cell.broken_depth =
              res.broken_set.empty() ? kNaN : -chain.well_depth[res.broken_set.front()];
        } else {
          const double mu = options.mu_list[ni];
          const RecoveryBuild rb =
              build_recovery_sequence(chain, options.target, gn, mu, /*eps=*/mu);
          cell.boundary_residual = std::abs(rb.v.values.back() - gn);
          cell.energy = energy_rescaled(chain, rb.v);
          cell.regime = "recovery";
          cell.broken_depth = rb.beta_n;
          cell.l1_distance = l1_distance(rb.v, options.target);
        }
        cell.gap = std::abs(cell.energy - cell.predicted);
        table.cells[idx] = std::move(cell);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    const std::size_t count = std::min<std::size_t>(workers, table.cells.size());
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return table;
}

}  // namespace ljchain
