#include "ljchain/kernels.hpp"

#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

#include "ljchain/rng.hpp"

namespace ljchain::kernels {

namespace detail {

double sum_scalar(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

double sum_reciprocal_scalar(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += 1.0 / v;
  return s;
}

MinLoc min_first_scalar(std::span<const double> x) {
  MinLoc best{x[0], 0};
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] < best.value) best = {x[i], i};
  }
  return best;
}

MinLoc max_first_scalar(std::span<const double> x) {
  MinLoc best{x[0], 0};
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > best.value) best = {x[i], i};
  }
  return best;
}

std::size_t count_lt_scalar(std::span<const double> x, double bound) {
  std::size_t c = 0;
  for (double v : x) c += (v < bound) ? 1 : 0;
  return c;
}

// The per-element operation order here is mirrored exactly by the AVX2
// variant, so individual outputs agree bit-for-bit.
static inline double lj126_u6(double sigma, double z) {
  double t = sigma / z;
  double t2 = t * t;
  double t4 = t2 * t2;
  return t4 * t2;
}

void lj126_eval_scalar(int order, double eps, double sigma, std::span<const double> z,
                       std::span<double> out) {
  const std::size_t n = z.size();
  switch (order) {
    case 0:
      for (std::size_t i = 0; i < n; ++i) {
        double u = lj126_u6(sigma, z[i]);
        out[i] = eps * (u * (u - 2.0));
      }
      break;
    case 1:
      for (std::size_t i = 0; i < n; ++i) {
        double u = lj126_u6(sigma, z[i]);
        out[i] = 12.0 * eps * (u * (1.0 - u)) / z[i];
      }
      break;
    case 2:
      for (std::size_t i = 0; i < n; ++i) {
        double u = lj126_u6(sigma, z[i]);
        out[i] = 12.0 * eps * (u * (13.0 * u - 7.0)) / (z[i] * z[i]);
      }
      break;
    case 3:
      for (std::size_t i = 0; i < n; ++i) {
        double u = lj126_u6(sigma, z[i]);
        out[i] = 24.0 * eps * (u * (28.0 - 91.0 * u)) / (z[i] * z[i] * z[i]);
      }
      break;
    default:
      throw std::invalid_argument("lj126_eval: order must be 0..3");
  }
}

EnergyAccum lj126_energy_scalar(std::span<const double> z, std::span<const double> eps,
                                std::span<const double> sigma,
                                std::span<const double> well) {
  const std::size_t n = z.size();
  double s = 0.0;
  double min_term = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(z[i] > 0.0)) return {std::numeric_limits<double>::infinity(), 0.0};
    double u = lj126_u6(sigma[i], z[i]);
    double term = eps[i] * (u * (u - 2.0)) - well[i];
    s += term;
    if (term < min_term) min_term = term;
  }
  return {s, min_term};
}

void uniform_fill_scalar(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter0,
                         std::span<double> out) {
  const std::uint64_t key = rng::stream_key(seed, stream);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = rng::to_unit_double(rng::at(key, counter0 + i));
  }
}

}  // namespace detail

namespace {

struct Dispatch {
  double (*sum)(std::span<const double>);
  double (*sum_reciprocal)(std::span<const double>);
  MinLoc (*min_first)(std::span<const double>);
  MinLoc (*max_first)(std::span<const double>);
  std::size_t (*count_lt)(std::span<const double>, double);
  void (*lj126_eval)(int, double, double, std::span<const double>, std::span<double>);
  EnergyAccum (*lj126_energy)(std::span<const double>, std::span<const double>,
                              std::span<const double>, std::span<const double>);
  void (*uniform_fill)(std::uint64_t, std::uint64_t, std::uint64_t, std::span<double>);
};

constexpr Dispatch kScalar{
    detail::sum_scalar,        detail::sum_reciprocal_scalar, detail::min_first_scalar,
    detail::max_first_scalar,  detail::count_lt_scalar,       detail::lj126_eval_scalar,
    detail::lj126_energy_scalar, detail::uniform_fill_scalar};

#if defined(LJCHAIN_HAVE_AVX2_BUILD)
constexpr Dispatch kAvx2{
    detail::sum_avx2,        detail::sum_reciprocal_avx2, detail::min_first_avx2,
    detail::max_first_avx2,  detail::count_lt_avx2,       detail::lj126_eval_avx2,
    detail::lj126_energy_avx2, detail::uniform_fill_avx2};
#endif

struct State {
  Isa isa;
  const Dispatch* table;
};

State initial_state() {
#if defined(LJCHAIN_HAVE_AVX2_BUILD)
  bool want_avx2 = cpu_has_avx2();
  if (const char* env = std::getenv("LJCHAIN_ISA")) {
    std::string s(env);
    if (s == "scalar") want_avx2 = false;
    // "avx2" keeps the hardware-gated default
  }
  if (want_avx2) return {Isa::avx2, &kAvx2};
#endif
  return {Isa::scalar, &kScalar};
}

State& state() {
  static State s = initial_state();
  return s;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(LJCHAIN_HAVE_AVX2_BUILD)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Isa active() { return state().isa; }

void set_active(Isa isa) {
  if (isa == Isa::scalar) {
    state() = {Isa::scalar, &kScalar};
    return;
  }
#if defined(LJCHAIN_HAVE_AVX2_BUILD)
  if (isa == Isa::avx2 && cpu_has_avx2()) {
    state() = {Isa::avx2, &kAvx2};
    return;
  }
#endif
  throw std::runtime_error("kernels::set_active: requested ISA not available");
}

double sum(std::span<const double> x) { return state().table->sum(x); }
double sum_reciprocal(std::span<const double> x) { return state().table->sum_reciprocal(x); }
MinLoc min_first(std::span<const double> x) { return state().table->min_first(x); }
MinLoc max_first(std::span<const double> x) { return state().table->max_first(x); }
std::size_t count_lt(std::span<const double> x, double b) { return state().table->count_lt(x, b); }
void lj126_eval(int order, double eps, double sigma, std::span<const double> z,
                std::span<double> out) {
  state().table->lj126_eval(order, eps, sigma, z, out);
}
EnergyAccum lj126_energy(std::span<const double> z, std::span<const double> eps,
                         std::span<const double> sigma, std::span<const double> well) {
  return state().table->lj126_energy(z, eps, sigma, well);
}
void uniform_fill(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter0,
                  std::span<double> out) {
  state().table->uniform_fill(seed, stream, counter0, out);
}

}  // namespace ljchain::kernels
