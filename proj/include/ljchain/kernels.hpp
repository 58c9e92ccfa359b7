#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Hot inner loops of the chain lab: batch 12-6 evaluation, reductions used by
// the ergodic averages, and the counter-based uniform fill. Each kernel has a
// scalar reference implementation and an AVX2 variant; the active one is
// picked at runtime (override with LJCHAIN_ISA=scalar|avx2 or set_active).
// Integer kernels and lj126 evaluation are bit-identical across variants;
// sums may differ by reduction order within documented bounds.
namespace ljchain::kernels {

enum class Isa { scalar, avx2 };

Isa active();
void set_active(Isa isa);  // throws if the requested ISA is unavailable
bool cpu_has_avx2();

double sum(std::span<const double> x);
double sum_reciprocal(std::span<const double> x);  // sum of 1/x_i

struct MinLoc {
  double value;
  std::size_t index;  // first index attaining value
};
// Preconditions: non-empty, NaN-free input.
MinLoc min_first(std::span<const double> x);
MinLoc max_first(std::span<const double> x);

std::size_t count_lt(std::span<const double> x, double bound);

// out[i] = d^order/dz^order of eps*((sigma/z)^12 - 2 (sigma/z)^6), order 0..3.
// Precondition: z_i > 0.
void lj126_eval(int order, double eps, double sigma, std::span<const double> z,
                std::span<double> out);

struct EnergyAccum {
  double sum;       // sum of J_i(z_i) - well_i; +inf if any z_i <= 0
  double min_term;  // smallest single term (undefined when sum is +inf)
};
// Per-bond 12-6 parameters; well_i = J_i at its minimizer.
EnergyAccum lj126_energy(std::span<const double> z, std::span<const double> eps,
                         std::span<const double> sigma, std::span<const double> well);

// out[i] = uniform double in [0,1) at counter0+i of stream (seed, stream).
void uniform_fill(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter0,
                  std::span<double> out);

// Direct access to both variants, for equivalence tests.
namespace detail {
double sum_scalar(std::span<const double>);
double sum_reciprocal_scalar(std::span<const double>);
MinLoc min_first_scalar(std::span<const double>);
MinLoc max_first_scalar(std::span<const double>);
std::size_t count_lt_scalar(std::span<const double>, double);
void lj126_eval_scalar(int, double, double, std::span<const double>, std::span<double>);
EnergyAccum lj126_energy_scalar(std::span<const double>, std::span<const double>,
                                std::span<const double>, std::span<const double>);
void uniform_fill_scalar(std::uint64_t, std::uint64_t, std::uint64_t, std::span<double>);

#if defined(LJCHAIN_HAVE_AVX2_BUILD)
double sum_avx2(std::span<const double>);
double sum_reciprocal_avx2(std::span<const double>);
MinLoc min_first_avx2(std::span<const double>);
MinLoc max_first_avx2(std::span<const double>);
std::size_t count_lt_avx2(std::span<const double>, double);
void lj126_eval_avx2(int, double, double, std::span<const double>, std::span<double>);
EnergyAccum lj126_energy_avx2(std::span<const double>, std::span<const double>,
                              std::span<const double>, std::span<const double>);
void uniform_fill_avx2(std::uint64_t, std::uint64_t, std::uint64_t, std::span<double>);
#endif
}  // namespace detail

}  // namespace ljchain::kernels
