#include "ljchain/energy.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "ljchain/kernels.hpp"

namespace ljchain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSummandFloor = -1e-12;  // delta_i is the global minimizer

void check_sizes(const ChainRealization& chain, std::uint64_t nodes, const char* what) {
  if (nodes != chain.n + 1) throw std::invalid_argument(std::string(what) + ": size mismatch");
}

void check_boundary(const DisplacementField& v) {
  if (v.values.size() != v.n + 1)
    throw std::invalid_argument("displacement field: wrong node count");
  const double tol = 1e-12 * std::max(1.0, std::abs(v.gamma_n));
  if (v.values.front() != 0.0 || std::abs(v.values.back() - v.gamma_n) > tol)
    throw std::invalid_argument("displacement field: boundary values violated");
}

// Shifted strains z_i = (v^{i+1} - v^i)/sqrt(lambda) + delta_i.
std::vector<double> shifted_strains(const ChainRealization& chain, const DisplacementField& v) {
  const double inv_sqrt_lambda = 1.0 / chain.sqrt_lambda();
  std::vector<double> z(chain.n);
  for (std::uint64_t i = 0; i < chain.n; ++i) {
    z[i] = (v.values[i + 1] - v.values[i]) * inv_sqrt_lambda + chain.delta[i];
  }
  return z;
}

}  // namespace

double BoundaryProgram::ell(const ChainRealization& chain) const {
  return chain.rest_length() + gamma * chain.sqrt_lambda();
}

double BoundaryProgram::boundary_value(const ChainRealization& chain) const {
  return gamma > 0.0 ? gamma_n(chain, ell(chain)) : 0.0;
}

double gamma_n(const ChainRealization& chain, double ell_n) {
  const double rest = chain.rest_length();
  // strict inequality up to the root tolerance the cached minimizers carry
  const double tol = 4e-12 * std::max(1.0, std::abs(rest));
  if (!(ell_n > rest + tol))
    throw std::invalid_argument("gamma_n: compressive boundary data (ell_n <= rest length)");
  return (ell_n - rest) / chain.sqrt_lambda();
}

DisplacementField rescale_deformation(const ChainRealization& chain, const DeformationField& u) {
  check_sizes(chain, u.values.size(), "rescale_deformation");
  const double lambda = chain.lambda();
  const double inv_sqrt_lambda = std::sqrt(static_cast<double>(chain.n));
  DisplacementField v;
  v.n = chain.n;
  v.values.resize(chain.n + 1);
  double rest_prefix = 0.0;  // sum_{k<i} lambda delta_k
  for (std::uint64_t i = 0; i <= chain.n; ++i) {
    v.values[i] = (u.values[i] - rest_prefix) * inv_sqrt_lambda;
    if (i < chain.n) rest_prefix += lambda * chain.delta[i];
  }
  v.gamma_n = v.values.back();
  return v;
}

DeformationField deformation_from_displacement(const ChainRealization& chain,
                                               const DisplacementField& v) {
  check_sizes(chain, v.values.size(), "deformation_from_displacement");
  const double lambda = chain.lambda();
  const double sqrt_lambda = chain.sqrt_lambda();
  DeformationField u;
  u.n = chain.n;
  u.values.resize(chain.n + 1);
  double rest_prefix = 0.0;
  for (std::uint64_t i = 0; i <= chain.n; ++i) {
    u.values[i] = v.values[i] * sqrt_lambda + rest_prefix;
    if (i < chain.n) rest_prefix += lambda * chain.delta[i];
  }
  return u;
}

double energy_deformation(const ChainRealization& chain, const DeformationField& u) {
  check_sizes(chain, u.values.size(), "energy_deformation");
  const double lambda = chain.lambda();
  const double inv_lambda = static_cast<double>(chain.n);
  double sum = 0.0;
  for (std::uint64_t i = 0; i < chain.n; ++i) {
    const double strain = (u.values[i + 1] - u.values[i]) * inv_lambda;
    if (!(strain > 0.0)) return kInf;
    sum += eval(chain.bond_spec(i), strain, 0);
  }
  return lambda * sum;
}

double energy_rescaled(const ChainRealization& chain, const DisplacementField& v) {
  check_sizes(chain, v.values.size(), "energy_rescaled");
  check_boundary(v);
  const std::vector<double> z = shifted_strains(chain, v);

  if (!chain.lj_eps.empty()) {
    const kernels::EnergyAccum acc =
        kernels::lj126_energy(z, chain.lj_eps, chain.lj_sigma, chain.well_depth);
    if (acc.sum == kInf) return kInf;
    if (acc.min_term < kSummandFloor)
      throw std::logic_error("energy_rescaled: negative summand (cache inconsistent)");
    return acc.sum;
  }

  double sum = 0.0;
  for (std::uint64_t i = 0; i < chain.n; ++i) {
    if (!(z[i] > 0.0)) return kInf;
    const double term = eval(chain.bond_spec(i), z[i], 0) - chain.well_depth[i];
    if (term < kSummandFloor)
      throw std::logic_error("energy_rescaled: negative summand (cache inconsistent)");
    sum += term;
  }
  return sum;
}

std::vector<BondTerm> energy_rescaled_breakdown(const ChainRealization& chain,
                                                const DisplacementField& v) {
  check_sizes(chain, v.values.size(), "energy_rescaled_breakdown");
  check_boundary(v);
  const std::vector<double> z = shifted_strains(chain, v);
  std::vector<BondTerm> terms(chain.n);
  for (std::uint64_t i = 0; i < chain.n; ++i) {
    terms[i].strain = z[i];
    terms[i].summand = (z[i] > 0.0)
                           ? eval(chain.bond_spec(i), z[i], 0) - chain.well_depth[i]
                           : kInf;
  }
  return terms;
}

DisplacementField linear_displacement(std::uint64_t n, double gamma_n_value) {
  DisplacementField v;
  v.n = n;
  v.gamma_n = gamma_n_value;
  v.values.resize(n + 1);
  for (std::uint64_t i = 0; i <= n; ++i) {
    v.values[i] = gamma_n_value * static_cast<double>(i) / static_cast<double>(n);
  }
  v.values[0] = 0.0;
  v.values[n] = gamma_n_value;
  return v;
}

}  // namespace ljchain
