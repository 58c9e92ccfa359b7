#pragma once

#include <cstdint>
#include <vector>

#include "ljchain/ensemble.hpp"

// Canonical chain energy, the surface-scaled displacement change of variables,
// and the boundary sequence that pins the rescaled boundary value.
namespace ljchain {

// Rescaled nodal displacements v^0..v^n with v^0 = 0 and v^n = gamma_n.
struct DisplacementField {
  std::uint64_t n = 0;
  std::vector<double> values;  // n + 1 nodes
  double gamma_n = 0.0;
};

// Plain deformation u^0..u^n with u^0 = 0.
struct DeformationField {
  std::uint64_t n = 0;
  std::vector<double> values;  // n + 1 nodes
};

// Generates the imposed lengths ell_n. The default rule
// ell_n = rest length + gamma * sqrt(lambda_n) makes gamma_n == gamma exactly.
struct BoundaryProgram {
  double gamma = 0.0;
  double ell(const ChainRealization& chain) const;
  double boundary_value(const ChainRealization& chain) const;  // realized gamma_n
};

// gamma_n = (ell_n - rest length) / sqrt(lambda_n); throws on compressive data
// (ell_n <= rest length).
double gamma_n(const ChainRealization& chain, double ell_n);

// v^i = (u^i - sum_{k<i} lambda delta_k) / sqrt(lambda).
DisplacementField rescale_deformation(const ChainRealization& chain, const DeformationField& u);
DeformationField deformation_from_displacement(const ChainRealization& chain,
                                               const DisplacementField& v);

// E_n = sum_i lambda J_i(strain_i); +inf sentinel when any strain <= 0.
double energy_deformation(const ChainRealization& chain, const DeformationField& u);

// Rescaled energy sum_i [J_i(z_i) - J_i(delta_i)] with
// z_i = (v^{i+1} - v^i)/sqrt(lambda) + delta_i; +inf sentinel when z_i <= 0.
// Throws std::invalid_argument when v violates its boundary invariants.
double energy_rescaled(const ChainRealization& chain, const DisplacementField& v);

struct BondTerm {
  double strain = 0.0;   // shifted strain z_i
  double summand = 0.0;  // J_i(z_i) - J_i(delta_i)
};
std::vector<BondTerm> energy_rescaled_breakdown(const ChainRealization& chain,
                                                const DisplacementField& v);

// Linear profile v^i = (i/n) * gamma_n; the elastic comparison candidate.
DisplacementField linear_displacement(std::uint64_t n, double gamma_n_value);

}  // namespace ljchain
