#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ljchain/energy.hpp"
#include "ljchain/ensemble.hpp"

// Exact global minimization of the rescaled chain energy under the boundary
// constraint: crack-set enumeration over the weakest bonds, each candidate
// solved by dual bisection on the common bond force, validated against a
// brute-force dynamic-programming oracle.
namespace ljchain {

struct SolveError : std::runtime_error {
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

enum class SolveStatus { elastic, fractured, boundary_capped };
const char* to_string(SolveStatus s);

struct MinimizationResult {
  DisplacementField v_star;
  double energy = 0.0;
  std::vector<double> strains;             // shifted strains z_i
  std::vector<std::uint32_t> broken_set;   // bonds on the decreasing branch
  double multiplier = 0.0;                 // common bond force mu
  SolveStatus status = SolveStatus::elastic;
  int iterations = 0;

  std::string to_json() const;  // {energy, status, broken_set, multiplier}
};

// Minimize sum_i [J_i(z_i) - J_i(delta_i)] s.t. sum lambda z_i = imposed
// length, bonds outside crack_set on the convex branch (0, z_infl), bonds
// inside on the decreasing branch (z_infl, z_cap). Throws SolveError when the
// branch assignment cannot meet the constraint.
MinimizationResult solve_elastic(const ChainRealization& chain, double gamma_n,
                                 std::span<const std::uint32_t> crack_set);

struct CandidateRule {
  std::uint32_t weakest_count = 32;  // crack candidates ranked by well depth
};

// Least energy over crack sets: empty, singletons among the weakest bonds,
// pairs of those when k_max >= 2. Ties resolve to the lexicographically
// smallest broken set.
MinimizationResult minimize_global(const ChainRealization& chain, double gamma_n,
                                   int k_max = 2, CandidateRule rule = {});

struct DpGrid {
  int strain_points = 2000;  // log-spaced per-bond strain grid
  int length_bins = 4000;    // cumulative-length discretization
};

struct OracleResult {
  MinimizationResult result;
  double grid_slack = 0.0;  // resolution-scale bound on the remaining gap
};

// Brute-force reference: discretized DP over bonds and cumulative length,
// then grid-free pairwise descent. Independent of the dual-solve path.
// Requires n <= 12.
OracleResult oracle_grid_dp(const ChainRealization& chain, double gamma_n, DpGrid grid = {});

struct JumpRule {
  double exponent = 7.0 / 8.0;  // flag |v^{i+1} - v^i| > lambda^exponent
};

struct JumpReport {
  std::vector<std::uint32_t> jump_locations;
  std::vector<double> jump_heights;
  std::size_t count = 0;
};

JumpReport detect_jumps(const MinimizationResult& result, JumpRule rule = {});

}  // namespace ljchain
