#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ljchain/energy.hpp"
#include "ljchain/ensemble.hpp"
#include "ljchain/minimize.hpp"

// The continuum side: the predicted limit min{alpha_bar gamma^2, beta}, the
// limit functional on SBV-type profiles, the recovery-sequence construction,
// and convergence studies tying discrete minima to the formula.
namespace ljchain {

enum class Regime { elastic, fractured, critical };
const char* to_string(Regime r);

struct LimitPrediction {
  double alpha_bar = 0.0;    // (E[alpha^-1])^-1
  double beta = 0.0;         // weakest-bond fracture constant
  double gamma = 0.0;
  double predicted_min = 0.0;  // min(alpha_bar gamma^2, beta)
  double gamma_star = 0.0;     // sqrt(beta / alpha_bar)
  Regime regime = Regime::elastic;

  std::string to_json() const;
};

LimitPrediction predict_limit(const Ensemble& ensemble, double gamma);

// v on [x0, x1) as sum_k poly[k] (x - x0)^k; segments tile [0, 1] in order.
// Jumps live at segment boundaries (and at 0/1 against the traces 0, gamma).
struct ProfileSegment {
  double x0 = 0.0;
  double x1 = 1.0;
  std::vector<double> poly;
};

struct LimitProfile {
  double gamma = 0.0;
  std::vector<ProfileSegment> segments;

  struct Jump {
    double x;
    double height;
  };
  std::vector<Jump> jumps() const;
  double value(double x) const;
  void check() const;  // segment tiling; throws std::invalid_argument
};

// alpha_bar * int |v'|^2 + beta * #jumps, exact for piecewise polynomials;
// +inf when the profile leaves the admissible class (a negative jump).
double limit_energy(const LimitProfile& profile, const LimitPrediction& prediction);

// The recovery target class: affine slope with a single jump at jump_x and a
// plateau of width rho after it; height fixed by the boundary trace.
struct StepTarget {
  double gamma = 0.0;
  double slope = 0.0;
  double rho = 0.1;
  double jump_x = 0.0;

  double height() const { return gamma - slope * (1.0 - rho); }
  double value(double x) const;
  LimitProfile profile() const;
};

struct BlockInfo {
  std::uint64_t i_min = 0;  // first node index of the block interval
  std::uint64_t i_max = 0;  // last node index; v_n there matches the target
  double harmonic = 0.0;    // harmonic mean of alpha over the block bonds
  bool right_of_jump = false;
};

struct RecoveryBuild {
  DisplacementField v;
  std::uint64_t h_n_eps = 0;  // step bond: weakest in the eps-window
  std::uint64_t t_n = 0;      // plateau end index
  double beta_n = 0.0;        // well depth at the step bond
  double mu_snapped = 0.0;    // block length actually used on the main ramp
  std::vector<BlockInfo> blocks;
};

// Step part plus stiffness-weighted block part; the built field satisfies
// v(0) = 0 and v(1) = gamma_n up to rounding of the telescoped identity.
RecoveryBuild build_recovery_sequence(const ChainRealization& chain, const StepTarget& target,
                                      double gamma_n, double mu, double eps);

enum class StudyMode { global_min, recovery };

struct StudyCell {
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double gamma_n = 0.0;
  double energy = 0.0;
  double predicted = 0.0;
  double gap = 0.0;  // |energy - predicted|
  std::string regime;
  double broken_depth = 0.0;  // NaN when nothing broke
  // recovery mode only (NaN otherwise)
  double l1_distance = 0.0;
  double boundary_residual = 0.0;
};

struct ConvergenceTable {
  StudyMode mode = StudyMode::global_min;
  std::vector<StudyCell> cells;  // ordered by (n, seed)
  std::string to_csv() const;
};

struct StudyOptions {
  StudyMode mode = StudyMode::global_min;
  int k_max = 2;
  CandidateRule rule;
  StepTarget target;            // recovery mode
  std::vector<double> mu_list;  // recovery mode: one mu (= eps) per n entry
  int workers = 1;
};

// Fans (n, seed) cells over a worker pool; output is ordered and identical
// for any worker count.
ConvergenceTable convergence_study(std::shared_ptr<const Ensemble> ensemble, double gamma,
                                   const std::vector<std::uint64_t>& n_list,
                                   const std::vector<std::uint64_t>& seeds, StudyOptions options);

}  // namespace ljchain
