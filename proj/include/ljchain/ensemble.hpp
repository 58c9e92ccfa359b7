#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ljchain/potentials.hpp"

// The stationary ergodic law of the chain: a finite support of certified
// potentials with an iid / Markov / periodic assignment to bonds, plus the
// exact and empirical averages the continuum limit is built from.
namespace ljchain {

enum class LawKind { iid, markov, periodic };

struct SupportEntry {
  PotentialSpec spec;
  PotentialDescriptor desc;
};

// Immutable after construction; share freely across threads.
class Ensemble {
 public:
  static std::shared_ptr<const Ensemble> make_iid(std::vector<PotentialSpec> support,
                                                  std::vector<double> probabilities,
                                                  std::string label = "iid");
  // `initial` must already be stationary for `transition`; the constructor
  // verifies rather than solves, keeping stationarity an explicit input.
  static std::shared_ptr<const Ensemble> make_markov(
      std::vector<PotentialSpec> support, std::vector<std::vector<double>> transition,
      std::vector<double> initial, std::string label = "markov");
  static std::shared_ptr<const Ensemble> make_periodic(std::vector<PotentialSpec> support,
                                                       std::vector<std::uint32_t> pattern,
                                                       std::string label = "periodic");

  LawKind law() const { return law_; }
  const std::vector<SupportEntry>& support() const { return support_; }
  const std::vector<double>& probabilities() const { return probabilities_; }
  const std::vector<std::vector<double>>& transition() const { return transition_; }
  const std::vector<double>& initial() const { return initial_; }
  const std::vector<std::uint32_t>& pattern() const { return pattern_; }
  const std::string& label() const { return label_; }

  // One-site marginal of the law (pattern frequencies for periodic).
  const std::vector<double>& marginal() const { return marginal_; }
  bool all_twelve_six() const { return all_twelve_six_; }

 private:
  Ensemble() = default;
  LawKind law_ = LawKind::iid;
  std::vector<SupportEntry> support_;
  std::vector<double> probabilities_;
  std::vector<std::vector<double>> transition_;
  std::vector<double> initial_;
  std::vector<std::uint32_t> pattern_;
  std::vector<double> marginal_;
  std::string label_;
  bool all_twelve_six_ = false;
};

struct ChainRealization {
  std::shared_ptr<const Ensemble> ensemble;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> bond_index;
  // Per-bond caches of the support descriptors.
  std::vector<double> delta;
  std::vector<double> alpha;
  std::vector<double> well_depth;
  // Filled when every support potential is 12-6 (enables the batch kernel).
  std::vector<double> lj_eps;
  std::vector<double> lj_sigma;

  double lambda() const { return 1.0 / static_cast<double>(n); }
  double sqrt_lambda() const;
  double rest_length() const;  // lambda * sum of delta_i
  const PotentialSpec& bond_spec(std::uint64_t i) const {
    return ensemble->support()[bond_index[i]].spec;
  }
};

// Deterministic in (ensemble, n, seed) regardless of threading.
ChainRealization sample_realization(std::shared_ptr<const Ensemble> ensemble, std::uint64_t n,
                                    std::uint64_t seed);

struct Quantity {
  enum class Kind { inverse_alpha, ckappa } kind = Kind::inverse_alpha;
  double kappa = 0.0;
  static Quantity inverse_alpha() { return {Kind::inverse_alpha, 0.0}; }
  static Quantity ckappa(double kappa) { return {Kind::ckappa, kappa}; }
};

// Exact marginal-weighted expectation of the per-bond quantity.
double expectation(const Ensemble& ensemble, Quantity q);
double expectation_inverse_stiffness(const Ensemble& ensemble);

// Fracture constant: min over support states with positive marginal
// probability of -J(delta).
double beta_infimum(const Ensemble& ensemble);

// Lattice average of q over window [a, b] in [0, 1]; throws when the window
// holds no lattice point.
double empirical_average(const ChainRealization& chain, Quantity q, double a, double b);

// Empirical average of 1[-J_i(delta_i) <= k] over the open window
// (x-eps, x+eps), normalized by n * |window intersect [0,1]| so boundary
// windows remain comparable to interior ones.
double empirical_indicator_cdf(const ChainRealization& chain, double x, double eps, double k);

struct WindowInfimum {
  double beta_n = 0.0;       // smallest -J_i(delta_i) over the window
  std::uint64_t index = 0;   // attaining bond, smallest on ties
};
WindowInfimum window_infimum_beta_n(const ChainRealization& chain, double x, double eps);

}  // namespace ljchain
