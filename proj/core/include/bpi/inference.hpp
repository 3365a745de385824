#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bpi/boundary.hpp"
#include "bpi/functionals.hpp"
#include "bpi/generators.hpp"
#include "bpi/tuning.hpp"

namespace bpi {

/// estimate -/+ z_{(1+level)/2} sqrt(c4/N + c5/M).
ConfidenceInterval confidence_interval(double estimate, double c4, double c5, std::size_t N,
                                       std::size_t M, double level);

enum class KRule { fixed, rate_matched, optimal_oracle };

const char* to_string(KRule rule);
KRule k_rule_from_string(const std::string& s);

/// One Monte Carlo experiment configuration.
struct TrialSpec {
  std::string generator = "beta-uniform";  // uniform | beta-uniform | beta-pair
  int d = 3;
  double a = 4.0;
  double b = 4.0;
  double eps = 0.2;
  std::size_t T = 10000;
  double alpha_frac = 0.7;
  KRule k_rule = KRule::rate_matched;
  std::size_t k = 0;                 // used by KRule::fixed
  std::string functional = "shannon";  // shannon | renyi | renyi_entropy
  double alpha = 0.5;
  bool boundary_correct = true;
  bool bias_correct = true;
  std::uint64_t seed = 1;
  BoundaryConfig boundary;
  double ci_level = 0.95;
  /// Known true value; resolved by true_functional when absent.
  std::optional<double> truth;
  std::size_t truth_n_mc = 1000000;
  /// When present, CIs and KRule::optimal_oracle use these constants;
  /// otherwise constants_oracle is run with `oracle_n_mc` draws.
  std::optional<TheoryConstants> oracle_constants;
  std::size_t oracle_n_mc = 1000000;
  /// Use oracle constants instead of per-trial empirical c4, c5 for CIs.
  bool ci_from_oracle = false;
};

AnalyticDensity make_density(const TrialSpec& spec);
Functional make_functional(const TrialSpec& spec);

struct TrialSummary {
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // unbiased sample variance of the estimates
  double mse = 0.0;       // mean squared error against truth
  double coverage = 0.0;  // fraction of trials whose CI covers truth
};

struct TrialResults {
  std::vector<double> estimates;
  std::vector<double> variance_estimates;
  std::vector<unsigned char> covered;
  std::vector<std::size_t> boundary_points;
  std::size_t k = 0;
  std::size_t N = 0;
  std::size_t M = 0;
  double truth = 0.0;
  TrialSummary summary;
  std::vector<std::string> warnings;
};

TrialSummary summarize(std::span<const double> estimates,
                       std::span<const unsigned char> covered, double truth);

/// Resolves spec.truth (MC oracle when absent).
double resolve_truth(const TrialSpec& spec);
/// Resolves the k used by every trial of the spec.
std::size_t resolve_k(const TrialSpec& spec);

/// n_trials independent end-to-end runs. Trial t draws data from
/// derive_seed(seed, "trial", t) and splits with derive_seed(seed, "split", t).
TrialResults monte_carlo(const TrialSpec& spec, std::size_t n_trials);
/// Same trials evaluated at every k in `ks`, sharing one neighbor search per trial.
std::vector<TrialResults> monte_carlo_sweep(const TrialSpec& spec,
                                            std::span<const std::size_t> ks,
                                            std::size_t n_trials);

struct NormalityDiagnostics {
  double ks_statistic = 0.0;
  double p_value = 0.0;
  std::vector<std::pair<double, double>> qq_pairs;  // (theoretical, empirical)
};

/// KS test of the standardized sample against N(0,1); the p-value uses the
/// asymptotic Kolmogorov law at (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
NormalityDiagnostics normality_diagnostics(std::span<const double> estimates);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// OLS of log(error) on log(size).
RateFit rate_fit(std::span<const double> sizes, std::span<const double> errors);

}  // namespace bpi
