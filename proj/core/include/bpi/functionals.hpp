#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpi/boundary.hpp"
#include "bpi/dataset.hpp"

namespace bpi {

class PluginEvaluator;

struct BiasFactors {
  double g1 = 1.0;
  double g2 = 0.0;
};

/// g(u, x) with derivatives in u and optional bias-correction factors.
struct Functional {
  using Map = std::function<double(double, std::span<const double>)>;
  std::string id;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  Map g;
  Map g_prime;
  Map g_double_prime;
  /// Empty when the functional has no known correction.
  std::function<BiasFactors(std::size_t k, std::size_t M)> bias_factors;
};

/// g(u) = -log u; g1 = 1, g2 = psi(k) - log(k - 1).
Functional shannon_functional();
/// g(u) = u^(alpha - 1); g1 = (k-1)^(alpha-1) Gamma(k+1-alpha) / Gamma(k), g2 = 0.
Functional renyi_functional(double alpha);
Functional custom_functional(std::string id, Functional::Map g, Functional::Map g_prime,
                             Functional::Map g_double_prime = {},
                             std::function<BiasFactors(std::size_t, std::size_t)> factors = {});

/// log(k - 1) - psi(k): the additive Shannon correction.
double shannon_correction(std::size_t k);
BiasFactors renyi_bias_factors(double alpha, std::size_t k);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;
};

struct BiasComponents {
  double c1_term = 0.0;
  double c2_term = 0.0;
  double c3_term = 0.0;
};

struct EstimateReport {
  std::string functional;
  double estimate = 0.0;
  double plain_estimate = 0.0;  // before bias correction
  std::size_t k = 0;
  std::size_t N = 0;
  std::size_t M = 0;
  std::string variant = "bpi";  // or "bpi_bias_corrected"
  bool boundary_corrected = false;
  std::size_t boundary_points = 0;
  double g1 = 1.0;
  double g2 = 0.0;
  double c4 = 0.0;  // sample variance of the plug-in summands
  double c5 = 0.0;  // sample variance of f g'(f)
  double variance_estimate = 0.0;
  std::optional<ConfidenceInterval> ci;
  std::optional<BiasComponents> bias_components;
  std::vector<std::string> warnings;
};

/// g(f(X_i), X_i) at every eval point. Throws DataQualityError naming the
/// first point where g is not finite.
std::vector<double> plugin_values(PluginEvaluator& ev, const Functional& f, std::size_t k,
                                  bool boundary_correct);

/// Mean of g over the eval points with the k-NN (optionally corrected) density.
EstimateReport bpi_estimate(PluginEvaluator& ev, const Functional& f, std::size_t k,
                            bool boundary_correct = true);
/// (bpi - g2) / g1.
EstimateReport bpi_estimate_bc(PluginEvaluator& ev, const Functional& f, std::size_t k,
                               bool boundary_correct = true);
/// (1 - alpha)^{-1} log of the Renyi integral estimate, delta-method variance.
EstimateReport renyi_entropy(PluginEvaluator& ev, double alpha, std::size_t k,
                             bool boundary_correct = true, bool bias_correct = true);

struct MutualInformationReport {
  EstimateReport mi;
  EstimateReport h_x;
  EstimateReport h_y;
  EstimateReport h_xy;
};

/// H(X) + H(Y) - H(X,Y), each Shannon BPI-BC on the same split and k.
MutualInformationReport mutual_information(const Dataset& data, const SampleSplit& split,
                                           std::span<const int> x_cols,
                                           std::span<const int> y_cols, std::size_t k,
                                           const BoundaryConfig& config = {},
                                           bool boundary_correct = true);

}  // namespace bpi
