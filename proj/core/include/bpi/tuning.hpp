#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bpi/functionals.hpp"
#include "bpi/generators.hpp"

namespace bpi {

class PluginEvaluator;

/// Leading bias and variance constants. c1 uses
/// h(X) = Gamma^{2/d}((d+2)/2) f^{-2/d}(X) tr[Hessian f(X)].
struct TheoryConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  std::string mode;  // "oracle" or "empirical"
  bool c1_available = true;
  bool c3_available = false;
  std::size_t n_mc = 0;
  std::vector<std::string> warnings;
};

/// Second-derivative trace by central differences, one-sided within `step`
/// of a unit-cube face.
double hessian_trace(const AnalyticDensity& density, std::span<const double> x,
                     double step = 1e-4);

/// Monte Carlo over the analytic density. c3 is reported as 0.
TheoryConstants constants_oracle(const AnalyticDensity& density, const Functional& f,
                                 std::size_t n_mc, std::uint64_t seed);

/// c2 as the BPI mean of u^2 g''(u)/2, c4 and c5 as sample variances of
/// g(f) and f g'(f) at the corrected density. c1 and c3 unavailable.
TheoryConstants constants_empirical(PluginEvaluator& ev, const Functional& f,
                                    std::size_t k, bool boundary_correct = true);

/// Boundary term (1/N) sum over boundary points of
/// g'(f(X_n(i))) <grad f(X_n(i)), X_i - X_n(i)>, with the gradient from a
/// least-squares plane through leave-one-out densities of the k nearest references.
double estimate_c3(PluginEvaluator& ev, const Functional& f, std::size_t k);

struct OptimalK {
  std::size_t k = 0;
  double k0 = 0.0;
  double continuous = 0.0;  // k0 M^{2/(2+d)} before rounding and clamping
  bool clamped = false;
  bool fallback = false;  // c0 == 0: rate-matched k returned
  std::string note;
};

/// round(k0 M^{2/(2+d)}) clamped to [3, M].
OptimalK optimal_k(double c0, double c2, int d, std::size_t M);
/// max(3, round(M^{2/(2+d)})), never above M when M >= 3.
std::size_t rate_matched_k(std::size_t M, int d);

struct BiasVariance {
  double bias = 0.0;
  double variance = 0.0;
  BiasComponents components;
};

BiasVariance predict_bias_variance(const TheoryConstants& c, std::size_t k, std::size_t N,
                                   std::size_t M, int d);

}  // namespace bpi
