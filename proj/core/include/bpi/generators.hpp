#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "bpi/dataset.hpp"
#include "bpi/rng.hpp"

namespace bpi {

struct Functional;

/// Density with a closed-form pdf and an exact sampler. Supports in the cube
/// family carry `unit_cube = true`.
struct AnalyticDensity {
  std::string name;
  int dim = 0;
  bool unit_cube = true;
  std::function<double(std::span<const double>)> pdf;
  std::function<void(CounterRng&, std::span<double>)> sample;
};

/// Beta(a, b) density at x in [0,1].
double beta_pdf(double x, double a, double b);

/// (1 - eps) * prod Beta(a,b)(x_i) + eps on [0,1]^d.
AnalyticDensity beta_uniform_mixture(int d, double a, double b, double eps);
AnalyticDensity uniform_cube(int d);
/// 0.5 Beta(5,2)^d + 0.5 Beta(2,5)^d on [0,1]^d.
AnalyticDensity beta_pair_mixture(int d);
/// Product of independent blocks; block densities are concatenated in order.
AnalyticDensity product_density(std::vector<AnalyticDensity> blocks);
/// (X, Y) with X ~ U(0,1), Y = (X + U)/2, U ~ U(0,1) independent.
AnalyticDensity uniform_sum_pair();

/// T i.i.d. draws. Draw i uses its own stream derived from (seed, tag, i).
Dataset sample_density(const AnalyticDensity& density, std::size_t T,
                       std::uint64_t seed);

Dataset sample_beta_uniform_mixture(std::size_t T, int d, double a, double b,
                                    double eps, std::uint64_t seed);

/// 0.8 Beta(2,2)^d + 0.2 U[0,1]^d pushed through a D x d matrix with
/// orthonormal columns. The matrix is drawn from the seed.
Dataset sample_projected_manifold(std::size_t T, int intrinsic_d, int ambient_D,
                                  std::uint64_t seed);
/// The D x d orthonormal matrix used by sample_projected_manifold (row-major).
std::vector<double> projection_matrix(int intrinsic_d, int ambient_D,
                                      std::uint64_t seed);

struct MonteCarloValue {
  double value = 0.0;
  double std_error = 0.0;
};

/// MC estimate of E[g(f(X))] for X drawn from `density`.
MonteCarloValue true_functional(const AnalyticDensity& density,
                                const Functional& functional, std::size_t n_mc,
                                std::uint64_t seed);

}  // namespace bpi
