#pragma once

#include <span>

namespace bpi {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;

/// log Gamma(x) for x > 0, absolute accuracy better than 1e-13.
double log_gamma(double x);
/// Digamma psi(x) for x > 0, absolute accuracy better than 1e-13.
double digamma(double x);
/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

/// Standard normal CDF.
double normal_cdf(double x);
/// Standard normal quantile (Wichura AS241, relative accuracy about 1e-16).
double normal_quantile(double p);

/// Asymptotic Kolmogorov distribution tail P(K > x).
double kolmogorov_sf(double x);

/// Order-independent sum: fixed binary tree over contiguous halves.
double tree_sum(std::span<const double> v);
/// Arithmetic mean by tree_sum.
double tree_mean(std::span<const double> v);
/// Unbiased (n-1) sample variance by two-pass tree sums; 0 when n < 2.
double sample_variance(std::span<const double> v);
/// Population (n) variance by two-pass tree sums; 0 when n == 0.
double population_variance(std::span<const double> v);
/// Linear-interpolated quantile (type 7), q in [0,1]. v need not be sorted.
double quantile(std::span<const double> v, double q);

}  // namespace bpi
