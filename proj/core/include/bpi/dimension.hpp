#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpi/dataset.hpp"
#include "bpi/knn.hpp"

namespace bpi {

enum class DimensionVariant { independent, correlated };

const char* to_string(DimensionVariant v);
DimensionVariant dimension_variant_from_string(const std::string& s);

/// gamma/N * sum of log k-th neighbor radii from eval rows into the index.
/// Throws DataQualityError on a zero radius.
double log_length(const Dataset& eval, const NeighborIndex& ref, std::size_t k,
                  double gamma = 1.0);

struct DimensionOptions {
  std::size_t k1 = 10;
  std::size_t k2 = 0;  // 0 means 2 * k1
  double gamma = 1.0;
  DimensionVariant variant = DimensionVariant::independent;
  /// Reference fraction within each half; ignored when M_per_half is set.
  double alpha_frac = 0.7;
  std::optional<std::size_t> M_per_half;
  std::uint64_t seed = 1;
};

struct DimensionEstimate {
  double d_hat = 0.0;
  std::size_t d_rounded = 1;
  double alpha_hat = 0.0;
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  double gamma = 1.0;
  DimensionVariant variant = DimensionVariant::independent;
  double L_k1 = 0.0;
  double L_k2 = 0.0;
  std::size_t N = 0;
  std::size_t M = 0;
  /// 2 kappa^2 c_v / N, kappa = gamma / (alpha_hat log((k2-1)/(k1-1))) and
  /// c_v the sample variance of log f_k1. For the correlated variant this
  /// is an upper bound.
  std::optional<double> variance_estimate;
  std::string variance_note;
};

/// The rows are shuffled by the seed and cut into halves X and Z of
/// floor(T/2) rows; each half is split into N evaluation and M reference
/// rows. Independent: L_k2 on Z, L_k1 on X. Correlated: both on X.
DimensionEstimate estimate_dimension(const Dataset& data, const DimensionOptions& opts);

struct DimensionMseConstants {
  double C_b1 = 0.0;
  double C_b2 = 0.0;
  double C_v = 0.0;
};

/// C_b1 = kappa 2^{2/d - 1}, C_b2 = kappa / 4, C_v = 2 kappa^2 c_v with
/// kappa = gamma / (alpha log((k2-1)/(k1-1))) at k2 = 2 k1, alpha = gamma/d.
DimensionMseConstants dimension_mse_constants(int d, double c_v, std::size_t k1 = 10,
                                              double gamma = 1.0);

struct DimensionParams {
  std::size_t k_opt = 0;
  std::size_t N_opt = 0;
  std::size_t M = 0;
  double k0 = 0.0;
  double N0 = 0.0;
  double b0 = 0.0;
  bool fallback = false;
  std::string note;
};

/// floor(k0 M^{2/(2+d)}) with k0 = (|C_b2| d / (2 |C_b1|))^{d/(d+2)}; no clamping.
std::size_t optimal_dim_k(const DimensionMseConstants& c, int d, std::size_t M);

/// k0 = (|C_b2| d / (2 |C_b1|))^{d/(d+2)}, b0 = |C_b1| k0^{2/d} + |C_b2| / k0,
/// N0 = sqrt(C_v (2+d)) / (2 b0). M solves M + N0 M^{(6+d)/(2(2+d))} = total,
/// N_opt = total - M, k_opt = floor(k0 M^{2/(2+d)}) clamped to [3, M - 1].
DimensionParams optimal_dim_params(const DimensionMseConstants& c, int d_guess,
                                   std::size_t total);

struct WindowEstimate {
  std::size_t start = 0;
  std::optional<double> d_hat;
  std::size_t d_rounded = 0;  // 0 when missing
  std::string error;
};

/// Correlated-variant estimate on each window [start, start + window).
/// Failed windows are reported with an error message and no value.
std::vector<WindowEstimate> anomaly_scan(const Dataset& series, std::size_t window,
                                         std::size_t stride, std::size_t k1, std::size_t k2,
                                         double gamma = 1.0, std::uint64_t seed = 1,
                                         double alpha_frac = 0.7);

}  // namespace bpi
