#include "bpi/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bpi/density.hpp"
#include "bpi/error.hpp"
#include "bpi/parallel.hpp"
#include "bpi/rng.hpp"
#include "bpi/special.hpp"
#include "bpi/tuning.hpp"

namespace bpi {

const char* to_string(DimensionVariant v) {
  return v == DimensionVariant::independent ? "independent" : "correlated";
}

DimensionVariant dimension_variant_from_string(const std::string& s) {
  if (s == "independent") return DimensionVariant::independent;
  if (s == "correlated") return DimensionVariant::correlated;
  throw InvalidArgument("unknown dimension variant '" + s + "'");
}

namespace {

std::vector<double> kth_radii(const Dataset& eval, const NeighborIndex& ref, std::size_t k) {
  if (k < 1 || k > ref.size())
    throw InvalidArgument("k must lie in [1, M = " + std::to_string(ref.size()) + "]");
  if (eval.dim() != ref.dim()) throw InvalidArgument("dimension mismatch");
  std::vector<double> r(eval.count());
  parallel_for(eval.count(), [&](std::size_t i) {
    std::vector<double> d2(k);
    std::vector<std::size_t> idx(k);
    ref.query_raw(eval.row(i), k, kNoExclude, d2.data(), idx.data());
    r[i] = std::sqrt(d2[k - 1]);
  });
  return r;
}

double log_length_from_radii(const std::vector<double>& radii, double gamma) {
  std::vector<double> logs(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0))
      throw DataQualityError("zero k-NN radius at eval point " + std::to_string(i), i);
    logs[i] = std::log(radii[i]);
  }
  return gamma * tree_mean(logs);
}

}  // namespace

double log_length(const Dataset& eval, const NeighborIndex& ref, std::size_t k,
                  double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  return log_length_from_radii(kth_radii(eval, ref, k), gamma);
}

DimensionEstimate estimate_dimension(const Dataset& data, const DimensionOptions& opts) {
  const std::size_t k1 = opts.k1;
  const std::size_t k2 = opts.k2 == 0 ? 2 * k1 : opts.k2;
  if (k1 < 3) throw InvalidArgument("k1 must be >= 3");
  if (k2 <= k1) throw InvalidArgument("k2 must exceed k1");
  if (!(opts.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  const std::size_t T = data.count();
  const std::size_t half = T / 2;
  std::size_t M;
  if (opts.M_per_half) {
    M = *opts.M_per_half;
  } else {
    if (!(opts.alpha_frac > 0.0 && opts.alpha_frac < 1.0))
      throw InvalidArgument("alpha_frac must lie in (0,1)");
    M = static_cast<std::size_t>(std::llround(opts.alpha_frac * static_cast<double>(half)));
  }
  if (M < k2 || M >= half)
    throw InvalidArgument("each half of " + std::to_string(half) +
                          " rows needs M >= k2 reference rows and N >= 1 eval rows");
  const std::size_t N = half - M;

  std::vector<std::size_t> perm(T);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(derive_seed(opts.seed, "dimension"));
  for (std::size_t i = T - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<std::size_t>(rng.below(i + 1))]);
  auto block = [&](std::size_t begin, std::size_t len) {
    return data.select_rows(std::span<const std::size_t>(perm.data() + begin, len));
  };
  const Dataset x_eval = block(0, N);
  const Dataset x_ref = block(N, M);
  const NeighborIndex x_index(x_ref);

  DimensionEstimate out;
  out.k1 = k1;
  out.k2 = k2;
  out.gamma = opts.gamma;
  out.variant = opts.variant;
  out.N = N;
  out.M = M;
  const std::vector<double> r1 = kth_radii(x_eval, x_index, k1);
  out.L_k1 = log_length_from_radii(r1, opts.gamma);
  if (opts.variant == DimensionVariant::independent) {
    const Dataset z_eval = block(half, N);
    const Dataset z_ref = block(half + N, M);
    const NeighborIndex z_index(z_ref);
    out.L_k2 = log_length(z_eval, z_index, k2, opts.gamma);
  } else {
    out.L_k2 = log_length(x_eval, x_index, k2, opts.gamma);
  }
  const double lr = std::log(static_cast<double>(k2 - 1)) - std::log(static_cast<double>(k1 - 1));
  out.alpha_hat = (out.L_k2 - out.L_k1) / lr;
  if (!(out.alpha_hat > 0.0))
    throw DataQualityError("nonpositive slope; data may be degenerate", 0);
  out.d_hat = opts.gamma / out.alpha_hat;
  out.d_rounded = static_cast<std::size_t>(std::max(1.0, std::round(out.d_hat)));

  // Variance from the plug-in form of L_k1.
  const double kappa = opts.gamma / (out.alpha_hat * lr);
  std::vector<double> logf(r1.size());
  for (std::size_t i = 0; i < r1.size(); ++i) logf[i] = -out.d_hat * std::log(r1[i]);
  const double c_v = sample_variance(logf);
  out.variance_estimate = 2.0 * kappa * kappa * c_v / static_cast<double>(N);
  out.variance_note = opts.variant == DimensionVariant::independent
                          ? "2 kappa^2 c_v / N"
                          : "upper bound: independent-variant prediction";
  return out;
}

DimensionMseConstants dimension_mse_constants(int d, double c_v, std::size_t k1,
                                              double gamma) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  if (k1 < 2) throw InvalidArgument("k1 must be >= 2");
  const double alpha = gamma / d;
  const double lr = std::log(static_cast<double>(2 * k1 - 1) / static_cast<double>(k1 - 1));
  const double kappa = gamma / (alpha * lr);
  DimensionMseConstants c;
  c.C_b1 = kappa * std::pow(2.0, 2.0 / d - 1.0);
  c.C_b2 = kappa / 4.0;
  c.C_v = 2.0 * kappa * kappa * c_v;
  return c;
}

std::size_t optimal_dim_k(const DimensionMseConstants& c, int d, std::size_t M) {
  if (c.C_b1 == 0.0) throw InvalidArgument("C_b1 must be nonzero");
  const double k0 = std::pow(std::fabs(c.C_b2) * d / (2.0 * std::fabs(c.C_b1)),
                             static_cast<double>(d) / (d + 2.0));
  return static_cast<std::size_t>(
      std::floor(k0 * std::pow(static_cast<double>(M), 2.0 / (2.0 + d))));
}

DimensionParams optimal_dim_params(const DimensionMseConstants& c, int d, std::size_t total) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  if (total < 8) throw InvalidArgument("total must be >= 8");
  DimensionParams p;
  if (c.C_b1 == 0.0 || c.C_b2 == 0.0 || c.C_v == 0.0 || !std::isfinite(c.C_b1) ||
      !std::isfinite(c.C_b2) || !std::isfinite(c.C_v)) {
    p.fallback = true;
    p.M = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(total)));
    p.N_opt = total - p.M;
    p.k_opt = std::min(rate_matched_k(p.M, d), p.M - 1);
    p.note = "zero constants; rate-matched fallback";
    return p;
  }
  const double dd = d;
  p.k0 = std::pow(std::fabs(c.C_b2) * dd / (2.0 * std::fabs(c.C_b1)), dd / (dd + 2.0));
  p.b0 = std::fabs(c.C_b1) * std::pow(p.k0, 2.0 / dd) + std::fabs(c.C_b2) / p.k0;
  p.N0 = std::sqrt(c.C_v * (2.0 + dd)) / (2.0 * p.b0);
  const double e = (6.0 + dd) / (2.0 * (2.0 + dd));
  const double t = static_cast<double>(total);
  // M + N0 M^e is increasing in M; bisect on [1, total].
  double lo = 1.0, hi = t;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid + p.N0 * std::pow(mid, e) > t) hi = mid;
    else lo = mid;
  }
  const double n_cont = p.N0 * std::pow(lo, e);
  std::size_t N = static_cast<std::size_t>(std::floor(n_cont));
  N = std::clamp<std::size_t>(N, 1, total - 4);
  p.N_opt = N;
  p.M = total - N;
  const double kc = std::floor(p.k0 * std::pow(static_cast<double>(p.M), 2.0 / (2.0 + dd)));
  std::size_t k = kc < 3.0 ? 3 : static_cast<std::size_t>(kc);
  if (k > p.M - 1) k = p.M - 1;
  if (static_cast<double>(k) != kc) p.note = "k clamped to [3, M - 1]";
  p.k_opt = k;
  return p;
}

std::vector<WindowEstimate> anomaly_scan(const Dataset& series, std::size_t window,
                                         std::size_t stride, std::size_t k1, std::size_t k2,
                                         double gamma, std::uint64_t seed, double alpha_frac) {
  if (k2 == 0) k2 = 2 * k1;
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
  if (window < 8 * k2) throw InvalidArgument("window must be >= 8 * k2");
  if (window > series.count()) throw InvalidArgument("window exceeds series length");
  const std::size_t n_windows = (series.count() - window) / stride + 1;
  std::vector<WindowEstimate> out(n_windows);
  parallel_for(n_windows, [&](std::size_t w) {
    WindowEstimate& we = out[w];
    we.start = w * stride;
    try {
      const Dataset slice = series.slice_rows(we.start, we.start + window);
      DimensionOptions o;
      o.k1 = k1;
      o.k2 = k2;
      o.gamma = gamma;
      o.variant = DimensionVariant::correlated;
      o.alpha_frac = alpha_frac;
      o.seed = derive_seed(seed, "window", we.start);
      const DimensionEstimate e = estimate_dimension(slice, o);
      we.d_hat = e.d_hat;
      we.d_rounded = e.d_rounded;
    } catch (const std::exception& ex) {
      we.error = ex.what();
    }
  });
  return out;
}

}  // namespace bpi
