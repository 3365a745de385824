#include "bpi/tuning.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "bpi/error.hpp"
#include "bpi/evaluator.hpp"
#include "bpi/parallel.hpp"
#include "bpi/special.hpp"

namespace bpi {

double hessian_trace(const AnalyticDensity& density, std::span<const double> x,
                     double step) {
  std::vector<double> y(x.begin(), x.end());
  const double f0 = density.pdf(y);
  double tr = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double xj = x[j];
    auto at = [&](double v) {
      y[j] = v;
      const double r = density.pdf(y);
      y[j] = xj;
      return r;
    };
    double second;
    if (density.unit_cube && xj - step < 0.0) {
      second = (f0 - 2.0 * at(xj + step) + at(xj + 2.0 * step)) / (step * step);
    } else if (density.unit_cube && xj + step > 1.0) {
      second = (f0 - 2.0 * at(xj - step) + at(xj - 2.0 * step)) / (step * step);
    } else {
      second = (at(xj + step) - 2.0 * f0 + at(xj - step)) / (step * step);
    }
    tr += second;
  }
  return tr;
}

TheoryConstants constants_oracle(const AnalyticDensity& density, const Functional& f,
                                 std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 2) throw InvalidArgument("constants_oracle needs n_mc >= 2");
  if (!f.g_prime || !f.g_double_prime)
    throw InvalidArgument("constants_oracle needs g' and g''");
  const int d = density.dim;
  const auto du = static_cast<std::size_t>(d);
  const double gam = std::exp((2.0 / d) * log_gamma((d + 2.0) / 2.0));
  std::vector<double> t1(n_mc), t2(n_mc), t4(n_mc), t5(n_mc);
  const std::uint64_t base = derive_seed(seed, "constants_oracle");
  parallel_for(n_mc, [&](std::size_t i) {
    CounterRng rng(mix64(base + i * 0x9E3779B97F4A7C15ULL));
    std::vector<double> x(du);
    density.sample(rng, x);
    const double fx = density.pdf(x);
    const double h = gam * std::pow(fx, -2.0 / d) * hessian_trace(density, x);
    const double gp = f.g_prime(fx, x);
    t1[i] = gp * h;
    t2[i] = fx * fx * f.g_double_prime(fx, x) / 2.0;
    t4[i] = f.g(fx, x);
    t5[i] = fx * gp;
  });
  TheoryConstants c;
  c.mode = "oracle";
  c.n_mc = n_mc;
  c.c1 = tree_mean(t1);
  c.c2 = tree_mean(t2);
  c.c3 = 0.0;
  c.c3_available = false;
  c.c4 = sample_variance(t4);
  c.c5 = sample_variance(t5);
  if (n_mc < 100000)
    c.warnings.push_back("n_mc below 10^5; oracle constants are noisy");
  c.warnings.push_back("c3 not estimated in oracle mode (reported as 0)");
  return c;
}

TheoryConstants constants_empirical(PluginEvaluator& ev, const Functional& f, std::size_t k,
                                    bool boundary_correct) {
  const auto& dens = ev.density(k, boundary_correct);
  const std::size_t N = dens.values.size();
  std::vector<double> t2(N), t4(N), t5(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double u = dens.values[i];
    const auto x = ev.eval().row(i);
    if (!(u > 0.0)) throw DataQualityError("nonpositive density estimate", i);
    t2[i] = f.g_double_prime ? u * u * f.g_double_prime(u, x) / 2.0 : 0.0;
    t4[i] = f.g(u, x);
    t5[i] = f.g_prime ? u * f.g_prime(u, x) : 0.0;
  }
  TheoryConstants c;
  c.mode = "empirical";
  c.c1_available = false;
  c.c3_available = false;
  c.c2 = tree_mean(t2);
  c.c4 = sample_variance(t4);
  c.c5 = sample_variance(t5);
  if (!f.g_double_prime) c.warnings.push_back("g'' missing; c2 reported as 0");
  return c;
}

double estimate_c3(PluginEvaluator& ev, const Functional& f, std::size_t k) {
  if (!f.g_prime) throw InvalidArgument("c3 estimation needs g'");
  const auto& lab = ev.labels(k);
  const auto& dens = ev.standard(k);
  const Dataset& ref = ev.ref();
  const int d = ev.dim();
  const std::size_t M = ref.count();
  if (k + 1 > M) throw InvalidArgument("c3 estimation needs k < M");
  // Leave-one-out reference densities, filled on demand.
  std::vector<double> ref_density(M, -1.0);
  std::vector<double> d2(k + 1);
  std::vector<std::size_t> idx(k + 1);
  auto ref_f = [&](std::size_t j) {
    if (ref_density[j] < 0.0) {
      ev.index().query_raw(ref.row(j), k, j, d2.data(), idx.data());
      const double r = std::sqrt(d2[k - 1]);
      if (!(r > 0.0)) throw DataQualityError("zero reference k-NN distance", j);
      ref_density[j] = static_cast<double>(k - 1) /
                       (static_cast<double>(M - 1) * ball_volume(r, d));
    }
    return ref_density[j];
  };
  std::vector<double> terms;
  terms.reserve(lab.boundary.size());
  std::vector<double> nd2(k);
  std::vector<std::size_t> nidx(k);
  for (std::size_t b : lab.boundary) {
    const std::size_t n = lab.nearest_interior[b];
    const auto xn = ev.eval().row(n);
    ev.index().query_raw(xn, k, kNoExclude, nd2.data(), nidx.data());
    Eigen::MatrixXd A(static_cast<Eigen::Index>(k), d + 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < k; ++r) {
      const auto yr = ref.row(nidx[r]);
      A(static_cast<Eigen::Index>(r), 0) = 1.0;
      for (int j = 0; j < d; ++j)
        A(static_cast<Eigen::Index>(r), j + 1) = yr[static_cast<std::size_t>(j)] - xn[static_cast<std::size_t>(j)];
      y(static_cast<Eigen::Index>(r)) = ref_f(nidx[r]);
    }
    const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(y);
    double inner = 0.0;
    const auto xb = ev.eval().row(b);
    for (int j = 0; j < d; ++j)
      inner += beta(j + 1) * (xb[static_cast<std::size_t>(j)] - xn[static_cast<std::size_t>(j)]);
    terms.push_back(f.g_prime(dens.values[n], xn) * inner);
  }
  return tree_sum(terms) / static_cast<double>(ev.N());
}

std::size_t rate_matched_k(std::size_t M, int d) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  const double k = std::round(std::pow(static_cast<double>(M), 2.0 / (2.0 + d)));
  return std::max<std::size_t>(3, static_cast<std::size_t>(k));
}

OptimalK optimal_k(double c0, double c2, int d, std::size_t M) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  if (M < 2) throw InvalidArgument("optimal_k needs M >= 2");
  OptimalK out;
  if (c0 == 0.0 || !std::isfinite(c0)) {
    out.fallback = true;
    out.k = rate_matched_k(M, d);
    out.continuous = static_cast<double>(out.k);
    out.note = "c0 = 0; rate-matched k used";
    return out;
  }
  const double e = static_cast<double>(d) / (d + 2.0);
  if (c0 * c2 > 0.0) {
    out.k0 = std::pow(std::fabs(c2) * d / (2.0 * std::fabs(c0)), e);
  } else {
    out.k0 = std::pow(std::fabs(c2) / std::fabs(c0), e);
  }
  out.continuous = out.k0 * std::pow(static_cast<double>(M), 2.0 / (2.0 + d));
  const double r = std::round(out.continuous);
  const double hi = static_cast<double>(M);
  double clamped = r;
  if (r < 3.0) clamped = 3.0;
  if (clamped > hi) clamped = hi;
  out.clamped = clamped != r;
  out.k = static_cast<std::size_t>(clamped);
  if (c2 == 0.0) out.note = "c2 = 0; k0 = 0 clamped to 3";
  else if (out.clamped) out.note = "clamped to [3, M]";
  return out;
}

BiasVariance predict_bias_variance(const TheoryConstants& c, std::size_t k, std::size_t N,
                                   std::size_t M, int d) {
  if (k < 1 || N < 1 || M < 1) throw InvalidArgument("k, N, M must be positive");
  BiasVariance out;
  const double kd = static_cast<double>(k);
  out.components.c1_term = c.c1 * std::pow(kd / static_cast<double>(M), 2.0 / d);
  out.components.c2_term = c.c2 / kd;
  out.components.c3_term = c.c3;
  out.bias = out.components.c1_term + out.components.c2_term + out.components.c3_term;
  out.variance = c.c4 / static_cast<double>(N) + c.c5 / static_cast<double>(M);
  return out;
}

}  // namespace bpi
