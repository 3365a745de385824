#include "bpi/generators.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "bpi/error.hpp"
#include "bpi/functionals.hpp"
#include "bpi/parallel.hpp"
#include "bpi/special.hpp"

namespace bpi {

double beta_pdf(double x, double a, double b) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if ((x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0))
    return std::numeric_limits<double>::infinity();
  if ((x == 0.0 && a > 1.0) || (x == 1.0 && b > 1.0)) return 0.0;
  const double lb = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  const double la = (a == 1.0) ? 0.0 : (a - 1.0) * std::log(x);
  const double lbb = (b == 1.0) ? 0.0 : (b - 1.0) * std::log1p(-x);
  return std::exp(la + lbb - lb);
}

namespace {

bool in_cube(std::span<const double> x) {
  for (double v : x)
    if (v < 0.0 || v > 1.0) return false;
  return true;
}

void check_shapes(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidArgument("beta shapes must be positive and finite");
}

}  // namespace

AnalyticDensity beta_uniform_mixture(int d, double a, double b, double eps) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  check_shapes(a, b);
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidArgument("eps must lie in [0,1]");
  const double lnorm = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  AnalyticDensity den;
  den.name = "beta-uniform";
  den.dim = d;
  den.pdf = [a, b, eps, lnorm](std::span<const double> x) {
    if (!in_cube(x)) return 0.0;
    double prod = 1.0;
    for (double v : x) {
      if (v <= 0.0 || v >= 1.0) {
        prod *= beta_pdf(v, a, b);
      } else {
        prod *= std::exp((a - 1.0) * std::log(v) + (b - 1.0) * std::log1p(-v) - lnorm);
      }
    }
    return (1.0 - eps) * prod + eps;
  };
  den.sample = [a, b, eps](CounterRng& rng, std::span<double> out) {
    const bool uniform = eps >= 1.0 || (eps > 0.0 && rng.uniform() < eps);
    for (double& v : out) v = uniform ? rng.uniform() : rng.beta(a, b);
  };
  return den;
}

AnalyticDensity uniform_cube(int d) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  AnalyticDensity den;
  den.name = "uniform";
  den.dim = d;
  den.pdf = [](std::span<const double> x) { return in_cube(x) ? 1.0 : 0.0; };
  den.sample = [](CounterRng& rng, std::span<double> out) {
    for (double& v : out) v = rng.uniform();
  };
  return den;
}

AnalyticDensity beta_pair_mixture(int d) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  AnalyticDensity den;
  den.name = "beta-pair";
  den.dim = d;
  den.pdf = [](std::span<const double> x) {
    if (!in_cube(x)) return 0.0;
    double p1 = 1.0;
    double p2 = 1.0;
    for (double v : x) {
      // Beta(5,2) = 30 x^4 (1-x); Beta(2,5) = 30 x (1-x)^4.
      p1 *= 30.0 * v * v * v * v * (1.0 - v);
      const double w = 1.0 - v;
      p2 *= 30.0 * v * w * w * w * w;
    }
    return 0.5 * p1 + 0.5 * p2;
  };
  den.sample = [](CounterRng& rng, std::span<double> out) {
    const bool first = rng.uniform() < 0.5;
    for (double& v : out) v = first ? rng.beta(5.0, 2.0) : rng.beta(2.0, 5.0);
  };
  return den;
}

AnalyticDensity product_density(std::vector<AnalyticDensity> blocks) {
  if (blocks.empty()) throw InvalidArgument("product of zero densities");
  auto shared = std::make_shared<std::vector<AnalyticDensity>>(std::move(blocks));
  AnalyticDensity den;
  den.name = "product";
  den.dim = 0;
  for (const auto& b : *shared) {
    den.dim += b.dim;
    den.unit_cube = den.unit_cube && b.unit_cube;
  }
  den.pdf = [shared](std::span<const double> x) {
    double p = 1.0;
    std::size_t off = 0;
    for (const auto& b : *shared) {
      const auto n = static_cast<std::size_t>(b.dim);
      p *= b.pdf(x.subspan(off, n));
      off += n;
    }
    return p;
  };
  den.sample = [shared](CounterRng& rng, std::span<double> out) {
    std::size_t off = 0;
    for (const auto& b : *shared) {
      const auto n = static_cast<std::size_t>(b.dim);
      b.sample(rng, out.subspan(off, n));
      off += n;
    }
  };
  return den;
}

AnalyticDensity uniform_sum_pair() {
  AnalyticDensity den;
  den.name = "uniform-sum-pair";
  den.dim = 2;
  // Y | X = x is uniform on [x/2, (x+1)/2] with density 2.
  den.pdf = [](std::span<const double> p) {
    const double x = p[0];
    const double y = p[1];
    if (x < 0.0 || x > 1.0) return 0.0;
    if (y < 0.5 * x || y > 0.5 * (x + 1.0)) return 0.0;
    return 2.0;
  };
  den.sample = [](CounterRng& rng, std::span<double> out) {
    const double x = rng.uniform();
    const double u = rng.uniform();
    out[0] = x;
    out[1] = 0.5 * (x + u);
  };
  return den;
}

Dataset sample_density(const AnalyticDensity& density, std::size_t T,
                       std::uint64_t seed) {
  if (T < 1) throw InvalidArgument("T must be >= 1");
  const auto d = static_cast<std::size_t>(density.dim);
  std::vector<double> v(T * d);
  const std::uint64_t base = derive_seed(seed, "sample");
  parallel_for(T, [&](std::size_t i) {
    CounterRng rng(mix64(base + i * 0x9E3779B97F4A7C15ULL));
    density.sample(rng, std::span<double>(v.data() + i * d, d));
  });
  return Dataset(T, density.dim, std::move(v));
}

Dataset sample_beta_uniform_mixture(std::size_t T, int d, double a, double b,
                                    double eps, std::uint64_t seed) {
  return sample_density(beta_uniform_mixture(d, a, b, eps), T, seed);
}

std::vector<double> projection_matrix(int intrinsic_d, int ambient_D,
                                      std::uint64_t seed) {
  if (intrinsic_d < 1) throw InvalidArgument("intrinsic dimension must be >= 1");
  if (intrinsic_d >= ambient_D)
    throw InvalidArgument("intrinsic dimension must be below ambient dimension");
  CounterRng rng(derive_seed(seed, "projection"));
  Eigen::MatrixXd G(ambient_D, intrinsic_d);
  for (int i = 0; i < ambient_D; ++i)
    for (int j = 0; j < intrinsic_d; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(ambient_D, intrinsic_d);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(intrinsic_d).triangularView<Eigen::Upper>();
  for (int j = 0; j < intrinsic_d; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  std::vector<double> out(static_cast<std::size_t>(ambient_D * intrinsic_d));
  for (int i = 0; i < ambient_D; ++i)
    for (int j = 0; j < intrinsic_d; ++j)
      out[static_cast<std::size_t>(i * intrinsic_d + j)] = Q(i, j);
  return out;
}

Dataset sample_projected_manifold(std::size_t T, int intrinsic_d, int ambient_D,
                                  std::uint64_t seed) {
  const auto U = projection_matrix(intrinsic_d, ambient_D, seed);
  const Dataset latent =
      sample_density(beta_uniform_mixture(intrinsic_d, 2.0, 2.0, 0.2), T, seed);
  const auto D = static_cast<std::size_t>(ambient_D);
  const auto d = static_cast<std::size_t>(intrinsic_d);
  std::vector<double> v(T * D, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    auto x = latent.row(t);
    for (std::size_t i = 0; i < D; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += U[i * d + j] * x[j];
      v[t * D + i] = s;
    }
  }
  return Dataset(T, ambient_D, std::move(v));
}

MonteCarloValue true_functional(const AnalyticDensity& density,
                                const Functional& functional, std::size_t n_mc,
                                std::uint64_t seed) {
  if (n_mc < 10000) throw InvalidArgument("true_functional needs n_mc >= 10^4");
  const auto d = static_cast<std::size_t>(density.dim);
  std::vector<double> vals(n_mc);
  const std::uint64_t base = derive_seed(seed, "true_functional");
  parallel_for(n_mc, [&](std::size_t i) {
    CounterRng rng(mix64(base + i * 0x9E3779B97F4A7C15ULL));
    std::vector<double> x(d);
    density.sample(rng, x);
    vals[i] = functional.g(density.pdf(x), x);
  });
  MonteCarloValue out;
  out.value = tree_mean(vals);
  out.std_error = std::sqrt(sample_variance(vals) / static_cast<double>(n_mc));
  return out;
}

}  // namespace bpi
