#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "bpi/error.hpp"
#include "bpi/evaluator.hpp"
#include "bpi/functionals.hpp"
#include "bpi/generators.hpp"
#include "bpi/special.hpp"
#include "bpi/tuning.hpp"

using namespace bpi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// E[((k-1)/(M P))^{alpha-1}] for P ~ Beta(k, M-k+1), by Simpson's rule in log p.
double beta_moment(double alpha, int k, double M) {
  const double a = k, b = M - k + 1;
  const double lb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double mode = (a - 1) / (a + b - 2);
  const double lo = std::log(mode) - 12.0 / std::sqrt(a), hi = std::log(mode) + 12.0 / std::sqrt(a);
  const int n = 20000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = lo + i * h, p = std::exp(t);
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    const double dens = std::exp((a - 1) * t + (b - 1) * std::log1p(-p) - lb) * p;
    s += w * dens * std::pow((k - 1) / (M * p), alpha - 1);
  }
  return s * h / 3.0;
}

// Mutual information of the uniform-sum pair by midpoint quadrature of
// p log(p / (p_x p_y)) over the unit square.
double uniform_sum_mi() {
  const int n = 4000;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = (i + 0.5) / n, y = (j + 0.5) / n;
      if (y < x / 2 || y > (x + 1) / 2) continue;
      const double py = y < 0.5 ? 4 * y : 4 * (1 - y);
      s += 2.0 * std::log(2.0 / py);
    }
  return s / (static_cast<double>(n) * n);
}

PluginEvaluator evaluator(const Dataset& data, double alpha_frac, std::uint64_t seed,
                          std::size_t k) {
  return PluginEvaluator::from_split(data, split(data, alpha_frac, seed), k);
}

}  // namespace

TEST_CASE("special functions at known points", "[functionals]") {
  CHECK_THAT(digamma(1.0), WithinAbs(-kEulerGamma, 1e-13));
  CHECK_THAT(digamma(1.0), WithinAbs(-0.5772156649, 1e-10));
  CHECK(std::fabs(log_gamma(1.0)) < 1e-14);
  CHECK(std::fabs(log_gamma(2.0)) < 1e-14);
  double h = 0.0;
  for (int j = 1; j <= 9; ++j) h += 1.0 / j;
  CHECK_THAT(digamma(10.0), WithinAbs(-kEulerGamma + h, 1e-12));
  CHECK_THAT(digamma(0.5), WithinAbs(-kEulerGamma - 2 * std::log(2.0), 1e-12));
  CHECK_THROWS_AS(digamma(0.0), InvalidArgument);
  CHECK_THROWS_AS(log_gamma(-1.0), InvalidArgument);
}

TEST_CASE("special functions across the range", "[functionals]") {
  for (double x = 0.01; x < 300.0; x *= 1.37) {
    CHECK_THAT(log_gamma(x), WithinAbs(std::lgamma(x), 1e-10 * std::max(1.0, std::fabs(std::lgamma(x)))));
    // Recurrence psi(x+1) = psi(x) + 1/x and a central difference of lgamma.
    CHECK_THAT(digamma(x + 1.0), WithinAbs(digamma(x) + 1.0 / x, 1e-10));
    const double e = 1e-5 * std::max(1.0, x);
    const double fd = (std::lgamma(x + e) - std::lgamma(x - std::min(e, x / 2))) /
                      (e + std::min(e, x / 2));
    CHECK_THAT(digamma(x), WithinAbs(fd, 1e-4 * std::max(1.0, std::fabs(fd))));
  }
}

TEST_CASE("Shannon functional", "[functionals]") {
  const Functional f = shannon_functional();
  const std::vector<double> x = {0.1};
  CHECK(f.g(1.0, x) == 0.0);
  CHECK_THAT(f.g(std::exp(1.0), x), WithinAbs(-1.0, 1e-15));
  CHECK_THAT(shannon_correction(2), WithinAbs(-(1.0 - kEulerGamma), 1e-13));
  CHECK_THAT(shannon_correction(2), WithinAbs(-0.42278, 1e-5));
  CHECK(std::fabs(shannon_correction(100000)) < 1e-5);
  const BiasFactors b = f.bias_factors(10, 100);
  CHECK(b.g1 == 1.0);
  CHECK_THAT(b.g2, WithinAbs(digamma(10.0) - std::log(9.0), 1e-15));
}

TEST_CASE("Shannon g2 is the limiting log-coverage moment", "[functionals]") {
  // E[-log((k-1)/(M P))] -> psi(k) - log(k-1) as M grows.
  for (int k : {3, 10, 52}) {
    const double M = 1e7;
    const double want = -std::log(k - 1.0) + (digamma(k) - digamma(M + 1)) + std::log(M);
    CHECK_THAT(shannon_functional().bias_factors(k, 7000).g2, WithinAbs(want, 1e-6));
  }
}

TEST_CASE("Renyi factors satisfy the coverage-moment condition", "[functionals]") {
  for (double alpha : {0.5, 1.5}) {
    for (int k : {5, 10, 40}) {
      const BiasFactors b = renyi_bias_factors(alpha, k);
      CHECK(b.g2 == 0.0);
      CHECK_THAT(b.g1, WithinRel(beta_moment(alpha, k, 1e7), 1e-5));
    }
  }
  // alpha = 0.5, k = 10 against the Gamma recurrence.
  double g10 = 1.0, g105 = std::sqrt(std::acos(-1.0));
  for (int j = 1; j < 10; ++j) g10 *= j;
  for (double j = 0.5; j < 10.0; j += 1.0) g105 *= j;
  const double printed = g10 / g105 * 3.0;
  CHECK_THAT(renyi_bias_factors(0.5, 10).g1, WithinRel(1.0 / printed, 1e-13));
  CHECK_THAT(renyi_bias_factors(0.5, 100000).g1, WithinAbs(1.0, 1e-5));
}

TEST_CASE("Renyi functional", "[functionals]") {
  const std::vector<double> x = {0.3};
  for (double alpha : {0.3, 0.5, 1.7}) CHECK(renyi_functional(alpha).g(1.0, x) == 1.0);
  CHECK_THROWS_AS(renyi_functional(1.0), InvalidArgument);
  CHECK_THROWS_AS(renyi_functional(2.0), InvalidArgument);
  CHECK_THROWS_AS(renyi_functional(0.0), InvalidArgument);
}

TEST_CASE("BC minus plain Shannon is exactly the correction", "[functionals]") {
  const Dataset data = sample_beta_uniform_mixture(3000, 3, 4.0, 4.0, 0.2, 1);
  PluginEvaluator ev = evaluator(data, 0.7, 2, 60);
  const Functional f = shannon_functional();
  for (std::size_t k : {3, 7, 20, 60}) {
    const double plain = bpi_estimate(ev, f, k).estimate;
    const EstimateReport bc = bpi_estimate_bc(ev, f, k);
    CHECK_THAT(bc.estimate - plain, WithinAbs(std::log(k - 1.0) - digamma(k), 1e-12));
    CHECK(bc.plain_estimate == plain);
    CHECK(bc.variant == "bpi_bias_corrected");
  }
}

TEST_CASE("BC and plain converge as k grows", "[functionals]") {
  const Dataset data = sample_density(uniform_cube(2), 6000, 3);
  PluginEvaluator ev = evaluator(data, 0.8, 4, 1600);
  const Functional f = renyi_functional(0.5);
  double prev = 1e9;
  for (std::size_t k : {25, 100, 400, 1600}) {
    const double diff = std::fabs(bpi_estimate_bc(ev, f, k).estimate - bpi_estimate(ev, f, k).estimate);
    CHECK(diff < prev);
    // g1 - 1 ~ 3 / (8k) at alpha = 1/2.
    CHECK(diff * k < 0.5);
    prev = diff;
  }
}

TEST_CASE("single evaluation point", "[functionals]") {
  const Dataset ref = sample_density(uniform_cube(2), 500, 5);
  const Dataset one(1, 2, {0.4, 0.6});
  PluginEvaluator ev(one, ref, 10);
  const double f_hat = ev.standard(10).values[0];
  const EstimateReport r = bpi_estimate(ev, shannon_functional(), 10, false);
  CHECK(r.estimate == -std::log(f_hat));
  CHECK(r.N == 1);
}

TEST_CASE("translation and scale laws are exact", "[functionals]") {
  const Dataset data = sample_beta_uniform_mixture(3000, 3, 4.0, 4.0, 0.2, 6);
  const SampleSplit sp = split(data, 0.7, 7);
  const Functional f = shannon_functional();
  auto estimate = [&](double s, double c) {
    std::vector<double> v = data.values();
    for (double& x : v) x = x * s + c;
    PluginEvaluator ev = PluginEvaluator::from_split(Dataset(3000, 3, v), sp, 20);
    return bpi_estimate(ev, f, 20).estimate;
  };
  const double base = estimate(1.0, 0.0);
  CHECK_THAT(estimate(1.0, 0.25), WithinAbs(base, 1e-10));
  CHECK_THAT(estimate(2.0, 0.0), WithinAbs(base + 3 * std::log(2.0), 1e-10));
  CHECK_THAT(estimate(0.5, 0.0), WithinAbs(base - 3 * std::log(2.0), 1e-10));
}

TEST_CASE("permuting evaluation points leaves the estimate unchanged", "[functionals]") {
  const Dataset data = sample_beta_uniform_mixture(2000, 2, 4.0, 4.0, 0.2, 8);
  SampleSplit sp = split(data, 0.7, 9);
  const double a = [&] {
    PluginEvaluator ev = PluginEvaluator::from_split(data, sp, 15);
    return bpi_estimate(ev, shannon_functional(), 15).estimate;
  }();
  std::reverse(sp.eval_indices.begin(), sp.eval_indices.end());
  PluginEvaluator ev = PluginEvaluator::from_split(data, sp, 15);
  CHECK_THAT(bpi_estimate(ev, shannon_functional(), 15).estimate, WithinAbs(a, 1e-12));
}

TEST_CASE("Renyi entropy wrapper", "[functionals]") {
  const Dataset data = sample_beta_uniform_mixture(3000, 3, 4.0, 4.0, 0.2, 10);
  PluginEvaluator ev = evaluator(data, 0.7, 11, 30);
  for (double alpha : {0.5, 1.5}) {
    const EstimateReport in = bpi_estimate_bc(ev, renyi_functional(alpha), 30);
    const EstimateReport h = renyi_entropy(ev, alpha, 30);
    CHECK_THAT(h.estimate, WithinAbs(std::log(in.estimate) / (1 - alpha), 1e-14));
    const double s = (1 - alpha) * in.estimate;
    CHECK_THAT(h.variance_estimate, WithinRel(in.variance_estimate / (s * s), 1e-12));
    CHECK(std::isfinite(h.estimate));
  }
  // Monotone transform: larger integral, ordered entropy.
  const EstimateReport lo = renyi_entropy(ev, 0.5, 10), hi = renyi_entropy(ev, 0.5, 30);
  const double ilo = bpi_estimate_bc(ev, renyi_functional(0.5), 10).estimate;
  const double ihi = bpi_estimate_bc(ev, renyi_functional(0.5), 30).estimate;
  CHECK((ilo < ihi) == (lo.estimate < hi.estimate));
}

TEST_CASE("custom functionals", "[functionals]") {
  const Dataset data = sample_density(uniform_cube(2), 1000, 12);
  PluginEvaluator ev = evaluator(data, 0.7, 13, 10);
  const Functional one = custom_functional(
      "one", [](double, std::span<const double>) { return 1.0; },
      [](double, std::span<const double>) { return 0.0; });
  const EstimateReport r = bpi_estimate(ev, one, 10);
  CHECK(r.estimate == 1.0);
  CHECK(r.c4 == 0.0);
  CHECK(r.c5 == 0.0);
  CHECK_THROWS_AS(bpi_estimate_bc(ev, one, 10), InvalidArgument);
  const Functional bad = custom_functional(
      "bad", [](double, std::span<const double> x) { return x[0] < 0.5 ? 1.0 : NAN; },
      [](double, std::span<const double>) { return 0.0; });
  CHECK_THROWS_AS(bpi_estimate(ev, bad, 10), DataQualityError);
}

TEST_CASE("report carries the split and variant metadata", "[functionals]") {
  const Dataset data = sample_beta_uniform_mixture(2000, 3, 4.0, 4.0, 0.2, 14);
  PluginEvaluator ev = evaluator(data, 0.7, 15, 20);
  const EstimateReport r = bpi_estimate_bc(ev, shannon_functional(), 20);
  CHECK(r.N == 600);
  CHECK(r.M == 1400);
  CHECK(r.k == 20);
  CHECK(r.boundary_corrected);
  CHECK(r.variance_estimate >= 0.0);
  CHECK(r.ci.has_value());
  CHECK(r.ci->lo <= r.estimate);
  CHECK(r.estimate <= r.ci->hi);
}

TEST_CASE("mutual information symmetry and independence", "[functionals]") {
  const Dataset data = sample_density(uniform_cube(2), 10000, 16);
  const SampleSplit sp = split(data, 0.7, 17);
  const std::vector<int> x = {0}, y = {1};
  const MutualInformationReport a = mutual_information(data, sp, x, y, 30);
  const MutualInformationReport b = mutual_information(data, sp, y, x, 30);
  CHECK(a.mi.estimate == b.mi.estimate);
  CHECK_THAT(a.mi.estimate, WithinAbs(a.h_x.estimate + a.h_y.estimate - a.h_xy.estimate, 1e-15));
  CHECK_THROWS_AS(mutual_information(data, sp, x, x, 30), InvalidArgument);
}

TEST_CASE("independent uniform pair has MI near zero", "[functionals][edge-bias]") {
  const Dataset data = sample_density(uniform_cube(2), 10000, 16);
  const SampleSplit sp = split(data, 0.7, 17);
  const std::vector<int> x = {0}, y = {1};
  const MutualInformationReport a = mutual_information(data, sp, x, y, 30);
  const double half = 1.959964 * std::sqrt(a.mi.variance_estimate);
  CHECK(std::fabs(a.mi.estimate) <= 2 * half);
}

TEST_CASE("mutual information of the uniform-sum pair", "[functionals]") {
  const double truth = uniform_sum_mi();
  CHECK_THAT(truth, WithinAbs(0.5, 1e-3));
  const Dataset data = sample_density(uniform_sum_pair(), 20000, 18);
  const SampleSplit sp = split(data, 0.7, 19);
  const std::vector<int> x = {0}, y = {1};
  const MutualInformationReport r = mutual_information(data, sp, x, y, 40);
  CHECK_THAT(r.mi.estimate, WithinAbs(truth, 0.1));
}

TEST_CASE("Y equal to X gives a large finite MI", "[functionals]") {
  std::vector<double> v;
  const Dataset u = sample_density(uniform_cube(1), 4000, 20);
  for (std::size_t i = 0; i < u.count(); ++i) {
    v.push_back(u(i, 0));
    v.push_back(u(i, 0));
  }
  const Dataset data(4000, 2, v);
  const SampleSplit sp = split(data, 0.7, 21);
  const std::vector<int> x = {0}, y = {1};
  const double mi = mutual_information(data, sp, x, y, 10).mi.estimate;
  CHECK(std::isfinite(mi));
  CHECK(mi > 2.0);
}

TEST_CASE("uniform cube Shannon estimate near zero", "[functionals][edge-bias]") {
  const Dataset data = sample_density(uniform_cube(3), 10000, 22);
  const SampleSplit sp = split(data, 0.7, 23);
  const std::size_t k = rate_matched_k(sp.M(), 3);
  PluginEvaluator ev = PluginEvaluator::from_split(data, sp, k);
  CHECK_THAT(bpi_estimate(ev, shannon_functional(), k).estimate, WithinAbs(0.0, 0.1));
  CHECK_THAT(bpi_estimate_bc(ev, renyi_functional(0.5), k).estimate, WithinAbs(1.0, 0.1));
}

TEST_CASE("uniform cube Renyi entropy near zero", "[functionals][edge-bias]") {
  const Dataset data = sample_density(uniform_cube(3), 10000, 24);
  const SampleSplit sp = split(data, 0.7, 25);
  const std::size_t k = rate_matched_k(sp.M(), 3);
  PluginEvaluator ev = PluginEvaluator::from_split(data, sp, k);
  CHECK_THAT(renyi_entropy(ev, 0.5, k).estimate, WithinAbs(0.0, 0.15));
}
