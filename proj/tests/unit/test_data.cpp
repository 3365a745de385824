#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "bpi/dataset.hpp"
#include "bpi/error.hpp"
#include "bpi/functionals.hpp"
#include "bpi/generators.hpp"
#include "bpi/rng.hpp"
#include "bpi/special.hpp"
#include "fixtures.hpp"

using namespace bpi;
using Catch::Matchers::WithinAbs;

TEST_CASE("parse_csv reads equal-length rows", "[data]") {
  std::istringstream in("0.1,0.2\n0.3,0.4\n0.5,0.6\n");
  const Dataset d = parse_csv(in);
  CHECK(d.count() == 3);
  CHECK(d.dim() == 2);
  CHECK(d(2, 1) == 0.6);
}

TEST_CASE("parse_csv accepts CRLF, a header and trailing blank lines", "[data]") {
  std::istringstream in("x,y\r\n1,2\r\n+3,-4e-1\r\n\r\n\n");
  const Dataset d = parse_csv(in, true);
  CHECK(d.count() == 2);
  CHECK(d(1, 0) == 3.0);
  CHECK(d(1, 1) == -0.4);
}

TEST_CASE("parse_csv reports the offending row", "[data]") {
  auto row_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_csv(in);
    } catch (const ParseError& e) {
      return e.row();
    }
    return std::size_t{9999};
  };
  CHECK(row_of("1,2,x\n") == 1);
  CHECK(row_of("1,2\n3,4\n5\n") == 3);
  CHECK(row_of("1,2\n\n3,4\n") == 2);
  CHECK(row_of("1,nan\n") == 1);
  CHECK(row_of("") == 0);
}

TEST_CASE("CSV round-trips bit-exactly", "[data]") {
  const Dataset d = sample_beta_uniform_mixture(50, 3, 4.0, 4.0, 0.2, 3);
  std::stringstream s;
  write_csv(s, d);
  const Dataset back = parse_csv(s);
  CHECK(back.values() == d.values());
}

TEST_CASE("telemetry-shaped input parses", "[data]") {
  std::ostringstream o;
  for (int i = 0; i < 576; ++i) {
    for (int j = 0; j < 11; ++j) o << (j ? "," : "") << i * 11 + j;
    o << "\n";
  }
  std::istringstream in(o.str());
  const Dataset d = parse_csv(in);
  CHECK(d.count() == 576);
  CHECK(d.dim() == 11);
}

TEST_CASE("Dataset rejects non-finite values and bad shapes", "[data]") {
  CHECK_THROWS_AS(Dataset(1, 2, {1.0, NAN}), InvalidArgument);
  CHECK_THROWS_AS(Dataset(2, 2, {1.0, 2.0, 3.0}), InvalidArgument);
}

TEST_CASE("split sizes follow round(alpha T)", "[data]") {
  const SampleSplit s = split(10000, 0.7, 1);
  CHECK(s.N() == 3000);
  CHECK(s.M() == 7000);
  const SampleSplit tiny = split(2, 0.5, 1);
  CHECK(tiny.N() == 1);
  CHECK(tiny.M() == 1);
}

TEST_CASE("split is a deterministic partition", "[data]") {
  const SampleSplit a = split(1000, 0.3, 42);
  const SampleSplit b = split(1000, 0.3, 42);
  CHECK(a.eval_indices == b.eval_indices);
  CHECK(a.ref_indices == b.ref_indices);
  std::set<std::size_t> all(a.eval_indices.begin(), a.eval_indices.end());
  all.insert(a.ref_indices.begin(), a.ref_indices.end());
  CHECK(all.size() == 1000);
  CHECK(*all.rbegin() == 999);
  const SampleSplit c = split(1000, 0.3, 43);
  CHECK(c.eval_indices != a.eval_indices);
}

TEST_CASE("split rejects bad fractions and tiny T", "[data]") {
  CHECK_THROWS_AS(split(100, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(split(100, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(split(1, 0.5, 1), InvalidArgument);
  CHECK_THROWS_AS(split(10, 0.01, 1), InvalidArgument);
}

TEST_CASE("split is uniform over positions", "[data]") {
  // Each row lands in the reference set with probability M/T.
  std::vector<int> hits(20, 0);
  for (std::uint64_t s = 0; s < 2000; ++s)
    for (std::size_t r : split(20, 0.25, s).ref_indices) ++hits[r];
  for (int h : hits) CHECK(std::abs(h - 500) < 5 * std::sqrt(2000 * 0.25 * 0.75));
}

TEST_CASE("the counter generator has a fixed stream", "[data]") {
  // SplitMix64 outputs for seed 0, computed by the reference recurrence.
  auto splitmix = [](std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t state = 1234;
  CounterRng rng(1234);
  for (int i = 0; i < 100; ++i) CHECK(rng.next_u64() == splitmix(state));
  CHECK(CounterRng(1234, 50).next_u64() == [&] {
    CounterRng r(1234);
    for (int i = 0; i < 50; ++i) r.next_u64();
    return r.next_u64();
  }());
}

TEST_CASE("gamma and beta variates have the right moments", "[data]") {
  CounterRng rng(7);
  const int n = 200000;
  for (double shape : {0.5, 4.0}) {
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      s += g;
      s2 += g * g;
    }
    const double m = s / n;
    const double v = s2 / n - m * m;
    CHECK_THAT(m, WithinAbs(shape, 5 * std::sqrt(shape / n)));
    CHECK_THAT(v, WithinAbs(shape, 0.05 * shape + 0.02));
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += rng.beta(2.0, 5.0);
  CHECK_THAT(s / n, WithinAbs(2.0 / 7.0, 5 * std::sqrt(10.0 / (49.0 * 8.0) / n)));
}

TEST_CASE("mixture marginals match the beta mean", "[data]") {
  const std::size_t T = 20000;
  const Dataset d = sample_beta_uniform_mixture(T, 3, 2.0, 5.0, 0.0, 11);
  const double var = 2.0 * 5.0 / (49.0 * 8.0);
  for (int j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < T; ++i) s += d(i, j);
    CHECK_THAT(s / T, WithinAbs(2.0 / 7.0, 4 * std::sqrt(var / T)));
  }
}

TEST_CASE("degenerate mixtures are uniform", "[data]") {
  const std::size_t T = 20000;
  for (const Dataset& d : {sample_beta_uniform_mixture(T, 2, 4.0, 4.0, 1.0, 5),
                           sample_beta_uniform_mixture(T, 2, 1.0, 1.0, 0.0, 5)}) {
    double s = 0.0, lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
      s += d(i, 0);
      lo = std::min(lo, d(i, 0));
      hi = std::max(hi, d(i, 0));
    }
    CHECK_THAT(s / T, WithinAbs(0.5, 4 * std::sqrt(1.0 / 12.0 / T)));
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
  }
}

TEST_CASE("generator argument checks", "[data]") {
  CHECK_THROWS_AS(sample_beta_uniform_mixture(10, 2, 0.0, 1.0, 0.5, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_beta_uniform_mixture(10, 2, 1.0, 1.0, 1.5, 1), InvalidArgument);
  CHECK_THROWS_AS(sample_projected_manifold(10, 3, 3, 1), InvalidArgument);
}

TEST_CASE("mixture pdf integrates to one", "[data]") {
  const AnalyticDensity den = beta_uniform_mixture(3, 4.0, 4.0, 0.2);
  CounterRng rng(3);
  const int n = 400000;
  std::vector<double> x(3);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    for (double& v : x) v = rng.uniform();
    const double f = den.pdf(x);
    s += f;
    s2 += f * f;
  }
  const double m = s / n;
  CHECK_THAT(m, WithinAbs(1.0, 4 * std::sqrt((s2 / n - m * m) / n)));
}

TEST_CASE("projection matrix has orthonormal columns", "[data]") {
  const int d = 2, D = 3;
  const std::vector<double> U = projection_matrix(d, D, 9);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      double g = 0.0;
      for (int r = 0; r < D; ++r) g += U[r * d + a] * U[r * d + b];
      CHECK_THAT(g, WithinAbs(a == b ? 1.0 : 0.0, 1e-12));
    }
}

TEST_CASE("projected manifold preserves pairwise distances", "[data]") {
  // The latent sample is reproduced by projecting back with U^T.
  const int d = 2, D = 3;
  const Dataset y = sample_projected_manifold(200, d, D, 4);
  const std::vector<double> U = projection_matrix(d, D, 4);
  auto latent = [&](std::size_t i) {
    std::vector<double> x(d, 0.0);
    for (int a = 0; a < d; ++a)
      for (int r = 0; r < D; ++r) x[a] += U[r * d + a] * y(i, r);
    return x;
  };
  for (std::size_t i = 0; i + 1 < y.count(); i += 7) {
    const auto xi = latent(i), xj = latent(i + 1);
    double dy = 0.0, dx = 0.0;
    for (int r = 0; r < D; ++r) dy += (y(i, r) - y(i + 1, r)) * (y(i, r) - y(i + 1, r));
    for (int a = 0; a < d; ++a) dx += (xi[a] - xj[a]) * (xi[a] - xj[a]);
    CHECK_THAT(std::sqrt(dy), WithinAbs(std::sqrt(dx), 1e-10));
    for (int a = 0; a < d; ++a) {
      CHECK(xi[a] >= -1e-12);
      CHECK(xi[a] <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("a line embedded in the plane has rank one", "[data]") {
  const Dataset y = sample_projected_manifold(500, 1, 2, 8);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < y.count(); ++i) {
    mx += y(i, 0);
    my += y(i, 1);
  }
  mx /= 500;
  my /= 500;
  for (std::size_t i = 0; i + 1 < y.count(); ++i) {
    const double cross = (y(i, 0) - mx) * (y(i + 1, 1) - my) - (y(i, 1) - my) * (y(i + 1, 0) - mx);
    CHECK_THAT(cross, WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("true functional on the uniform cube", "[data]") {
  const AnalyticDensity u = uniform_cube(3);
  const MonteCarloValue h = true_functional(u, shannon_functional(), 10000, 1);
  const MonteCarloValue r = true_functional(u, renyi_functional(0.5), 10000, 1);
  CHECK_THAT(h.value, WithinAbs(0.0, 1e-12));
  CHECK_THAT(r.value, WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(true_functional(u, shannon_functional(), 100, 1), InvalidArgument);
}

TEST_CASE("true functional agrees with the frozen mixture oracle", "[data]") {
  const AnalyticDensity m = beta_uniform_mixture(3, 4.0, 4.0, 0.2);
  const MonteCarloValue h = true_functional(m, shannon_functional(), 1000000, 77);
  const double se = std::hypot(h.std_error, test::oracles()["mixture_d3"]["shannon_entropy_se"]);
  CHECK_THAT(h.value, WithinAbs(test::mixture_entropy(), 4 * se));
}

TEST_CASE("uniform-sum pair has the analytic mutual information", "[data]") {
  // Joint density 2 on {0<x<1, x/2<y<(x+1)/2}; marginal of Y is a tent of height 2.
  const AnalyticDensity p = uniform_sum_pair();
  const std::vector<double> in = {0.4, 0.5}, out = {0.4, 0.9};
  CHECK(p.pdf(in) == 2.0);
  CHECK(p.pdf(out) == 0.0);
}
