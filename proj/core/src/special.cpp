#include "bpi/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bpi/error.hpp"

namespace bpi {

double log_gamma(double x) {
  if (!(x > 0.0)) throw InvalidArgument("log_gamma: x must be positive");
  // Shift up so the Stirling series converges to full precision.
  double shift = 0.0;
  while (x < 15.0) {
    shift += std::log(x);
    x += 1.0;
  }
  const double z = 1.0 / (x * x);
  const double series =
      (1.0 / 12.0 -
       z * (1.0 / 360.0 -
            z * (1.0 / 1260.0 -
                 z * (1.0 / 1680.0 -
                      z * (1.0 / 1188.0 - z * (691.0 / 360360.0 - z / 156.0)))))) /
      x;
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) +
         series - shift;
}

double digamma(double x) {
  if (!(x > 0.0)) throw InvalidArgument("digamma: x must be positive");
  double acc = 0.0;
  while (x < 15.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double z = 1.0 / (x * x);
  const double series =
      z * (1.0 / 12.0 -
           z * (1.0 / 120.0 -
                z * (1.0 / 252.0 -
                     z * (1.0 / 240.0 - z * (1.0 / 132.0 - z * 691.0 / 32760.0)))));
  return acc + std::log(x) - 0.5 / x - series;
}

double unit_ball_volume(int d) {
  if (d < 1) throw InvalidArgument("unit_ball_volume: d must be >= 1");
  const double h = 0.5 * d;
  return std::exp(h * std::log(std::numbers::pi) - log_gamma(h + 1.0));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidArgument("normal_quantile: p must lie in (0,1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
              0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.27) return 1.0;
  if (x < 1.0) {
    // Small-x form converges faster.
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double s = 0.0;
    for (int j = 1; j <= 9; j += 2) s += std::exp(-static_cast<double>(j * j) * c);
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s;
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    s += (j % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double tree_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = n / 2;
  return tree_sum(v.subspan(0, h)) + tree_sum(v.subspan(h));
}

double tree_mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return tree_sum(v) / static_cast<double>(v.size());
}

namespace {
double centered_ss(std::span<const double> v) {
  const double m = tree_mean(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double e = v[i] - m;
    sq[i] = e * e;
  }
  return tree_sum(sq);
}
}  // namespace

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  return centered_ss(v) / static_cast<double>(v.size() - 1);
}

double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return centered_ss(v) / static_cast<double>(v.size());
}

double quantile(std::span<const double> v, double q) {
  if (v.empty()) throw InvalidArgument("quantile of empty sample");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return s[lo] + frac * (s[hi] - s[lo]);
}

}  // namespace bpi
