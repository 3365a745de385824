#include "bpi/inference.hpp"

#include <algorithm>
#include <cmath>

#include "bpi/error.hpp"
#include "bpi/evaluator.hpp"
#include "bpi/parallel.hpp"
#include "bpi/special.hpp"

namespace bpi {

ConfidenceInterval confidence_interval(double estimate, double c4, double c5, std::size_t N,
                                       std::size_t M, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("level must lie in (0,1)");
  if (c4 < 0.0 || c5 < 0.0) throw InvalidArgument("c4 and c5 must be >= 0");
  if (N < 1 || M < 1) throw InvalidArgument("N and M must be positive");
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half =
      z * std::sqrt(c4 / static_cast<double>(N) + c5 / static_cast<double>(M));
  return {estimate - half, estimate + half, level};
}

const char* to_string(KRule rule) {
  switch (rule) {
    case KRule::fixed: return "fixed";
    case KRule::rate_matched: return "rate";
    case KRule::optimal_oracle: return "optimal";
  }
  return "unknown";
}

KRule k_rule_from_string(const std::string& s) {
  if (s == "fixed") return KRule::fixed;
  if (s == "rate" || s == "rate_matched") return KRule::rate_matched;
  if (s == "optimal" || s == "optimal_oracle") return KRule::optimal_oracle;
  throw InvalidArgument("unknown k rule '" + s + "' (fixed | rate | optimal)");
}

AnalyticDensity make_density(const TrialSpec& spec) {
  if (spec.generator == "uniform") return uniform_cube(spec.d);
  if (spec.generator == "beta-uniform")
    return beta_uniform_mixture(spec.d, spec.a, spec.b, spec.eps);
  if (spec.generator == "beta-pair") return beta_pair_mixture(spec.d);
  throw InvalidArgument("unknown generator '" + spec.generator + "'");
}

Functional make_functional(const TrialSpec& spec) {
  if (spec.functional == "shannon") return shannon_functional();
  if (spec.functional == "renyi" || spec.functional == "renyi_entropy")
    return renyi_functional(spec.alpha);
  throw InvalidArgument("unknown functional '" + spec.functional + "'");
}

TrialSummary summarize(std::span<const double> estimates,
                       std::span<const unsigned char> covered, double truth) {
  TrialSummary s;
  if (estimates.empty()) return s;
  s.mean = tree_mean(estimates);
  s.bias = s.mean - truth;
  s.variance = sample_variance(estimates);
  std::vector<double> sq(estimates.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double e = estimates[i] - truth;
    sq[i] = e * e;
  }
  s.mse = tree_mean(sq);
  if (!covered.empty()) {
    std::size_t c = 0;
    for (unsigned char v : covered) c += v ? 1 : 0;
    s.coverage = static_cast<double>(c) / static_cast<double>(covered.size());
  }
  return s;
}

namespace {

TheoryConstants oracle_for(const TrialSpec& spec) {
  if (spec.oracle_constants) return *spec.oracle_constants;
  return constants_oracle(make_density(spec), make_functional(spec), spec.oracle_n_mc,
                          derive_seed(spec.seed, "oracle"));
}

std::size_t split_M(const TrialSpec& spec) {
  return static_cast<std::size_t>(
      std::llround(spec.alpha_frac * static_cast<double>(spec.T)));
}

struct TrialValue {
  double estimate = 0.0;
  double variance = 0.0;
  std::size_t boundary_points = 0;
  std::vector<std::string> warnings;
};

TrialValue evaluate(PluginEvaluator& ev, const TrialSpec& spec, std::size_t k,
                    const std::optional<TheoryConstants>& oracle) {
  EstimateReport r;
  if (spec.functional == "renyi_entropy") {
    r = renyi_entropy(ev, spec.alpha, k, spec.boundary_correct, spec.bias_correct);
  } else {
    const Functional f = make_functional(spec);
    r = spec.bias_correct ? bpi_estimate_bc(ev, f, k, spec.boundary_correct)
                          : bpi_estimate(ev, f, k, spec.boundary_correct);
  }
  TrialValue v;
  v.estimate = r.estimate;
  v.variance = r.variance_estimate;
  v.boundary_points = r.boundary_points;
  v.warnings = r.warnings;
  if (spec.ci_from_oracle && oracle) {
    double var = oracle->c4 / static_cast<double>(r.N) + oracle->c5 / static_cast<double>(r.M);
    var /= r.g1 * r.g1;
    if (spec.functional == "renyi_entropy") {
      const double integral = std::exp((1.0 - spec.alpha) * r.estimate);
      const double s = (1.0 - spec.alpha) * integral;
      var /= s * s;
    }
    v.variance = var;
  }
  return v;
}

}  // namespace

double resolve_truth(const TrialSpec& spec) {
  if (spec.truth) return *spec.truth;
  const AnalyticDensity den = make_density(spec);
  const Functional f = make_functional(spec);
  const double v =
      true_functional(den, f, spec.truth_n_mc, derive_seed(spec.seed, "truth")).value;
  if (spec.functional == "renyi_entropy") return std::log(v) / (1.0 - spec.alpha);
  return v;
}

std::size_t resolve_k(const TrialSpec& spec) {
  const std::size_t M = split_M(spec);
  switch (spec.k_rule) {
    case KRule::fixed:
      if (spec.k < 3) throw InvalidArgument("fixed k rule needs k >= 3");
      return spec.k;
    case KRule::rate_matched:
      return rate_matched_k(M, spec.d);
    case KRule::optimal_oracle: {
      const TheoryConstants c = oracle_for(spec);
      return optimal_k(c.c1, c.c2, spec.d, M).k;
    }
  }
  return 3;
}

std::vector<TrialResults> monte_carlo_sweep(const TrialSpec& spec,
                                            std::span<const std::size_t> ks,
                                            std::size_t n_trials) {
  if (n_trials < 1) throw InvalidArgument("n_trials must be >= 1");
  if (ks.empty()) throw InvalidArgument("k sweep is empty");
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  const AnalyticDensity den = make_density(spec);
  const double truth = resolve_truth(spec);
  std::optional<TheoryConstants> oracle;
  if (spec.ci_from_oracle) oracle = oracle_for(spec);

  std::vector<std::vector<TrialValue>> values(n_trials);
  std::vector<std::string> errors(n_trials);
  parallel_for(n_trials, [&](std::size_t t) {
    try {
      const Dataset data = sample_density(den, spec.T, derive_seed(spec.seed, "trial", t));
      const SampleSplit sp = split(data, spec.alpha_frac, derive_seed(spec.seed, "split", t));
      PluginEvaluator ev = PluginEvaluator::from_split(data, sp, k_max, spec.boundary);
      values[t].reserve(ks.size());
      for (std::size_t k : ks) values[t].push_back(evaluate(ev, spec, k, oracle));
    } catch (const std::exception& e) {
      errors[t] = e.what();
    }
  });
  for (std::size_t t = 0; t < n_trials; ++t)
    if (!errors[t].empty())
      throw Error("trial " + std::to_string(t) + " failed: " + errors[t]);

  const std::size_t M = split_M(spec);
  const double z = normal_quantile(0.5 * (1.0 + spec.ci_level));
  std::vector<TrialResults> out(ks.size());
  for (std::size_t j = 0; j < ks.size(); ++j) {
    TrialResults& r = out[j];
    r.k = ks[j];
    r.M = M;
    r.N = spec.T - M;
    r.truth = truth;
    for (std::size_t t = 0; t < n_trials; ++t) {
      const TrialValue& v = values[t][j];
      r.estimates.push_back(v.estimate);
      r.variance_estimates.push_back(v.variance);
      r.boundary_points.push_back(v.boundary_points);
      r.covered.push_back(std::fabs(v.estimate - truth) <= z * std::sqrt(v.variance) ? 1 : 0);
      if (t == 0) r.warnings = v.warnings;
    }
    r.summary = summarize(r.estimates, r.covered, truth);
  }
  return out;
}

TrialResults monte_carlo(const TrialSpec& spec, std::size_t n_trials) {
  const std::size_t k = resolve_k(spec);
  const std::size_t ks[] = {k};
  return std::move(monte_carlo_sweep(spec, ks, n_trials).front());
}

NormalityDiagnostics normality_diagnostics(std::span<const double> estimates) {
  const std::size_t n = estimates.size();
  if (n < 20) throw InvalidArgument("normality diagnostics need >= 20 samples");
  const double m = tree_mean(estimates);
  const double sd = std::sqrt(sample_variance(estimates));
  if (!(sd > 0.0)) throw InvalidArgument("sample variance is zero");
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (estimates[i] - m) / sd;
  std::sort(z.begin(), z.end());
  NormalityDiagnostics out;
  const double nd = static_cast<double>(n);
  double D = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = normal_cdf(z[i]);
    D = std::max({D, static_cast<double>(i + 1) / nd - F, F - static_cast<double>(i) / nd});
    out.qq_pairs.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / nd), z[i]);
  }
  out.ks_statistic = D;
  const double sn = std::sqrt(nd);
  out.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * D);
  return out;
}

RateFit rate_fit(std::span<const double> sizes, std::span<const double> errors) {
  if (sizes.size() != errors.size()) throw InvalidArgument("sizes and errors differ in length");
  if (sizes.size() < 3) throw InvalidArgument("rate fit needs >= 3 points");
  const std::size_t n = sizes.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(errors[i] > 0.0)) throw InvalidArgument("errors must be positive");
    if (!(sizes[i] > 0.0)) throw InvalidArgument("sizes must be positive");
    x[i] = std::log(sizes[i]);
    y[i] = std::log(errors[i]);
  }
  const double mx = tree_mean(x);
  const double my = tree_mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("sizes must not all be equal");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace bpi
