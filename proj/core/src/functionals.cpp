#include "bpi/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bpi/error.hpp"
#include "bpi/evaluator.hpp"
#include "bpi/special.hpp"

namespace bpi {

double shannon_correction(std::size_t k) {
  if (k < 2) throw InvalidArgument("Shannon correction needs k >= 2");
  const double kd = static_cast<double>(k);
  return std::log(kd - 1.0) - digamma(kd);
}

BiasFactors renyi_bias_factors(double alpha, std::size_t k) {
  const double kd = static_cast<double>(k);
  if (!(kd + 1.0 - alpha > 0.0) || k < 2)
    throw InvalidArgument("Renyi factors need k >= 2 and k + 1 - alpha > 0");
  BiasFactors b;
  b.g1 = std::exp((alpha - 1.0) * std::log(kd - 1.0) + log_gamma(kd + 1.0 - alpha) -
                  log_gamma(kd));
  b.g2 = 0.0;
  return b;
}

Functional shannon_functional() {
  Functional f;
  f.id = "shannon";
  f.g = [](double u, std::span<const double>) { return -std::log(u); };
  f.g_prime = [](double u, std::span<const double>) { return -1.0 / u; };
  f.g_double_prime = [](double u, std::span<const double>) { return 1.0 / (u * u); };
  f.bias_factors = [](std::size_t k, std::size_t) {
    BiasFactors b;
    b.g1 = 1.0;
    b.g2 = -shannon_correction(k);
    return b;
  };
  return f;
}

Functional renyi_functional(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0) || alpha == 1.0)
    throw InvalidArgument("Renyi alpha must lie in (0,2) and differ from 1");
  Functional f;
  f.id = "renyi";
  f.alpha = alpha;
  const double e = alpha - 1.0;
  f.g = [e](double u, std::span<const double>) { return std::pow(u, e); };
  f.g_prime = [e](double u, std::span<const double>) { return e * std::pow(u, e - 1.0); };
  f.g_double_prime = [e](double u, std::span<const double>) {
    return e * (e - 1.0) * std::pow(u, e - 2.0);
  };
  f.bias_factors = [alpha](std::size_t k, std::size_t) { return renyi_bias_factors(alpha, k); };
  return f;
}

Functional custom_functional(std::string id, Functional::Map g, Functional::Map g_prime,
                             Functional::Map g_double_prime,
                             std::function<BiasFactors(std::size_t, std::size_t)> factors) {
  if (!g) throw InvalidArgument("custom functional needs g");
  Functional f;
  f.id = std::move(id);
  f.g = std::move(g);
  f.g_prime = std::move(g_prime);
  f.g_double_prime = std::move(g_double_prime);
  f.bias_factors = std::move(factors);
  return f;
}

std::vector<double> plugin_values(PluginEvaluator& ev, const Functional& f, std::size_t k,
                                  bool boundary_correct) {
  const auto& dens = ev.density(k, boundary_correct);
  std::vector<double> out(dens.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = dens.values[i];
    if (!(u > 0.0))
      throw DataQualityError("density estimate " + std::to_string(u) + " at eval point " +
                                 std::to_string(i) + " is not positive",
                             i);
    out[i] = f.g(u, ev.eval().row(i));
    if (!std::isfinite(out[i]))
      throw DataQualityError("g is not finite at eval point " + std::to_string(i) +
                                 " (density estimate " + std::to_string(u) + ")",
                             i);
  }
  return out;
}

namespace {

void attach_ci(EstimateReport& r) {
  const double half = normal_quantile(0.975) * std::sqrt(r.variance_estimate);
  r.ci = ConfidenceInterval{r.estimate - half, r.estimate + half, 0.95};
}

}  // namespace

EstimateReport bpi_estimate(PluginEvaluator& ev, const Functional& f, std::size_t k,
                            bool boundary_correct) {
  const std::vector<double> vals = plugin_values(ev, f, k, boundary_correct);
  const auto& dens = ev.density(k, boundary_correct);
  EstimateReport r;
  r.functional = f.id;
  r.k = k;
  r.N = ev.N();
  r.M = ev.M();
  r.variant = "bpi";
  r.boundary_corrected = boundary_correct;
  if (boundary_correct) {
    const auto& lab = ev.labels(k);
    r.boundary_points = lab.boundary.size();
    r.warnings = lab.warnings;
  }
  r.estimate = tree_mean(vals);
  r.plain_estimate = r.estimate;
  r.c4 = sample_variance(vals);
  if (f.g_prime) {
    std::vector<double> fg(vals.size());
    for (std::size_t i = 0; i < fg.size(); ++i)
      fg[i] = dens.values[i] * f.g_prime(dens.values[i], ev.eval().row(i));
    r.c5 = sample_variance(fg);
  }
  r.variance_estimate = r.c4 / static_cast<double>(r.N) + r.c5 / static_cast<double>(r.M);
  attach_ci(r);
  return r;
}

EstimateReport bpi_estimate_bc(PluginEvaluator& ev, const Functional& f, std::size_t k,
                               bool boundary_correct) {
  if (!f.bias_factors)
    throw InvalidArgument("functional '" + f.id + "' has no bias-correction factors");
  EstimateReport r = bpi_estimate(ev, f, k, boundary_correct);
  const BiasFactors b = f.bias_factors(k, ev.M());
  if (b.g1 == 0.0 || !std::isfinite(b.g1)) throw InvalidArgument("bias factor g1 is zero");
  r.g1 = b.g1;
  r.g2 = b.g2;
  r.variant = "bpi_bias_corrected";
  r.estimate = (r.plain_estimate - b.g2) / b.g1;
  r.variance_estimate /= b.g1 * b.g1;
  attach_ci(r);
  return r;
}

EstimateReport renyi_entropy(PluginEvaluator& ev, double alpha, std::size_t k,
                             bool boundary_correct, bool bias_correct) {
  const Functional f = renyi_functional(alpha);
  EstimateReport r = bias_correct ? bpi_estimate_bc(ev, f, k, boundary_correct)
                                  : bpi_estimate(ev, f, k, boundary_correct);
  const double integral = r.estimate;
  if (!(integral > 0.0))
    throw DataQualityError("Renyi integral estimate is not positive", 0);
  r.functional = "renyi_entropy";
  r.estimate = std::log(integral) / (1.0 - alpha);
  const double scale = (1.0 - alpha) * integral;
  r.variance_estimate /= scale * scale;
  attach_ci(r);
  return r;
}

MutualInformationReport mutual_information(const Dataset& data, const SampleSplit& split,
                                           std::span<const int> x_cols,
                                           std::span<const int> y_cols, std::size_t k,
                                           const BoundaryConfig& config,
                                           bool boundary_correct) {
  if (x_cols.empty() || y_cols.empty())
    throw InvalidArgument("mutual information needs nonempty X and Y blocks");
  std::set<int> joint_set(x_cols.begin(), x_cols.end());
  for (int c : y_cols)
    if (!joint_set.insert(c).second)
      throw InvalidArgument("X and Y column blocks overlap");
  if (joint_set.size() != x_cols.size() + y_cols.size())
    throw InvalidArgument("duplicate column in X block");
  // Canonical column order keeps the joint distances independent of the
  // block order.
  const std::vector<int> joint_cols(joint_set.begin(), joint_set.end());

  const Functional sh = shannon_functional();
  auto run = [&](std::span<const int> cols, std::vector<double>& dens) {
    const Dataset sub = data.select_cols(cols);
    PluginEvaluator ev = PluginEvaluator::from_split(sub, split, k, config);
    EstimateReport r = bpi_estimate_bc(ev, sh, k, boundary_correct);
    dens = ev.density(k, boundary_correct).values;
    return r;
  };
  std::vector<double> fx, fy, fxy;
  MutualInformationReport out;
  out.h_x = run(x_cols, fx);
  out.h_y = run(y_cols, fy);
  out.h_xy = run(joint_cols, fxy);

  EstimateReport& mi = out.mi;
  mi.functional = "mutual_information";
  mi.k = k;
  mi.N = out.h_xy.N;
  mi.M = out.h_xy.M;
  mi.variant = "bpi_bias_corrected";
  mi.boundary_corrected = boundary_correct;
  mi.estimate = out.h_x.estimate + out.h_y.estimate - out.h_xy.estimate;
  mi.plain_estimate =
      out.h_x.plain_estimate + out.h_y.plain_estimate - out.h_xy.plain_estimate;
  std::vector<double> terms(fx.size());
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i] = std::log(fx[i]) + std::log(fy[i]) - std::log(fxy[i]);
  mi.c4 = sample_variance(terms);
  mi.variance_estimate = mi.c4 / static_cast<double>(mi.N);
  attach_ci(mi);
  for (const auto* part : {&out.h_x, &out.h_y, &out.h_xy})
    mi.warnings.insert(mi.warnings.end(), part->warnings.begin(), part->warnings.end());
  return out;
}

}  // namespace bpi
