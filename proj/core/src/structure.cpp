#include "bpi/structure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "bpi/error.hpp"
#include "bpi/evaluator.hpp"
#include "bpi/parallel.hpp"
#include "bpi/rng.hpp"
#include "bpi/special.hpp"

namespace bpi {

void validate_factorization(const Factorization& f, int d) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  if (f.factors.empty()) throw InvalidArgument("factorization has no factors");
  std::vector<int> seen(static_cast<std::size_t>(d), 0);
  for (const auto& factor : f.factors) {
    if (factor.empty()) throw InvalidArgument("factorization contains an empty factor");
    for (int v : factor) {
      if (v < 0 || v >= d)
        throw InvalidArgument("variable " + std::to_string(v) + " out of range");
      if (seen[static_cast<std::size_t>(v)]++)
        throw InvalidArgument("variable " + std::to_string(v) + " appears in two factors");
    }
  }
  for (int v = 0; v < d; ++v)
    if (!seen[static_cast<std::size_t>(v)])
      throw InvalidArgument("variable " + std::to_string(v) + " is not covered");
}

Factorization canonical(const Factorization& f) {
  Factorization c = f;
  for (auto& factor : c.factors) std::sort(factor.begin(), factor.end());
  std::sort(c.factors.begin(), c.factors.end());
  return c;
}

std::vector<std::size_t> dimension_vector(const Factorization& f, int d) {
  validate_factorization(f, d);
  std::vector<std::size_t> e(static_cast<std::size_t>(d), 0);
  for (const auto& factor : f.factors) ++e[factor.size() - 1];
  return e;
}

std::vector<SampleSplit> make_slices(std::size_t V, std::size_t count,
                                     const SampleBudget& budget, std::uint64_t seed) {
  if (budget.N < 1 || budget.M < 1) throw InvalidArgument("budget N and M must be positive");
  const std::size_t per = budget.N + budget.M;
  if (count * per > V)
    throw InvalidArgument("sample budget infeasible: " + std::to_string(count) + " slices of " +
                          std::to_string(per) + " rows need more than " + std::to_string(V));
  std::vector<std::size_t> perm(V);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(derive_seed(seed, "slices"));
  for (std::size_t i = V - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<std::size_t>(rng.below(i + 1))]);
  std::vector<SampleSplit> out(count);
  for (std::size_t s = 0; s < count; ++s) {
    const auto base = perm.begin() + static_cast<std::ptrdiff_t>(s * per);
    out[s].seed = seed;
    out[s].eval_indices.assign(base, base + static_cast<std::ptrdiff_t>(budget.N));
    out[s].ref_indices.assign(base + static_cast<std::ptrdiff_t>(budget.N),
                              base + static_cast<std::ptrdiff_t>(per));
  }
  return out;
}

namespace {

CrossEntropy cross_entropy_on(const Dataset& data, const Factorization& canon, std::size_t k,
                              const std::vector<SampleSplit>& slices, std::size_t first,
                              const BoundaryConfig& config) {
  const Functional sh = shannon_functional();
  CrossEntropy out;
  const std::size_t m = canon.factors.size();
  out.factors.resize(m);
  out.slices.resize(m);
  std::vector<std::string> errors(m);
  parallel_for(m, [&](std::size_t i) {
    try {
      const auto& cols = canon.factors[i];
      const SampleSplit& sp = slices[first + i];
      if (k >= sp.M())
        throw InvalidArgument("k = " + std::to_string(k) + " must be below slice M = " +
                              std::to_string(sp.M()));
      const Dataset sub = data.select_cols(cols);
      PluginEvaluator ev = PluginEvaluator::from_split(sub, sp, k, config);
      out.factors[i] = bpi_estimate_bc(ev, sh, k, true);
      out.slices[i] = first + i;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw InvalidArgument(e);
  std::vector<double> parts(m);
  for (std::size_t i = 0; i < m; ++i) parts[i] = out.factors[i].estimate;
  out.value = tree_sum(parts);
  return out;
}

}  // namespace

CrossEntropy cross_entropy_estimate(const Dataset& data, const Factorization& f,
                                    std::size_t k, const SampleBudget& budget,
                                    std::uint64_t seed, const BoundaryConfig& config,
                                    std::size_t first_slice) {
  validate_factorization(f, data.dim());
  const Factorization c = canonical(f);
  const auto slices = make_slices(data.count(), first_slice + c.factors.size(), budget, seed);
  return cross_entropy_on(data, c, k, slices, first_slice, config);
}

ModelComparison predict_comparison(const Factorization& model_n, const Factorization& model_l,
                                   std::size_t k, const SampleBudget& budget,
                                   const FactorOracleMap& oracle) {
  ModelComparison out;
  const double kM = static_cast<double>(k) / static_cast<double>(budget.M);
  double mean = 0.0;
  double var = 0.0;
  auto add = [&](const Factorization& f, double sign) {
    for (const auto& factor : canonical(f).factors) {
      auto it = oracle.find(factor);
      if (it == oracle.end()) return false;
      const FactorOracle& o = it->second;
      const double di = static_cast<double>(factor.size());
      mean += sign * (o.entropy + o.c1 * std::pow(kM, 2.0 / di) + o.c2 / static_cast<double>(k));
      var += o.c4;
    }
    return true;
  };
  if (!add(model_n, 1.0) || !add(model_l, -1.0)) {
    out.note = "prediction unavailable: missing factor constants";
    return out;
  }
  out.prediction_available = true;
  out.predicted_mean = mean;
  out.predicted_variance = var / static_cast<double>(budget.N);
  out.predicted_error_prob =
      out.predicted_variance > 0.0
          ? normal_cdf(-std::fabs(mean) / std::sqrt(out.predicted_variance))
          : (mean == 0.0 ? 0.5 : 0.0);
  return out;
}

ModelComparison compare_models(const Dataset& data, const Factorization& model_n,
                               const Factorization& model_l, std::size_t k,
                               const SampleBudget& budget, std::uint64_t seed,
                               const std::optional<FactorOracleMap>& oracle,
                               const BoundaryConfig& config) {
  validate_factorization(model_n, data.dim());
  validate_factorization(model_l, data.dim());
  const Factorization cn = canonical(model_n);
  const Factorization cl = canonical(model_l);
  const bool n_first = std::tie(cn.label, cn.factors) <= std::tie(cl.label, cl.factors);
  const std::size_t total = cn.factors.size() + cl.factors.size();
  const auto slices = make_slices(data.count(), total, budget, seed);
  const std::size_t n_off = n_first ? 0 : cl.factors.size();
  const std::size_t l_off = n_first ? cn.factors.size() : 0;
  const CrossEntropy hn = cross_entropy_on(data, cn, k, slices, n_off, config);
  const CrossEntropy hl = cross_entropy_on(data, cl, k, slices, l_off, config);

  ModelComparison out;
  if (oracle) out = predict_comparison(model_n, model_l, k, budget, *oracle);
  else out.note = "prediction unavailable: no oracle constants";
  out.cross_entropy_n = hn.value;
  out.cross_entropy_l = hl.value;
  out.statistic = hn.value - hl.value;
  out.decision = out.statistic < 0.0 ? model_n.label : model_l.label;
  return out;
}

}  // namespace bpi
