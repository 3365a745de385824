#include "bpi/evaluator.hpp"

#include "bpi/error.hpp"

namespace bpi {

PluginEvaluator::PluginEvaluator(Dataset eval, Dataset ref, std::size_t k_max,
                                 BoundaryConfig config)
    : eval_(std::move(eval)), ref_(std::move(ref)), config_(config) {
  config_.validate();
  if (eval_.empty() || ref_.empty())
    throw InvalidArgument("evaluation and reference sets must be nonempty");
  if (eval_.dim() != ref_.dim())
    throw InvalidArgument("evaluation and reference dimensions differ");
  if (k_max < 1 || k_max > ref_.count())
    throw InvalidArgument("k must lie in [3, M = " + std::to_string(ref_.count()) + "]");
  index_ = std::make_unique<NeighborIndex>(ref_);
  table_ = query_all(*index_, eval_, k_max);
}

PluginEvaluator PluginEvaluator::from_split(const Dataset& data, const SampleSplit& split,
                                            std::size_t k_max, BoundaryConfig config) {
  return PluginEvaluator(data.select_rows(split.eval_indices),
                         data.select_rows(split.ref_indices), k_max, config);
}

void PluginEvaluator::check_k(std::size_t k) const {
  if (k < 3) throw InvalidArgument("k must be >= 3");
  if (k > M()) throw InvalidArgument("k must not exceed M = " + std::to_string(M()));
  if (k > table_.k)
    throw InvalidArgument("k exceeds the evaluator's k_max = " + std::to_string(table_.k));
}

std::vector<double> PluginEvaluator::radii(std::size_t k) const {
  if (k < 1 || k > table_.k) throw InvalidArgument("k outside precomputed range");
  return table_.column_distances(k - 1);
}

const DensityEstimates& PluginEvaluator::standard(std::size_t k) {
  check_k(k);
  auto it = standard_.find(k);
  if (it != standard_.end()) return it->second;
  DensityEstimates est;
  est.kind = DensityKind::standard;
  est.k = k;
  est.M = M();
  est.values = density_from_radii(radii(k), k, M(), dim());
  return standard_.emplace(k, std::move(est)).first->second;
}

const NeighborTable& PluginEvaluator::self_graph(std::size_t K) {
  if (!self_ || self_->k < K) {
    if (K >= N())
      throw InvalidArgument("boundary K = " + std::to_string(K) +
                            " must be below N = " + std::to_string(N()));
    // Size the graph for the largest k this evaluator can serve.
    const std::size_t K_all = std::min(N() - 1, std::max(K, boundary_K(table_.k, N(), M())));
    const NeighborIndex eval_index(eval_);
    self_ = self_query_all(eval_index, eval_, K_all);
  }
  return *self_;
}

const BoundaryLabels& PluginEvaluator::labels(std::size_t k) {
  check_k(k);
  auto it = labels_.find(k);
  if (it != labels_.end()) return it->second;
  const std::size_t K = boundary_K(k, N(), M());
  if (K >= N())
    throw InvalidArgument("boundary K = floor(kN/M) = " + std::to_string(K) +
                          " must be below N = " + std::to_string(N()));
  const auto& graph = self_graph(K);
  const auto& dens = standard(k);
  return labels_
      .emplace(k, detect_boundary(eval_, k, M(), config_, dens.values, &graph))
      .first->second;
}

const DensityEstimates& PluginEvaluator::corrected(std::size_t k) {
  auto it = corrected_.find(k);
  if (it != corrected_.end()) return it->second;
  const auto& lab = labels(k);
  return corrected_.emplace(k, corrected_density(standard(k), lab)).first->second;
}

const DensityEstimates& PluginEvaluator::density(std::size_t k, bool boundary_correct) {
  return boundary_correct ? corrected(k) : standard(k);
}

}  // namespace bpi
