#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>

#include "bpi/boundary.hpp"
#include "bpi/dataset.hpp"
#include "bpi/density.hpp"
#include "bpi/knn.hpp"

namespace bpi {

/// A fixed evaluation/reference pair. Neighbor searches run once, at the
/// largest k requested, so sweeping k reuses them. Not safe for concurrent
/// use of the same object; distinct objects are independent.
class PluginEvaluator {
 public:
  PluginEvaluator(Dataset eval, Dataset ref, std::size_t k_max,
                  BoundaryConfig config = {});
  static PluginEvaluator from_split(const Dataset& data, const SampleSplit& split,
                                    std::size_t k_max, BoundaryConfig config = {});

  std::size_t N() const noexcept { return eval_.count(); }
  std::size_t M() const noexcept { return ref_.count(); }
  int dim() const noexcept { return eval_.dim(); }
  std::size_t k_max() const noexcept { return table_.k; }
  const Dataset& eval() const noexcept { return eval_; }
  const Dataset& ref() const noexcept { return ref_; }
  const NeighborIndex& index() const noexcept { return *index_; }
  const BoundaryConfig& config() const noexcept { return config_; }
  const NeighborTable& table() const noexcept { return table_; }

  /// k-th neighbor distance of every eval point into the references.
  std::vector<double> radii(std::size_t k) const;
  const DensityEstimates& standard(std::size_t k);
  const BoundaryLabels& labels(std::size_t k);
  const DensityEstimates& corrected(std::size_t k);
  /// corrected(k) or standard(k).
  const DensityEstimates& density(std::size_t k, bool boundary_correct);

 private:
  void check_k(std::size_t k) const;
  const NeighborTable& self_graph(std::size_t K);

  Dataset eval_;
  Dataset ref_;
  BoundaryConfig config_;
  std::unique_ptr<NeighborIndex> index_;
  NeighborTable table_;
  std::optional<NeighborTable> self_;
  std::map<std::size_t, DensityEstimates> standard_;
  std::map<std::size_t, BoundaryLabels> labels_;
  std::map<std::size_t, DensityEstimates> corrected_;
};

}  // namespace bpi
