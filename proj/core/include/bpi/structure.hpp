#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bpi/boundary.hpp"
#include "bpi/dataset.hpp"
#include "bpi/functionals.hpp"

namespace bpi {

/// Disjoint cover of the variables {0..d-1}. Indices are 0-based columns.
struct Factorization {
  std::vector<std::vector<int>> factors;
  std::string label;
};

/// Throws InvalidArgument on overlap, out-of-range index or incomplete cover.
void validate_factorization(const Factorization& f, int d);
/// Each factor sorted, factors sorted lexicographically.
Factorization canonical(const Factorization& f);

/// e[i] = number of factors with i + 1 variables; length d.
std::vector<std::size_t> dimension_vector(const Factorization& f, int d);

/// Evaluation and reference sizes used for every factor entropy.
struct SampleBudget {
  std::size_t N = 2000;
  std::size_t M = 8000;
};

struct CrossEntropy {
  double value = 0.0;
  std::vector<EstimateReport> factors;  // canonical factor order
  std::vector<std::size_t> slices;      // slice used by each factor
};

/// Rows are shuffled by the seed and cut into consecutive slices of N + M
/// rows. Slice s is split into N eval and M reference rows.
std::vector<SampleSplit> make_slices(std::size_t V, std::size_t count,
                                     const SampleBudget& budget, std::uint64_t seed);

/// Sum over factors of Shannon BPI-BC entropies, factor i on slice
/// first_slice + i (canonical factor order).
CrossEntropy cross_entropy_estimate(const Dataset& data, const Factorization& f,
                                    std::size_t k, const SampleBudget& budget,
                                    std::uint64_t seed, const BoundaryConfig& config = {},
                                    std::size_t first_slice = 0);

/// True entropy and leading constants of one factor's entropy estimator.
struct FactorOracle {
  double entropy = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c4 = 0.0;
};
using FactorOracleMap = std::map<std::vector<int>, FactorOracle>;

struct ModelComparison {
  double statistic = 0.0;  // Hc(n) - Hc(l)
  std::string decision;    // label of the chosen model
  double cross_entropy_n = 0.0;
  double cross_entropy_l = 0.0;
  bool prediction_available = false;
  double predicted_mean = 0.0;
  double predicted_variance = 0.0;
  double predicted_error_prob = 0.0;
  std::string note;
};

/// Both models draw factor slices from one shuffle; the model whose label
/// sorts first takes the first slices, so swapping n and l negates the statistic.
ModelComparison compare_models(const Dataset& data, const Factorization& model_n,
                               const Factorization& model_l, std::size_t k,
                               const SampleBudget& budget, std::uint64_t seed,
                               const std::optional<FactorOracleMap>& oracle = std::nullopt,
                               const BoundaryConfig& config = {});

/// Mean and variance of the statistic from per-factor constants:
/// sum of (H + c1 (k/M)^{2/d_i} + c2/k) over n minus over l, and sum c4 / N.
ModelComparison predict_comparison(const Factorization& model_n, const Factorization& model_l,
                                   std::size_t k, const SampleBudget& budget,
                                   const FactorOracleMap& oracle);

}  // namespace bpi
