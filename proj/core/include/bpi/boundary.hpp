#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpi/dataset.hpp"
#include "bpi/knn.hpp"

namespace bpi {

/// Tuning of the boundary detector. An empty optional means "auto".
struct BoundaryConfig {
  double delta = 0.8;
  std::optional<double> lipschitz;
  std::optional<double> eps0;

  /// Throws InvalidArgument unless delta in (2/3, 1), L >= 0, eps0 > 0.
  void validate() const;
};

struct QThreshold {
  double q = 0.0;
  double p_k = 0.0;
};

/// q(K,N) = (L/eps0) (K/(c_d N eps0))^{1/d} + 2 p_k, p_k = sqrt(6)/k^{delta/2}.
QThreshold q_threshold(std::size_t K, std::size_t N, std::size_t k, int d, double L,
                       double eps0, double delta);

/// K = max(1, floor(k N / M)).
std::size_t boundary_K(std::size_t k, std::size_t N, std::size_t M);

struct BoundaryLabels {
  std::vector<std::size_t> interior;      // ascending eval indices
  std::vector<std::size_t> boundary;      // ascending eval indices
  std::vector<std::size_t> nearest_interior;  // size N; identity on interior
  std::vector<unsigned char> is_boundary;     // size N
  std::vector<std::size_t> counts;            // reverse-neighbor counts
  std::size_t K_used = 0;
  double q = 0.0;
  double p_k = 0.0;
  double threshold_used = 0.0;  // (1 - q) K
  double lipschitz_used = 0.0;
  double eps0_used = 0.0;
  std::vector<std::string> warnings;

  std::size_t N() const noexcept { return is_boundary.size(); }
};

/// Labels eval point i boundary iff its reverse-neighbor count in the
/// K-NN graph of the eval set is below (1 - q) K. `density` is the standard
/// k-NN estimate at each eval point, required when L or eps0 is "auto".
/// `self_graph`, when given, must hold at least K self-excluded neighbors.
BoundaryLabels detect_boundary(const Dataset& eval, std::size_t k, std::size_t M,
                               const BoundaryConfig& config,
                               std::span<const double> density = {},
                               const NeighborTable* self_graph = nullptr);

/// Auto rules: eps0 is the 10th percentile of `density`, L is the 95th
/// percentile of |f_i - f_j| / |X_i - X_j| over the first K graph columns.
double auto_eps0(std::span<const double> density);
double auto_lipschitz(const NeighborTable& graph, std::size_t K,
                      std::span<const double> density);

}  // namespace bpi
