#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bpi/boundary.hpp"
#include "bpi/dataset.hpp"
#include "bpi/knn.hpp"

namespace bpi {

enum class DensityKind { standard, corrected, uniform_kernel, cube_oracle };

const char* to_string(DensityKind kind);

struct DensityEstimates {
  std::vector<double> values;
  DensityKind kind = DensityKind::standard;
  std::size_t k = 0;
  std::size_t M = 0;
  std::optional<BoundaryLabels> labels;
  /// Uniform kernel only: 1 where no reference fell in the ball.
  std::vector<unsigned char> zero_flags;
};

/// (k - 1) / (M c_d r^d) from the k-th neighbor radius of each point.
/// Throws DataQualityError on a zero radius.
std::vector<double> density_from_radii(std::span<const double> radii, std::size_t k,
                                       std::size_t M, int d);

/// Standard k-NN estimate at each query row; 3 <= k <= M.
DensityEstimates knn_density(const NeighborIndex& index, const Dataset& queries,
                             std::size_t k);

/// Boundary points take the standard value of their nearest interior point.
DensityEstimates corrected_density(const DensityEstimates& standard,
                                   const BoundaryLabels& labels);

/// l_u / (M V_u) with V_u = k/M and l_u the references within the radius of
/// a ball of volume V_u. Zero counts are flagged, not errors.
DensityEstimates uniform_kernel_density(const NeighborIndex& index, const Dataset& queries,
                                        std::size_t k);

/// Test oracle for supports equal to [0,1]^d: the k-NN ball volume is
/// replaced by its intersection with the cube, measured with n_mc uniform
/// draws inside the ball.
DensityEstimates cube_oracle_density(const NeighborIndex& index, const Dataset& queries,
                                     std::size_t k, std::size_t n_mc, std::uint64_t seed);

}  // namespace bpi
