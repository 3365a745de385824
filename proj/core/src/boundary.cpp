#include "bpi/boundary.hpp"

#include <cmath>

#include "bpi/error.hpp"
#include "bpi/special.hpp"

namespace bpi {

void BoundaryConfig::validate() const {
  if (!(delta > 2.0 / 3.0 && delta < 1.0))
    throw InvalidArgument("delta must lie in (2/3, 1)");
  if (lipschitz && !(*lipschitz >= 0.0 && std::isfinite(*lipschitz)))
    throw InvalidArgument("lipschitz must be a finite value >= 0");
  if (eps0 && !(*eps0 > 0.0 && std::isfinite(*eps0)))
    throw InvalidArgument("eps0 must be a finite positive value");
}

QThreshold q_threshold(std::size_t K, std::size_t N, std::size_t k, int d, double L,
                       double eps0, double delta) {
  if (!(eps0 > 0.0)) throw InvalidArgument("eps0 must be positive");
  if (k < 1 || N < 1) throw InvalidArgument("k and N must be positive");
  QThreshold t;
  t.p_k = std::sqrt(6.0) / std::pow(static_cast<double>(k), delta / 2.0);
  const double spread = static_cast<double>(K) /
                        (unit_ball_volume(d) * static_cast<double>(N) * eps0);
  t.q = (L / eps0) * std::pow(spread, 1.0 / d) + 2.0 * t.p_k;
  return t;
}

std::size_t boundary_K(std::size_t k, std::size_t N, std::size_t M) {
  if (M < 1) throw InvalidArgument("M must be positive");
  const std::size_t K = (k * N) / M;
  return K < 1 ? 1 : K;
}

double auto_eps0(std::span<const double> density) {
  if (density.empty()) throw InvalidArgument("auto eps0 needs density estimates");
  return quantile(density, 0.10);
}

double auto_lipschitz(const NeighborTable& graph, std::size_t K,
                      std::span<const double> density) {
  if (density.size() != graph.rows)
    throw InvalidArgument("auto lipschitz needs one density value per point");
  std::vector<double> slopes;
  slopes.reserve(graph.rows * K);
  for (std::size_t i = 0; i < graph.rows; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      const double dist = graph.distance(i, j);
      if (dist > 0.0)
        slopes.push_back(std::fabs(density[i] - density[graph.index(i, j)]) / dist);
    }
  if (slopes.empty()) return 0.0;
  return quantile(slopes, 0.95);
}

BoundaryLabels detect_boundary(const Dataset& eval, std::size_t k, std::size_t M,
                               const BoundaryConfig& config,
                               std::span<const double> density,
                               const NeighborTable* self_graph) {
  config.validate();
  const std::size_t N = eval.count();
  if (N < 2) throw InvalidArgument("boundary detection needs N >= 2");
  if (k < 3) throw InvalidArgument("boundary detection needs k >= 3");
  const std::size_t K = boundary_K(k, N, M);
  if (K >= N)
    throw InvalidArgument("boundary K = floor(kN/M) = " + std::to_string(K) +
                          " must be below N = " + std::to_string(N));
  if ((!config.lipschitz || !config.eps0) && density.size() != N)
    throw InvalidArgument("auto lipschitz/eps0 need density estimates at eval points");

  NeighborTable local;
  if (self_graph == nullptr || self_graph->k < K || self_graph->rows != N) {
    const NeighborIndex index(eval);
    local = self_query_all(index, eval, K);
    self_graph = &local;
  }

  BoundaryLabels out;
  out.K_used = K;
  out.counts = count_reverse_neighbors(*self_graph, K);
  out.eps0_used = config.eps0 ? *config.eps0 : auto_eps0(density);
  out.lipschitz_used =
      config.lipschitz ? *config.lipschitz : auto_lipschitz(*self_graph, K, density);
  if (!(out.eps0_used > 0.0))
    throw DataQualityError("auto eps0 is not positive", 0);
  const QThreshold qt =
      q_threshold(K, N, k, eval.dim(), out.lipschitz_used, out.eps0_used, config.delta);
  out.q = qt.q;
  out.p_k = qt.p_k;
  out.threshold_used = (1.0 - qt.q) * static_cast<double>(K);
  if (qt.q >= 1.0)
    out.warnings.push_back("q(K,N) = " + std::to_string(qt.q) +
                           " >= 1; every point labelled interior");

  out.is_boundary.assign(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    if (static_cast<double>(out.counts[i]) < out.threshold_used) {
      out.is_boundary[i] = 1;
      out.boundary.push_back(i);
    } else {
      out.interior.push_back(i);
    }
  }
  if (out.interior.empty()) throw NoInteriorPoints();

  out.nearest_interior.resize(N);
  for (std::size_t i = 0; i < N; ++i) out.nearest_interior[i] = i;
  if (!out.boundary.empty()) {
    const Dataset inner = eval.select_rows(out.interior);
    const NeighborIndex index(inner);
    double d2 = 0.0;
    std::size_t pos = 0;
    for (std::size_t b : out.boundary) {
      index.query_raw(eval.row(b), 1, kNoExclude, &d2, &pos);
      out.nearest_interior[b] = out.interior[pos];
    }
  }
  return out;
}

}  // namespace bpi
