#include "bpi/density.hpp"

#include <cmath>

#include "bpi/error.hpp"
#include "bpi/parallel.hpp"
#include "bpi/rng.hpp"
#include "bpi/special.hpp"

namespace bpi {

const char* to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::standard: return "standard";
    case DensityKind::corrected: return "corrected";
    case DensityKind::uniform_kernel: return "uniform_kernel";
    case DensityKind::cube_oracle: return "cube_oracle";
  }
  return "unknown";
}

namespace {
void check_k(std::size_t k, std::size_t M) {
  if (k < 3) throw InvalidArgument("k must be >= 3");
  if (k > M) throw InvalidArgument("k must not exceed M = " + std::to_string(M));
}
}  // namespace

std::vector<double> density_from_radii(std::span<const double> radii, std::size_t k,
                                       std::size_t M, int d) {
  const double scale = static_cast<double>(k - 1) /
                       (static_cast<double>(M) * unit_ball_volume(d));
  std::vector<double> out(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0))
      throw DataQualityError("zero k-NN distance at eval point " + std::to_string(i) +
                                 " (duplicate points)",
                             i);
    out[i] = scale / std::pow(radii[i], d);
  }
  return out;
}

DensityEstimates knn_density(const NeighborIndex& index, const Dataset& queries,
                             std::size_t k) {
  check_k(k, index.size());
  if (queries.dim() != index.dim()) throw InvalidArgument("query dimension mismatch");
  std::vector<double> radii(queries.count());
  parallel_for(queries.count(), [&](std::size_t i) {
    std::vector<double> d2(k);
    std::vector<std::size_t> idx(k);
    index.query_raw(queries.row(i), k, kNoExclude, d2.data(), idx.data());
    radii[i] = std::sqrt(d2[k - 1]);
  });
  DensityEstimates out;
  out.kind = DensityKind::standard;
  out.k = k;
  out.M = index.size();
  out.values = density_from_radii(radii, k, index.size(), index.dim());
  return out;
}

DensityEstimates corrected_density(const DensityEstimates& standard,
                                   const BoundaryLabels& labels) {
  if (standard.values.size() != labels.N())
    throw InvalidArgument("labels and estimates cover different eval sets");
  if (labels.interior.empty()) throw NoInteriorPoints();
  DensityEstimates out;
  out.kind = DensityKind::corrected;
  out.k = standard.k;
  out.M = standard.M;
  out.values.resize(standard.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = standard.values[labels.nearest_interior[i]];
  out.labels = labels;
  return out;
}

DensityEstimates uniform_kernel_density(const NeighborIndex& index, const Dataset& queries,
                                        std::size_t k) {
  if (k < 1 || k > index.size()) throw InvalidArgument("k must lie in [1, M]");
  if (queries.dim() != index.dim()) throw InvalidArgument("query dimension mismatch");
  const double M = static_cast<double>(index.size());
  const double Vu = static_cast<double>(k) / M;
  const int d = index.dim();
  const double radius = std::pow(Vu / unit_ball_volume(d), 1.0 / d);
  DensityEstimates out;
  out.kind = DensityKind::uniform_kernel;
  out.k = k;
  out.M = index.size();
  out.values.resize(queries.count());
  out.zero_flags.assign(queries.count(), 0);
  parallel_for(queries.count(), [&](std::size_t i) {
    const std::size_t l = index.count_within(queries.row(i), radius);
    out.values[i] = static_cast<double>(l) / (M * Vu);
    if (l == 0) out.zero_flags[i] = 1;
  });
  return out;
}

DensityEstimates cube_oracle_density(const NeighborIndex& index, const Dataset& queries,
                                     std::size_t k, std::size_t n_mc, std::uint64_t seed) {
  check_k(k, index.size());
  if (n_mc < 1) throw InvalidArgument("n_mc must be positive");
  const int d = index.dim();
  const auto du = static_cast<std::size_t>(d);
  const std::uint64_t base = derive_seed(seed, "cube_oracle");
  std::vector<double> values(queries.count());
  parallel_for(queries.count(), [&](std::size_t i) {
    std::vector<double> d2(k);
    std::vector<std::size_t> idx(k);
    auto q = queries.row(i);
    index.query_raw(q, k, kNoExclude, d2.data(), idx.data());
    const double r = std::sqrt(d2[k - 1]);
    if (!(r > 0.0)) throw DataQualityError("zero k-NN distance", i);
    CounterRng rng(mix64(base + i * 0x9E3779B97F4A7C15ULL));
    std::vector<double> z(du);
    std::size_t inside = 0;
    for (std::size_t s = 0; s < n_mc; ++s) {
      double norm2 = 0.0;
      for (double& v : z) {
        v = rng.normal();
        norm2 += v * v;
      }
      const double scale = r * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(norm2);
      bool in = true;
      for (std::size_t j = 0; j < du && in; ++j) {
        const double x = q[j] + scale * z[j];
        in = x >= 0.0 && x <= 1.0;
      }
      inside += in ? 1 : 0;
    }
    const double frac = std::max(1.0, static_cast<double>(inside)) / static_cast<double>(n_mc);
    values[i] = static_cast<double>(k - 1) /
                (static_cast<double>(index.size()) * ball_volume(r, d) * frac);
  });
  DensityEstimates out;
  out.kind = DensityKind::cube_oracle;
  out.k = k;
  out.M = index.size();
  out.values = std::move(values);
  return out;
}

}  // namespace bpi
