#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bpi {

/// Immutable T x d matrix of finite reals, row-major.
class Dataset {
 public:
  Dataset() = default;
  /// Throws InvalidArgument on shape mismatch or non-finite entries.
  Dataset(std::size_t count, int dim, std::vector<double> values);

  std::size_t count() const noexcept { return count_; }
  int dim() const noexcept { return dim_; }
  bool empty() const noexcept { return count_ == 0; }

  double operator()(std::size_t i, int j) const noexcept {
    return values_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(j)];
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }
  const std::vector<double>& values() const noexcept { return values_; }

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_cols(std::span<const int> cols) const;
  /// Contiguous row range [begin, end).
  Dataset slice_rows(std::size_t begin, std::size_t end) const;

 private:
  std::size_t count_ = 0;
  int dim_ = 0;
  std::vector<double> values_;
};

/// Disjoint evaluation (N) and reference (M) row sets.
struct SampleSplit {
  std::vector<std::size_t> eval_indices;
  std::vector<std::size_t> ref_indices;
  std::uint64_t seed = 0;

  std::size_t N() const noexcept { return eval_indices.size(); }
  std::size_t M() const noexcept { return ref_indices.size(); }
};

/// Parses comma-separated reals. Rows must all have the same length.
/// Tolerates CRLF and trailing blank lines. Throws ParseError.
Dataset parse_csv(std::istream& in, bool header = false);
Dataset load_csv(const std::string& path, bool header = false);
/// Writes with 17 significant digits so values round-trip.
void write_csv(std::ostream& out, const Dataset& data);

/// M = round(alpha_frac * T) reference rows, N = T - M evaluation rows.
/// Fisher-Yates shuffle of 0..T-1; the first N entries are evaluation rows.
SampleSplit split(std::size_t T, double alpha_frac, std::uint64_t seed);
SampleSplit split(const Dataset& data, double alpha_frac, std::uint64_t seed);

}  // namespace bpi
