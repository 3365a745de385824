#include "bpi/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <string_view>

#include "bpi/error.hpp"
#include "bpi/rng.hpp"

namespace bpi {

Dataset::Dataset(std::size_t count, int dim, std::vector<double> values)
    : count_(count), dim_(dim), values_(std::move(values)) {
  if (dim < 1) throw InvalidArgument("dataset dimension must be >= 1");
  if (values_.size() != count * static_cast<std::size_t>(dim))
    throw InvalidArgument("dataset shape does not match value count");
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw InvalidArgument("dataset entry at row " +
                            std::to_string(i / static_cast<std::size_t>(dim)) +
                            " is not finite");
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<double> v;
  v.reserve(rows.size() * static_cast<std::size_t>(dim_));
  for (std::size_t r : rows) {
    if (r >= count_) throw InvalidArgument("row index out of range");
    auto src = row(r);
    v.insert(v.end(), src.begin(), src.end());
  }
  return Dataset(rows.size(), dim_, std::move(v));
}

Dataset Dataset::select_cols(std::span<const int> cols) const {
  if (cols.empty()) throw InvalidArgument("column selection is empty");
  for (int c : cols)
    if (c < 0 || c >= dim_) throw InvalidArgument("column index out of range");
  std::vector<double> v;
  v.reserve(count_ * cols.size());
  for (std::size_t i = 0; i < count_; ++i)
    for (int c : cols) v.push_back((*this)(i, c));
  return Dataset(count_, static_cast<int>(cols.size()), std::move(v));
}

Dataset Dataset::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > count_) throw InvalidArgument("row range out of bounds");
  const auto d = static_cast<std::size_t>(dim_);
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(begin * d),
                        values_.begin() + static_cast<std::ptrdiff_t>(end * d));
  return Dataset(end - begin, dim_, std::move(v));
}

Dataset parse_csv(std::istream& in, bool header) {
  std::vector<double> values;
  std::size_t rows = 0;
  int dim = -1;
  std::string line;
  std::size_t lineno = 0;
  std::size_t blank_run = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && lineno == 1) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      ++blank_run;
      continue;
    }
    if (blank_run > 0 && rows > 0)
      throw ParseError("blank line inside data", lineno - blank_run);
    blank_run = 0;
    int cols = 0;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      std::string_view cell = rest.substr(0, comma);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t'))
        cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t'))
        cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double x = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (cell.empty() || res.ec != std::errc() ||
          res.ptr != cell.data() + cell.size())
        throw ParseError("non-numeric cell '" + std::string(cell) + "'", lineno);
      if (!std::isfinite(x)) throw ParseError("non-finite value", lineno);
      values.push_back(x);
      ++cols;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (dim < 0) {
      dim = cols;
    } else if (cols != dim) {
      throw ParseError("ragged row: expected " + std::to_string(dim) +
                           " columns, found " + std::to_string(cols),
                       lineno);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("empty input", 0);
  return Dataset(rows, dim, std::move(values));
}

Dataset load_csv(const std::string& path, bool header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return parse_csv(in, header);
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < data.count(); ++i) {
    for (int j = 0; j < data.dim(); ++j) {
      if (j) out << ',';
      out << data(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

SampleSplit split(std::size_t T, double alpha_frac, std::uint64_t seed) {
  if (!(alpha_frac > 0.0 && alpha_frac < 1.0))
    throw InvalidArgument("alpha_frac must lie in (0,1)");
  if (T < 2) throw InvalidArgument("split needs at least 2 samples");
  const auto M = static_cast<std::size_t>(std::llround(alpha_frac * static_cast<double>(T)));
  if (M < 1 || M >= T)
    throw InvalidArgument("alpha_frac leaves an empty evaluation or reference set");
  std::vector<std::size_t> perm(T);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(derive_seed(seed, "split"));
  for (std::size_t i = T - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  SampleSplit s;
  s.seed = seed;
  const std::size_t N = T - M;
  s.eval_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(N));
  s.ref_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(N), perm.end());
  return s;
}

SampleSplit split(const Dataset& data, double alpha_frac, std::uint64_t seed) {
  return split(data.count(), alpha_frac, seed);
}

}  // namespace bpi
