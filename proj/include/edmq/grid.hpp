#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "edmq/distribution.hpp"
#include "edmq/error.hpp"

namespace edmq {

using CellIndex = std::size_t;

/// Uniform dyadic tesselation of a d-dimensional box into 2^(dJ) congruent
/// cells.
///
/// Cell indexing is row-major with axis 0 varying fastest:
///   index = sum_k i_k * 2^(J*k),  i_k in [0, 2^J).
/// Each cell is half-open [low, high) along every axis except the last cell
/// of an axis, which is closed, so every point of the closed box has exactly
/// one cell.
struct GridSpec {
  std::size_t dimension = 1;
  std::size_t depth = 0;
  std::vector<double> lower{0.0};
  std::vector<double> upper{1.0};

  static constexpr std::size_t max_index_bits = 32;

  static GridSpec unit(std::size_t dimension, std::size_t depth) {
    return cube(dimension, depth, 0.0, 1.0);
  }
  static GridSpec cube(std::size_t dimension, std::size_t depth, double lo, double hi) {
    GridSpec g;
    g.dimension = dimension;
    g.depth = depth;
    g.lower.assign(dimension, lo);
    g.upper.assign(dimension, hi);
    g.validate();
    return g;
  }

  void validate() const {
    if (dimension == 0) throw Error(ErrorKind::invalid_grid, "dimension must be >= 1");
    if (dimension * depth > max_index_bits)
      throw Error(ErrorKind::invalid_grid, "d*J exceeds the supported cell count (2^32)");
    if (lower.size() != dimension || upper.size() != dimension)
      throw Error(ErrorKind::invalid_grid, "box bounds must have one entry per axis");
    for (std::size_t k = 0; k < dimension; ++k) {
      if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(lower[k] < upper[k]))
        throw Error(ErrorKind::invalid_grid, "box requires finite lower < upper on every axis");
    }
  }

  std::size_t cells_per_axis() const noexcept { return std::size_t{1} << depth; }
  std::size_t cell_count() const noexcept { return std::size_t{1} << (dimension * depth); }

  std::vector<std::size_t> multi_index(CellIndex cell) const {
    std::vector<std::size_t> idx(dimension);
    const std::size_t mask = cells_per_axis() - 1;
    for (std::size_t k = 0; k < dimension; ++k) idx[k] = (cell >> (depth * k)) & mask;
    return idx;
  }

  CellIndex flat_index(std::span<const std::size_t> idx) const noexcept {
    CellIndex cell = 0;
    for (std::size_t k = 0; k < dimension; ++k) cell |= idx[k] << (depth * k);
    return cell;
  }

  /// Physical coordinate of grid line `i` (0..2^J) on axis k.
  double edge(std::size_t k, std::size_t i) const noexcept {
    if (i == cells_per_axis()) return upper[k];
    return lower[k] + (upper[k] - lower[k]) * (static_cast<double>(i) / static_cast<double>(cells_per_axis()));
  }

  /// Position of x on axis k rescaled to [0, 1].
  double normalize(std::size_t k, double x) const noexcept {
    return (x - lower[k]) / (upper[k] - lower[k]);
  }

  /// Bin of a scalar on axis k, or nullopt when outside [lower, upper].
  std::optional<std::size_t> axis_bin(std::size_t k, double x) const noexcept {
    if (!(x >= lower[k] && x <= upper[k])) return std::nullopt;  // also rejects NaN
    const double t = normalize(k, x) * static_cast<double>(cells_per_axis());
    auto i = static_cast<std::size_t>(std::floor(t));
    if (i >= cells_per_axis()) i = cells_per_axis() - 1;
    return i;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Per-cell probabilities on a grid.
struct CellMeasure {
  std::vector<double> probs;
  std::uint64_t sample_count = 0;  // 0 for analytic measures
  bool kt_applied = false;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t k) const noexcept { return probs[k]; }
};

/// Cell containing `point`, or nullopt if any coordinate is outside the box.
inline std::optional<CellIndex> cell_of(const GridSpec& grid, std::span<const double> point) {
  if (point.size() != grid.dimension) throw Error(ErrorKind::invalid_argument, "point dimension mismatch");
  CellIndex cell = 0;
  for (std::size_t k = 0; k < grid.dimension; ++k) {
    const auto i = grid.axis_bin(k, point[k]);
    if (!i) return std::nullopt;
    cell |= *i << (grid.depth * k);
  }
  return cell;
}

struct BinCounts {
  std::vector<std::uint64_t> counts;
  std::uint64_t n_kept = 0;
};

inline BinCounts bin_samples(const GridSpec& grid, const Samples& samples) {
  grid.validate();
  if (!samples.empty() && samples.dimension() != grid.dimension)
    throw Error(ErrorKind::invalid_argument, "sample dimension does not match the grid");
  BinCounts out;
  out.counts.assign(grid.cell_count(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (auto cell = cell_of(grid, samples[i])) {
      ++out.counts[*cell];
      ++out.n_kept;
    }
  }
  return out;
}

/// Krichevsky-Trofimov estimate: every cell is preloaded with half a count,
///   p_k = (1/2 + c_k) / (K/2 + n),   K = number of cells.
inline CellMeasure kt_probabilities(std::span<const std::uint64_t> counts, std::uint64_t n) {
  const std::size_t cells = counts.size();
  if (cells == 0 || (cells & (cells - 1)) != 0)
    throw Error(ErrorKind::invalid_grid, "count vector length must be a power of two");
  const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total != n) throw Error(ErrorKind::invalid_argument, "n must equal the sum of the counts");
  CellMeasure m;
  m.probs.resize(cells);
  const double denom = static_cast<double>(cells) / 2.0 + static_cast<double>(n);
  for (std::size_t k = 0; k < cells; ++k) m.probs[k] = (0.5 + static_cast<double>(counts[k])) / denom;
  m.sample_count = n;
  m.kt_applied = true;
  return m;
}

/// Same as above, additionally checking that the length is a power of 2^d.
inline CellMeasure kt_probabilities(const GridSpec& grid, std::span<const std::uint64_t> counts, std::uint64_t n) {
  const std::size_t cells = counts.size();
  if (cells == 0 || (cells & (cells - 1)) != 0 || std::countr_zero(cells) % grid.dimension != 0)
    throw Error(ErrorKind::invalid_grid, "count vector length must be a power of 2^d");
  return kt_probabilities(counts, n);
}

/// Exact cell masses of a product-form distribution, renormalized so that the
/// mass outside the box is discarded.
inline CellMeasure analytic_cell_probabilities(const GridSpec& grid, const DistributionSpec& dist) {
  grid.validate();
  dist.validate();
  if (dist.dimension != grid.dimension)
    throw Error(ErrorKind::incompatible_grid, "distribution dimension does not match the grid");

  const std::size_t per_axis = grid.cells_per_axis();
  std::vector<std::vector<double>> axis_probs(grid.dimension, std::vector<double>(per_axis));
  for (std::size_t k = 0; k < grid.dimension; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < per_axis; ++i) {
      axis_probs[k][i] = dist.axis_mass(k, grid.edge(k, i), grid.edge(k, i + 1));
      total += axis_probs[k][i];
    }
    if (!(total > 0.0))
      throw Error(ErrorKind::domain, "distribution puts no mass on the box");
    for (double& p : axis_probs[k]) p /= total;
  }

  CellMeasure m;
  m.probs.resize(grid.cell_count());
  const std::size_t mask = per_axis - 1;
  for (CellIndex cell = 0; cell < m.probs.size(); ++cell) {
    double p = 1.0;
    for (std::size_t k = 0; k < grid.dimension; ++k) p *= axis_probs[k][(cell >> (grid.depth * k)) & mask];
    m.probs[cell] = p;
  }
  return m;
}

}  // namespace edmq
