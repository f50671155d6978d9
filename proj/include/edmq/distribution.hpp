#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edmq/error.hpp"
#include "edmq/random.hpp"

namespace edmq {

/// A set of d-dimensional points stored row-major in one flat buffer.
class Samples {
 public:
  Samples() = default;
  explicit Samples(std::size_t dimension) : dim_(dimension) {
    if (dimension == 0) throw Error(ErrorKind::invalid_argument, "sample dimension must be >= 1");
  }
  Samples(std::size_t dimension, std::vector<double> coords) : Samples(dimension) {
    if (coords.size() % dimension != 0)
      throw Error(ErrorKind::invalid_argument, "coordinate count is not a multiple of the dimension");
    coords_ = std::move(coords);
  }

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }

  void push_back(std::span<const double> point) {
    if (point.size() != dim_) throw Error(ErrorKind::invalid_argument, "point dimension mismatch");
    coords_.insert(coords_.end(), point.begin(), point.end());
  }
  void reserve(std::size_t n) { coords_.reserve(n * dim_); }

  const std::vector<double>& coords() const noexcept { return coords_; }

  friend bool operator==(const Samples&, const Samples&) = default;

 private:
  std::size_t dim_ = 1;
  std::vector<double> coords_;
};

enum class DistributionKind { gaussian, laplace };

constexpr std::string_view to_string(DistributionKind k) noexcept {
  return k == DistributionKind::gaussian ? "gaussian" : "laplace";
}

inline DistributionKind parse_distribution_kind(std::string_view name) {
  if (name == "gaussian" || name == "normal") return DistributionKind::gaussian;
  if (name == "laplace") return DistributionKind::laplace;
  throw Error(ErrorKind::unsupported_distribution, "unknown distribution '" + std::string(name) + "'");
}

/// Product-form distribution: independent axes, each a Gaussian or a Laplace
/// with its own mean and variance. A Laplace axis with variance v has scale
/// b = sqrt(v / 2).
struct DistributionSpec {
  DistributionKind kind = DistributionKind::gaussian;
  std::size_t dimension = 1;
  std::vector<double> mean;      // empty means all zero
  std::vector<double> variance;  // empty means all one

  static DistributionSpec standard(DistributionKind kind, std::size_t dimension) {
    DistributionSpec s;
    s.kind = kind;
    s.dimension = dimension;
    return s;
  }

  double axis_mean(std::size_t k) const { return mean.empty() ? 0.0 : mean.at(k); }
  double axis_variance(std::size_t k) const { return variance.empty() ? 1.0 : variance.at(k); }

  void validate() const {
    if (dimension == 0) throw Error(ErrorKind::invalid_argument, "distribution dimension must be >= 1");
    if (!mean.empty() && mean.size() != dimension)
      throw Error(ErrorKind::invalid_argument, "mean vector length must equal the dimension");
    if (!variance.empty() && variance.size() != dimension)
      throw Error(ErrorKind::invalid_argument, "variance vector length must equal the dimension");
    for (std::size_t k = 0; k < dimension; ++k) {
      if (!(axis_variance(k) > 0.0) || !std::isfinite(axis_variance(k)))
        throw Error(ErrorKind::invalid_argument, "variance must be positive and finite");
      if (!std::isfinite(axis_mean(k))) throw Error(ErrorKind::invalid_argument, "mean must be finite");
    }
  }

  // Per-axis marginals.

  double axis_cdf(std::size_t k, double x) const {
    const double mu = axis_mean(k);
    const double var = axis_variance(k);
    if (kind == DistributionKind::gaussian) {
      return 0.5 * std::erfc(-(x - mu) / std::sqrt(2.0 * var));
    }
    const double b = std::sqrt(var / 2.0);
    const double z = (x - mu) / b;
    return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
  }

  /// P(lo < X_k <= hi), computed on the tail that avoids cancellation.
  double axis_mass(std::size_t k, double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    const double mu = axis_mean(k);
    if (lo >= mu) {
      // upper tail: S(lo) - S(hi)
      return survival(k, lo) - survival(k, hi);
    }
    return axis_cdf(k, hi) - axis_cdf(k, lo);
  }

  double axis_log_pdf(std::size_t k, double x) const {
    const double mu = axis_mean(k);
    const double var = axis_variance(k);
    if (kind == DistributionKind::gaussian) {
      return -0.5 * std::log(2.0 * std::numbers::pi * var) - (x - mu) * (x - mu) / (2.0 * var);
    }
    const double b = std::sqrt(var / 2.0);
    return -std::log(2.0 * b) - std::abs(x - mu) / b;
  }

  double log_pdf(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < dimension; ++k) s += axis_log_pdf(k, x[k]);
    return s;
  }

  double axis_draw(std::size_t k, Rng& rng) const {
    const double mu = axis_mean(k);
    const double var = axis_variance(k);
    if (kind == DistributionKind::gaussian) return mu + std::sqrt(var) * rng.normal();
    // inverse CDF
    const double b = std::sqrt(var / 2.0);
    const double u = rng.uniform() - 0.5;
    return u < 0.0 ? mu + b * std::log1p(2.0 * u) : mu - b * std::log1p(-2.0 * u);
  }

 private:
  double survival(std::size_t k, double x) const {
    const double mu = axis_mean(k);
    const double var = axis_variance(k);
    if (kind == DistributionKind::gaussian) return 0.5 * std::erfc((x - mu) / std::sqrt(2.0 * var));
    const double b = std::sqrt(var / 2.0);
    const double z = (x - mu) / b;
    return z > 0.0 ? 0.5 * std::exp(-z) : 1.0 - 0.5 * std::exp(z);
  }
};

/// n i.i.d. draws; each point fills its axes in order from one stream.
inline Samples sample(const DistributionSpec& dist, std::size_t n, std::uint64_t seed) {
  dist.validate();
  Samples out(dist.dimension);
  out.reserve(n);
  Rng rng(seed);
  std::vector<double> point(dist.dimension);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dist.dimension; ++k) point[k] = dist.axis_draw(k, rng);
    out.push_back(point);
  }
  return out;
}

}  // namespace edmq
