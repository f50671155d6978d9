#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "edmq/distribution.hpp"
#include "edmq/error.hpp"
#include "edmq/grid.hpp"

namespace edmq {

using Label = std::uint32_t;
using Labeling = std::vector<Label>;

/// Box constraint m <= phi <= M on the per-region values.
struct PhiBounds {
  double lower = 0.0;
  double upper = 0.0;

  void validate() const {
    if (!(lower > 0.0) || !(lower <= upper) || !std::isfinite(upper))
      throw Error(ErrorKind::invalid_argument, "bounds require 0 < m <= M < inf");
  }
};

/// Affine weights of the cell-score rewrite: region i contributes
/// P(R_i) * a[i] + Q(R_i) * b[i], with a = log(phi) + 1 and b = -phi.
struct WeightPair {
  std::vector<double> a;
  std::vector<double> b;

  std::size_t levels() const noexcept { return a.size(); }
};

/// An L-level piecewise-constant rule on a labeled grid: cells with label i
/// form region R_i and the rule takes the value phi[i] there.
struct QuantizerRule {
  GridSpec grid;
  std::size_t levels = 1;
  Labeling labels;
  std::vector<double> phi;
  std::optional<PhiBounds> bounds;

  std::optional<Label> label_of(std::span<const double> point) const {
    auto cell = cell_of(grid, point);
    if (!cell) return std::nullopt;
    return labels[*cell];
  }

  void validate() const {
    grid.validate();
    if (levels == 0) throw Error(ErrorKind::invalid_argument, "levels must be >= 1");
    if (labels.size() != grid.cell_count())
      throw Error(ErrorKind::inconsistent_rule, "labeling length does not match the grid");
    if (phi.size() != levels) throw Error(ErrorKind::inconsistent_rule, "phi must have one value per level");
    for (Label l : labels)
      if (l >= levels) throw Error(ErrorKind::inconsistent_rule, "label out of range");
    if (bounds) bounds->validate();
  }
};

namespace detail {

// p * x with the convention 0 * (+-inf) = 0.
inline double weighted(double p, double x) noexcept { return p == 0.0 ? 0.0 : p * x; }

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorKind::invalid_argument, what);
}

}  // namespace detail

/// KL(p || q) = sum p_i ln(p_i / q_i), natural log, 0 ln 0 = 0.
inline double kl_pmf(std::span<const double> p, std::span<const double> q) {
  detail::require_same_length(p.size(), q.size(), "pmfs must have equal length");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw Error(ErrorKind::invalid_argument, "pmf entries must be non-negative");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw Error(ErrorKind::invalid_argument, "pmfs must sum to 1");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw Error(ErrorKind::absolute_continuity, "p > 0 where q = 0");
    d += p[i] * std::log(p[i] / q[i]);
  }
  return d;
}

/// Convex conjugate of f(t) = -log t:  f*(s) = -1 - log(-s) for s < 0, +inf otherwise.
inline double convex_conjugate_neg_log(double t_star) noexcept {
  if (!(t_star < 0.0)) return std::numeric_limits<double>::infinity();
  return -1.0 - std::log(-t_star);
}

/// Mass of each region R_i = union of cells labeled i.
inline std::vector<double> region_masses(std::span<const Label> labels, const CellMeasure& m, std::size_t levels) {
  detail::require_same_length(labels.size(), m.size(), "labeling and measure lengths differ");
  std::vector<double> out(levels, 0.0);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= levels) throw Error(ErrorKind::invalid_argument, "label out of range");
    out[labels[k]] += m.probs[k];
  }
  return out;
}

inline std::vector<bool> populated_labels(std::span<const Label> labels, std::size_t levels) {
  std::vector<bool> used(levels, false);
  for (Label l : labels) {
    if (l >= levels) throw Error(ErrorKind::invalid_argument, "label out of range");
    used[l] = true;
  }
  return used;
}

struct OptimalPhi {
  std::vector<double> phi;
  WeightPair weights;
};

/// Per-region maximizer phi_i = P(R_i) / Q(R_i), clamped to the bounds when
/// given. Unpopulated regions get the neutral value 1 (a = 1, b = -1), which
/// scores a cell as P(S) - Q(S) and lets the label be re-acquired later.
inline OptimalPhi optimal_phi_from_regions(std::span<const double> p_regions, std::span<const double> q_regions,
                                           const std::vector<bool>& populated,
                                           const std::optional<PhiBounds>& bounds = std::nullopt) {
  const std::size_t levels = p_regions.size();
  detail::require_same_length(levels, q_regions.size(), "region vectors differ in length");
  if (bounds) bounds->validate();
  OptimalPhi out;
  out.phi.assign(levels, 1.0);
  out.weights.a.assign(levels, 1.0);
  out.weights.b.assign(levels, -1.0);
  for (std::size_t i = 0; i < levels; ++i) {
    if (!populated[i]) continue;
    if (!(q_regions[i] > 0.0)) throw Error(ErrorKind::division, "Q(R_i) = 0 on a populated region");
    double phi = p_regions[i] / q_regions[i];
    if (bounds) phi = std::clamp(phi, bounds->lower, bounds->upper);
    out.phi[i] = phi;
    out.weights.a[i] = std::log(phi) + 1.0;
    out.weights.b[i] = -phi;
  }
  return out;
}

inline OptimalPhi optimal_phi(std::span<const Label> labels, const CellMeasure& p, const CellMeasure& q,
                              std::size_t levels, const std::optional<PhiBounds>& bounds = std::nullopt) {
  detail::require_same_length(p.size(), q.size(), "measures differ in length");
  const auto pr = region_masses(labels, p, levels);
  const auto qr = region_masses(labels, q, levels);
  return optimal_phi_from_regions(pr, qr, populated_labels(labels, levels), bounds);
}

/// sum_i P(R_i) a_i + Q(R_i) b_i, from region masses.
///
/// Each term is evaluated as P log phi + (P - phi Q). Storing a = 1 + log phi
/// rounds log phi to about 1e-16 absolute, which swamps small divergences, so
/// when the pair is exactly what optimal_phi produces the log is recomputed
/// from b. The fma lets the rounding of phi cancel against that log.
inline double divergence_from_region_weights(std::span<const double> p_regions, std::span<const double> q_regions,
                                             const WeightPair& w) {
  detail::require_same_length(p_regions.size(), w.levels(), "weights and regions differ in length");
  double d = 0.0;
  for (std::size_t i = 0; i < p_regions.size(); ++i) {
    const double pr = p_regions[i], qr = q_regions[i], a = w.a[i], b = w.b[i];
    double log_phi = a - 1.0;
    if (b < 0.0 && std::log(-b) + 1.0 == a) log_phi = std::log(-b);
    d += detail::weighted(pr, log_phi) + (qr == 0.0 ? pr : std::fma(b, qr, pr));
  }
  return d;
}

inline double divergence_from_weights(std::span<const Label> labels, const CellMeasure& p, const CellMeasure& q,
                                      const WeightPair& w) {
  detail::require_same_length(w.a.size(), w.b.size(), "weight vectors differ in length");
  detail::require_same_length(p.size(), q.size(), "measures differ in length");
  const auto pr = region_masses(labels, p, w.levels());
  const auto qr = region_masses(labels, q, w.levels());
  return divergence_from_region_weights(pr, qr, w);
}

/// D(phi) = 1 + sum_i P(R_i) log phi_i - phi_i Q(R_i). Unpopulated labels
/// contribute nothing.
inline double population_divergence(const QuantizerRule& rule, const CellMeasure& p, const CellMeasure& q) {
  rule.validate();
  if (p.size() != rule.grid.cell_count() || q.size() != rule.grid.cell_count())
    throw Error(ErrorKind::incompatible_grid, "measures are not defined on the rule's grid");
  const auto pr = region_masses(rule.labels, p, rule.levels);
  const auto qr = region_masses(rule.labels, q, rule.levels);
  const auto used = populated_labels(rule.labels, rule.levels);
  double d = 1.0;
  for (std::size_t i = 0; i < rule.levels; ++i) {
    if (!used[i]) continue;
    if (!(rule.phi[i] > 0.0)) throw Error(ErrorKind::domain, "phi must be positive on populated regions");
    d += detail::weighted(pr[i], std::log(rule.phi[i])) - rule.phi[i] * qr[i];
  }
  return d;
}

/// D_n(phi) = 1 + mean_p log phi(X) - mean_q phi(Y). Out-of-box samples are
/// dropped from both the sums and the counts; each set is averaged over its
/// own kept count.
inline double empirical_divergence(const QuantizerRule& rule, const Samples& samples_p, const Samples& samples_q) {
  rule.validate();
  auto value_at = [&](std::span<const double> x) -> std::optional<double> {
    auto label = rule.label_of(x);
    if (!label) return std::nullopt;
    const double v = rule.phi[*label];
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::inconsistent_rule, "sample falls in a region whose phi is undefined");
    return v;
  };
  double sum_log = 0.0, sum_phi = 0.0;
  std::size_t np = 0, nq = 0;
  for (std::size_t i = 0; i < samples_p.size(); ++i) {
    if (auto v = value_at(samples_p[i])) {
      sum_log += std::log(*v);
      ++np;
    }
  }
  for (std::size_t i = 0; i < samples_q.size(); ++i) {
    if (auto v = value_at(samples_q[i])) {
      sum_phi += *v;
      ++nq;
    }
  }
  if (np == 0 || nq == 0) throw Error(ErrorKind::invalid_argument, "both sample sets need at least one in-box point");
  return 1.0 + sum_log / static_cast<double>(np) - sum_phi / static_cast<double>(nq);
}

}  // namespace edmq
