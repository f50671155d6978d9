#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "edmq/divergence.hpp"
#include "edmq/error.hpp"
#include "edmq/grid.hpp"
#include "edmq/random.hpp"

namespace edmq {

struct FGConfig {
  std::size_t levels = 2;
  double epsilon = 1e-6;
  std::size_t max_iterations = 100;
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
  std::optional<PhiBounds> bounds;
  // Worker threads for independent restarts; results do not depend on it.
  std::size_t threads = 1;

  void validate() const {
    if (levels == 0) throw Error(ErrorKind::invalid_argument, "levels must be >= 1");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be > 0");
    if (restarts == 0) throw Error(ErrorKind::invalid_argument, "restarts must be >= 1");
    if (bounds) bounds->validate();
  }
};

/// One restart's history. `trace[l]` is D^(l) after the l-th weight refresh
/// (trace[0] is the random start); `relabel_trace[l]` is the intermediate
/// value after the (l+1)-th relabeling under the old weights.
struct RestartTrace {
  std::vector<double> trace;
  std::vector<double> relabel_trace;
  std::size_t iterations = 0;
};

struct FGResult {
  QuantizerRule rule;
  WeightPair weights;
  double divergence = 0.0;
  std::vector<double> trace;  // winning restart
  std::size_t iterations = 0;
  std::size_t restart_index = 0;
  std::vector<RestartTrace> restarts;
  bool over_quantized = false;  // more levels than cells
};

/// Relabels every cell with argmax_i P(S_k) a_i + Q(S_k) b_i; ties go to the
/// lowest label.
inline Labeling label_sweep(const CellMeasure& p, const CellMeasure& q, const WeightPair& w) {
  detail::require_same_length(p.size(), q.size(), "measures differ in length");
  detail::require_same_length(w.a.size(), w.b.size(), "weight vectors differ in length");
  if (w.levels() == 0) throw Error(ErrorKind::invalid_argument, "no levels");
  Labeling labels(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    Label best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < w.levels(); ++i) {
      const double s = detail::weighted(p.probs[k], w.a[i]) + detail::weighted(q.probs[k], w.b[i]);
      if (s > best_score) {
        best_score = s;
        best = static_cast<Label>(i);
      }
    }
    labels[k] = best;
  }
  return labels;
}

namespace detail {

struct RestartOutcome {
  Labeling labels;
  OptimalPhi phi;
  RestartTrace history;
};

inline RestartOutcome flynn_gray_restart(const CellMeasure& p, const CellMeasure& q, const FGConfig& cfg,
                                         std::uint64_t seed) {
  const std::size_t levels = cfg.levels;
  Rng rng(seed);
  Labeling labels(p.size());
  for (auto& l : labels) l = static_cast<Label>(rng.below(levels));

  auto pr = region_masses(labels, p, levels);
  auto qr = region_masses(labels, q, levels);
  auto phi = optimal_phi_from_regions(pr, qr, populated_labels(labels, levels), cfg.bounds);
  double current = divergence_from_region_weights(pr, qr, phi.weights);
  double intermediate = 0.0;

  RestartOutcome out;
  out.history.trace.push_back(current);

  for (std::size_t l = 0; l < cfg.max_iterations; ++l) {
    // Relative stopping rule on the last weight refresh. A non-positive
    // divergence has no meaningful relative change, so fall back to an
    // absolute test there. Before the first sweep the only stop is a start
    // whose regions are already indistinguishable.
    if (l == 0) {
      if (current == 0.0 && pr == qr) break;
    } else if (current > 0.0) {
      if ((current - intermediate) / current <= cfg.epsilon) break;
    } else if (current - intermediate <= cfg.epsilon * std::abs(current)) {
      break;
    }

    labels = label_sweep(p, q, phi.weights);
    pr = region_masses(labels, p, levels);
    qr = region_masses(labels, q, levels);
    intermediate = divergence_from_region_weights(pr, qr, phi.weights);
    phi = optimal_phi_from_regions(pr, qr, populated_labels(labels, levels), cfg.bounds);
    current = divergence_from_region_weights(pr, qr, phi.weights);

    out.history.relabel_trace.push_back(intermediate);
    out.history.trace.push_back(current);
    out.history.iterations = l + 1;
  }
  out.labels = std::move(labels);
  out.phi = std::move(phi);
  return out;
}

inline GridSpec implied_grid(std::size_t cells) {
  if (cells == 0 || (cells & (cells - 1)) != 0)
    throw Error(ErrorKind::invalid_grid, "cell count must be a power of two");
  return GridSpec::unit(1, static_cast<std::size_t>(std::countr_zero(cells)));
}

}  // namespace detail

/// Modified Flynn-Gray coordinate ascent over labelings of the grid cells.
///
/// Each restart draws i.i.d. uniform labels from Rng(seed + r), then
/// alternates relabeling under fixed weights with a weight refresh from the
/// new region masses until the refresh gains at most `epsilon` relative, or
/// `max_iterations` sweeps. The restart with the largest final divergence
/// wins (lowest index on ties).
inline FGResult run(const GridSpec& grid, const CellMeasure& p, const CellMeasure& q, const FGConfig& cfg) {
  cfg.validate();
  grid.validate();
  if (p.size() != q.size() || p.size() != grid.cell_count())
    throw Error(ErrorKind::incompatible_grid, "measures must both be defined on the grid");
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p.probs[k] > 0.0) || !(q.probs[k] > 0.0))
      throw Error(ErrorKind::requires_kt, "cell measures must be strictly positive (apply K-T preloading)");
  }

  std::vector<detail::RestartOutcome> outcomes(cfg.restarts);
  const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, cfg.restarts);
  if (workers == 1) {
    for (std::size_t r = 0; r < cfg.restarts; ++r) outcomes[r] = detail::flynn_gray_restart(p, q, cfg, cfg.seed + r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < cfg.restarts; r = next++)
          outcomes[r] = detail::flynn_gray_restart(p, q, cfg, cfg.seed + r);
      });
    }
  }

  std::size_t winner = 0;
  for (std::size_t r = 1; r < outcomes.size(); ++r)
    if (outcomes[r].history.trace.back() > outcomes[winner].history.trace.back()) winner = r;

  FGResult result;
  result.over_quantized = cfg.levels > p.size();
  result.restart_index = winner;
  result.divergence = outcomes[winner].history.trace.back();
  result.trace = outcomes[winner].history.trace;
  result.iterations = outcomes[winner].history.iterations;
  result.weights = outcomes[winner].phi.weights;
  result.rule.grid = grid;
  result.rule.levels = cfg.levels;
  result.rule.labels = outcomes[winner].labels;
  result.rule.phi = outcomes[winner].phi.phi;
  result.rule.bounds = cfg.bounds;
  result.restarts.reserve(outcomes.size());
  for (auto& o : outcomes) result.restarts.push_back(std::move(o.history));
  return result;
}

/// Grid-free form: the cells are treated as a 1-D dyadic grid on [0, 1].
inline FGResult run(const CellMeasure& p, const CellMeasure& q, const FGConfig& cfg) {
  return run(detail::implied_grid(p.size()), p, q, cfg);
}

struct ExhaustiveResult {
  Labeling labels;
  double divergence = -std::numeric_limits<double>::infinity();
};

/// Global maximum over all L^K labelings, each scored with its optimal
/// weights. Test oracle; refuses instances with more than `cap` labelings.
inline ExhaustiveResult exhaustive_max(const CellMeasure& p, const CellMeasure& q, std::size_t levels,
                                       std::uint64_t cap = 1'000'000) {
  detail::require_same_length(p.size(), q.size(), "measures differ in length");
  if (levels == 0) throw Error(ErrorKind::invalid_argument, "levels must be >= 1");
  const std::size_t cells = p.size();
  std::uint64_t total = 1;
  for (std::size_t k = 0; k < cells; ++k) {
    if (total > cap / levels) throw Error(ErrorKind::oracle_too_large, "too many labelings to enumerate");
    total *= levels;
  }
  if (total > cap) throw Error(ErrorKind::oracle_too_large, "too many labelings to enumerate");

  ExhaustiveResult best;
  Labeling labels(cells, 0);
  for (std::uint64_t count = 0; count < total; ++count) {
    const auto phi = optimal_phi(labels, p, q, levels);
    const double d = divergence_from_weights(labels, p, q, phi.weights);
    if (d > best.divergence) {
      best.divergence = d;
      best.labels = labels;
    }
    for (std::size_t k = 0; k < cells; ++k) {  // odometer increment
      if (++labels[k] < levels) break;
      labels[k] = 0;
    }
  }
  return best;
}

}  // namespace edmq
