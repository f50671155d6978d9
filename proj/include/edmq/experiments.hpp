#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <thread>
#include <tuple>
#include <vector>

#include "edmq/distribution.hpp"
#include "edmq/divergence.hpp"
#include "edmq/error.hpp"
#include "edmq/flynn_gray.hpp"
#include "edmq/grid.hpp"
#include "edmq/random.hpp"

namespace edmq {

/// Flynn-Gray on the exact cell masses of the two distributions.
inline FGResult best_in_class(const DistributionSpec& dist_p, const DistributionSpec& dist_q, const GridSpec& grid,
                              const FGConfig& cfg) {
  const auto p = analytic_cell_probabilities(grid, dist_p);
  const auto q = analytic_cell_probabilities(grid, dist_q);
  return run(grid, p, q, cfg);
}

namespace detail {

/// Log-likelihood ratio log q(x) - log p(x) of two univariate laws on a
/// closed interval, split into pieces on which it is monotone.
class LogRatio1D {
 public:
  LogRatio1D(const DistributionSpec& p, const DistributionSpec& q, double lo, double hi, std::size_t scan = 20000)
      : p_(p), q_(q), lo_(lo), hi_(hi) {
    p_box_ = p_.axis_mass(0, lo_, hi_);
    q_box_ = q_.axis_mass(0, lo_, hi_);
    if (!(p_box_ > 0.0) || !(q_box_ > 0.0)) throw Error(ErrorKind::domain, "no mass on the box");

    std::vector<double> xs(scan + 1), vs(scan + 1);
    for (std::size_t i = 0; i <= scan; ++i) {
      xs[i] = i == scan ? hi_ : lo_ + (hi_ - lo_) * static_cast<double>(i) / static_cast<double>(scan);
      vs[i] = (*this)(xs[i]);
    }
    breaks_.push_back(lo_);
    int last_sign = 0;
    for (std::size_t i = 1; i <= scan; ++i) {
      const double dv = vs[i] - vs[i - 1];
      const int sign = dv > 0.0 ? 1 : (dv < 0.0 ? -1 : 0);
      if (sign == 0) continue;
      if (last_sign != 0 && sign != last_sign) {
        // extremum in [x_{i-2}, x_i]; refine by golden section
        const double a = xs[i >= 2 ? i - 2 : 0], b = xs[i];
        breaks_.push_back(refine_extremum(a, b, last_sign > 0));
      }
      last_sign = sign;
    }
    breaks_.push_back(hi_);
    for (double b : breaks_) {
      const double v = (*this)(b);
      min_ = std::min(min_, v);
      max_ = std::max(max_, v);
    }
  }

  double operator()(double x) const { return q_.axis_log_pdf(0, x) - p_.axis_log_pdf(0, x); }
  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  std::size_t piece_count() const noexcept { return breaks_.size() - 1; }

  /// Normalized box masses of {x : llr(x) < u} under p and under q.
  std::pair<double, double> below(double u) const {
    if (u <= min_) return {0.0, 0.0};
    if (u > max_) return {1.0, 1.0};
    double mp = 0.0, mq = 0.0;
    for (std::size_t j = 0; j + 1 < breaks_.size(); ++j) {
      const double a = breaks_[j], b = breaks_[j + 1];
      if (!(b > a)) continue;
      const double va = (*this)(a), vb = (*this)(b);
      double x0 = a, x1 = b;
      if (vb >= va) {  // increasing: [a, x*)
        if (u <= va) continue;
        if (u <= vb) x1 = crossing(a, b, u, true);
      } else {  // decreasing: (x*, b]
        if (u <= vb) continue;
        if (u <= va) x0 = crossing(a, b, u, false);
      }
      mp += p_.axis_mass(0, x0, x1);
      mq += q_.axis_mass(0, x0, x1);
    }
    return {std::min(1.0, mp / p_box_), std::min(1.0, mq / q_box_)};
  }

 private:
  double refine_extremum(double a, double b, bool maximum) const {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double x) { return maximum ? (*this)(x) : -(*this)(x); };
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
      if (fc >= fd) {
        b = d; d = c; fd = fc;
        c = b - g * (b - a); fc = f(c);
      } else {
        a = c; c = d; fc = fd;
        d = a + g * (b - a); fd = f(d);
      }
    }
    return 0.5 * (a + b);
  }

  // Point in [a, b] where the monotone llr crosses u.
  double crossing(double a, double b, double u, bool increasing) const {
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      const bool below_u = (*this)(m) < u;
      if (below_u == increasing) a = m;
      else b = m;
    }
    return 0.5 * (a + b);
  }

  const DistributionSpec& p_;
  const DistributionSpec& q_;
  double lo_, hi_;
  double p_box_ = 1.0, q_box_ = 1.0;
  std::vector<double> breaks_;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

inline double kl_term(double p, double q) {
  if (p <= 0.0) return 0.0;
  if (q <= 0.0) return std::numeric_limits<double>::infinity();
  return p * std::log(p / q);
}

}  // namespace detail

struct ThresholdRule1D {
  double divergence = 0.0;
  std::vector<double> thresholds;  // on log(q/p), increasing, L-1 of them at most
};

/// Best L-level rule obtained by thresholding the likelihood ratio, with
/// region masses taken exactly from the CDFs (renormalized to the grid box).
///
/// `candidates` equally spaced log-ratio thresholds seed a global dynamic
/// program over contiguous groupings; the chosen thresholds are then polished
/// by golden-section coordinate ascent on the continuous values.
inline ThresholdRule1D likelihood_ratio_threshold_rule(const DistributionSpec& dist_p, const DistributionSpec& dist_q,
                                                       const GridSpec& grid, std::size_t levels,
                                                       std::size_t candidates = 10000) {
  if (grid.dimension != 1 || dist_p.dimension != 1 || dist_q.dimension != 1)
    throw Error(ErrorKind::unsupported, "the threshold oracle is one-dimensional");
  grid.validate();
  dist_p.validate();
  dist_q.validate();
  if (levels == 0) throw Error(ErrorKind::invalid_argument, "levels must be >= 1");
  if (candidates < 1) throw Error(ErrorKind::invalid_argument, "need at least one candidate threshold");

  const detail::LogRatio1D llr(dist_p, dist_q, grid.lower[0], grid.upper[0]);
  ThresholdRule1D out;
  if (levels == 1 || !(llr.max() - llr.min() > 1e-12)) return out;

  // positions 0..N+1: G = 0, G(t_1), ..., G(t_N), G = 1
  const std::size_t n = candidates;
  std::vector<double> t(n + 2), gp(n + 2), gq(n + 2);
  const double span = llr.max() - llr.min();
  t[0] = -std::numeric_limits<double>::infinity();
  t[n + 1] = std::numeric_limits<double>::infinity();
  gp[n + 1] = gq[n + 1] = 1.0;
  for (std::size_t j = 1; j <= n; ++j) {
    t[j] = llr.min() + span * static_cast<double>(j) / static_cast<double>(n + 1);
    std::tie(gp[j], gq[j]) = llr.below(t[j]);
  }

  const std::size_t last = n + 1;
  auto cost = [&](std::size_t i, std::size_t j) { return detail::kl_term(gp[j] - gp[i], gq[j] - gq[i]); };
  std::vector<double> prev(last + 1), cur(last + 1);
  std::vector<std::vector<std::uint32_t>> arg(levels, std::vector<std::uint32_t>(last + 1, 0));
  for (std::size_t j = 0; j <= last; ++j) prev[j] = cost(0, j);
  for (std::size_t l = 1; l < levels; ++l) {
    const bool final_layer = l + 1 == levels;
    for (std::size_t j = final_layer ? last : 0; j <= last; ++j) {
      double best = prev[j];  // fewer groups
      std::uint32_t best_i = static_cast<std::uint32_t>(j);
      for (std::size_t i = 0; i < j; ++i) {
        const double v = prev[i] + cost(i, j);
        if (v > best) {
          best = v;
          best_i = static_cast<std::uint32_t>(i);
        }
      }
      cur[j] = best;
      arg[l][j] = best_i;
    }
    std::swap(prev, cur);
  }
  double best = prev[last];

  std::vector<std::size_t> cuts;
  for (std::size_t l = levels - 1, j = last; l >= 1; --l) {
    const std::size_t i = arg[l][j];
    if (i != j && i != 0) cuts.push_back(i);
    j = i;
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> u;
  for (std::size_t c : cuts) u.push_back(t[c]);

  // Continuous polish.
  auto total = [&](const std::vector<double>& th) {
    double d = 0.0, prev_p = 0.0, prev_q = 0.0;
    for (double x : th) {
      auto [a, b] = llr.below(x);
      d += detail::kl_term(a - prev_p, b - prev_q);
      prev_p = a;
      prev_q = b;
    }
    return d + detail::kl_term(1.0 - prev_p, 1.0 - prev_q);
  };
  double value = u.empty() ? best : total(u);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 100 && !u.empty(); ++sweep) {
    const double before = value;
    for (std::size_t i = 0; i < u.size(); ++i) {
      double a = i == 0 ? llr.min() : u[i - 1];
      double b = i + 1 == u.size() ? llr.max() : u[i + 1];
      auto f = [&](double x) {
        auto trial = u;
        trial[i] = x;
        return total(trial);
      };
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = f(c), fd = f(d);
      for (int it = 0; it < 80 && b - a > 1e-13 * (1.0 + std::abs(a)); ++it) {
        if (fc >= fd) {
          b = d; d = c; fd = fc;
          c = b - g * (b - a); fc = f(c);
        } else {
          a = c; c = d; fc = fd;
          d = a + g * (b - a); fd = f(d);
        }
      }
      const double x = 0.5 * (a + b);
      const double fx = f(x);
      if (fx > value) {
        u[i] = x;
        value = fx;
      }
    }
    if (value - before <= 1e-15) break;
  }

  out.divergence = std::max(best, value);
  out.thresholds = std::move(u);
  return out;
}

/// D of the best likelihood-ratio-threshold rule with L levels on the grid box.
inline double optimal_divergence_1d(const DistributionSpec& dist_p, const DistributionSpec& dist_q,
                                    const GridSpec& grid, std::size_t levels, std::size_t candidates = 10000) {
  return likelihood_ratio_threshold_rule(dist_p, dist_q, grid, levels, candidates).divergence;
}

struct RateExperimentConfig {
  DistributionSpec dist_p;
  DistributionSpec dist_q;
  GridSpec grid;
  std::vector<std::size_t> sample_sizes;
  std::size_t trials = 20;
  FGConfig fg;  // shared by the best-in-class run and every trial
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const {
    grid.validate();
    fg.validate();
    dist_p.validate();
    dist_q.validate();
    if (trials == 0) throw Error(ErrorKind::invalid_argument, "trials must be >= 1");
    if (sample_sizes.empty()) throw Error(ErrorKind::invalid_argument, "need at least one sample size");
    for (std::size_t i = 1; i < sample_sizes.size(); ++i)
      if (sample_sizes[i] <= sample_sizes[i - 1])
        throw Error(ErrorKind::invalid_argument, "sample sizes must be strictly increasing");
  }
};

struct RateRow {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::size_t iterations = 0;
  double d_hat = 0.0;   // population divergence of the learned rule
  double d_best = 0.0;  // best-in-class divergence
  double loss = 0.0;    // d_best - d_hat

  friend bool operator==(const RateRow&, const RateRow&) = default;
};

/// One trial: fresh samples from both laws, K-T cell estimates, Flynn-Gray,
/// then the learned rule scored against the exact cell masses.
inline RateRow rate_trial(const RateExperimentConfig& cfg, const CellMeasure& p_exact, const CellMeasure& q_exact,
                          double d_best, std::size_t n, std::size_t trial) {
  const auto xs = sample(cfg.dist_p, n, derive_seed(cfg.seed, {n, trial, 0}));
  const auto ys = sample(cfg.dist_q, n, derive_seed(cfg.seed, {n, trial, 1}));
  const auto bp = bin_samples(cfg.grid, xs);
  const auto bq = bin_samples(cfg.grid, ys);
  const auto p_hat = kt_probabilities(cfg.grid, bp.counts, bp.n_kept);
  const auto q_hat = kt_probabilities(cfg.grid, bq.counts, bq.n_kept);
  FGConfig fg = cfg.fg;
  fg.seed = derive_seed(cfg.seed, {n, trial, 2});
  fg.threads = 1;
  const auto learned = run(cfg.grid, p_hat, q_hat, fg);

  RateRow row;
  row.n = n;
  row.trial = trial;
  row.iterations = learned.iterations;
  row.d_hat = population_divergence(learned.rule, p_exact, q_exact);
  row.d_best = d_best;
  row.loss = d_best - row.d_hat;
  return row;
}

/// Rows ordered by (n, trial). Every trial derives its random streams from
/// (seed, n, trial), so the output does not depend on `threads`.
inline std::vector<RateRow> run_rate_experiment(const RateExperimentConfig& cfg, const FGResult& best) {
  cfg.validate();
  const auto p_exact = analytic_cell_probabilities(cfg.grid, cfg.dist_p);
  const auto q_exact = analytic_cell_probabilities(cfg.grid, cfg.dist_q);

  const std::size_t tasks = cfg.sample_sizes.size() * cfg.trials;
  std::vector<RateRow> rows(tasks);
  auto work = [&](std::size_t t) {
    rows[t] = rate_trial(cfg, p_exact, q_exact, best.divergence, cfg.sample_sizes[t / cfg.trials], t % cfg.trials);
  };
  const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, tasks);
  if (workers == 1) {
    for (std::size_t t = 0; t < tasks; ++t) work(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) work(t);
      });
  }
  return rows;
}

inline std::vector<RateRow> run_rate_experiment(const RateExperimentConfig& cfg) {
  cfg.validate();
  FGConfig bic = cfg.fg;
  bic.threads = cfg.threads;
  return run_rate_experiment(cfg, best_in_class(cfg.dist_p, cfg.dist_q, cfg.grid, bic));
}

struct RateSummary {
  std::size_t n = 0;
  std::size_t trials = 0;
  double mean_loss = 0.0;
  double mean_d_hat = 0.0;
  double mean_iterations = 0.0;
};

inline std::vector<RateSummary> summarize(const std::vector<RateRow>& rows) {
  std::map<std::size_t, RateSummary> by_n;
  for (const auto& r : rows) {
    auto& s = by_n[r.n];
    s.n = r.n;
    ++s.trials;
    s.mean_loss += r.loss;
    s.mean_d_hat += r.d_hat;
    s.mean_iterations += static_cast<double>(r.iterations);
  }
  std::vector<RateSummary> out;
  for (auto& [n, s] : by_n) {
    const double k = static_cast<double>(s.trials);
    s.mean_loss /= k;
    s.mean_d_hat /= k;
    s.mean_iterations /= k;
    out.push_back(s);
  }
  return out;
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::invalid_argument, "need two or more points");
  double mx = 0.0, my = 0.0;
  const double k = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::domain, "log-log fit needs positive values");
    mx += std::log(x[i]) / k;
    my += std::log(y[i]) / k;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace edmq
