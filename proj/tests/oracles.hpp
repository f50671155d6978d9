#pragma once

// Reference computations used as expected values. They deliberately avoid
// the library's own code paths: long double arithmetic, direct sums over
// cells, brute-force enumeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using ld = long double;

inline ld normal_cdf(ld x, ld mean = 0, ld var = 1) {
  return 0.5L * std::erfc(-(x - mean) / std::sqrt(2.0L * var));
}

inline ld laplace_cdf(ld x, ld mean = 0, ld var = 1) {
  const ld b = std::sqrt(var / 2.0L);
  const ld z = (x - mean) / b;
  return z < 0 ? 0.5L * std::exp(z) : 1.0L - 0.5L * std::exp(-z);
}

/// Sum p log(p/q) in long double, with 0 log 0 = 0.
inline ld kl(const std::vector<double>& p, const std::vector<double>& q) {
  ld s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) s += static_cast<ld>(p[i]) * std::log(static_cast<ld>(p[i]) / static_cast<ld>(q[i]));
  return s;
}

/// Strictly positive pmf with entries drawn from (0.05, 1] before normalization.
inline std::vector<double> random_pmf(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(n);
  for (auto& x : p) x = u(gen);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= s;
  return p;
}

inline std::vector<double> induced(const std::vector<std::uint32_t>& labels, const std::vector<double>& cells,
                                   std::size_t levels) {
  std::vector<double> r(levels, 0.0);
  for (std::size_t k = 0; k < labels.size(); ++k) r[labels[k]] += cells[k];
  return r;
}

/// Exact maximum of KL over every labeling into at most `levels` regions.
/// Cells are sorted by P/Q; an optimal partition groups them contiguously in
/// that order, so a DP over split points finds the global optimum.
inline ld best_grouping(const std::vector<double>& p, const std::vector<double>& q, std::size_t levels) {
  const std::size_t n = p.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] * q[b] < p[b] * q[a]; });
  std::vector<ld> cp(n + 1, 0), cq(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    cp[i + 1] = cp[i] + p[order[i]];
    cq[i + 1] = cq[i] + q[order[i]];
  }
  auto term = [&](std::size_t a, std::size_t b) {
    const ld pp = cp[b] - cp[a], qq = cq[b] - cq[a];
    return pp > 0 ? pp * std::log(pp / qq) : 0.0L;
  };
  const ld ninf = -std::numeric_limits<ld>::infinity();
  std::vector<ld> prev(n + 1, ninf), cur(n + 1, ninf);
  for (std::size_t j = 1; j <= n; ++j) prev[j] = term(0, j);
  ld best = prev[n];
  for (std::size_t l = 2; l <= levels; ++l) {
    std::fill(cur.begin(), cur.end(), ninf);
    for (std::size_t j = l; j <= n; ++j)
      for (std::size_t i = l - 1; i < j; ++i) cur[j] = std::max(cur[j], prev[i] + term(i, j));
    std::swap(prev, cur);
    best = std::max(best, prev[n]);
  }
  return best;
}

/// Brute force over all levels^cells labelings.
inline ld brute_force_max(const std::vector<double>& p, const std::vector<double>& q, std::size_t levels) {
  const std::size_t n = p.size();
  std::vector<std::uint32_t> labels(n, 0);
  ld best = -std::numeric_limits<ld>::infinity();
  while (true) {
    best = std::max(best, kl(induced(labels, p, levels), induced(labels, q, levels)));
    std::size_t k = 0;
    while (k < n && ++labels[k] == levels) labels[k++] = 0;
    if (k == n) break;
  }
  return best;
}

}  // namespace oracle
