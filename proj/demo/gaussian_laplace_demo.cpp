// Designs four-level quantizers for a 2-D Gaussian against a 2-D Laplace law
// on [-5, 5]^2, once from the exact cell masses and once from samples, and
// prints both label maps side by side.

#include <cstdio>

#include "edmq/edmq.hpp"

using namespace edmq;

namespace {

void print_maps(const GridSpec& g, const Labeling& a, const Labeling& b) {
  const std::size_t side = g.cells_per_axis();
  const char glyph[] = ".:o#";
  std::printf("\n  %-*s   %s\n", static_cast<int>(side), "best in class", "from samples");
  for (std::size_t row = side; row-- > 0;) {
    std::printf("  ");
    for (std::size_t col = 0; col < side; ++col) std::putchar(glyph[a[g.flat_index(std::vector{col, row})] % 4]);
    std::printf("   ");
    for (std::size_t col = 0; col < side; ++col) std::putchar(glyph[b[g.flat_index(std::vector{col, row})] % 4]);
    std::putchar('\n');
  }
}

}  // namespace

int main() {
  const auto grid = GridSpec::cube(2, 6, -5, 5);
  const auto p = DistributionSpec::standard(DistributionKind::gaussian, 2);
  const auto q = DistributionSpec::standard(DistributionKind::laplace, 2);
  FGConfig cfg;
  cfg.levels = 4;

  const auto best = best_in_class(p, q, grid, cfg);
  const auto fine_p = analytic_cell_probabilities(grid, p), fine_q = analytic_cell_probabilities(grid, q);
  std::printf("grid %zux%zu, L = %zu\n", grid.cells_per_axis(), grid.cells_per_axis(), cfg.levels);
  std::printf("KL of the fine cell masses      %.6f\n", kl_pmf(fine_p.probs, fine_q.probs));
  std::printf("best-in-class divergence        %.6f  (%zu iterations)\n", best.divergence, best.iterations);

  const std::size_t n = 100000;
  const auto xs = sample(p, n, derive_seed(1, {0})), ys = sample(q, n, derive_seed(1, {1}));
  const auto bp = bin_samples(grid, xs), bq = bin_samples(grid, ys);
  const auto est = run(grid, kt_probabilities(grid, bp.counts, bp.n_kept), kt_probabilities(grid, bq.counts, bq.n_kept),
                       cfg);
  std::printf("empirical divergence, n = %zu  %.6f  (%zu iterations)\n", n, est.divergence, est.iterations);
  std::printf("true divergence of that rule    %.6f\n", population_divergence(est.rule, fine_p, fine_q));

  const auto tree_best = build_minimal_rdp(grid, best.rule.labels, cfg.levels);
  const auto tree_est = build_minimal_rdp(grid, est.rule.labels, cfg.levels);
  std::printf("RDP leaves: %zu and %zu of %zu cells\n", tree_best.leaf_count(), tree_est.leaf_count(),
              grid.cell_count());

  print_maps(grid, best.rule.labels, est.rule.labels);
}
