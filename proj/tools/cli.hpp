#pragma once

// Command-line front end. Kept in a header so tests can drive cli_main
// in-process.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "edmq/edmq.hpp"

namespace edmq::cli {

enum ExitCode : int { ok = 0, usage_error = 1, data_error = 2 };

namespace detail {

/// Writes through a sibling temp file and renames, so a failed run never
/// leaves a truncated output behind.
inline void write_file_atomically(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::malformed_file, "cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::malformed_file, "write failed for '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::malformed_file, "cannot move output into '" + path + "'");
  }
}

/// Expands `--config FILE` into flags: each `key = value` line becomes
/// `--key value...` inserted right after the subcommand, so explicit flags
/// given later on the command line win.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> out;
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (!config) return out;

  std::ifstream in(*config);
  if (!in) throw CLI::FileError::Missing(*config);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    std::istringstream key_stream(line.substr(0, eq));
    std::string key;
    if (!(key_stream >> key)) continue;
    if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + line);
    injected.push_back("--" + key);
    std::istringstream values(line.substr(eq + 1));
    for (std::string v; values >> v;) injected.push_back(v);
  }
  // out[0] is the subcommand (if any)
  const std::size_t at = out.empty() ? 0 : 1;
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return out;
}

struct GridFlags {
  std::size_t d = 1;
  std::size_t depth = 6;
  std::vector<double> box{-5.0, 5.0};

  void add(CLI::App& app) {
    app.add_option("--d", d, "dimension")->check(CLI::Range(1, 32));
    app.add_option("--J", depth, "dyadic depth")->check(CLI::Range(0, 32));
    app.add_option("--box", box, "box bounds lo hi (same on every axis)")->expected(2);
  }
  GridSpec grid() const { return GridSpec::cube(d, depth, box[0], box[1]); }
};

struct FGFlags {
  std::size_t levels = 2;
  double epsilon = 1e-6;
  std::size_t max_iterations = 100;
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
  std::optional<double> bound_m, bound_M;
  std::size_t threads = 1;

  void add(CLI::App& app) {
    app.add_option("--L", levels, "quantization levels")->check(CLI::Range(1, 65536));
    app.add_option("--epsilon", epsilon, "relative stopping threshold")->check(CLI::PositiveNumber);
    app.add_option("--max-iterations", max_iterations, "sweep cap per restart");
    app.add_option("--restarts", restarts, "random restarts")->check(CLI::Range(1, 1 << 20));
    app.add_option("--seed", seed, "master seed");
    app.add_option("--bound-m", bound_m, "lower bound m on phi");
    app.add_option("--bound-M", bound_M, "upper bound M on phi");
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
  }
  FGConfig config() const {
    FGConfig c;
    c.levels = levels;
    c.epsilon = epsilon;
    c.max_iterations = max_iterations;
    c.restarts = restarts;
    c.seed = seed;
    c.threads = threads;
    if (bound_m || bound_M) {
      if (!bound_m || !bound_M) throw CLI::ValidationError("--bound-m and --bound-M go together");
      c.bounds = PhiBounds{*bound_m, *bound_M};
    }
    return c;
  }
};

struct DistFlags {
  std::string p_kind, q_kind;
  double p_mean = 0.0, p_var = 1.0, q_mean = 0.0, q_var = 1.0;

  void add(CLI::App& app, bool required) {
    auto* p = app.add_option("--dist-p", p_kind, "gaussian | laplace");
    auto* q = app.add_option("--dist-q", q_kind, "gaussian | laplace");
    if (required) {
      p->required();
      q->required();
    }
    app.add_option("--p-mean", p_mean, "mean of every P axis");
    app.add_option("--p-var", p_var, "variance of every P axis")->check(CLI::PositiveNumber);
    app.add_option("--q-mean", q_mean, "mean of every Q axis");
    app.add_option("--q-var", q_var, "variance of every Q axis")->check(CLI::PositiveNumber);
  }
  bool given() const { return !p_kind.empty() || !q_kind.empty(); }
  static DistributionSpec make(const std::string& kind, std::size_t d, double mean, double var) {
    DistributionSpec s = DistributionSpec::standard(parse_distribution_kind(kind), d);
    s.mean.assign(d, mean);
    s.variance.assign(d, var);
    return s;
  }
  DistributionSpec p(std::size_t d) const { return make(p_kind, d, p_mean, p_var); }
  DistributionSpec q(std::size_t d) const { return make(q_kind, d, q_mean, q_var); }
};

inline nlohmann::json rule_json(const FGResult& r) {
  nlohmann::json j;
  j["divergence"] = r.divergence;
  j["iterations"] = r.iterations;
  j["restart"] = r.restart_index;
  j["phi"] = r.rule.phi;
  j["trace"] = r.trace;
  j["over_quantized"] = r.over_quantized;
  return j;
}

inline void emit_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") out << text;
  else write_file_atomically(path, text);
}

}  // namespace detail

/// Entry point. `args` excludes the program name.
inline int cli_main(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Divergence-maximizing quantizer design on dyadic grids", "edmq"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // design
  GridFlags design_grid;
  FGFlags design_fg;
  DistFlags design_dist;
  std::string samples_p, samples_q, design_out, design_summary;
  std::size_t design_n = 10000;
  auto* design = app.add_subcommand("design", "learn a quantizer from samples and write its RDP");
  design_grid.add(*design);
  design_fg.add(*design);
  design_dist.add(*design, false);
  design->add_option("--samples-p", samples_p, "CSV of samples from P");
  design->add_option("--samples-q", samples_q, "CSV of samples from Q");
  design->add_option("--n", design_n, "samples to draw per distribution when --dist-* are used");
  design->add_option("--out", design_out, "RDP output file")->required();
  design->add_option("--summary", design_summary, "JSON summary file (default: stdout)");

  // best-in-class
  GridFlags bic_grid;
  FGFlags bic_fg;
  DistFlags bic_dist;
  std::string bic_out, bic_summary;
  std::size_t bic_candidates = 10000;
  auto* bic = app.add_subcommand("best-in-class", "Flynn-Gray on exact cell probabilities");
  bic_grid.add(*bic);
  bic_fg.add(*bic);
  bic_dist.add(*bic, true);
  bic->add_option("--out", bic_out, "optional RDP output file");
  bic->add_option("--summary", bic_summary, "JSON summary file (default: stdout)");
  bic->add_option("--candidates", bic_candidates, "threshold grid size of the 1-D oracle")->check(CLI::Range(1, 1000000));

  // rate-experiment
  GridFlags rate_grid;
  FGFlags rate_fg;
  DistFlags rate_dist;
  std::vector<std::size_t> rate_n;
  std::size_t rate_trials = 20;
  std::string rate_out;
  auto* rate = app.add_subcommand("rate-experiment", "estimation-error study; writes one CSV row per trial");
  rate_grid.add(*rate);
  rate_fg.add(*rate);
  rate_dist.add(*rate, true);
  rate->add_option("--n", rate_n, "sample sizes (strictly increasing)")->required()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeAll);
  rate->add_option("--trials", rate_trials, "trials per sample size")->check(CLI::Range(1, 1000000));
  rate->add_option("--out", rate_out, "CSV output file (default: stdout)");

  // rdp-export / rdp-import
  GridFlags export_grid;
  std::size_t export_levels = 2;
  std::string export_labels, export_out;
  auto* rdp_export = app.add_subcommand("rdp-export", "labels file -> minimal RDP file");
  export_grid.add(*rdp_export);
  rdp_export->add_option("--L", export_levels, "number of levels")->check(CLI::Range(1, 65536));
  rdp_export->add_option("--labels", export_labels, "one label per line, cell order")->required();
  rdp_export->add_option("--out", export_out, "RDP output file")->required();

  std::string import_rdp, import_out;
  auto* rdp_import = app.add_subcommand("rdp-import", "RDP file -> labels file");
  rdp_import->add_option("--rdp", import_rdp, "RDP input file")->required();
  rdp_import->add_option("--out", import_out, "labels output (default: stdout)");

  // quantize
  std::string quant_rdp, quant_samples, quant_out;
  std::vector<double> quant_box{-5.0, 5.0};
  auto* quant = app.add_subcommand("quantize", "label samples with an RDP");
  quant->add_option("--rdp", quant_rdp, "RDP file")->required();
  quant->add_option("--samples", quant_samples, "sample CSV")->required();
  quant->add_option("--box", quant_box, "box the RDP was designed on")->expected(2);
  quant->add_option("--out", quant_out, "label CSV output (default: stdout)");

  try {
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage_error;
  }

  try {
    if (*design) {
      const GridSpec grid = design_grid.grid();
      const FGConfig cfg = design_fg.config();
      Samples xs, ys;
      std::optional<DistributionSpec> dp, dq;
      if (!samples_p.empty() || !samples_q.empty()) {
        if (samples_p.empty() || samples_q.empty() || design_dist.given()) {
          err << "design: give either --samples-p and --samples-q, or --dist-p and --dist-q\n";
          return usage_error;
        }
        xs = read_samples_csv(samples_p, grid.dimension);
        ys = read_samples_csv(samples_q, grid.dimension);
      } else {
        if (design_dist.p_kind.empty() || design_dist.q_kind.empty()) {
          err << "design: give either --samples-p and --samples-q, or --dist-p and --dist-q\n";
          return usage_error;
        }
        dp = design_dist.p(grid.dimension);
        dq = design_dist.q(grid.dimension);
        xs = sample(*dp, design_n, derive_seed(cfg.seed, {0}));
        ys = sample(*dq, design_n, derive_seed(cfg.seed, {1}));
      }
      const auto bp = bin_samples(grid, xs);
      const auto bq = bin_samples(grid, ys);
      if (bp.n_kept == 0 || bq.n_kept == 0) throw Error(ErrorKind::invalid_argument, "no samples inside the box");
      const auto p_hat = kt_probabilities(grid, bp.counts, bp.n_kept);
      const auto q_hat = kt_probabilities(grid, bq.counts, bq.n_kept);
      const auto result = run(grid, p_hat, q_hat, cfg);
      const auto tree = build_minimal_rdp(grid, result.rule.labels, cfg.levels);

      nlohmann::json s = rule_json(result);
      s["command"] = "design";
      s["d"] = grid.dimension;
      s["J"] = grid.depth;
      s["L"] = cfg.levels;
      s["box"] = design_grid.box;
      s["n_p"] = bp.n_kept;
      s["n_q"] = bq.n_kept;
      s["empirical_divergence"] = empirical_divergence(result.rule, xs, ys);
      s["leaf_count"] = tree.leaf_count();
      s["rdp"] = design_out;
      if (dp && dq) {
        s["population_divergence"] = population_divergence(result.rule, analytic_cell_probabilities(grid, *dp),
                                                           analytic_cell_probabilities(grid, *dq));
      }
      const auto bytes = serialize_rdp(tree);
      write_file_atomically(design_out, std::string(bytes.begin(), bytes.end()));
      emit_text(design_summary, s.dump(2) + "\n", out);
      return ok;
    }

    if (*bic) {
      const GridSpec grid = bic_grid.grid();
      const FGConfig cfg = bic_fg.config();
      const auto dp = bic_dist.p(grid.dimension);
      const auto dq = bic_dist.q(grid.dimension);
      const auto result = best_in_class(dp, dq, grid, cfg);
      const auto tree = build_minimal_rdp(grid, result.rule.labels, cfg.levels);
      nlohmann::json s = rule_json(result);
      s["command"] = "best-in-class";
      s["d"] = grid.dimension;
      s["J"] = grid.depth;
      s["L"] = cfg.levels;
      s["box"] = bic_grid.box;
      s["leaf_count"] = tree.leaf_count();
      if (grid.dimension == 1) {
        const double opt = optimal_divergence_1d(dp, dq, grid, cfg.levels, bic_candidates);
        s["optimal_divergence"] = opt;
        s["approximation_error"] = opt - result.divergence;
      }
      if (!bic_out.empty()) {
        const auto bytes = serialize_rdp(tree);
        write_file_atomically(bic_out, std::string(bytes.begin(), bytes.end()));
      }
      emit_text(bic_summary, s.dump(2) + "\n", out);
      return ok;
    }

    if (*rate) {
      RateExperimentConfig cfg;
      cfg.grid = rate_grid.grid();
      cfg.dist_p = rate_dist.p(cfg.grid.dimension);
      cfg.dist_q = rate_dist.q(cfg.grid.dimension);
      cfg.fg = rate_fg.config();
      cfg.sample_sizes = rate_n;
      cfg.trials = rate_trials;
      cfg.seed = rate_fg.seed;
      cfg.threads = rate_fg.threads;
      const auto rows = run_rate_experiment(cfg);
      std::ostringstream csv;
      write_rate_csv(csv, rows);
      emit_text(rate_out, csv.str(), out);
      if (!rate_out.empty() && rate_out != "-") {
        for (const auto& s : summarize(rows))
          out << "n=" << s.n << " trials=" << s.trials << " mean_loss=" << s.mean_loss
              << " mean_iterations=" << s.mean_iterations << '\n';
      }
      return ok;
    }

    if (*rdp_export) {
      const GridSpec grid = export_grid.grid();
      std::ifstream in(export_labels);
      if (!in) throw Error(ErrorKind::malformed_file, "cannot open '" + export_labels + "'");
      const auto labels = read_labels(in);
      if (labels.size() != grid.cell_count())
        throw Error(ErrorKind::malformed_file, "expected " + std::to_string(grid.cell_count()) + " labels, got " +
                                                   std::to_string(labels.size()));
      const auto tree = build_minimal_rdp(grid, labels, export_levels);
      const auto bytes = serialize_rdp(tree);
      write_file_atomically(export_out, std::string(bytes.begin(), bytes.end()));
      return ok;
    }

    if (*rdp_import) {
      const auto tree = deserialize_rdp(read_binary_file(import_rdp));
      const auto grid = GridSpec::unit(tree.dimension(), tree.max_depth());
      std::ostringstream text;
      text << "# d=" << tree.dimension() << " J=" << tree.max_depth() << " L=" << tree.levels()
           << " leaves=" << tree.leaf_count() << '\n';
      write_labels(text, to_labeling(tree, grid));
      emit_text(import_out, text.str(), out);
      return ok;
    }

    if (*quant) {
      const auto tree = deserialize_rdp(read_binary_file(quant_rdp));
      const auto grid = GridSpec::cube(tree.dimension(), tree.max_depth(), quant_box[0], quant_box[1]);
      const auto xs = read_samples_csv(quant_samples, grid.dimension);
      std::ostringstream text;
      text << "# label\n";
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (auto l = quantize(tree, grid, xs[i])) text << *l << '\n';
        else text << "outside\n";
      }
      emit_text(quant_out, text.str(), out);
      return ok;
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return data_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return data_error;
  }
  return usage_error;
}

}  // namespace edmq::cli
