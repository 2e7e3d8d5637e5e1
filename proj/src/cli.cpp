#include "ranknosh/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ranknosh/analysis.hpp"
#include "ranknosh/baselines.hpp"
#include "ranknosh/config.hpp"
#include "ranknosh/errors.hpp"
#include "ranknosh/json_io.hpp"
#include "ranknosh/report.hpp"

namespace ranknosh {

namespace fs = std::filesystem;

namespace {

// Relative benchmark paths that do not exist as given are looked up under
// $RANKNOSH_BENCH_DIR.
fs::path resolve_benchmark(const std::string& flag, const std::string& from_config) {
  const std::string chosen = flag.empty() ? from_config : flag;
  if (chosen.empty()) throw ConfigError("no benchmark given (--benchmark or benchmark_path)");
  fs::path p(chosen);
  if (!fs::exists(p) && p.is_relative()) {
    if (const char* dir = std::getenv("RANKNOSH_BENCH_DIR")) {
      fs::path alt = fs::path(dir) / p;
      if (fs::exists(alt)) return alt;
    }
  }
  if (!fs::exists(p)) throw BenchmarkError("benchmark file '" + p.string() + "' not found");
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

template <typename F>
void write_stream(const fs::path& path, F&& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  f(out);
}

struct Common {
  std::string config;
  std::string benchmark;
  std::string out_dir = "ranknosh-out";
  int seeds = 1;
  std::uint64_t seed_base = 0;
};

void add_common(CLI::App* app, Common& c, bool needs_config) {
  auto* opt = app->add_option("--config", c.config, "flat key = value config file");
  if (needs_config) opt->required();
  app->add_option("--benchmark", c.benchmark, "benchmark JSON Lines file");
  app->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  app->add_option("--seeds", c.seeds, "number of seeds")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--seed-base", c.seed_base, "first seed")->capture_default_str();
}

nlohmann::json base_manifest(const std::string& command, const Common& c) {
  return {{"tool", "ranknosh"}, {"version", kToolVersion}, {"command", command}, {"seed_base", c.seed_base}};
}

void attach_benchmark(nlohmann::json& m, const fs::path& path, const BenchmarkTable& t) {
  m["benchmark"] = {{"path", path.string()},
                    {"checksum", file_checksum(path)},
                    {"space", t.space().name},
                    {"records", t.size()},
                    {"max_epoch", t.max_epoch()}};
}

using Runner = std::function<SearchResult(std::uint64_t seed)>;

// Runs every seed, writes per-seed reports, the aggregate and the manifest.
void run_seeds(const std::string& command, const Common& c, const RunConfig& cfg, const fs::path& bench_path,
               const BenchmarkTable& table, const Runner& runner, nlohmann::json extra, std::ostream& out) {
  fs::create_directories(c.out_dir);
  nlohmann::json manifest = base_manifest(command, c);
  manifest["config"] = config_to_json(cfg);
  attach_benchmark(manifest, bench_path, table);
  for (auto& [k, v] : extra.items()) manifest[k] = v;
  manifest["runs"] = nlohmann::json::array();
  std::vector<double> val, test, final_val, budget;
  for (int i = 0; i < c.seeds; ++i) {
    const std::uint64_t seed = c.seed_base + static_cast<std::uint64_t>(i);
    const auto t0 = std::chrono::steady_clock::now();
    SearchResult r = runner(seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path dir = fs::path(c.out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    write_json(dir / "report.json", result_to_json(r));
    write_text(dir / "report.txt", result_to_text(r));
    write_stream(dir / "rounds.csv", [&](std::ostream& o) { write_round_log_csv(r.per_round_log, o); });
    write_stream(dir / "loss.csv", [&](std::ostream& o) { write_loss_trace_csv(r.loss_traces, o); });
    manifest["runs"].push_back({{"seed", seed}, {"wall_clock_seconds", secs}, {"dir", dir.string()}});
    val.push_back(r.best_val_acc);
    test.push_back(r.best_test_acc);
    final_val.push_back(r.best_final_val_acc);
    budget.push_back(static_cast<double>(r.total_budget_epochs));
    out << command << " seed " << seed << ": val " << format_double(r.best_val_acc) << " test "
        << format_double(r.best_test_acc) << " budget " << r.total_budget_epochs << "\n";
  }
  CsvTable agg{{"metric", "mean", "std"}, {}};
  nlohmann::json aggj;
  for (const auto& [name, xs] : std::vector<std::pair<std::string, std::vector<double>*>>{
           {"best_val_acc", &val}, {"best_test_acc", &test}, {"best_final_val_acc", &final_val},
           {"total_budget_epochs", &budget}}) {
    const MeanStd ms = mean_std(*xs);
    agg.rows.push_back({name, format_double(ms.mean), format_double(ms.std)});
    aggj[name] = {{"mean", ms.mean}, {"std", ms.std}};
    out << name << " " << format_double(ms.mean) << " +- " << format_double(ms.std) << "\n";
  }
  write_stream(fs::path(c.out_dir) / "aggregate.csv", [&](std::ostream& o) { write_csv(agg, o); });
  write_json(fs::path(c.out_dir) / "aggregate.json", aggj);
  write_json(fs::path(c.out_dir) / "manifest.json", manifest);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RANK-NOSH architecture search on tabular benchmarks", "ranknosh"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common run_c;
  auto* run_cmd = app.add_subcommand("run", "RANK-NOSH search from a config file");
  add_common(run_cmd, run_c, true);

  Common base_c;
  std::string base_name;
  auto* base_cmd = app.add_subcommand("baseline", "comparison methods");
  base_cmd->add_option("name", base_name, "random | prior | rank-es | rank-full")
      ->required()
      ->check(CLI::IsMember({"random", "prior", "rank-es", "rank-full"}));
  add_common(base_cmd, base_c, true);

  Common an_c;
  std::string an_kind;
  int an_epoch = 0;
  double an_quantile = 0.5;
  double an_top = 0.01;
  std::string an_metric;
  auto* an_cmd = app.add_subcommand("analyze", "benchmark statistics");
  an_cmd->add_option("kind", an_kind, "spearman | survival | trajectory | prior-corr")
      ->required()
      ->check(CLI::IsMember({"spearman", "survival", "trajectory", "prior-corr"}));
  an_cmd->add_option("--benchmark", an_c.benchmark, "benchmark JSON Lines file")->required();
  an_cmd->add_option("--out-dir", an_c.out_dir, "output directory")->capture_default_str();
  an_cmd->add_option("--epoch", an_epoch, "epoch compared against the final one (spearman, survival)");
  an_cmd->add_option("--quantile", an_quantile, "bottom fraction (survival)")->capture_default_str();
  an_cmd->add_option("--metric", an_metric, "prior metric (prior-corr)");
  an_cmd->add_option("--top-quantile", an_top, "top fraction (prior-corr)")->capture_default_str();

  Common gen_c;
  std::string gen_preset, gen_space = "nb201", gen_out, gen_sparse;
  std::size_t gen_count = 5000;
  double gen_stability = 0.7, gen_noise = 0.005;
  int gen_max_epoch = 200;
  std::uint64_t gen_seed = 0;
  SyntheticOptions gen_opts;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic benchmark");
  gen_cmd->add_option("--preset", gen_preset, "take space, max epoch and sparse epochs from a search preset");
  gen_cmd->add_option("--space", gen_space, "space name")->capture_default_str();
  gen_cmd->add_option("--count", gen_count, "architectures")->capture_default_str();
  gen_cmd->add_option("--stability", gen_stability, "target early-epoch rank correlation")->capture_default_str();
  gen_cmd->add_option("--noise", gen_noise, "per-epoch accuracy noise (fraction)")->capture_default_str();
  gen_cmd->add_option("--max-epoch", gen_max_epoch, "final epoch")->capture_default_str();
  gen_cmd->add_option("--sparse-epochs", gen_sparse, "comma-separated listed epochs");
  gen_cmd->add_option("--quality-noise", gen_opts.quality_noise, "noise on structural quality")->capture_default_str();
  gen_cmd->add_option("--prior-noise", gen_opts.prior_noise, "noise on the prior score")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "benchmark path (default <out-dir>/benchmark.jsonl)");
  gen_cmd->add_option("--out-dir", gen_c.out_dir, "output directory")->capture_default_str();

  Common ab_c;
  std::string ab_kind, ab_values;
  auto* ab_cmd = app.add_subcommand("ablate", "schedule or move-ratio sweeps");
  ab_cmd->add_option("kind", ab_kind, "schedule | ratio")->required()->check(CLI::IsMember({"schedule", "ratio"}));
  ab_cmd->add_option("--values", ab_values,
                     "ratio: comma list applied to levels >= 1; schedule: ';'-separated epoch lists")
      ->required();
  add_common(ab_cmd, ab_c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (run_cmd->parsed()) {
      RunConfig cfg = load_config(run_c.config);
      const fs::path bp = resolve_benchmark(run_c.benchmark, cfg.benchmark_path);
      const BenchmarkTable table = load_benchmark(bp);
      cfg.search.validate_against(table);
      const std::int64_t closed = closed_form_budget(cfg.search);
      nlohmann::json extra{{"closed_form_budget", closed}};
      if (const auto ref = reference_budget(cfg.search)) {
        extra["reference_budget"] = *ref;
        extra["budget_gap"] = closed - *ref;
        if (closed != *ref) {
          out << "note: closed-form budget " << closed << " differs from the quoted " << *ref << " by "
              << closed - *ref << " epochs\n";
        }
      }
      run_seeds("run", run_c, cfg, bp, table,
                [&](std::uint64_t s) {
                  SearchConfig sc = cfg.search;
                  sc.seed = s;
                  return run(sc, table);
                },
                extra, out);
    } else if (base_cmd->parsed()) {
      RunConfig cfg = load_config(base_c.config);
      const fs::path bp = resolve_benchmark(base_c.benchmark, cfg.benchmark_path);
      const BenchmarkTable table = load_benchmark(bp);
      const std::int64_t nosh_budget = closed_form_budget(cfg.search);
      nlohmann::json extra{{"baseline", base_name}};
      Runner runner;
      if (base_name == "random") {
        const std::int64_t b = cfg.random_budget_epochs > 0 ? cfg.random_budget_epochs : nosh_budget;
        extra["budget_epochs"] = b;
        runner = [&table, b](std::uint64_t s) { return random_search(table, b, s); };
      } else if (base_name == "prior") {
        runner = [&](std::uint64_t s) { return prior_only(table, cfg.prior_sample_count, cfg.search.prior_metric, s); };
      } else {
        const SearchConfig es = cfg.es_search();
        int t = table.max_epoch();
        if (base_name == "rank-es") {
          t = cfg.es_truncation_epochs > 0 ? cfg.es_truncation_epochs
                                           : equal_budget_truncation(table, nosh_budget, es.max_pool);
        }
        extra["truncation_epochs"] = t;
        runner = [&table, es, t](std::uint64_t s) {
          SearchConfig sc = es;
          sc.seed = s;
          return rank_es(sc, table, t);
        };
      }
      run_seeds("baseline " + base_name, base_c, cfg, bp, table, runner, extra, out);
    } else if (an_cmd->parsed()) {
      const fs::path bp = resolve_benchmark(an_c.benchmark, "");
      const BenchmarkTable table = load_benchmark(bp);
      fs::create_directories(an_c.out_dir);
      nlohmann::json manifest = base_manifest("analyze " + an_kind, an_c);
      attach_benchmark(manifest, bp, table);
      CsvTable t;
      if (an_kind == "spearman" || an_kind == "survival") {
        if (an_epoch < 1) throw ConfigError("--epoch is required");
        const double v = an_kind == "spearman" ? epoch_spearman(table, an_epoch)
                                               : survival_fraction(table, an_epoch, an_quantile);
        t = {{"epoch", an_kind}, {{std::to_string(an_epoch), format_double(v)}}};
        manifest["epoch"] = an_epoch;
        if (an_kind == "survival") manifest["quantile"] = an_quantile;
      } else if (an_kind == "trajectory") {
        t.header = {"epoch", "spearman"};
        for (const auto& [e, rho] : spearman_trajectory(table)) t.rows.push_back({std::to_string(e), format_double(rho)});
      } else {
        const std::string metric = an_metric.empty() ? table.prior_metrics().at(0) : an_metric;
        const PriorCorrelation pc = prior_correlation(table, metric, an_top);
        t = {{"metric", "whole_space", "top_subset", "top_count"},
             {{metric, format_double(pc.whole_space), format_double(pc.top_subset), std::to_string(pc.top_count)}}};
        manifest["metric"] = metric;
        manifest["top_quantile"] = an_top;
      }
      write_csv(t, out);
      const fs::path csv = fs::path(an_c.out_dir) / (an_kind + ".csv");
      write_stream(csv, [&](std::ostream& o) { write_csv(t, o); });
      write_json(fs::path(an_c.out_dir) / "manifest.json", manifest);
    } else if (gen_cmd->parsed()) {
      SearchSpaceSpec space = spaces::by_name(gen_space);
      if (!gen_preset.empty()) {
        PresetBench pb = preset_bench(gen_preset);
        space = pb.space;
        gen_max_epoch = pb.max_epoch;
        gen_opts.sparse_epochs = pb.sparse_epochs;
      }
      if (!gen_sparse.empty()) gen_opts.sparse_epochs = parse_int_list(gen_sparse);
      fs::create_directories(gen_c.out_dir);
      const fs::path path = gen_out.empty() ? fs::path(gen_c.out_dir) / "benchmark.jsonl" : fs::path(gen_out);
      const auto t0 = std::chrono::steady_clock::now();
      const BenchmarkTable table =
          generate_synthetic(space, gen_count, gen_stability, gen_noise, gen_max_epoch, gen_seed, gen_opts);
      save_benchmark(table, path);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      nlohmann::json manifest = base_manifest("gen-synthetic", gen_c);
      manifest["generator"] = {{"space", space.name},        {"count", gen_count},
                               {"stability", gen_stability}, {"noise", gen_noise},
                               {"max_epoch", gen_max_epoch}, {"sparse_epochs", gen_opts.sparse_epochs},
                               {"quality_noise", gen_opts.quality_noise},
                               {"prior_noise", gen_opts.prior_noise}, {"seed", gen_seed}};
      attach_benchmark(manifest, path, table);
      manifest["runs"] = {{{"seed", gen_seed}, {"wall_clock_seconds", secs}}};
      write_json(fs::path(gen_c.out_dir) / "manifest.json", manifest);
      out << "wrote " << table.size() << " records to " << path.string() << "\n";
    } else if (ab_cmd->parsed()) {
      RunConfig cfg = load_config(ab_c.config);
      const fs::path bp = resolve_benchmark(ab_c.benchmark, cfg.benchmark_path);
      const BenchmarkTable table = load_benchmark(bp);
      std::vector<std::pair<std::string, Schedule>> variants;
      if (ab_kind == "ratio") {
        for (const Ratio& r : parse_ratio_list(ab_values)) {
          Schedule s = cfg.search.schedule;
          for (std::size_t l = 1; l < s.move_ratios.size(); ++l) s.move_ratios[l] = r;
          variants.emplace_back(r.str(), s);
        }
      } else {
        std::istringstream is(ab_values);
        std::string item;
        while (std::getline(is, item, ';')) {
          Schedule s;
          s.epochs = parse_int_list(item);
          s.move_ratios = default_move_ratios(s.levels());
          std::string label;
          for (std::size_t i = 0; i < s.epochs.size(); ++i) label += (i ? "-" : "") + std::to_string(s.epochs[i]);
          variants.emplace_back(label, s);
        }
      }
      fs::create_directories(ab_c.out_dir);
      CsvTable t{{"value", "budget_epochs", "val_mean", "val_std", "test_mean", "test_std"}, {}};
      for (const auto& [label, sched] : variants) {
        RunConfig v = cfg;
        v.search.schedule = sched;
        v.search.validate_against(table);
        Common sub = ab_c;
        sub.out_dir = (fs::path(ab_c.out_dir) / label).string();
        std::ostringstream sink;
        run_seeds("ablate " + ab_kind + " " + label, sub, v, bp, table,
                  [&](std::uint64_t s) {
                    SearchConfig sc = v.search;
                    sc.seed = s;
                    return run(sc, table);
                  },
                  nlohmann::json::object(), sink);
        std::ifstream agg(fs::path(sub.out_dir) / "aggregate.json");
        const auto a = nlohmann::json::parse(agg);
        t.rows.push_back({label, std::to_string(closed_form_budget(v.search)),
                          format_double(a["best_val_acc"]["mean"].get<double>()),
                          format_double(a["best_val_acc"]["std"].get<double>()),
                          format_double(a["best_test_acc"]["mean"].get<double>()),
                          format_double(a["best_test_acc"]["std"].get<double>())});
      }
      write_csv(t, out);
      write_stream(fs::path(ab_c.out_dir) / "ablation.csv", [&](std::ostream& o) { write_csv(t, o); });
      nlohmann::json manifest = base_manifest("ablate " + ab_kind, ab_c);
      manifest["config"] = config_to_json(cfg);
      manifest["values"] = ab_values;
      manifest["seeds"] = ab_c.seeds;
      attach_benchmark(manifest, bp, table);
      write_json(fs::path(ab_c.out_dir) / "manifest.json", manifest);
    }
  } catch (const std::exception& e) {
    err << "ranknosh: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace ranknosh
