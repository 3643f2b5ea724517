// nitrosep command-line tool.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nitrosep/http_transport.hpp"
#include "nitrosep/nitrosep.hpp"

namespace {

using namespace nitrosep;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  bool offline = false;
};

// Thrown for usage problems detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

RunOptions run_options(const Globals& g) {
  RunOptions opt;
  opt.offline = g.offline;
  opt.seed = g.seed;
  if (!g.offline) opt.transport = httplib_transport();
  return opt;
}

std::optional<RunConfig> maybe_config(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_run_config(path);
}

AnnualTable read_annual(const std::string& path) {
  try {
    return parse_annual_csv(read_file(path));
  } catch (const Error& e) {
    throw StageError("read", e.kind(), e.what());
  }
}

// ---- subcommand bodies ---------------------------------------------------

struct IngestArgs {
  std::string input, format = "rdb", config, output;
};

int do_ingest(const IngestArgs& a, const Globals& g) {
  if (a.input.empty() == a.config.empty()) throw UsageError("ingest: give an input file or --config, not both");
  if (!a.config.empty()) {
    auto cfg = load_run_config(a.config);
    PipelineRunner runner(cfg, run_options(g));
    for (const auto& s : cfg.pipeline) {
      if (s == "annual_mean") break;
      runner.transform(s);
    }
    write_text(a.output, emit_csv(*runner.series()));
    return 0;
  }
  if (a.format != "rdb" && a.format != "csv") throw UsageError("--format must be rdb or csv");
  TimeSeriesTable t;
  try {
    const std::string bytes = read_file(a.input);
    t = a.format == "csv" ? parse_csv(bytes) : parse_rdb(bytes);
  } catch (const Error& e) {
    throw StageError("ingest", e.kind(), e.what());
  }
  write_text(a.output, emit_csv(t));
  return 0;
}

struct PreprocessArgs {
  std::string input, config, output;
  std::vector<std::string> stages;
  std::size_t lag = 0;
};

int do_preprocess(const PreprocessArgs& a) {
  RunConfig cfg;
  std::vector<std::string> stages{"annual_mean", "drop_na_columns", "drop_redundant", "difference"};
  if (auto c = maybe_config(a.config)) {
    cfg = *c;
    stages.clear();
    bool annual = false;
    for (const auto& s : cfg.pipeline) {
      annual = annual || s == "annual_mean";
      if (annual && !is_analysis_stage(s)) stages.push_back(s);
    }
  }
  if (!a.stages.empty()) stages = a.stages;
  if (a.lag) cfg.lag = a.lag;
  std::vector<std::string> check{"ingest"};
  check.insert(check.end(), stages.begin(), stages.end());
  validate_pipeline(check);

  TimeSeriesTable t;
  try {
    t = parse_csv(read_file(a.input));
  } catch (const Error& e) {
    throw StageError("read", e.kind(), e.what());
  }
  PipelineRunner runner(cfg, {});
  runner.set_series(std::move(t));
  for (const auto& s : stages) runner.transform(s);
  write_text(a.output, runner.annual() ? emit_annual_csv(*runner.annual()) : emit_csv(*runner.series()));
  return 0;
}

struct AnalysisArgs {
  std::string input, config, output_dir = ".";
};

template <class F>
int do_analysis(const std::string& stage, const AnalysisArgs& a, F&& write) {
  const AnnualTable table = read_annual(a.input);
  std::filesystem::create_directories(a.output_dir);
  OutputSink out(a.output_dir);
  try {
    const Json summary = write(table, out);
    std::cout << summary.dump(2) << '\n';
  } catch (const Error& e) {
    throw StageError(stage, e.kind(), e.what());
  }
  return 0;
}

void report(const std::string& what) { std::cerr << "nitrosep: " << what << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nitrogen source apportionment: ingest, preprocess, PCA, FastICA, factor analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the ICA / benchmark seed");
  app.add_flag("--offline", g.offline, "Forbid network access; remote input must come from the cache");

  // run
  std::string run_config;
  auto* run = app.add_subcommand("run", "Run the full configured pipeline");
  run->add_option("config", run_config, "Run configuration (JSON)")->required();
  run->fallthrough();

  // ingest
  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Parse an RDB/CSV file (or the configured input) to CSV");
  ingest->add_option("input", ingest_args.input, "Input file");
  ingest->add_option("--format", ingest_args.format, "rdb or csv")->capture_default_str();
  ingest->add_option("-c,--config", ingest_args.config, "Use the configured input and sample-level stages");
  ingest->add_option("-o,--output", ingest_args.output, "Output CSV (default stdout)");
  ingest->fallthrough();

  // preprocess
  PreprocessArgs pre_args;
  auto* pre = app.add_subcommand("preprocess", "Annual aggregation and column pruning of an ingested CSV");
  pre->add_option("input", pre_args.input, "Sample-level CSV from `ingest`")->required();
  pre->add_option("-c,--config", pre_args.config, "Take stages, rules and lag from a run configuration");
  pre->add_option("--stages", pre_args.stages, "Explicit stage list")->delimiter(',');
  pre->add_option("--lag", pre_args.lag, "Differencing lag");
  pre->add_option("-o,--output", pre_args.output, "Output CSV (default stdout)");
  pre->fallthrough();

  // analyses
  AnalysisArgs pca_args, ica_args, fa_args, diag_args;
  bool no_center = false, no_scale = false;
  auto* pca = app.add_subcommand("pca", "Principal components of an annual table");
  pca->add_flag("--no-center", no_center, "Do not center columns");
  pca->add_flag("--no-scale", no_scale, "Covariance instead of correlation");

  std::optional<std::size_t> ica_components, ica_max_iter;
  std::optional<double> ica_tol;
  std::optional<std::string> ica_contrast;
  bool ica_prescale = false;
  auto* ica = app.add_subcommand("ica", "FastICA on an annual table");
  ica->add_option("-k,--components", ica_components, "Number of components");
  ica->add_option("--max-iter", ica_max_iter, "Iteration cap");
  ica->add_option("--tol", ica_tol, "Convergence tolerance");
  ica->add_option("--contrast", ica_contrast, "logcosh or cube")->check(CLI::IsMember({"logcosh", "cube"}));
  ica->add_flag("--prescale", ica_prescale, "Scale columns to unit variance before whitening");

  std::optional<std::size_t> fa_k_max;
  std::optional<double> fa_alpha;
  auto* fa = app.add_subcommand("fa", "Maximum-likelihood factor analysis for k = 1..k_max");
  fa->add_option("--k-max", fa_k_max, "Largest number of factors");
  fa->add_option("--alpha", fa_alpha, "Significance level for factor selection");

  std::optional<std::size_t> diag_lag, diag_bins;
  auto* diag = app.add_subcommand("diagnose", "Autocorrelation and mutual-information tables");
  diag->add_option("--max-lag", diag_lag, "Largest ACF lag");
  diag->add_option("--bins", diag_bins, "Histogram bins for mutual information");

  for (auto [cmd, args] : {std::pair{pca, &pca_args}, {ica, &ica_args}, {fa, &fa_args}, {diag, &diag_args}}) {
    cmd->add_option("input", args->input, "Annual CSV from `preprocess`")->required();
    cmd->add_option("-c,--config", args->config, "Take settings from a run configuration");
    cmd->add_option("-o,--output-dir", args->output_dir, "Directory for output files")->capture_default_str();
    cmd->fallthrough();
  }

  // synth-bench
  std::vector<std::string> bench_sets{"uniform+uniform", "laplace+laplace", "gaussian+gaussian"};
  SweepSpec sweep;
  std::string bench_out;
  auto* bench = app.add_subcommand("synth-bench", "Synthetic mixing sweep: ICA vs PCA Amari index");
  bench->add_option("--dists", bench_sets, "Source sets, e.g. uniform+laplace (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--noise", sweep.noise_levels, "Noise standard deviations")->delimiter(',')->capture_default_str();
  bench->add_option("--rows", sweep.rows, "Rows per scenario")->capture_default_str();
  bench->add_option("--seeds", sweep.seeds, "Replicates per cell")->capture_default_str();
  bench->add_option("--observed", sweep.observed_vars, "Observed variables (0: same as sources)");
  bench->add_option("--condition-max", sweep.condition_max, "Largest mixing condition number")
      ->capture_default_str();
  bench->add_option("-o,--output", bench_out, "Output CSV (default stdout)");
  bench->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) g.seed = seed_value;

  try {
    if (*run) {
      const auto cfg = load_run_config(run_config);
      const auto result = run_pipeline(cfg, run_options(g));
      std::cout << "wrote " << result.manifest.at("outputs").size() << " files to " << result.output_dir.string()
                << '\n';
      return 0;
    }
    if (*ingest) return do_ingest(ingest_args, g);
    if (*pre) return do_preprocess(pre_args);
    if (*pca) {
      const auto cfg = maybe_config(pca_args.config);
      const bool center = no_center ? false : (cfg ? cfg->pca_center : true);
      const bool scale = no_scale ? false : (cfg ? cfg->pca_scale : true);
      return do_analysis("pca", pca_args, [&](const AnnualTable& t, OutputSink& out) {
        return write_pca_outputs(t, center, scale, out);
      });
    }
    if (*ica) {
      const auto cfg = maybe_config(ica_args.config);
      IcaConfig ic = cfg ? cfg->ica : RunConfig{}.ica;
      if (ica_components) ic.n_components = *ica_components;
      if (ica_max_iter) ic.max_iter = *ica_max_iter;
      if (ica_tol) ic.tol = *ica_tol;
      if (ica_contrast) ic.contrast = *ica_contrast == "cube" ? Contrast::cube : Contrast::logcosh;
      if (ica_prescale) ic.prescale = true;
      if (g.seed) ic.seed = *g.seed;
      ic.validate();
      return do_analysis("ica", ica_args, [&](const AnnualTable& t, OutputSink& out) {
        return write_ica_outputs(t, ic, out);
      });
    }
    if (*fa) {
      const auto cfg = maybe_config(fa_args.config);
      FaSettings fs = cfg ? cfg->fa : FaSettings{};
      if (fa_k_max) fs.k_max = *fa_k_max;
      if (fa_alpha) fs.alpha = *fa_alpha;
      if (fs.k_max < 1) throw InvalidConfig("--k-max must be >= 1");
      if (!(fs.alpha > 0.0 && fs.alpha < 1.0)) throw InvalidConfig("--alpha must lie in (0, 1)");
      return do_analysis("fa", fa_args, [&](const AnnualTable& t, OutputSink& out) {
        return write_fa_outputs(t, fs, out);
      });
    }
    if (*diag) {
      const auto cfg = maybe_config(diag_args.config);
      DiagnoseSettings ds = cfg ? cfg->diagnose : DiagnoseSettings{};
      if (diag_lag) ds.max_lag = *diag_lag;
      if (diag_bins) ds.mi_bins = *diag_bins;
      if (ds.mi_bins < 2) throw InvalidConfig("--bins must be >= 2");
      return do_analysis("diagnose", diag_args, [&](const AnnualTable& t, OutputSink& out) {
        return write_diagnose_outputs(t, ds, out);
      });
    }
    if (*bench) {
      sweep.distribution_sets.clear();
      for (const auto& set : bench_sets) {
        std::vector<SourceDist> dists;
        std::stringstream ss(set);
        for (std::string item; std::getline(ss, item, '+');) dists.push_back(parse_source_dist(item));
        sweep.distribution_sets.push_back(std::move(dists));
      }
      if (g.seed) sweep.base_seed = *g.seed;
      std::vector<SweepRow> rows;
      try {
        rows = run_sweep(sweep);
      } catch (const InvalidConfig&) {
        throw;
      } catch (const Error& e) {
        throw StageError("synth-bench", e.kind(), e.what());
      }
      write_text(bench_out, emit_sweep_csv(rows));
      return 0;
    }
  } catch (const UsageError& e) {
    report(std::string("usage: ") + e.what());
    return kExitConfig;
  } catch (const InvalidConfig& e) {
    report(std::string("config: ") + e.what());
    return kExitConfig;
  } catch (const StageError& e) {
    report(e.what());
    return kExitRuntime;
  } catch (const Error& e) {
    report(e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    report(e.what());
    return kExitRuntime;
  }
  return 0;
}
