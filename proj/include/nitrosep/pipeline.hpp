#pragma once

// End-to-end runner: executes the configured stages in order and writes the
// per-stage artifacts plus a manifest into the output directory.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nitrosep/config.hpp"
#include "nitrosep/diagnostics.hpp"
#include "nitrosep/fa.hpp"
#include "nitrosep/fetch.hpp"
#include "nitrosep/ica.hpp"
#include "nitrosep/ingest.hpp"
#include "nitrosep/pca.hpp"
#include "nitrosep/preprocess.hpp"

#ifndef NITROSEP_VERSION
#define NITROSEP_VERSION "0.0.0"
#endif

namespace nitrosep {

inline constexpr const char* kToolVersion = NITROSEP_VERSION;

// A failure inside a named stage. kind() is the underlying error's kind.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string kind, const std::string& detail)
      : std::runtime_error("stage '" + stage + "': " + detail), stage_(std::move(stage)), kind_(std::move(kind)) {}
  const std::string& stage() const noexcept { return stage_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string stage_;
  std::string kind_;
};

// Collects files written to one directory, in write order.
class OutputSink {
 public:
  explicit OutputSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void put(const std::string& name, std::string_view bytes) {
    write_file_atomic(dir_ / name, bytes);
    written_.push_back(name);
  }
  void put_json(const std::string& name, const Json& j) { put(name, j.dump(2) + "\n"); }

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const std::vector<std::string>& written() const noexcept { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

namespace detail {

// Same error with extra context appended to the message.
inline Error with_context(const Error& e, const std::string& context) {
  std::string msg = e.what();
  if (msg.rfind(e.kind() + ": ", 0) == 0) msg.erase(0, e.kind().size() + 2);
  return Error(e.kind(), msg + " (" + context + ")");
}

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Matrix dense_matrix(const AnnualTable& a) {
  if (a.rows() == 0 || a.cols() == 0) throw ShapeMismatch("annual table is empty");
  return a.to_matrix();
}

}  // namespace detail

// ---- per-analysis writers (shared by `run` and the single-stage commands) --

inline Json write_pca_outputs(const AnnualTable& a, bool center, bool scale, OutputSink& out) {
  const auto m = fit_pca(detail::dense_matrix(a), center, scale, a.codes());
  const std::size_t keep = scale ? std::max<std::size_t>(kaiser_retain(m), 1) : m.components();
  out.put("pca_loadings.csv", emit_loadings_csv(m, keep));
  out.put("pca_spectrum.csv", emit_spectrum_csv(m));
  Json s = {{"components_reported", keep},
            {"explained_variance", explained_variance(m, keep)},
            {"centered", center},
            {"scaled", scale}};
  s["kaiser_retain"] = scale ? Json(kaiser_retain(m)) : Json(nullptr);
  out.put_json("pca_summary.json", s);
  return s;
}

inline Json write_ica_outputs(const AnnualTable& a, const IcaConfig& cfg, OutputSink& out) {
  const auto m = fast_ica(detail::dense_matrix(a), cfg);
  std::ostringstream os;
  os << "year";
  for (std::size_t c = 0; c < m.sources.cols(); ++c) os << ",IC" << (c + 1);
  os << '\n';
  for (std::size_t r = 0; r < m.sources.rows(); ++r) {
    os << a.years[r];
    for (std::size_t c = 0; c < m.sources.cols(); ++c) os << ',' << format_number(m.sources(r, c));
    os << '\n';
  }
  out.put("ica_sources.csv", os.str());
  Json mixing = Json::object();
  const auto codes = a.codes();
  for (std::size_t v = 0; v < codes.size(); ++v) {
    std::vector<double> row;
    for (std::size_t c = 0; c < m.mixing.cols(); ++c) row.push_back(m.mixing(v, c));
    mixing[codes[v]] = row;
  }
  Json s = {{"converged", m.converged},
            {"iterations", m.iterations},
            {"final_delta", detail::number_or_null(m.delta_history.empty() ? NAN : m.delta_history.back())},
            {"n_components", cfg.n_components},
            {"seed", cfg.seed},
            {"contrast", cfg.contrast == Contrast::logcosh ? "logcosh" : "cube"},
            {"tol", cfg.tol},
            {"max_iter", cfg.max_iter},
            {"mixing", mixing}};
  out.put_json("ica_summary.json", s);
  return s;
}

inline Json write_fa_outputs(const AnnualTable& a, const FaSettings& cfg, OutputSink& out) {
  const Matrix x = detail::dense_matrix(a);
  const auto labels = a.codes();
  if (fa_dof(x.cols(), cfg.k_max) < 0) throw DofNegative(cfg.k_max);
  Json fits = Json::array();
  std::vector<double> p_values;
  for (std::size_t k = 1; k <= cfg.k_max; ++k) {
    const auto m = fit_fa_ml(x, k);
    const std::string stem = "fa_k" + std::to_string(k);
    out.put(stem + "_loadings.csv", emit_fa_loadings_csv(m, labels));
    out.put(stem + "_residual.csv", emit_square_csv(m.residual, labels));
    const double p = m.converged ? m.p_value : NAN;
    p_values.push_back(p);
    const double worst = max_abs_off_diagonal(m.residual);
    fits.push_back({{"k", k},
                    {"statistic", detail::number_or_null(m.converged ? m.statistic : NAN)},
                    {"dof", m.dof},
                    {"p_value", detail::number_or_null(p)},
                    {"objective", m.objective},
                    {"converged", m.converged},
                    {"heywood", m.heywood},
                    {"iterations", m.iterations},
                    {"max_abs_residual", worst},
                    {"adequacy", worst <= cfg.adequacy_threshold ? "adequate" : "inadequate"}});
  }
  const auto sel = select_from_p_values(p_values, cfg.alpha);
  Json s = {{"alpha", cfg.alpha},
            {"adequacy_threshold", cfg.adequacy_threshold},
            {"n_obs", x.rows()},
            {"fits", fits},
            {"selected_k", sel.k},
            {"inadequate", sel.inadequate}};
  out.put_json("fa_summary.json", s);
  return s;
}

inline Json write_diagnose_outputs(const AnnualTable& a, const DiagnoseSettings& cfg, OutputSink& out) {
  const Matrix x = detail::dense_matrix(a);
  const auto labels = a.codes();
  std::ostringstream os;
  os << "variable,lag,acf,band\n";
  Json outside = Json::object();
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c);
    AcfResult r;
    try {
      r = acf(col, cfg.max_lag);
    } catch (const Error& e) {
      throw detail::with_context(e, "variable " + labels[c]);
    }
    std::size_t n_out = 0;
    for (std::size_t h = 0; h < r.values.size(); ++h) {
      os << csv_quote(labels[c]) << ',' << r.lags[h] << ',' << format_number(r.values[h]) << ','
         << format_number(r.conf_band) << '\n';
      n_out += h > 0 && std::abs(r.values[h]) > r.conf_band;
    }
    outside[labels[c]] = n_out;
  }
  out.put("acf.csv", os.str());
  Matrix mi(x.cols(), x.cols());
  for (std::size_t i = 0; i < x.cols(); ++i) {
    const auto ci = x.col(i);
    for (std::size_t j = i; j < x.cols(); ++j) {
      double v;
      try {
        v = mutual_information_discrete(ci, x.col(j), cfg.mi_bins);
      } catch (const Error& e) {
        throw detail::with_context(e, "variables " + labels[i] + ", " + labels[j]);
      }
      mi(i, j) = mi(j, i) = v;
    }
  }
  out.put("mi.csv", emit_square_csv(mi, labels));
  Json s = {{"max_lag", cfg.max_lag}, {"mi_bins", cfg.mi_bins}, {"acf_lags_outside_band", outside}};
  out.put_json("diagnose_summary.json", s);
  return s;
}

// ---- full run --------------------------------------------------------------

struct RunOptions {
  bool offline = false;
  std::optional<std::uint64_t> seed;  // overrides ica.seed
  HttpGet transport;                  // used only for remote input
  std::optional<std::string> timestamp;  // fixed created_utc, for tests
};

struct RunResult {
  Json manifest;
  std::filesystem::path output_dir;
};

inline std::string utc_now_iso() {
  using namespace std::chrono;
  const auto now = floor<seconds>(system_clock::now());
  const auto day = floor<days>(now);
  const year_month_day ymd{day};
  const hh_mm_ss hms{now - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()), long(hms.hours().count()), long(hms.minutes().count()),
                long(hms.seconds().count()));
  return buf;
}

inline std::string load_input_bytes(const RunConfig& cfg, const RunOptions& opt) {
  if (!cfg.input.remote) return read_file(cfg.resolve(cfg.input.path));
  const auto& r = *cfg.input.remote;
  FetchOptions fo{r.url_template, cfg.resolve(r.cache_dir), opt.offline};
  return fetch_remote(r.request, fo, opt.transport);
}

class PipelineRunner {
 public:
  PipelineRunner(RunConfig cfg, RunOptions opt) : cfg_(std::move(cfg)), opt_(std::move(opt)) {
    if (opt_.seed) cfg_.ica.seed = *opt_.seed;
  }

  RunResult run() {
    const auto dir = cfg_.resolve(cfg_.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StageError("output", "CacheWriteFailed", "cannot create " + dir.string());
    OutputSink out(dir);
    bool preprocessed_written = false;
    for (const auto& stage : cfg_.pipeline) {
      if (is_analysis_stage(stage) && !preprocessed_written) {
        guarded("output", [&] { write_preprocessed(out); });
        preprocessed_written = true;
      }
      guarded(stage, [&] { run_stage(stage, &out); });
    }
    if (!preprocessed_written) guarded("output", [&] { write_preprocessed(out); });

    Json manifest = {{"tool", "nitrosep"},
                     {"version", kToolVersion},
                     {"config_hash", config_hash(cfg_)},
                     {"input_hash", input_hash_},
                     {"stage_counts", counts_},
                     {"stages", cfg_.pipeline},
                     {"removed_redundant", removed_},
                     {"outputs", out.written()},
                     {"summaries", summaries_},
                     {"config", to_json(cfg_)},
                     {"created_utc", opt_.timestamp ? *opt_.timestamp : utc_now_iso()}};
    guarded("output", [&] { out.put_json("manifest.json", manifest); });
    return {manifest, dir};
  }

  // Runs one data stage (no analyses) on the current tables; used by the
  // single-stage commands.
  void transform(const std::string& stage) {
    if (is_analysis_stage(stage)) throw StageError(stage, "InvalidConfig", "not a data stage");
    guarded(stage, [&] { run_stage(stage, nullptr); });
  }

  void set_series(TimeSeriesTable t) { series_ = std::move(t); }
  void set_annual(AnnualTable a) { annual_ = std::move(a); }
  const std::optional<TimeSeriesTable>& series() const noexcept { return series_; }
  const std::optional<AnnualTable>& annual() const noexcept { return annual_; }
  const RunConfig& config() const noexcept { return cfg_; }

 private:
  template <class F>
  void guarded(const std::string& stage, F&& f) {
    try {
      f();
    } catch (const ZeroVarianceColumn& e) {
      std::string detail = e.what();
      if (annual_ && e.column() < annual_->cols()) detail += " (variable " + annual_->variables[e.column()].code + ")";
      throw StageError(stage, e.kind(), detail);
    } catch (const Error& e) {
      throw StageError(stage, e.kind(), e.what());
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, "RuntimeError", e.what());
    }
  }

  void record(const std::string& stage, std::size_t rows, std::size_t cols) {
    counts_[stage] = std::vector<std::size_t>{rows, cols};
  }

  void run_stage(const std::string& stage, OutputSink* out) {
    const bool sample_level = stage == "filter" || stage == "drop_incomplete_rows" || stage == "annual_mean";
    if (sample_level && !series_) throw InvalidConfig("no sample table loaded");
    if (stage != "ingest" && !sample_level && !annual_) throw InvalidConfig("no annual table loaded");
    if (stage == "ingest") {
      const std::string bytes = load_input_bytes(cfg_, opt_);
      input_hash_ = hex64(fnv1a64(bytes));
      series_ = cfg_.input.format == "csv" ? parse_csv(bytes) : parse_rdb(bytes);
      record(stage, series_->rows(), series_->cols());
    } else if (stage == "filter") {
      series_ = filter_table(*series_, cfg_.filter);
      record(stage, series_->rows(), series_->cols());
    } else if (stage == "drop_incomplete_rows") {
      series_ = drop_incomplete_rows(*series_);
      record(stage, series_->rows(), series_->cols());
    } else if (stage == "annual_mean") {
      annual_ = annual_mean(*series_);
      record(stage, annual_->rows(), annual_->cols());
    } else if (stage == "drop_na_columns") {
      annual_ = drop_na_columns(*annual_);
      record(stage, annual_->rows(), annual_->cols());
    } else if (stage == "drop_redundant") {
      auto res = drop_redundant(*annual_, cfg_.redundancy_rules);
      annual_ = std::move(res.table);
      removed_.clear();
      for (const auto& rule : res.removed) removed_.push_back(rule.composite);
      record(stage, annual_->rows(), annual_->cols());
    } else if (stage == "difference") {
      annual_ = difference(*annual_, cfg_.lag);
      record(stage, annual_->rows(), annual_->cols());
    } else if (stage == "pca") {
      summaries_[stage] = write_pca_outputs(*annual_, cfg_.pca_center, cfg_.pca_scale, *out);
    } else if (stage == "ica") {
      summaries_[stage] = write_ica_outputs(*annual_, cfg_.ica, *out);
    } else if (stage == "fa") {
      summaries_[stage] = write_fa_outputs(*annual_, cfg_.fa, *out);
    } else if (stage == "diagnose") {
      summaries_[stage] = write_diagnose_outputs(*annual_, cfg_.diagnose, *out);
    }
  }

  void write_preprocessed(OutputSink& out) {
    if (annual_) {
      // Analyses read the table back from its serialized form, so running
      // them from preprocessed.csv gives byte-identical results.
      const std::string bytes = emit_annual_csv(*annual_);
      out.put("preprocessed.csv", bytes);
      annual_ = parse_annual_csv(bytes);
    } else if (series_) {
      out.put("preprocessed.csv", emit_csv(*series_));
    }
  }

  RunConfig cfg_;
  RunOptions opt_;
  std::optional<TimeSeriesTable> series_;
  std::optional<AnnualTable> annual_;
  std::string input_hash_;
  Json counts_ = Json::object();
  Json summaries_ = Json::object();
  std::vector<std::string> removed_;
};

inline RunResult run_pipeline(const RunConfig& cfg, const RunOptions& opt = {}) {
  return PipelineRunner(cfg, opt).run();
}

}  // namespace nitrosep
