#pragma once

// Run configuration: a JSON document describing input, filters, the ordered
// stage list and per-model settings. Unknown keys are rejected; relative
// paths resolve against the directory holding the config file.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "nitrosep/error.hpp"
#include "nitrosep/fetch.hpp"
#include "nitrosep/ica.hpp"
#include "nitrosep/ingest.hpp"
#include "nitrosep/preprocess.hpp"

namespace nitrosep {

using Json = nlohmann::json;

struct RemoteSpec {
  RemoteRequest request;
  std::string url_template;
  std::string cache_dir;  // as written; resolved with RunConfig::resolve
};

struct InputSpec {
  std::string path;  // local file, as written
  std::string format = "rdb";
  std::optional<RemoteSpec> remote;
};

struct FaSettings {
  std::size_t k_max = 5;
  double alpha = 0.05;
  double adequacy_threshold = 0.05;
};

struct DiagnoseSettings {
  std::size_t max_lag = 10;
  std::size_t mi_bins = 8;
};

struct RunConfig {
  std::filesystem::path base_dir;
  InputSpec input;
  FilterSpec filter;
  std::vector<RedundancyRule> redundancy_rules = default_redundancy_rules();
  std::vector<std::string> pipeline;
  std::size_t lag = 1;
  bool pca_center = true;
  bool pca_scale = true;
  IcaConfig ica{3, 200, 1e-4, Contrast::logcosh, 1.0, 0, false};
  FaSettings fa;
  DiagnoseSettings diagnose;
  std::string output_dir = "out";

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

inline const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> stages{
      "ingest", "filter", "drop_incomplete_rows", "annual_mean", "drop_na_columns",
      "drop_redundant", "difference", "pca", "ica", "fa", "diagnose"};
  return stages;
}

inline bool is_analysis_stage(std::string_view s) {
  return s == "pca" || s == "ica" || s == "fa" || s == "diagnose";
}

// Ingest first; sample-level stages before annual_mean; annual stages after
// it; analyses after every transform.
inline void validate_pipeline(const std::vector<std::string>& stages) {
  if (stages.empty()) throw InvalidConfig("pipeline: empty stage list");
  if (stages.front() != "ingest") throw InvalidConfig("pipeline: first stage must be 'ingest'");
  std::set<std::string> seen;
  bool annual = false, analysed = false;
  for (const auto& s : stages) {
    if (std::find(known_stages().begin(), known_stages().end(), s) == known_stages().end())
      throw InvalidConfig("pipeline: unknown stage '" + s + "'");
    if (!seen.insert(s).second) throw InvalidConfig("pipeline: stage '" + s + "' listed twice");
    if (s == "ingest") continue;
    if (s == "filter" || s == "drop_incomplete_rows") {
      if (annual) throw InvalidConfig("pipeline: '" + s + "' must come before 'annual_mean'");
    } else if (s == "annual_mean") {
      annual = true;
    } else if (s == "drop_na_columns" || s == "drop_redundant" || s == "difference") {
      if (!annual) throw InvalidConfig("pipeline: '" + s + "' is only valid after 'annual_mean'");
      if (analysed) throw InvalidConfig("pipeline: '" + s + "' must come before the analysis stages");
    } else {
      if (!annual) throw InvalidConfig("pipeline: '" + s + "' needs 'annual_mean' earlier in the pipeline");
      analysed = true;
    }
  }
}

namespace detail {

inline void allow_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw InvalidConfig(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
      throw InvalidConfig(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_as(const Json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw InvalidConfig(where + "." + key + ": wrong type");
  }
}

inline std::size_t get_count(const Json& obj, const char* key, const std::string& where, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw InvalidConfig(where + "." + key + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

inline Date get_date(const Json& obj, const char* key, const std::string& where, Date fallback) {
  if (!obj.contains(key)) return fallback;
  const auto text = get_as<std::string>(obj, key, where, "");
  const auto d = parse_iso_date(text);
  if (!d) throw InvalidConfig(where + "." + key + ": '" + text + "' is not a YYYY-MM-DD date");
  return *d;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
  }
  using detail::allow_keys;
  using detail::get_as;
  using detail::get_count;
  allow_keys(doc, "config",
             {"input", "filter", "redundancy_rules", "pipeline", "preprocess", "pca", "ica", "fa", "diagnose",
              "output_dir"});
  RunConfig cfg;
  cfg.base_dir = base_dir;

  if (!doc.contains("input")) throw InvalidConfig("config: missing 'input'");
  const Json& in = doc.at("input");
  allow_keys(in, "input", {"path", "format", "remote"});
  cfg.input.format = get_as<std::string>(in, "format", "input", "rdb");
  if (cfg.input.format != "rdb" && cfg.input.format != "csv")
    throw InvalidConfig("input.format: expected 'rdb' or 'csv'");
  cfg.input.path = get_as<std::string>(in, "path", "input", "");
  if (in.contains("remote")) {
    const Json& r = in.at("remote");
    allow_keys(r, "input.remote", {"site", "codes", "start", "end", "url_template", "cache_dir"});
    RemoteSpec spec;
    spec.request.site = get_as<std::string>(r, "site", "input.remote", "");
    spec.request.codes = get_as<std::vector<std::string>>(r, "codes", "input.remote", {});
    spec.request.range.start = detail::get_date(r, "start", "input.remote", FilterSpec{}.date_range.start);
    spec.request.range.end = detail::get_date(r, "end", "input.remote", FilterSpec{}.date_range.end);
    spec.url_template = get_as<std::string>(r, "url_template", "input.remote", "");
    spec.cache_dir = get_as<std::string>(r, "cache_dir", "input.remote", "cache");
    if (spec.request.site.empty()) throw InvalidConfig("input.remote.site: required");
    if (spec.url_template.empty()) throw InvalidConfig("input.remote.url_template: required");
    if (cfg.input.format != "rdb") throw InvalidConfig("input.format: remote input is always 'rdb'");
    cfg.input.remote = std::move(spec);
  }
  if (cfg.input.path.empty() == !cfg.input.remote.has_value())
    throw InvalidConfig("input: give exactly one of 'path' or 'remote'");

  if (doc.contains("filter")) {
    const Json& f = doc.at("filter");
    allow_keys(f, "filter", {"min_count", "start", "end", "required_variable", "medium_code"});
    cfg.filter.min_count = get_count(f, "min_count", "filter", 1);
    cfg.filter.date_range.start = detail::get_date(f, "start", "filter", cfg.filter.date_range.start);
    cfg.filter.date_range.end = detail::get_date(f, "end", "filter", cfg.filter.date_range.end);
    if (f.contains("required_variable"))
      cfg.filter.required_variable = get_as<std::string>(f, "required_variable", "filter", "");
    if (f.contains("medium_code")) cfg.filter.medium_code = get_as<std::string>(f, "medium_code", "filter", "");
    cfg.filter.validate();
  }

  if (doc.contains("redundancy_rules")) {
    const Json& rules = doc.at("redundancy_rules");
    if (!rules.is_array()) throw InvalidConfig("redundancy_rules: expected a list");
    cfg.redundancy_rules.clear();
    for (const Json& r : rules) {
      allow_keys(r, "redundancy_rules[]", {"composite", "parts"});
      RedundancyRule rule{get_as<std::string>(r, "composite", "redundancy_rules[]", ""),
                          get_as<std::vector<std::string>>(r, "parts", "redundancy_rules[]", {})};
      if (rule.composite.empty()) throw InvalidConfig("redundancy_rules[]: missing 'composite'");
      rule.validate();
      cfg.redundancy_rules.push_back(std::move(rule));
    }
  }

  cfg.pipeline = get_as<std::vector<std::string>>(doc, "pipeline", "config", {});
  validate_pipeline(cfg.pipeline);

  if (doc.contains("preprocess")) {
    allow_keys(doc.at("preprocess"), "preprocess", {"lag"});
    cfg.lag = get_count(doc.at("preprocess"), "lag", "preprocess", 1);
    if (cfg.lag < 1) throw InvalidConfig("preprocess.lag: must be >= 1");
  }
  if (doc.contains("pca")) {
    const Json& p = doc.at("pca");
    allow_keys(p, "pca", {"center", "scale"});
    cfg.pca_center = get_as<bool>(p, "center", "pca", true);
    cfg.pca_scale = get_as<bool>(p, "scale", "pca", true);
  }
  if (doc.contains("ica")) {
    const Json& i = doc.at("ica");
    allow_keys(i, "ica", {"n_components", "max_iter", "tol", "contrast", "logcosh_alpha", "seed", "prescale"});
    cfg.ica.n_components = get_count(i, "n_components", "ica", cfg.ica.n_components);
    cfg.ica.max_iter = get_count(i, "max_iter", "ica", cfg.ica.max_iter);
    cfg.ica.tol = get_as<double>(i, "tol", "ica", cfg.ica.tol);
    const auto contrast = get_as<std::string>(i, "contrast", "ica", "logcosh");
    if (contrast == "logcosh") {
      cfg.ica.contrast = Contrast::logcosh;
    } else if (contrast == "cube") {
      cfg.ica.contrast = Contrast::cube;
    } else {
      throw InvalidConfig("ica.contrast: expected 'logcosh' or 'cube'");
    }
    cfg.ica.logcosh_alpha = get_as<double>(i, "logcosh_alpha", "ica", cfg.ica.logcosh_alpha);
    cfg.ica.seed = get_as<std::uint64_t>(i, "seed", "ica", cfg.ica.seed);
    cfg.ica.prescale = get_as<bool>(i, "prescale", "ica", cfg.ica.prescale);
  }
  cfg.ica.validate();
  if (doc.contains("fa")) {
    const Json& f = doc.at("fa");
    allow_keys(f, "fa", {"k_max", "alpha", "adequacy_threshold"});
    cfg.fa.k_max = get_count(f, "k_max", "fa", cfg.fa.k_max);
    cfg.fa.alpha = get_as<double>(f, "alpha", "fa", cfg.fa.alpha);
    cfg.fa.adequacy_threshold = get_as<double>(f, "adequacy_threshold", "fa", cfg.fa.adequacy_threshold);
    if (cfg.fa.k_max < 1) throw InvalidConfig("fa.k_max: must be >= 1");
    if (!(cfg.fa.alpha > 0.0 && cfg.fa.alpha < 1.0)) throw InvalidConfig("fa.alpha: must lie in (0, 1)");
    if (!(cfg.fa.adequacy_threshold > 0.0)) throw InvalidConfig("fa.adequacy_threshold: must be > 0");
  }
  if (doc.contains("diagnose")) {
    const Json& d = doc.at("diagnose");
    allow_keys(d, "diagnose", {"max_lag", "mi_bins"});
    cfg.diagnose.max_lag = get_count(d, "max_lag", "diagnose", cfg.diagnose.max_lag);
    cfg.diagnose.mi_bins = get_count(d, "mi_bins", "diagnose", cfg.diagnose.mi_bins);
    if (cfg.diagnose.mi_bins < 2) throw InvalidConfig("diagnose.mi_bins: must be >= 2");
  }
  cfg.output_dir = get_as<std::string>(doc, "output_dir", "config", cfg.output_dir);
  if (cfg.output_dir.empty()) throw InvalidConfig("output_dir: must not be empty");
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw InvalidConfig("cannot read config file " + path.string());
  }
  return parse_run_config(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

// Canonical form with every default filled in; hashing this (not the raw
// file) makes the hash independent of formatting and key order.
inline Json to_json(const RunConfig& cfg) {
  Json in = Json::object();
  in["format"] = cfg.input.format;
  if (cfg.input.remote) {
    const auto& r = *cfg.input.remote;
    in["remote"] = {{"site", r.request.site},
                    {"codes", r.request.codes},
                    {"start", format_iso_date(r.request.range.start)},
                    {"end", format_iso_date(r.request.range.end)},
                    {"url_template", r.url_template},
                    {"cache_dir", r.cache_dir}};
  } else {
    in["path"] = cfg.input.path;
  }
  Json filter = {{"min_count", cfg.filter.min_count},
                 {"start", format_iso_date(cfg.filter.date_range.start)},
                 {"end", format_iso_date(cfg.filter.date_range.end)}};
  if (cfg.filter.required_variable) filter["required_variable"] = *cfg.filter.required_variable;
  if (cfg.filter.medium_code) filter["medium_code"] = *cfg.filter.medium_code;
  Json rules = Json::array();
  for (const auto& r : cfg.redundancy_rules) rules.push_back({{"composite", r.composite}, {"parts", r.parts}});
  return {
      {"input", in},
      {"filter", filter},
      {"redundancy_rules", rules},
      {"pipeline", cfg.pipeline},
      {"preprocess", {{"lag", cfg.lag}}},
      {"pca", {{"center", cfg.pca_center}, {"scale", cfg.pca_scale}}},
      {"ica",
       {{"n_components", cfg.ica.n_components},
        {"max_iter", cfg.ica.max_iter},
        {"tol", cfg.ica.tol},
        {"contrast", cfg.ica.contrast == Contrast::logcosh ? "logcosh" : "cube"},
        {"logcosh_alpha", cfg.ica.logcosh_alpha},
        {"seed", cfg.ica.seed},
        {"prescale", cfg.ica.prescale}}},
      {"fa", {{"k_max", cfg.fa.k_max}, {"alpha", cfg.fa.alpha}, {"adequacy_threshold", cfg.fa.adequacy_threshold}}},
      {"diagnose", {{"max_lag", cfg.diagnose.max_lag}, {"mi_bins", cfg.diagnose.mi_bins}}},
      {"output_dir", cfg.output_dir},
  };
}

inline std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(to_json(cfg).dump())); }

}  // namespace nitrosep
