//
// Copyright 2026 The finfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// finfl: command-line front end.
//
//   finfl estimate       --config run.json [--seed N] [--out DIR]
//   finfl mislabel-scan  --config scan.json [--seed N] [--out DIR] [--method NAME]
//   finfl consistency    --config cons.json [--seed N] [--out DIR] [--method NAME]
//   finfl score-traces   TRACE.csv... [--out FILE]
//   finfl curve gmu|compose|inverse|symmetrize|max|empirical|fit ...
//   finfl metrics recall|consistency|cv ...
//
// Configs are JSON with "schema_version": 1; unknown fields are errors.
// Relative paths inside a config resolve against the config's directory.
// Every file is written atomically. Exit status: 0 on success, 1 on invalid
// input or a failed run (message on stderr), CLI11's codes for usage errors.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "finfl/data.hpp"
#include "finfl/estimator.hpp"
#include "finfl/experiments.hpp"
#include "finfl/io.hpp"
#include "finfl/metrics.hpp"
#include "finfl/tradeoff.hpp"
#include "finfl/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace finfl;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed,
                  const std::set<std::string>& required = {}) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& obj, const std::string& key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) throw ConfigError("field '" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

struct LoadedConfig {
  json doc;
  fs::path base_dir;
};

LoadedConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override,
                         const std::set<std::string>& allowed) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  require_keys(doc, path, allowed, {"schema_version"});
  if (doc.at("schema_version") != 1) throw ConfigError(path + ": unsupported schema_version");
  if (seed_override) {
    if (doc.contains("seeds")) {
      doc["seeds"] = json::array({*seed_override});
    } else {
      doc["seed"] = *seed_override;
    }
  }
  return {doc, fs::absolute(path).parent_path()};
}

// FNV-1a over the canonical (sorted-key, compact) dump of the effective config.
std::string config_digest(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainerParams parse_trainer(const json& t) {
  require_keys(t, "trainer",
               {"epochs", "batch_size", "train_batch_size", "eta", "hidden_dim", "similarity"});
  TrainerParams p;
  p.epochs = get_count(t, "epochs", p.epochs);
  p.batch_size = get_count(t, "batch_size", p.batch_size);
  p.train_batch_size = get_count(t, "train_batch_size", p.train_batch_size);
  p.eta = get_or<double>(t, "eta", p.eta);
  p.hidden_dim = get_count(t, "hidden_dim", p.hidden_dim);
  p.similarity = similarity_from_string(get_or<std::string>(t, "similarity", "dot"));
  return p;
}

// A dataset plus, for blob sources, the held-out test point and any planted
// near-copies of it.
struct Source {
  Dataset data;
  std::optional<LabeledExample> held_out;
  std::vector<std::size_t> planted;
};

Source load_source(const json& d, const fs::path& base, std::uint64_t seed) {
  if (!d.is_object() || !d.contains("kind")) throw ConfigError("dataset: missing field 'kind'");
  const std::string kind = get_or<std::string>(d, "kind", "");
  Source src;
  if (kind == "idx") {
    require_keys(d, "dataset", {"kind", "images", "labels", "limit"}, {"images", "labels"});
    src.data = dataset_from_idx(read_file_bytes(base / get_or<std::string>(d, "images", "")),
                                read_file_bytes(base / get_or<std::string>(d, "labels", "")));
    const std::size_t limit = get_count(d, "limit", src.data.size());
    if (limit < src.data.size()) {
      std::vector<std::size_t> first(limit);
      std::iota(first.begin(), first.end(), std::size_t{0});
      src.data = select(src.data, first);
    }
  } else if (kind == "blobs") {
    require_keys(d, "dataset",
                 {"kind", "classes", "per_class", "dim", "separation", "planted_copies", "jitter"});
    BlobSpec spec;
    spec.class_count = get_count(d, "classes", spec.class_count);
    spec.per_class = get_count(d, "per_class", spec.per_class);
    spec.dim = get_count(d, "dim", spec.dim);
    spec.separation = get_or<double>(d, "separation", spec.separation);
    const std::size_t copies = get_count(d, "planted_copies", 0);
    PlantedTask task = make_planted_task(spec, copies, get_or<double>(d, "jitter", 0.02), seed);
    src.data = std::move(task.train);
    src.held_out = std::move(task.test_point);
    src.planted = std::move(task.planted);
  } else {
    throw ConfigError("dataset.kind must be 'idx' or 'blobs'");
  }
  return src;
}

std::vector<std::uint64_t> parse_seeds(const json& doc) {
  if (doc.contains("seeds")) {
    const json& s = doc.at("seeds");
    if (!s.is_array() || s.empty()) throw ConfigError("seeds must be a non-empty array");
    std::vector<std::uint64_t> out;
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) throw ConfigError("seeds must be non-negative integers");
      out.push_back(v.get<std::uint64_t>());
    }
    return out;
  }
  return {get_or<std::uint64_t>(doc, "seed", 0)};
}

std::vector<Method> selected_methods(const std::string& method) {
  if (method.empty()) return {Method::kFine, Method::kTraceIn, Method::kMeanDiff};
  return {method_from_string(method)};
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------- estimate

int cmd_estimate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const fs::path& out) {
  const LoadedConfig cfg = load_config(
      config_path, seed,
      {"schema_version", "dataset", "subset", "test_point", "trainer", "seed", "class_count"});
  const json& doc = cfg.doc;
  if (!doc.contains("dataset")) throw ConfigError("missing field 'dataset'");
  const std::uint64_t run_seed = get_or<std::uint64_t>(doc, "seed", 0);
  const Source src = load_source(doc.at("dataset"), cfg.base_dir, run_seed);

  CollectionConfig cc;
  cc.params = parse_trainer(doc.value("trainer", json::object()));
  cc.params.seed = run_seed;
  if (doc.contains("subset")) {
    const json& s = doc.at("subset");
    if (s == "planted") {
      cc.subset = src.planted;
    } else if (s.is_array()) {
      for (const auto& v : s) {
        if (!v.is_number_unsigned()) throw ConfigError("subset entries must be non-negative integers");
        cc.subset.push_back(v.get<std::size_t>());
      }
    } else {
      throw ConfigError("subset must be an index array or \"planted\"");
    }
  }
  const json tp = doc.value("test_point", json::object({{"held_out", true}}));
  require_keys(tp, "test_point", {"index", "held_out"});
  if (tp.contains("index")) {
    const std::size_t i = get_count(tp, "index", 0);
    if (i >= src.data.size()) throw ConfigError("test_point.index out of range");
    cc.test_point = src.data.examples[i];
  } else if (src.held_out) {
    cc.test_point = *src.held_out;
  } else {
    throw ConfigError("test_point: idx datasets need an explicit 'index'");
  }

  RawSignals raw;
  const SignalTrace trace =
      collect_signals(src.data.examples, cc, src.data.class_count, {}, &raw);
  const GaussianInfluence mu = estimate_mu(trace);

  std::string sweep = "tau,alpha,beta,mu\n";
  for (const auto& r : threshold_sweep(trace)) {
    sweep += format_number(r.tau) + ',' + format_number(r.alpha) + ',' + format_number(r.beta) +
             ',' + format_number(r.mu) + '\n';
  }
  json result = {{"mu", number(mu.mu)},
                 {"config_digest", config_digest(doc)},
                 {"seed", run_seed},
                 {"epochs", trace.size()},
                 {"subset_size", cc.subset.size()},
                 {"mean_diff", number(mean_diff_score(trace))}};
  write_file_atomic(out / "trace.csv", format_trace_csv(trace));
  write_file_atomic(out / "thresholds.csv", sweep);
  write_file_atomic(out / "result.json", result.dump(2) + "\n");
  std::cout << "mu = " << format_number(mu.mu) << "\n";
  return 0;
}

// ---------------------------------------------------------------- mislabel scan

int cmd_mislabel_scan(const std::string& config_path, std::optional<std::uint64_t> seed,
                      const fs::path& out, const std::string& method) {
  const LoadedConfig cfg = load_config(
      config_path, seed, {"schema_version", "dataset", "noise_fraction", "seeds", "trainer"});
  const json& doc = cfg.doc;
  if (!doc.contains("dataset")) throw ConfigError("missing field 'dataset'");
  const double fraction = get_or<double>(doc, "noise_fraction", 0.2);
  const TrainerParams base = parse_trainer(doc.value("trainer", json::object()));
  const auto methods = selected_methods(method);
  const auto grid = recall_grid();

  std::map<Method, std::string> curves;
  for (Method m : methods) curves[m] = "seed,p,recall\n";
  json summary = {{"config_digest", config_digest(doc)}, {"runs", json::array()}};
  for (std::uint64_t s : parse_seeds(doc)) {
    const Source src = load_source(doc.at("dataset"), cfg.base_dir, s);
    Rng noise_rng = make_rng(s, Stream::kLabelNoise);
    const Dataset noisy = inject_label_noise(src.data, fraction, noise_rng);
    TrainerParams p = base;
    p.seed = s;
    const MislabelScan scan = run_mislabel_scan(noisy, p);
    json run = {{"seed", s}, {"flagged", scan.flagged.size()}};
    for (Method m : methods) {
      const ScoreMap& scores = scan.scores.at(m);
      write_file_atomic(out / ("scores_" + to_string(m) + "_seed" + std::to_string(s) + ".csv"),
                        format_score_csv(scores));
      for (double p_top : grid) {
        curves[m] += std::to_string(s) + ',' + format_number(p_top) + ',' +
                     format_number(recall_at_top_p(scores, scan.flagged, p_top)) + '\n';
      }
      run["recall_at_0.2"][to_string(m)] = recall_at_top_p(scores, scan.flagged, 0.2);
    }
    std::cout << "seed " << s << ":";
    for (Method m : methods) {
      std::cout << ' ' << to_string(m) << '='
                << format_number(run["recall_at_0.2"][to_string(m)].get<double>());
    }
    std::cout << "\n";
    summary["runs"].push_back(run);
  }
  for (Method m : methods) write_file_atomic(out / ("recall_" + to_string(m) + ".csv"), curves[m]);
  write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- consistency

int cmd_consistency(const std::string& config_path, std::optional<std::uint64_t> seed,
                    const fs::path& out, const std::string& method) {
  const LoadedConfig cfg = load_config(
      config_path, seed,
      {"schema_version", "dataset", "seeds", "data_seed", "shuffle_pair", "shuffle_class", "top_k",
       "top_p", "trainer"});
  const json& doc = cfg.doc;
  if (!doc.contains("dataset")) throw ConfigError("missing field 'dataset'");
  const Source src =
      load_source(doc.at("dataset"), cfg.base_dir, get_or<std::uint64_t>(doc, "data_seed", 0));
  if (!src.held_out) throw ConfigError("consistency needs a blobs dataset (held-out test point)");
  const std::vector<std::uint64_t> seeds = parse_seeds(doc);
  const bool shuffle_pair = get_or<bool>(doc, "shuffle_pair", true);
  const std::size_t top_k_size = get_count(doc, "top_k", 50);
  const double top_p = get_or<double>(doc, "top_p", 0.2);
  if (seeds.size() * (shuffle_pair ? 2 : 1) < 2) {
    throw ConfigError("consistency needs at least two runs (more seeds or shuffle_pair)");
  }
  const auto runs = repeated_scores(src.data, *src.held_out, seeds,
                                    parse_trainer(doc.value("trainer", json::object())),
                                    shuffle_pair, get_count(doc, "shuffle_class", 1));
  json result = {{"config_digest", config_digest(doc)},
                 {"runs", runs.begin()->second.size()},
                 {"top_k", top_k_size},
                 {"top_p", top_p},
                 {"methods", json::object()}};
  for (Method m : selected_methods(method)) {
    const auto& r = runs.at(m);
    const VariationReport cv = coefficient_of_variation(r, top_p);
    result["methods"][to_string(m)] = {{"consistency", topk_consistency(r, top_k_size)},
                                       {"mean_cv_top_p", number(cv.mean_cv)},
                                       {"cv_included", cv.included},
                                       {"cv_excluded", cv.excluded}};
    write_file_atomic(out / ("cv_" + to_string(m) + ".csv"), format_score_csv(per_index_cv(r), "cv"));
    write_file_atomic(out / ("mean_scores_" + to_string(m) + ".csv"),
                      format_score_csv(mean_scores(r)));
    std::cout << to_string(m) << ": consistency="
              << format_number(result["methods"][to_string(m)]["consistency"].get<double>())
              << " mean_cv=" << format_number(cv.mean_cv) << "\n";
  }
  write_file_atomic(out / "consistency.json", result.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- score-traces

int cmd_score_traces(const std::vector<std::string>& files, const std::string& out_file) {
  ScoreMap scores;
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::ifstream in(files[i]);
    if (!in) throw std::runtime_error("cannot open " + files[i]);
    // Index from a numeric file stem (e.g. 17.csv), else the argument position.
    const std::string stem = fs::path(files[i]).stem().string();
    std::size_t index = i;
    if (!stem.empty() && stem.find_first_not_of("0123456789") == std::string::npos) {
      index = static_cast<std::size_t>(parse_int(stem));
    }
    if (!scores.emplace(index, estimate_mu(parse_trace_csv(in)).mu).second) {
      throw std::runtime_error("duplicate trace index " + std::to_string(index));
    }
  }
  const std::string csv = format_score_csv(scores, "mu");
  if (out_file.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(out_file, csv);
  }
  return 0;
}

// ---------------------------------------------------------------- curve / metrics

TradeoffCurve read_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_curve_csv(in);
}

std::vector<double> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const NumericTable t = read_numeric_csv(in);
  if (t.header.size() != 1) throw std::runtime_error(path + ": want a single-column CSV");
  std::vector<double> v;
  for (const auto& row : t.rows) v.push_back(row[0]);
  return v;
}

ScoreMap read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_score_csv(in);
}

void emit(const std::string& text, const std::string& out_file) {
  if (out_file.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out_file, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finfl: f-INE influence estimation, baselines and metrics"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", method;
  std::optional<std::uint64_t> seed;
  auto add_run_flags = [&](CLI::App* sub, bool with_method) {
    sub->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed (or seed list)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    if (with_method) sub->add_option("--method", method, "fine, tracein or meandiff (default: all)");
  };
  auto* estimate = app.add_subcommand("estimate", "collect one trace and estimate mu");
  add_run_flags(estimate, false);
  auto* scan = app.add_subcommand("mislabel-scan", "self-influence ranking and recall curves");
  add_run_flags(scan, true);
  auto* cons = app.add_subcommand("consistency", "top-k consistency and variation across runs");
  add_run_flags(cons, true);

  std::vector<std::string> trace_files;
  std::string out_file;
  auto* score = app.add_subcommand("score-traces", "estimate mu for trace CSVs; writes index,mu");
  score->add_option("traces", trace_files, "trace CSV files (t,o_tilde,o_tilde_prime)")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--out", out_file, "output CSV (default: stdout)");

  auto* curve = app.add_subcommand("curve", "trade-off curve utilities (CSV alpha,beta)");
  curve->require_subcommand(1);
  std::vector<double> mus;
  std::string file_a, file_b;
  std::size_t grid = 1001;
  auto* c_gmu = curve->add_subcommand("gmu", "sampled G_mu curve");
  c_gmu->add_option("mu", mus, "mu >= 0")->required()->expected(1);
  c_gmu->add_option("--grid", grid, "uniform grid points")->capture_default_str();
  auto* c_compose = curve->add_subcommand("compose", "print sqrt(sum mu_i^2)");
  c_compose->add_option("mus", mus, "mu values")->required();
  auto* c_inverse = curve->add_subcommand("inverse", "f^-1");
  c_inverse->add_option("curve", file_a)->required()->check(CLI::ExistingFile);
  auto* c_sym = curve->add_subcommand("symmetrize", "max{f, f^-1}");
  c_sym->add_option("curve", file_a)->required()->check(CLI::ExistingFile);
  auto* c_max = curve->add_subcommand("max", "pointwise max of two curves");
  c_max->add_option("f", file_a)->required()->check(CLI::ExistingFile);
  c_max->add_option("g", file_b)->required()->check(CLI::ExistingFile);
  auto* c_emp = curve->add_subcommand("empirical", "curve from two single-column sample CSVs");
  c_emp->add_option("h0", file_a, "samples under H0")->required()->check(CLI::ExistingFile);
  c_emp->add_option("h1", file_b, "samples under H1")->required()->check(CLI::ExistingFile);
  auto* c_fit = curve->add_subcommand("fit", "best-fit G_mu and its sup distance");
  c_fit->add_option("curve", file_a)->required()->check(CLI::ExistingFile);
  for (auto* sub : {c_gmu, c_inverse, c_sym, c_max, c_emp}) {
    sub->add_option("--out", out_file, "output CSV (default: stdout)");
  }

  auto* metrics = app.add_subcommand("metrics", "metrics over index,score CSVs");
  metrics->require_subcommand(1);
  std::vector<std::string> score_files;
  std::string flagged_file;
  double p_top = 0.2;
  std::size_t k_top = 50;
  auto* m_recall = metrics->add_subcommand("recall", "recall at top p of a flagged index set");
  m_recall->add_option("scores", file_a)->required()->check(CLI::ExistingFile);
  m_recall->add_option("--flagged", flagged_file, "CSV with header 'index'")
      ->required()
      ->check(CLI::ExistingFile);
  m_recall->add_option("--p", p_top)->capture_default_str();
  auto* m_cons = metrics->add_subcommand("consistency", "mean pairwise Jaccard of top-k sets");
  m_cons->add_option("scores", score_files)->required()->expected(2, -1)->check(CLI::ExistingFile);
  m_cons->add_option("--k", k_top)->capture_default_str();
  auto* m_cv = metrics->add_subcommand("cv", "mean coefficient of variation over the top p");
  m_cv->add_option("scores", score_files)->required()->expected(2, -1)->check(CLI::ExistingFile);
  m_cv->add_option("--p", p_top)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*estimate) return cmd_estimate(config_path, seed, out_dir);
    if (*scan) return cmd_mislabel_scan(config_path, seed, out_dir, method);
    if (*cons) return cmd_consistency(config_path, seed, out_dir, method);
    if (*score) return cmd_score_traces(trace_files, out_file);
    if (*c_gmu) emit(format_curve_csv(gmu_curve({mus.at(0)}, grid)), out_file);
    if (*c_compose) std::cout << format_number(compose_gaussian(mus).mu) << "\n";
    if (*c_inverse) emit(format_curve_csv(curve_inverse(read_curve(file_a))), out_file);
    if (*c_sym) emit(format_curve_csv(symmetrize(read_curve(file_a))), out_file);
    if (*c_max) emit(format_curve_csv(curve_max(read_curve(file_a), read_curve(file_b))), out_file);
    if (*c_emp) {
      emit(format_curve_csv(empirical_tradeoff(read_samples(file_a), read_samples(file_b))),
           out_file);
    }
    if (*c_fit) {
      const TradeoffCurve f = read_curve(file_a);
      const GaussianInfluence fit = best_fit_gmu(f);
      std::cout << "mu=" << format_number(fit.mu)
                << " sup_distance=" << format_number(sup_distance(f, gmu_curve(fit))) << "\n";
    }
    if (*m_recall) {
      std::ifstream in(flagged_file);
      const NumericTable t = read_numeric_csv(in, {"index"});
      IndexSet flagged;
      for (const auto& row : t.rows) flagged.insert(static_cast<std::size_t>(row[0]));
      std::cout << format_number(recall_at_top_p(read_scores(file_a), flagged, p_top)) << "\n";
    }
    if (*m_cons) {
      std::vector<IndexSet> sets;
      for (const auto& f : score_files) sets.push_back(top_k(read_scores(f), k_top));
      std::cout << format_number(consistency_score(sets)) << "\n";
    }
    if (*m_cv) {
      std::vector<ScoreMap> runs;
      for (const auto& f : score_files) runs.push_back(read_scores(f));
      const VariationReport r = coefficient_of_variation(runs, p_top);
      std::cout << "mean_cv=" << format_number(r.mean_cv) << " included=" << r.included
                << " excluded=" << r.excluded << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "finfl: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
