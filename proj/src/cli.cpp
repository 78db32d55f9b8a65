#include "repscope/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "repscope/augment.hpp"
#include "repscope/error.hpp"
#include "repscope/report.hpp"
#include "repscope/stats.hpp"
#include "repscope/tensor_io.hpp"
#include "repscope/theory.hpp"

namespace repscope::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t threads = 0;
  bool verbose = false;
};

std::uint64_t resolve_seed(const Globals& g) {
  if (g.seed_given) return g.seed;
  if (const char* env = std::getenv("REPSCOPE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("REPSCOPE_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

void emit(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << content;
  if (!f) throw IoError("write failure on " + path);
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

MetricReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path);
  try {
    return MetricReport::from_json(ojson::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": not valid JSON: " + e.what());
  }
}

/// Score table: first column is the layer index, the rest are task columns.
struct ScoreTable {
  std::vector<std::string> tasks;
  std::map<std::size_t, std::vector<double>> rows;
};

ScoreTable read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores " + path);
  ScoreTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty scores file");
  auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "layer") {
    throw FormatError(path + ": header must be 'layer,<task>[,<task>...]'");
  }
  for (std::size_t i = 1; i < header.size(); ++i) t.tasks.push_back(trim(header[i]));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " columns");
    }
    try {
      const auto layer = static_cast<std::size_t>(std::stoul(cells[0]));
      std::vector<double> v;
      for (std::size_t i = 1; i < cells.size(); ++i) v.push_back(std::stod(cells[i]));
      t.rows[layer] = v;
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": non-numeric cell");
    }
  }
  return t;
}

ojson correlate_series(const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<std::string>& measures, const std::string& label, std::ostream& err) {
  ojson r;
  r["n"] = x.size();
  const bool constant = is_constant(x) || is_constant(y);
  for (const auto& m : measures) {
    if (x.size() < 2) {
      r[m] = nullptr;
      continue;
    }
    if (m == "dcor") {
      if (constant) err << "warning: " << label << ": constant input, dCor reported as 0\n";
      r[m] = distance_correlation(x, y);
    } else if (constant) {
      err << "warning: " << label << ": constant input, " << m << " undefined\n";
      r[m] = nullptr;
    } else {
      r[m] = m == "spearman" ? spearman(x, y) : kendall(x, y);
    }
  }
  return r;
}

int run_info(const std::string& run_dir, bool as_json, std::ostream& out) {
  const RunBundle b = load_run(run_dir);
  const auto& m = b.manifest();
  if (as_json) {
    ojson j;
    j["schema_version"] = kReportSchemaVersion;
    j["model_id"] = m.model_id;
    j["num_layers"] = m.num_layers;
    j["pooling"] = std::string(to_string(m.pooling));
    j["dtype"] = std::string(to_string(m.dtype));
    j["prompt_count"] = m.prompt_ids.size();
    out << dump(j);
    return kExitOk;
  }
  out << "model_id: " << m.model_id << "\n"
      << "num_layers: " << m.num_layers << " (dumps for layers 0.." << m.num_layers << ")\n"
      << "pooling: " << to_string(m.pooling) << "\n"
      << "dtype: " << to_string(m.dtype) << "\n"
      << "prompts: " << m.prompt_ids.size() << "\n";
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"repscope: layer-wise representation-quality metrics"};
  app.name("repscope");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step (fallback: $REPSCOPE_SEED, then 0)")
      ->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--threads", g.threads, "Worker threads (0 = available parallelism)");
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

  // info
  std::string info_dir;
  bool info_json = false;
  auto* info = app.add_subcommand("info", "Summarize a run directory");
  info->add_option("run", info_dir, "Run directory or manifest path")->required();
  info->add_flag("--json", info_json, "Emit JSON");

  // compute
  std::string run_dir, metrics_arg = "prompt-entropy,dataset-entropy", out_path, csv_path;
  MetricConfig cfg;
  auto* compute = app.add_subcommand("compute", "Per-layer metrics over one run");
  compute->add_option("--run", run_dir, "Run directory")->required();
  compute->add_option("--metrics", metrics_arg, "Comma-separated metrics")->capture_default_str();
  compute->add_option("--alpha", cfg.entropy.alpha, "Entropy order")->capture_default_str();
  compute->add_flag("--normalized", cfg.entropy.normalized, "Normalize entropies by log(min(rows, cols))");
  compute->add_option("--ridge", cfg.logdet_ridge, "LogDet ridge")->capture_default_str();
  compute->add_flag("--per-prompt", cfg.keep_per_prompt, "Keep per-prompt values");
  compute->add_flag("--skip-degenerate", cfg.skip_degenerate_curvature,
                    "Skip prompts with repeated consecutive tokens in curvature (with a warning)");
  compute->add_option("--out", out_path, "Report path (default stdout)");
  compute->add_option("--csv", csv_path, "Also write a flat CSV export");

  // invariance
  std::string run_a, run_b;
  std::vector<std::string> run_aug;
  std::string inv_metrics = "infonce,dime,lidar";
  auto* inv = app.add_subcommand("invariance", "Augmentation-invariance metrics over paired runs");
  inv->add_option("--run-a", run_a, "First augmented run")->required();
  inv->add_option("--run-b", run_b, "Second augmented run")->required();
  inv->add_option("--run-aug", run_aug, "Extra augmented runs (LiDAR samples per class)");
  inv->add_option("--metrics", inv_metrics, "Comma-separated metrics")->capture_default_str();
  inv->add_option("--temperature", cfg.temperature, "InfoNCE temperature")->capture_default_str();
  inv->add_option("--dime-alpha", cfg.dime_alpha, "DiME entropy order")->capture_default_str();
  inv->add_option("--permutations", cfg.dime_permutations, "DiME random permutations")->capture_default_str();
  inv->add_option("--lidar-delta", cfg.lidar_delta, "LiDAR within-class regularizer")->capture_default_str();
  inv->add_option("--out", out_path, "Report path (default stdout)");
  inv->add_option("--csv", csv_path, "Also write a flat CSV export");

  // sweep
  std::string runs_arg, sweep_metric = "prompt-entropy";
  auto* sweep = app.add_subcommand("sweep", "One metric over perturbation intensity x depth");
  sweep->add_option("--runs", runs_arg, "label=DIR pairs, comma-separated")->required();
  sweep->add_option("--metric", sweep_metric, "Metric to sweep")->capture_default_str();
  sweep->add_option("--alpha", cfg.entropy.alpha, "Entropy order")->capture_default_str();
  sweep->add_flag("--normalized", cfg.entropy.normalized, "Normalize entropies");
  sweep->add_option("--out", out_path, "Output path (default stdout)");

  // augment
  AugmentConfig aug;
  bool pairs = false;
  auto* augment = app.add_subcommand("augment", "Augment prompts read one per line from stdin");
  augment->add_option("--p-split", aug.p_split, "Word split probability")->capture_default_str();
  augment->add_option("--p-char", aug.p_char, "Random character edit probability")->capture_default_str();
  augment->add_option("--p-keyboard", aug.p_keyboard, "Keyboard typo probability")->capture_default_str();
  augment->add_flag("--pairs", pairs, "Emit two tab-separated augmentations per prompt");

  // verify
  std::string suite = "theorems", verify_json;
  auto* verify = app.add_subcommand("verify", "Run the numerical theorem checks");
  verify->add_option("--suite", suite, "Suite name")->check(CLI::IsMember({"theorems"}))->capture_default_str();
  verify->add_option("--json", verify_json, "Write the JSON report here (default stdout)");

  // correlate
  std::vector<std::string> report_paths;
  std::string scores_path, measures_arg = "dcor,spearman,kendall", corr_metrics, axis = "layers";
  auto* correlate = app.add_subcommand("correlate", "Correlate metric curves with task scores");
  correlate->add_option("--report", report_paths, "Metric report (task=PATH form for --axis tasks)")->required();
  correlate->add_option("--scores", scores_path, "CSV with header layer,<task>...")->required();
  correlate->add_option("--measures", measures_arg, "dcor,spearman,kendall")->capture_default_str();
  correlate->add_option("--metrics", corr_metrics, "Subset of report metrics (default all)");
  correlate->add_option("--axis", axis, "layers: across layers per task; tasks: across tasks per layer")
      ->check(CLI::IsMember({"layers", "tasks"}))
      ->capture_default_str();
  correlate->add_option("--out", out_path, "Output path (default stdout)");

  // select-layer
  std::string sel_report, sel_metric, direction = "min";
  auto* select = app.add_subcommand("select-layer", "Pick the layer that optimizes a metric");
  select->add_option("--report", sel_report, "Metric report")->required();
  select->add_option("--metric", sel_metric, "Metric name")->required();
  select->add_option("--direction", direction, "min or max")->check(CLI::IsMember({"min", "max"}))->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    cfg.threads = g.threads;
    if (*info) return run_info(info_dir, info_json, out);

    if (*compute) {
      cfg.seed = resolve_seed(g);
      const RunBundle bundle = load_run(run_dir);
      if (g.verbose) err << "computing " << metrics_arg << " over " << bundle.layer_count() << " layers\n";
      const MetricReport r = compute_report(bundle, parse_metric_list(metrics_arg), cfg);
      emit(dump(r.to_json()), out_path, out);
      if (!csv_path.empty()) emit(r.to_csv(), csv_path, out);
      return kExitOk;
    }

    if (*inv) {
      cfg.seed = resolve_seed(g);
      std::vector<RunBundle> bundles;
      bundles.push_back(load_run(run_a));
      bundles.push_back(load_run(run_b));
      for (const auto& p : run_aug) bundles.push_back(load_run(p));
      std::vector<const RunBundle*> views;
      for (const auto& b : bundles) views.push_back(&b);
      const MetricReport r = compute_invariance_report(views, parse_metric_list(inv_metrics), cfg);
      emit(dump(r.to_json()), out_path, out);
      if (!csv_path.empty()) emit(r.to_csv(), csv_path, out);
      return kExitOk;
    }

    if (*sweep) {
      cfg.seed = resolve_seed(g);
      std::vector<std::pair<std::string, RunBundle>> loaded;
      for (const auto& item : split(runs_arg, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("--runs entries must be label=DIR, got '" + item + "'");
        loaded.emplace_back(item.substr(0, eq), load_run(item.substr(eq + 1)));
      }
      std::vector<std::pair<std::string, const RunBundle*>> runs;
      for (const auto& [label, b] : loaded) runs.emplace_back(label, &b);
      ojson j = extreme_sweep(runs, sweep_metric, cfg).to_json();
      j["config"] = cfg.to_json();
      emit(dump(j), out_path, out);
      return kExitOk;
    }

    if (*augment) {
      aug.validate();
      const std::uint64_t seed = resolve_seed(g);
      if (g.verbose) err << "augment seed " << seed << "\n";
      std::string line;
      std::uint64_t index = 0;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        AugmentConfig per_line = aug;
        per_line.seed = derive_seed(seed, index++);
        const auto [a, b] = augment_pair(line, per_line);
        out << a;
        if (pairs) out << '\t' << b;
        out << '\n';
      }
      return kExitOk;
    }

    if (*verify) {
      const std::uint64_t seed = resolve_seed(g);
      const auto checks = theory::run_theorem_suite(seed, g.threads);
      ojson j;
      j["schema_version"] = kReportSchemaVersion;
      j["kind"] = "verification";
      j["suite"] = suite;
      j["seed"] = seed;
      j["toolkit_version"] = toolkit_version();
      ojson list = ojson::array();
      std::size_t failed = 0;
      for (const auto& c : checks) {
        list.push_back(c.to_json());
        failed += !c.passed;
      }
      j["checks"] = list;
      j["all_passed"] = failed == 0;
      emit(dump(j), verify_json, out);
      if (!verify_json.empty()) {
        for (const auto& c : checks) out << (c.passed ? "PASS " : "FAIL ") << c.name << "\n";
      }
      if (failed > 0) {
        err << failed << " check(s) failed\n";
        return kExitValidation;
      }
      return kExitOk;
    }

    if (*correlate) {
      const auto measures = parse_metric_list(measures_arg);
      for (const auto& m : measures) {
        if (m != "dcor" && m != "spearman" && m != "kendall") throw ValidationError("unknown measure '" + m + "'");
      }
      const ScoreTable scores = read_scores(scores_path);
      ojson j;
      j["schema_version"] = kReportSchemaVersion;
      j["kind"] = "correlation";
      j["axis"] = axis;
      j["measures"] = measures;
      ojson results = ojson::array();

      if (axis == "layers") {
        // One report shared by every task, or task=PATH per task.
        std::map<std::string, MetricReport> per_task;
        std::optional<MetricReport> shared;
        for (const auto& r : report_paths) {
          const auto eq = r.find('=');
          if (eq == std::string::npos) {
            shared = read_report(r);
          } else {
            per_task.emplace(r.substr(0, eq), read_report(r.substr(eq + 1)));
          }
        }
        for (std::size_t t = 0; t < scores.tasks.size(); ++t) {
          const std::string& task = scores.tasks[t];
          const MetricReport* rep = per_task.count(task) ? &per_task.at(task) : (shared ? &*shared : nullptr);
          if (!rep) continue;
          const auto metrics = corr_metrics.empty() ? rep->metrics : parse_metric_list(corr_metrics);
          for (const auto& metric : metrics) {
            std::vector<double> x, y;
            for (const auto& [layer, row] : scores.rows) {
              if (auto v = rep->value(layer, metric)) {
                x.push_back(*v);
                y.push_back(row[t]);
              }
            }
            ojson r = correlate_series(x, y, measures, metric + " vs " + task, err);
            ojson entry;
            entry["metric"] = metric;
            entry["task"] = task;
            entry.update(r);
            results.push_back(entry);
          }
        }
      } else {
        std::map<std::string, MetricReport> per_task;
        for (const auto& r : report_paths) {
          const auto eq = r.find('=');
          if (eq == std::string::npos) throw ValidationError("--axis tasks needs --report task=PATH for each task");
          per_task.emplace(r.substr(0, eq), read_report(r.substr(eq + 1)));
        }
        if (per_task.empty()) throw ValidationError("no reports given");
        const auto& first = per_task.begin()->second;
        const auto metrics = corr_metrics.empty() ? first.metrics : parse_metric_list(corr_metrics);
        for (const auto& metric : metrics) {
          for (const auto& [layer, row] : scores.rows) {
            std::vector<double> x, y;
            for (std::size_t t = 0; t < scores.tasks.size(); ++t) {
              auto it = per_task.find(scores.tasks[t]);
              if (it == per_task.end()) continue;
              if (auto v = it->second.value(layer, metric)) {
                x.push_back(*v);
                y.push_back(row[t]);
              }
            }
            ojson r = correlate_series(x, y, measures, metric + " at layer " + std::to_string(layer), err);
            ojson entry;
            entry["metric"] = metric;
            entry["layer"] = layer;
            entry.update(r);
            results.push_back(entry);
          }
        }
      }
      j["results"] = results;
      emit(dump(j), out_path, out);
      return kExitOk;
    }

    if (*select) {
      const MetricReport r = read_report(sel_report);
      const Direction d = parse_direction(direction);
      const LayerCurve curve = r.curve(sel_metric, d);
      const std::size_t layer = select_layer(curve);
      ojson j;
      j["schema_version"] = kReportSchemaVersion;
      j["metric"] = sel_metric;
      j["direction"] = direction;
      j["layer"] = layer;
      j["depth_pct"] = depth_percentage(layer, r.num_layers);
      j["value"] = curve.values[layer];
      out << dump(j);
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace repscope::cli
