#include "repscope/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "repscope/error.hpp"
#include "repscope/geometry.hpp"
#include "repscope/parallel.hpp"
#include "repscope/rng.hpp"

namespace repscope {

using ojson = nlohmann::ordered_json;

std::string toolkit_version() { return REPSCOPE_VERSION; }

ojson MetricConfig::to_json() const {
  ojson j;
  j["alpha"] = entropy.alpha;
  j["normalized"] = entropy.normalized;
  j["temperature"] = temperature;
  j["lidar_delta"] = lidar_delta;
  j["dime_alpha"] = dime_alpha;
  j["dime_permutations"] = dime_permutations;
  j["seed"] = seed;
  j["logdet_ridge"] = logdet_ridge;
  j["skip_degenerate_curvature"] = skip_degenerate_curvature;
  return j;
}

const std::vector<std::string>& token_metrics() {
  static const std::vector<std::string> m = {"prompt-entropy", "curvature"};
  return m;
}

const std::vector<std::string>& pooled_metrics() {
  static const std::vector<std::string> m = {"dataset-entropy", "effective-rank", "collision-entropy",
                                             "logdet-entropy"};
  return m;
}

const std::vector<std::string>& invariance_metrics() {
  static const std::vector<std::string> m = {"infonce", "dime", "lidar"};
  return m;
}

namespace {

bool contains(const std::vector<std::string>& list, const std::string& s) {
  return std::find(list.begin(), list.end(), s) != list.end();
}

ojson common_metadata() {
  ojson m;
  m["depth_percentage"] = "100 * layer / num_layers";
  m["log_base"] = "natural";
  m["prompt_weighting"] = "equal weight per prompt";
  m["normalized_entropy"] = "S / log(min(rows, cols))";
  return m;
}

double pooled_metric(const std::string& name, const PooledMatrix& pooled, const MetricConfig& cfg) {
  if (name == "dataset-entropy") return dataset_entropy(pooled, cfg.entropy);
  if (name == "effective-rank") return effective_rank(pooled);
  if (name == "collision-entropy") return collision_entropy_fast(pooled);
  if (name == "logdet-entropy") return logdet_entropy(pooled, cfg.logdet_ridge);
  throw ValidationError("unknown pooled metric '" + name + "'");
}

void token_metric(const std::string& name, const std::vector<TokenMatrix>& prompts,
                  const std::vector<std::string>& prompt_ids, const MetricConfig& cfg, LayerEntry& entry) {
  std::vector<std::optional<double>> values(prompts.size());
  std::vector<std::string> prompt_errors, warnings;
  std::optional<std::string> layer_error;
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    try {
      values[p] = name == "prompt-entropy" ? prompt_entropy(prompts[p], cfg.entropy) : curvature(prompts[p]);
    } catch (const DegenerateStepError& e) {
      const std::string msg = "prompt " + prompt_ids[p] + ": " + e.what();
      if (cfg.skip_degenerate_curvature) {
        warnings.push_back(msg + " (skipped)");
      } else if (!layer_error) {
        layer_error = msg;
      }
    } catch (const Error& e) {
      prompt_errors.push_back("prompt " + prompt_ids[p] + ": " + e.what());
    }
  }
  if (!prompt_errors.empty()) entry.prompt_errors[name] = prompt_errors;
  if (!warnings.empty()) entry.warnings[name] = warnings;
  if (cfg.keep_per_prompt) entry.per_prompt[name] = values;
  if (layer_error) {
    entry.errors[name] = *layer_error;
    return;
  }
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++used;
    }
  }
  if (used == 0) {
    entry.errors[name] = "no prompt produced a value";
    return;
  }
  entry.values[name] = sum / static_cast<double>(used);
}

void check_known(const std::vector<std::string>& metrics, const std::vector<std::string>& allowed_a,
                 const std::vector<std::string>& allowed_b, const char* context) {
  if (metrics.empty()) throw ValidationError("no metrics requested");
  for (const auto& m : metrics) {
    if (!contains(allowed_a, m) && !contains(allowed_b, m)) {
      throw ValidationError("metric '" + m + "' is not available for " + context);
    }
  }
}

ojson optional_to_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

std::vector<std::string> parse_metric_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty() && !contains(out, item)) out.push_back(item);
  }
  return out;
}

double depth_percentage(std::size_t layer, int num_layers) {
  return 100.0 * static_cast<double>(layer) / static_cast<double>(num_layers);
}

ojson MetricReport::to_json() const {
  ojson j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = kind;
  j["toolkit_version"] = version;
  j["run"] = {{"model_id", model_id}, {"num_layers", num_layers}, {"pooling", pooling}, {"prompt_count", prompt_count}};
  j["metrics"] = metrics;
  j["config"] = config;
  j["metadata"] = metadata;
  ojson layer_list = ojson::array();
  for (const auto& e : layers) {
    ojson l;
    l["layer"] = e.layer;
    l["depth_pct"] = e.depth_pct;
    l["values"] = ojson::object();
    for (const auto& [k, v] : e.values) l["values"][k] = v;
    if (!e.errors.empty()) {
      for (const auto& [k, v] : e.errors) l["errors"][k] = v;
    }
    if (!e.prompt_errors.empty()) {
      for (const auto& [k, v] : e.prompt_errors) l["prompt_errors"][k] = v;
    }
    if (!e.warnings.empty()) {
      for (const auto& [k, v] : e.warnings) l["warnings"][k] = v;
    }
    if (!e.per_prompt.empty()) {
      for (const auto& [k, v] : e.per_prompt) {
        ojson arr = ojson::array();
        for (const auto& x : v) arr.push_back(optional_to_json(x));
        l["per_prompt"][k] = arr;
      }
    }
    layer_list.push_back(l);
  }
  j["layers"] = layer_list;
  return j;
}

MetricReport MetricReport::from_json(const ojson& j) {
  try {
    const int schema = j.at("schema_version").get<int>();
    if (schema != kReportSchemaVersion) {
      throw FormatError("unsupported report schema_version " + std::to_string(schema));
    }
    MetricReport r;
    r.kind = j.at("kind").get<std::string>();
    r.version = j.at("toolkit_version").get<std::string>();
    const auto& run = j.at("run");
    r.model_id = run.at("model_id").get<std::string>();
    r.num_layers = run.at("num_layers").get<int>();
    r.pooling = run.at("pooling").get<std::string>();
    r.prompt_count = run.at("prompt_count").get<std::size_t>();
    r.metrics = j.at("metrics").get<std::vector<std::string>>();
    r.config = j.at("config");
    r.metadata = j.at("metadata");
    for (const auto& l : j.at("layers")) {
      LayerEntry e;
      e.layer = l.at("layer").get<std::size_t>();
      e.depth_pct = l.at("depth_pct").get<double>();
      for (const auto& [k, v] : l.at("values").items()) e.values[k] = v.get<double>();
      if (l.contains("errors"))
        for (const auto& [k, v] : l["errors"].items()) e.errors[k] = v.get<std::string>();
      if (l.contains("prompt_errors"))
        for (const auto& [k, v] : l["prompt_errors"].items()) e.prompt_errors[k] = v.get<std::vector<std::string>>();
      if (l.contains("warnings"))
        for (const auto& [k, v] : l["warnings"].items()) e.warnings[k] = v.get<std::vector<std::string>>();
      if (l.contains("per_prompt")) {
        for (const auto& [k, v] : l["per_prompt"].items()) {
          auto& dst = e.per_prompt[k];
          for (const auto& x : v) dst.push_back(x.is_null() ? std::nullopt : std::optional<double>(x.get<double>()));
        }
      }
      r.layers.push_back(std::move(e));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report schema error: ") + e.what());
  }
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "layer,depth_pct";
  for (const auto& m : metrics) out << ',' << m;
  out << '\n';
  for (const auto& e : layers) {
    out << e.layer << ',' << e.depth_pct;
    for (const auto& m : metrics) {
      out << ',';
      if (auto it = e.values.find(m); it != e.values.end()) out << it->second;
    }
    out << '\n';
  }
  return out.str();
}

std::optional<double> MetricReport::value(std::size_t layer, const std::string& metric) const {
  for (const auto& e : layers) {
    if (e.layer != layer) continue;
    if (auto it = e.values.find(metric); it != e.values.end()) return it->second;
    return std::nullopt;
  }
  return std::nullopt;
}

LayerCurve MetricReport::curve(const std::string& metric, Direction direction) const {
  if (!contains(metrics, metric)) throw ValidationError("report has no metric '" + metric + "'");
  LayerCurve c;
  c.metric = metric;
  c.direction = direction;
  for (const auto& e : layers) {
    auto it = e.values.find(metric);
    if (it == e.values.end()) {
      throw ValidationError("metric '" + metric + "' has no value at layer " + std::to_string(e.layer));
    }
    c.values.push_back(it->second);
  }
  return c;
}

MetricReport compute_report(const RunBundle& bundle, const std::vector<std::string>& metrics,
                            const MetricConfig& cfg) {
  check_known(metrics, token_metrics(), pooled_metrics(), "per-run reports");
  cfg.entropy.validate();
  for (const auto& m : metrics) {
    if (contains(token_metrics(), m) && !bundle.has_tokens()) {
      throw GranularityError("metric '" + m + "' needs token-level dumps (pooling=none); run '" +
                             bundle.manifest().model_id + "' has pooling=mean");
    }
  }

  const auto& manifest = bundle.manifest();
  MetricReport r;
  r.model_id = manifest.model_id;
  r.num_layers = manifest.num_layers;
  r.pooling = std::string(to_string(manifest.pooling));
  r.prompt_count = bundle.prompt_count();
  r.metrics = metrics;
  r.config = cfg.to_json();
  r.metadata = common_metadata();
  r.layers.resize(bundle.layer_count());

  const bool wants_tokens = std::any_of(metrics.begin(), metrics.end(),
                                        [](const auto& m) { return contains(token_metrics(), m); });
  const bool wants_pooled = std::any_of(metrics.begin(), metrics.end(),
                                        [](const auto& m) { return contains(pooled_metrics(), m); });
  if (bundle.has_tokens() && wants_pooled) r.metadata["pooled_from_tokens"] = "mean over token rows";

  parallel_for(bundle.layer_count(), cfg.threads, [&](std::size_t layer) {
    LayerEntry& entry = r.layers[layer];
    entry.layer = layer;
    entry.depth_pct = depth_percentage(layer, manifest.num_layers);
    std::vector<TokenMatrix> tokens;
    if (wants_tokens) tokens = bundle.tokens(layer);
    PooledMatrix pooled;
    if (wants_pooled && !tokens.empty()) {
      pooled.resize(static_cast<Eigen::Index>(tokens.size()), tokens.front().cols());
      for (std::size_t i = 0; i < tokens.size(); ++i)
        pooled.row(static_cast<Eigen::Index>(i)) = mean_pool(tokens[i]).transpose();
    } else if (wants_pooled) {
      pooled = bundle.pooled(layer);
    }
    for (const auto& m : metrics) {
      if (contains(token_metrics(), m)) {
        token_metric(m, tokens, manifest.prompt_ids, cfg, entry);
        continue;
      }
      try {
        entry.values[m] = pooled_metric(m, pooled, cfg);
      } catch (const Error& e) {
        entry.errors[m] = e.what();
      }
    }
  });
  return r;
}

MetricReport compute_invariance_report(const std::vector<const RunBundle*>& views,
                                       const std::vector<std::string>& metrics, const MetricConfig& cfg) {
  check_known(metrics, invariance_metrics(), {}, "invariance reports");
  if (views.size() < 2) throw ValidationError("invariance metrics need at least two augmented runs");
  const RunBundle& a = *views.front();
  for (std::size_t v = 1; v < views.size(); ++v) {
    const RunBundle& b = *views[v];
    if (b.manifest().prompt_ids != a.manifest().prompt_ids) {
      throw ValidationError("augmented run " + std::to_string(v) + " has prompt ids that differ from the first run");
    }
    if (b.layer_count() != a.layer_count()) {
      throw ValidationError("augmented run " + std::to_string(v) + " has " + std::to_string(b.manifest().num_layers) +
                            " layers, the first run has " + std::to_string(a.manifest().num_layers));
    }
  }

  MetricReport r;
  r.kind = "invariance";
  r.model_id = a.manifest().model_id;
  r.num_layers = a.manifest().num_layers;
  r.pooling = std::string(to_string(a.manifest().pooling));
  r.prompt_count = a.prompt_count();
  r.metrics = metrics;
  r.config = cfg.to_json();
  r.config["views"] = views.size();
  r.metadata = common_metadata();
  r.metadata["infonce_similarity"] = "cosine (row norms do not matter)";
  r.metadata["infonce_form"] = "symmetric, mean of both directions";
  r.metadata["dime_seed_per_layer"] = "derive_seed(seed, layer)";
  r.metadata["lidar_samples_per_class"] = views.size();
  r.layers.resize(a.layer_count());

  parallel_for(a.layer_count(), cfg.threads, [&](std::size_t layer) {
    LayerEntry& entry = r.layers[layer];
    entry.layer = layer;
    entry.depth_pct = depth_percentage(layer, r.num_layers);
    std::vector<Matrix> pooled;
    pooled.reserve(views.size());
    for (const auto* v : views) pooled.push_back(v->pooled(layer));
    for (const auto& m : metrics) {
      try {
        if (m == "lidar") {
          entry.values[m] = lidar(ClassBundle::from_views(pooled), cfg.lidar_delta);
        } else {
          const PairedEmbeddings pairs(pooled[0], pooled[1]);
          entry.values[m] = m == "infonce"
                                ? infonce(pairs, cfg.temperature)
                                : dime(pairs, cfg.dime_alpha, cfg.dime_permutations, derive_seed(cfg.seed, layer));
        }
      } catch (const Error& e) {
        entry.errors[m] = e.what();
      }
    }
  });
  return r;
}

ojson SweepTable::to_json() const {
  ojson j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "sweep";
  j["metric"] = metric;
  j["labels"] = labels;
  j["layer_count"] = layer_count;
  ojson rows = ojson::array();
  for (const auto& row : values) {
    ojson arr = ojson::array();
    for (const auto& v : row) arr.push_back(optional_to_json(v));
    rows.push_back(arr);
  }
  j["values"] = rows;
  return j;
}

SweepTable extreme_sweep(const std::vector<std::pair<std::string, const RunBundle*>>& runs,
                         const std::string& metric, const MetricConfig& cfg) {
  if (runs.empty()) throw ValidationError("sweep needs at least one run");
  SweepTable t;
  t.metric = metric;
  t.layer_count = runs.front().second->layer_count();
  for (const auto& [label, bundle] : runs) {
    if (bundle->layer_count() != t.layer_count) {
      throw ValidationError("sweep run '" + label + "' has " + std::to_string(bundle->manifest().num_layers) +
                            " layers, expected " + std::to_string(t.layer_count - 1));
    }
  }
  for (const auto& [label, bundle] : runs) {
    const MetricReport r = compute_report(*bundle, {metric}, cfg);
    std::vector<std::optional<double>> row;
    for (std::size_t l = 0; l < t.layer_count; ++l) row.push_back(r.value(l, metric));
    t.labels.push_back(label);
    t.values.push_back(std::move(row));
  }
  return t;
}

}  // namespace repscope
