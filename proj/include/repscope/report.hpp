#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "repscope/entropy.hpp"
#include "repscope/invariance.hpp"
#include "repscope/stats.hpp"
#include "repscope/tensor_io.hpp"

namespace repscope {

inline constexpr int kReportSchemaVersion = 1;

std::string toolkit_version();

/// Every knob a report depends on; echoed verbatim into the output.
struct MetricConfig {
  EntropyConfig entropy;
  double temperature = kDefaultTemperature;
  double lidar_delta = kDefaultLidarDelta;
  double dime_alpha = 1.0;
  std::size_t dime_permutations = kDefaultDimePermutations;
  std::uint64_t seed = 0;
  double logdet_ridge = 1e-8;
  bool keep_per_prompt = false;
  /// Drop prompts with a zero step from curvature (with a warning) instead of
  /// failing the layer's curvature value.
  bool skip_degenerate_curvature = false;
  std::size_t threads = 0;

  nlohmann::ordered_json to_json() const;
};

/// Metrics computed per prompt from token matrices, then averaged.
const std::vector<std::string>& token_metrics();
/// Metrics computed on the pooled N x D matrix.
const std::vector<std::string>& pooled_metrics();
/// Metrics computed on two or more augmented views.
const std::vector<std::string>& invariance_metrics();

std::vector<std::string> parse_metric_list(const std::string& comma_separated);

struct LayerEntry {
  std::size_t layer = 0;
  double depth_pct = 0.0;
  std::map<std::string, double> values;
  /// Metric-level failures at this layer (value absent).
  std::map<std::string, std::string> errors;
  /// Per-prompt failures that did not stop the layer value.
  std::map<std::string, std::vector<std::string>> prompt_errors;
  std::map<std::string, std::vector<std::string>> warnings;
  std::map<std::string, std::vector<std::optional<double>>> per_prompt;
};

struct MetricReport {
  std::string kind = "layer-metrics";
  std::string model_id;
  int num_layers = 0;
  std::string pooling;
  std::size_t prompt_count = 0;
  std::vector<std::string> metrics;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::string version = toolkit_version();
  std::vector<LayerEntry> layers;

  nlohmann::ordered_json to_json() const;
  static MetricReport from_json(const nlohmann::ordered_json& j);
  std::string to_csv() const;

  /// Per-layer series of one metric; throws if any layer lacks a value.
  LayerCurve curve(const std::string& metric, Direction direction) const;
  std::optional<double> value(std::size_t layer, const std::string& metric) const;
};

double depth_percentage(std::size_t layer, int num_layers);

/// Per-layer metrics over a run. Token metrics need a pooling=none run;
/// pooled metrics use the stored pooled dump or mean-pool token dumps.
MetricReport compute_report(const RunBundle& bundle, const std::vector<std::string>& metrics,
                            const MetricConfig& cfg);

/// Invariance metrics over augmented runs with identical prompt ids and depth.
/// InfoNCE and DiME pair the first two views; LiDAR treats every view as one
/// sample per prompt class.
MetricReport compute_invariance_report(const std::vector<const RunBundle*>& views,
                                       const std::vector<std::string>& metrics, const MetricConfig& cfg);

/// metric value over perturbation intensity x depth.
struct SweepTable {
  std::string metric;
  std::vector<std::string> labels;
  std::size_t layer_count = 0;
  /// values[label][layer]; nullopt where the layer errored.
  std::vector<std::vector<std::optional<double>>> values;

  nlohmann::ordered_json to_json() const;
};

SweepTable extreme_sweep(const std::vector<std::pair<std::string, const RunBundle*>>& runs,
                         const std::string& metric, const MetricConfig& cfg);

}  // namespace repscope
