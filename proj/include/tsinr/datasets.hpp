#pragma once

// Series ingestion, windowing and the synthetic anomaly benchmark.
//
// Series are held channel-major as [d x length] tensors. On disk they are CSV
// files with one row per timestamp and one column per channel; label files
// hold one 0/1 per line.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsinr/inr.hpp"
#include "tsinr/tensor.hpp"

namespace tsinr {

struct SeriesBundle {
  std::string name;
  std::vector<std::string> channel_names;
  Tensor train;                    // [d x T_train]
  Tensor test;                     // [d x T_test]
  std::vector<int> test_labels;    // one 0/1 per test timestamp
};

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has no header row
  Tensor values;                    // [d x rows]
};

/// Header detected when the first row contains a non-numeric cell.
CsvTable read_series_csv(const std::string& path);
void write_series_csv(const std::string& path, const Tensor& series, const std::vector<std::string>& header = {});
std::vector<int> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<int>& labels);

/// Loads train/test CSVs and test labels; labels_path may be empty.
SeriesBundle load_csv(const std::string& train_path, const std::string& test_path, const std::string& labels_path);

struct Window {
  Tensor values;  // [d x T]
  std::size_t start = 0;
  TimestampGrid grid = TimestampGrid::window(1);
};

/// Start indices 0, stride, 2*stride, ... for windows fully inside the series.
std::vector<std::size_t> window_starts(std::size_t length, std::size_t window, std::size_t stride);
std::vector<Window> windows(const Tensor& series, std::size_t window, std::size_t stride);
Tensor slice_window(const Tensor& series, std::size_t start, std::size_t window);

enum class AnomalyKind { global_point, contextual_point, shapelet, seasonal, trend };

std::string to_string(AnomalyKind kind);
AnomalyKind parse_anomaly_kind(const std::string& text);

struct SynthSpec {
  std::size_t train_length = 2000;
  std::size_t test_length = 2000;
  std::size_t channels = 1;
  double period = 40.0;       // timestamps per cycle of the base sine
  double amplitude = 1.0;
  double trend_slope = 0.0;   // added per timestamp
  double noise_std = 0.05;
  AnomalyKind kind = AnomalyKind::global_point;
  // Unset fields take per-kind defaults, see resolve().
  std::optional<std::size_t> count;           // 20 point / 5 pattern anomalies
  std::optional<std::size_t> segment_length;  // 1 for points, 30 for patterns
  std::optional<double> magnitude;            // lambda; see default_magnitude()
  std::vector<std::size_t> positions;         // explicit segment starts; overrides count
  std::size_t context_radius = 25; // contextual_point local window half-width
  std::size_t frequency_factor = 3;
  double slope_offset = 0.05;      // trend anomalies, per timestamp
  std::uint64_t seed = 0;
};

/// 6 for global points, 3 for contextual points, 1 for pattern anomalies.
double default_magnitude(AnomalyKind kind);
bool is_point_kind(AnomalyKind kind);
/// Copy with every optional field filled in; validates the spec.
SynthSpec resolve(const SynthSpec& spec);

struct InjectedAnomaly {
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t channel = 0;
};

struct SynthResult {
  SynthSpec spec;  // resolved
  SeriesBundle bundle;
  Tensor clean_test;                      // test split before injection
  std::vector<InjectedAnomaly> injected;  // sorted by start
};

/// Throws ConfigError when the anomalies would cover 20% or more of the test split.
SynthResult synthesize(const SynthSpec& spec);

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);

/// Writes train.csv, test.csv, labels.csv and spec.json into dir.
void write_synth_bundle(const std::string& dir, const SynthResult& result);

}  // namespace tsinr
