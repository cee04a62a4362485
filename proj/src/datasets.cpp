#include "tsinr/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tsinr/errors.hpp"

namespace tsinr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* begin = cell.data();
  if (*begin == '+') ++begin;
  double v = 0.0;
  auto res = std::from_chars(begin, cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

void write_double(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

// -- CSV -------------------------------------------------------------------------

CsvTable read_series_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");

  CsvTable table;
  std::size_t first = 0;
  {
    const auto cells = split_commas(lines[0]);
    const bool numeric = std::all_of(cells.begin(), cells.end(), [](const std::string& c) {
      auto v = parse_number(c);
      return v.has_value() || c == "nan" || c == "NaN";
    });
    if (!numeric) {
      table.header = cells;
      first = 1;
    }
  }
  if (first == lines.size()) throw DataError(path + ": no data rows");

  const std::size_t d = split_commas(lines[first]).size();
  if (!table.header.empty() && table.header.size() != d)
    throw DataError(path + ": header has " + std::to_string(table.header.size()) + " columns but row 2 has " +
                    std::to_string(d));
  const std::size_t rows = lines.size() - first;
  std::vector<double> values(d * rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t line_no = first + r + 1;
    const auto cells = split_commas(lines[first + r]);
    if (cells.size() != d)
      throw DataError(path + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(d));
    for (std::size_t c = 0; c < d; ++c) {
      auto v = parse_number(cells[c]);
      if (!v)
        throw DataError(path + ": row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                        ": non-numeric cell '" + cells[c] + "'");
      if (!std::isfinite(*v))
        throw DataError(path + ": row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                        ": missing or non-finite value (NaN cells are not imputed)");
      values[c * rows + r] = *v;
    }
  }
  table.values = Tensor::from({d, rows}, std::move(values));
  return table;
}

void write_series_csv(const std::string& path, const Tensor& series, const std::vector<std::string>& header) {
  if (series.rank() != 2) throw DimensionError("write_series_csv: series must be [d x length]");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  const std::size_t d = series.rows(), n = series.cols();
  if (!header.empty()) {
    if (header.size() != d) throw DataError("write_series_csv: header width does not match channel count");
    for (std::size_t c = 0; c < d; ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  auto v = series.data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (c) out << ',';
      write_double(out, v[c * n + r]);
    }
    out << '\n';
  }
}

std::vector<int> read_labels(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<int> labels;
  labels.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string cell = trim(lines[i]);
    if (cell == "0" || cell == "1") {
      labels.push_back(cell == "1");
      continue;
    }
    if (i == 0 && !parse_number(cell)) continue;  // header line
    throw DataError(path + ": row " + std::to_string(i + 1) + ": label '" + cell + "' is not 0 or 1");
  }
  return labels;
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (int l : labels) out << (l ? '1' : '0') << '\n';
}

SeriesBundle load_csv(const std::string& train_path, const std::string& test_path, const std::string& labels_path) {
  SeriesBundle bundle;
  bundle.name = std::filesystem::path(train_path).parent_path().filename().string();
  CsvTable train = read_series_csv(train_path);
  bundle.channel_names = train.header;
  bundle.train = train.values;
  if (!test_path.empty()) {
    CsvTable test = read_series_csv(test_path);
    if (test.values.rows() != bundle.train.rows())
      throw DataError(test_path + ": has " + std::to_string(test.values.rows()) + " channels, training split has " +
                      std::to_string(bundle.train.rows()));
    bundle.test = test.values;
  }
  if (!labels_path.empty()) {
    bundle.test_labels = read_labels(labels_path);
    if (!bundle.test.defined() || bundle.test_labels.size() != bundle.test.cols())
      throw DataError(labels_path + ": " + std::to_string(bundle.test_labels.size()) +
                      " labels do not match the test length");
  }
  if (bundle.channel_names.empty())
    for (std::size_t c = 0; c < bundle.train.rows(); ++c) bundle.channel_names.push_back("x" + std::to_string(c));
  return bundle;
}

// -- windows -----------------------------------------------------------------------

std::vector<std::size_t> window_starts(std::size_t length, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ConfigError("window and stride must be positive");
  if (length < window)
    throw DataError("series of length " + std::to_string(length) + " is shorter than the window " +
                    std::to_string(window));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window <= length; s += stride) starts.push_back(s);
  return starts;
}

Tensor slice_window(const Tensor& series, std::size_t start, std::size_t window) {
  return slice_cols(series.detach(), start, window);
}

std::vector<Window> windows(const Tensor& series, std::size_t window, std::size_t stride) {
  if (series.rank() != 2) throw DimensionError("windows: series must be [d x length]");
  std::vector<Window> out;
  const TimestampGrid grid = TimestampGrid::window(window);
  for (std::size_t s : window_starts(series.cols(), window, stride))
    out.push_back({slice_window(series, s, window), s, grid});
  return out;
}

// -- synthetic benchmark -------------------------------------------------------------

std::string to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::global_point: return "global_point";
    case AnomalyKind::contextual_point: return "contextual_point";
    case AnomalyKind::shapelet: return "shapelet";
    case AnomalyKind::seasonal: return "seasonal";
    case AnomalyKind::trend: return "trend";
  }
  return "unknown";
}

AnomalyKind parse_anomaly_kind(const std::string& text) {
  for (auto k : {AnomalyKind::global_point, AnomalyKind::contextual_point, AnomalyKind::shapelet,
                 AnomalyKind::seasonal, AnomalyKind::trend})
    if (text == to_string(k)) return k;
  throw ConfigError("unknown anomaly kind '" + text + "'");
}

bool is_point_kind(AnomalyKind kind) {
  return kind == AnomalyKind::global_point || kind == AnomalyKind::contextual_point;
}

double default_magnitude(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::global_point: return 6.0;
    case AnomalyKind::contextual_point: return 3.0;
    default: return 1.0;
  }
}

SynthSpec resolve(const SynthSpec& spec) {
  SynthSpec r = spec;
  const bool point = is_point_kind(spec.kind);
  if (!r.positions.empty()) {
    if (r.count && *r.count != r.positions.size()) throw ConfigError("synth: count disagrees with explicit positions");
    r.count = r.positions.size();
  }
  if (!r.count) r.count = point ? 20 : 5;
  if (point) {
    if (r.segment_length && *r.segment_length != 1) throw ConfigError("point anomalies have segment length 1");
    r.segment_length = 1;
  } else if (!r.segment_length) {
    r.segment_length = 30;
  }
  if (!r.magnitude) r.magnitude = default_magnitude(spec.kind);

  if (r.train_length == 0 || r.test_length == 0) throw ConfigError("synth: split lengths must be positive");
  if (r.channels == 0) throw ConfigError("synth: need at least one channel");
  if (!(r.period > 0.0)) throw ConfigError("synth: period must be positive");
  if (*r.segment_length == 0) throw ConfigError("synth: segment length must be positive");
  if (!std::isfinite(*r.magnitude) || *r.magnitude <= 0.0) throw ConfigError("synth: magnitude must be positive");
  if (r.noise_std < 0.0) throw ConfigError("synth: noise std must be non-negative");
  if (r.frequency_factor < 2) throw ConfigError("synth: frequency factor must be at least 2");
  if (r.seed > (std::uint64_t{1} << 53)) throw ConfigError("synth: seed must not exceed 2^53");
  const std::size_t covered = *r.count * *r.segment_length;
  if (!r.positions.empty()) {
    std::vector<std::size_t> sorted = r.positions;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted[i] + *r.segment_length > r.test_length)
        throw ConfigError("synth: anomaly at " + std::to_string(sorted[i]) + " runs past the test split");
      if (i && sorted[i] < sorted[i - 1] + *r.segment_length)
        throw ConfigError("synth: anomalies at " + std::to_string(sorted[i - 1]) + " and " + std::to_string(sorted[i]) +
                          " overlap");
    }
    r.positions = sorted;
  }
  if (5 * covered >= r.test_length)
    throw ConfigError("synth: " + std::to_string(covered) + " anomalous timestamps would cover 20% or more of the " +
                      std::to_string(r.test_length) + "-point test split");
  return r;
}

namespace {

double base_value(const SynthSpec& s, std::size_t channel, double t) {
  const double phase = 0.7 * static_cast<double>(channel);
  return s.amplitude * std::sin(2.0 * std::numbers::pi * t / s.period + phase) + s.trend_slope * t;
}

// Evenly sized slots keep segments disjoint with at least one clean point
// between neighbours.
std::vector<std::size_t> place_segments(std::size_t length, std::size_t count, std::size_t seg, std::mt19937_64& rng) {
  std::vector<std::size_t> starts;
  if (count == 0) return starts;
  const std::size_t slot = length / count;
  if (slot < seg + 2) throw ConfigError("synth: anomalies do not fit into the test split");
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> dist(1, slot - seg - 1);
    starts.push_back(i * slot + dist(rng));
  }
  return starts;
}

}  // namespace

SynthResult synthesize(const SynthSpec& input) {
  SynthResult result;
  result.spec = resolve(input);
  const SynthSpec& s = result.spec;
  const std::size_t d = s.channels;
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  auto make_split = [&](std::size_t length, double offset, std::vector<double>& smooth) {
    std::vector<double> values(d * length);
    smooth.assign(d * length, 0.0);
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t j = 0; j < length; ++j) {
        smooth[c * length + j] = base_value(s, c, offset + static_cast<double>(j));
        values[c * length + j] = smooth[c * length + j] + s.noise_std * noise(rng);
      }
    return values;
  };

  std::vector<double> train_smooth, test_smooth;
  auto train = make_split(s.train_length, 0.0, train_smooth);
  auto clean = make_split(s.test_length, static_cast<double>(s.train_length), test_smooth);
  std::vector<double> test = clean;
  const std::size_t n = s.test_length;
  std::vector<int> labels(n, 0);

  std::vector<double> mean(d, 0.0), stdev(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t j = 0; j < n; ++j) mean[c] += clean[c * n + j];
    mean[c] /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) stdev[c] += (clean[c * n + j] - mean[c]) * (clean[c * n + j] - mean[c]);
    stdev[c] = std::sqrt(stdev[c] / static_cast<double>(n));
  }

  const std::size_t seg = *s.segment_length;
  const double lambda = *s.magnitude;
  std::uniform_int_distribution<std::size_t> pick_channel(0, d - 1);
  std::bernoulli_distribution pick_sign(0.5);
  const std::vector<std::size_t> starts = s.positions.empty() ? place_segments(n, *s.count, seg, rng) : s.positions;
  for (std::size_t start : starts) {
    const std::size_t c = pick_channel(rng);
    const double sign = pick_sign(rng) ? 1.0 : -1.0;
    double* x = test.data() + c * n;
    const double* smooth = test_smooth.data() + c * n;
    const double* base = clean.data() + c * n;
    switch (s.kind) {
      case AnomalyKind::global_point:
        x[start] = mean[c] + sign * lambda * stdev[c];
        break;
      case AnomalyKind::contextual_point: {
        const std::size_t lo = start >= s.context_radius ? start - s.context_radius : 0;
        const std::size_t hi = std::min(n, start + s.context_radius + 1);
        double m = 0.0, v = 0.0;
        for (std::size_t j = lo; j < hi; ++j) m += base[j];
        m /= static_cast<double>(hi - lo);
        for (std::size_t j = lo; j < hi; ++j) v += (base[j] - m) * (base[j] - m);
        x[start] = m + sign * lambda * std::sqrt(v / static_cast<double>(hi - lo));
        break;
      }
      case AnomalyKind::shapelet:
        // Sawtooth with the sine's period and amplitude in place of the sine.
        for (std::size_t j = start; j < start + seg; ++j) {
          const double t = static_cast<double>(s.train_length + j);
          const double frac = t / s.period - std::floor(t / s.period);
          x[j] = base[j] - smooth[j] + s.trend_slope * t + lambda * s.amplitude * (2.0 * frac - 1.0);
        }
        break;
      case AnomalyKind::seasonal:
        for (std::size_t j = start; j < start + seg; ++j) {
          const double t = static_cast<double>(s.train_length + j);
          const double phase = 0.7 * static_cast<double>(c);
          x[j] = base[j] - smooth[j] + s.trend_slope * t +
                 lambda * s.amplitude *
                     std::sin(2.0 * std::numbers::pi * static_cast<double>(s.frequency_factor) * t / s.period + phase);
        }
        break;
      case AnomalyKind::trend:
        for (std::size_t j = start; j < start + seg; ++j)
          x[j] = base[j] + sign * lambda * s.slope_offset * static_cast<double>(j - start + 1);
        break;
    }
    for (std::size_t j = start; j < start + seg; ++j) labels[j] = 1;
    result.injected.push_back({start, seg, c});
  }

  SeriesBundle& b = result.bundle;
  b.name = "synthetic_" + to_string(s.kind);
  for (std::size_t c = 0; c < d; ++c) b.channel_names.push_back("x" + std::to_string(c));
  b.train = Tensor::from({d, s.train_length}, std::move(train));
  b.test = Tensor::from({d, n}, std::move(test));
  b.test_labels = std::move(labels);
  result.clean_test = Tensor::from({d, n}, std::move(clean));
  return result;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  const SynthSpec s = resolve(spec);
  nlohmann::ordered_json j;
  j["kind"] = to_string(s.kind);
  j["train_length"] = s.train_length;
  j["test_length"] = s.test_length;
  j["channels"] = s.channels;
  j["period"] = s.period;
  j["amplitude"] = s.amplitude;
  j["trend_slope"] = s.trend_slope;
  j["noise_std"] = s.noise_std;
  j["count"] = *s.count;
  j["segment_length"] = *s.segment_length;
  j["magnitude"] = *s.magnitude;
  j["context_radius"] = s.context_radius;
  j["frequency_factor"] = s.frequency_factor;
  j["slope_offset"] = s.slope_offset;
  j["seed"] = s.seed;
  if (!s.positions.empty()) j["positions"] = s.positions;
  return j.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("synth spec: expected a JSON object");
  SynthSpec s;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "kind") s.kind = parse_anomaly_kind(v.get<std::string>());
      else if (k == "train_length") s.train_length = v.get<std::size_t>();
      else if (k == "test_length") s.test_length = v.get<std::size_t>();
      else if (k == "channels") s.channels = v.get<std::size_t>();
      else if (k == "period") s.period = v.get<double>();
      else if (k == "amplitude") s.amplitude = v.get<double>();
      else if (k == "trend_slope") s.trend_slope = v.get<double>();
      else if (k == "noise_std") s.noise_std = v.get<double>();
      else if (k == "count") s.count = v.get<std::size_t>();
      else if (k == "segment_length") s.segment_length = v.get<std::size_t>();
      else if (k == "magnitude") s.magnitude = v.get<double>();
      else if (k == "context_radius") s.context_radius = v.get<std::size_t>();
      else if (k == "frequency_factor") s.frequency_factor = v.get<std::size_t>();
      else if (k == "slope_offset") s.slope_offset = v.get<double>();
      else if (k == "seed") s.seed = v.get<std::uint64_t>();
      else if (k == "positions") s.positions = v.get<std::vector<std::size_t>>();
      else throw ConfigError("synth spec: unknown key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  return s;
}

void write_synth_bundle(const std::string& dir, const SynthResult& result) {
  std::filesystem::create_directories(dir);
  const auto p = std::filesystem::path(dir);
  write_series_csv((p / "train.csv").string(), result.bundle.train, result.bundle.channel_names);
  write_series_csv((p / "test.csv").string(), result.bundle.test, result.bundle.channel_names);
  write_labels((p / "labels.csv").string(), result.bundle.test_labels);
  std::ofstream spec((p / "spec.json").string());
  if (!spec) throw DataError("cannot write spec.json in '" + dir + "'");
  spec << synth_spec_to_json(result.spec);
  std::ofstream log((p / "injections.csv").string());
  log << "start,length,channel\n";
  for (const auto& a : result.injected) log << a.start << ',' << a.length << ',' << a.channel << '\n';
}

}  // namespace tsinr
