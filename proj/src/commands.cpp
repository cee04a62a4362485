#include "tsinr/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsinr/checkpoint.hpp"
#include "tsinr/datasets.hpp"
#include "tsinr/detection.hpp"
#include "tsinr/errors.hpp"
#include "tsinr/plot.hpp"

namespace tsinr {

namespace fs = std::filesystem;

namespace {

std::string iso_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// -- training flags ----------------------------------------------------------------

// Flags override the config file, which overrides the built-in defaults.
class TrainFlags {
 public:
  void add(CLI::App* app) {
    app->add_option("--config", config_path_, "JSON config whose keys mirror the TrainConfig fields")
        ->check(CLI::ExistingFile);
    option(app, "--window", &TrainConfig::window_T, "window length T");
    option(app, "--patch", &TrainConfig::patch_P, "patch length P");
    option(app, "--gamma", &TrainConfig::gamma, "anomaly proportion in percent");
    option(app, "--epochs", &TrainConfig::epochs, "training epochs");
    option(app, "--batch-size", &TrainConfig::batch_size, "windows per optimizer step");
    option(app, "--lr", &TrainConfig::lr, "Adam learning rate");
    option(app, "--seed", &TrainConfig::seed, "random seed");
    option(app, "--groups", &TrainConfig::groups, "residual group count k");
    option(app, "--global-layers", &TrainConfig::global_layers, "global layers M");
    option(app, "--group-layers", &TrainConfig::group_layers, "group layers N");
    option(app, "--trend-degree", &TrainConfig::trend_degree, "trend polynomial degree p");
    option(app, "--global-width", &TrainConfig::global_width, "global layer width");
    option(app, "--group-width", &TrainConfig::group_width, "group layer width");
    option(app, "--model-width", &TrainConfig::model_width, "transformer width");
    option(app, "--heads", &TrainConfig::heads, "attention heads");
    option(app, "--blocks", &TrainConfig::blocks, "transformer blocks");
    option(app, "--train-stride", &TrainConfig::train_stride, "training window stride (0 = window)");
    auto* enc = app->add_option("--encoder", values_.encoder, "feature encoder")
                    ->check(CLI::IsMember({"auto", "identity", "random", "external"}));
    setters_.push_back([this, enc](TrainConfig& c) {
      if (enc->count()) c.encoder = values_.encoder;
    });
    auto* nd = app->add_flag("--no-decomposition", "drop the trend and seasonal components");
    auto* ng = app->add_flag("--no-group", "single residual group of equal total width");
    setters_.push_back([nd, ng](TrainConfig& c) {
      if (nd->count()) c.decomposition = false;
      if (ng->count()) c.group_based = false;
    });
  }

  TrainConfig build() const {
    TrainConfig c;
    if (!config_path_.empty()) c = config_from_json(read_text(config_path_), c);
    for (const auto& set : setters_) set(c);
    c.validate();
    return c;
  }

 private:
  template <typename T>
  void option(CLI::App* app, const char* name, T TrainConfig::*field, const char* desc) {
    auto* opt = app->add_option(name, values_.*field, desc);
    setters_.push_back([this, opt, field](TrainConfig& c) {
      if (opt->count()) c.*field = values_.*field;
    });
  }

  std::string config_path_;
  TrainConfig values_;
  std::vector<std::function<void(TrainConfig&)>> setters_;
};

// -- scores CSV ---------------------------------------------------------------------

struct ScoresFile {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<int> truth;
};

ScoresFile read_scores_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "t,score,label,truth")
    throw DataError(path + ": expected header 't,score,label,truth'");
  ScoresFile f;
  bool any_truth = false, missing_truth = false;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 4) throw DataError(path + ": row " + std::to_string(row) + " does not have 4 columns");
    if (cells[0] != std::to_string(f.scores.size()))
      throw DataError(path + ": row " + std::to_string(row) + " has t=" + cells[0] + ", expected " +
                      std::to_string(f.scores.size()));
    double s = 0.0;
    auto res = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), s);
    if (res.ec != std::errc() || res.ptr != cells[1].data() + cells[1].size() || !std::isfinite(s))
      throw DataError(path + ": row " + std::to_string(row) + ", column 2: bad score '" + cells[1] + "'");
    f.scores.push_back(s);
    f.labels.push_back(cells[2] == "1");
    if (cells[3].empty()) {
      missing_truth = true;
    } else if (cells[3] == "0" || cells[3] == "1") {
      any_truth = true;
      f.truth.push_back(cells[3] == "1");
    } else {
      throw DataError(path + ": row " + std::to_string(row) + ", column 4: truth must be 0, 1 or empty");
    }
  }
  if (any_truth && missing_truth) throw DataError(path + ": truth column is only partially filled");
  return f;
}

// -- commands -------------------------------------------------------------------------

struct Io {
  std::ostream& out;
  std::ostream& err;
};

class SynthArgs {
 public:
  void add(CLI::App* app) {
    kind_opt_ = app->add_option("--kind", kind_, "anomaly kind")
                    ->check(CLI::IsMember({"global_point", "contextual_point", "shapelet", "seasonal", "trend"}));
    app->add_option("--spec", spec_path_, "JSON synth spec; explicit flags override it")->check(CLI::ExistingFile);
    app->add_option("--out-dir", out_dir, "output directory");
    field(app, "--seed", &SynthSpec::seed, "random seed");
    field(app, "--channels", &SynthSpec::channels, "channel count d");
    field(app, "--train-length", &SynthSpec::train_length, "training split length");
    field(app, "--test-length", &SynthSpec::test_length, "test split length");
    field(app, "--count", &SynthSpec::count, "number of anomalies");
    field(app, "--segment-length", &SynthSpec::segment_length, "pattern anomaly length");
    field(app, "--magnitude", &SynthSpec::magnitude, "anomaly magnitude lambda");
    field(app, "--period", &SynthSpec::period, "base sine period in timestamps");
    field(app, "--amplitude", &SynthSpec::amplitude, "base sine amplitude");
    field(app, "--trend-slope", &SynthSpec::trend_slope, "base linear slope per timestamp");
    field(app, "--noise", &SynthSpec::noise_std, "Gaussian noise std");
  }

  SynthSpec build() const {
    SynthSpec spec;
    if (!spec_path_.empty()) spec = synth_spec_from_json(read_text(spec_path_));
    if (kind_opt_->count()) spec.kind = parse_anomaly_kind(kind_);
    for (const auto& set : setters_) set(spec);
    return spec;
  }

  std::string out_dir = "synth";

 private:
  template <typename T>
  void field(CLI::App* app, const char* name, T SynthSpec::*member, const char* desc) {
    auto* opt = app->add_option(name, values_.*member, desc);
    setters_.push_back([this, opt, member](SynthSpec& s) {
      if (opt->count()) s.*member = values_.*member;
    });
  }

  std::string kind_ = "global_point";
  std::string spec_path_;
  CLI::Option* kind_opt_ = nullptr;
  SynthSpec values_;
  std::vector<std::function<void(SynthSpec&)>> setters_;
};

int cmd_synth(const SynthArgs& a, Io io) {
  const SynthResult r = synthesize(a.build());
  write_synth_bundle(a.out_dir, r);
  std::size_t labeled = 0;
  for (int l : r.bundle.test_labels) labeled += l;
  io.out << "kind: " << to_string(r.spec.kind) << '\n'
         << "channels: " << r.spec.channels << '\n'
         << "train_length: " << r.spec.train_length << '\n'
         << "test_length: " << r.spec.test_length << '\n'
         << "anomalies: " << r.injected.size() << '\n'
         << "anomalous_points: " << labeled << '\n'
         << "out_dir: " << a.out_dir << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string train;
  std::string checkpoint;
  std::string out_dir = "run";
  TrainFlags flags;
};

int cmd_train(TrainArgs& a, Io io) {
  RunManifest manifest;
  manifest.command = "train";
  manifest.started_at = iso_now();
  const TrainConfig config = a.flags.build();
  const SeriesBundle data = load_csv(a.train, "", "");
  Model model(config, data.train.rows());
  model.fit_normalization(data.train);
  Trainer trainer(model, model.make_examples(data.train, config.effective_train_stride()));

  std::string metrics = "epoch,loss,steps\n";
  trainer.fit(config.epochs, [&](const EpochStats& s) {
    metrics += std::to_string(s.epoch) + ',' + shortest(s.mean_loss) + ',' + std::to_string(s.steps) + '\n';
    io.out << "epoch " << s.epoch << " loss " << shortest(s.mean_loss) << '\n';
  });

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const std::string ckpt = a.checkpoint.empty() ? (dir / "model.tsnr").string() : a.checkpoint;
  if (fs::path(ckpt).has_parent_path()) fs::create_directories(fs::path(ckpt).parent_path());
  save_checkpoint(ckpt, model);
  write_text(dir / "metrics.csv", metrics);

  manifest.config = config;
  manifest.config_hash = config_hash(config);
  manifest.inputs = {{"train", a.train}};
  manifest.checkpoint = ckpt;
  manifest.report = (dir / "metrics.csv").string();
  manifest.finished_at = iso_now();
  write_text(dir / "manifest.json", manifest.to_json());
  io.out << "checkpoint: " << ckpt << '\n' << "config_hash: " << hex64(manifest.config_hash) << '\n';
  return kExitOk;
}

struct DetectArgs {
  std::string checkpoint, test, labels;
  std::string out_dir = "detect";
  double gamma = 1.0;
  CLI::Option* gamma_opt = nullptr;
  bool no_point_adjust = false;
  std::size_t vus_buffer = 25;
};

int cmd_detect(DetectArgs& a, Io io) {
  RunManifest manifest;
  manifest.command = "detect";
  manifest.started_at = iso_now();
  const Model model = load_checkpoint(a.checkpoint);
  const CsvTable data = read_series_csv(a.test);
  const Tensor& test = data.values;
  if (test.rows() != model.channels()) {
    io.err << "error: checkpoint expects " << model.channels() << " channels, test data has " << test.rows() << '\n';
    return kExitUsage;
  }
  std::vector<int> truth;
  if (!a.labels.empty()) {
    truth = read_labels(a.labels);
    if (truth.size() != test.cols())
      throw DataError(a.labels + ": " + std::to_string(truth.size()) + " labels for " + std::to_string(test.cols()) +
                      " test points");
  }
  const double gamma = a.gamma_opt->count() ? a.gamma : model.config().gamma;
  const auto result = model.score_series(test);
  const DetectionReport report = make_report(result.scores, truth, gamma, !a.no_point_adjust, a.vus_buffer);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const std::string text = render_report(report);
  write_text(dir / "report.txt", text);
  write_text(dir / "scores.csv", render_scores_csv(report));
  write_series_csv((dir / "reconstruction.csv").string(), result.reconstruction, data.header);

  manifest.config = model.config();
  manifest.config_hash = config_hash(model.config());
  manifest.inputs = {{"test", a.test}};
  if (!a.labels.empty()) manifest.inputs.emplace_back("labels", a.labels);
  manifest.checkpoint = a.checkpoint;
  manifest.report = (dir / "report.txt").string();
  manifest.finished_at = iso_now();
  write_text(dir / "manifest.json", manifest.to_json());
  io.out << text;
  return kExitOk;
}

struct EvalArgs {
  std::string scores, labels, out;
  double gamma = 1.0;
  bool no_point_adjust = false;
  std::size_t vus_buffer = 25;
};

int cmd_eval(EvalArgs& a, Io io) {
  ScoresFile f = read_scores_csv(a.scores);
  std::vector<int> truth = a.labels.empty() ? f.truth : read_labels(a.labels);
  if (truth.empty()) throw DataError("eval: no ground truth (pass --labels or a scores file with a truth column)");
  if (truth.size() != f.scores.size())
    throw DataError("eval: " + std::to_string(truth.size()) + " labels for " + std::to_string(f.scores.size()) +
                    " scores");
  const DetectionReport report = make_report(f.scores, truth, a.gamma, !a.no_point_adjust, a.vus_buffer);
  const std::string text = render_report(report);
  if (!a.out.empty()) write_text(a.out, text);
  io.out << text;
  return kExitOk;
}

std::vector<double> parse_values(const std::string& values, const std::string& range) {
  std::vector<double> out;
  auto number = [](const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError("sweep: bad number '" + s + "'");
    return v;
  };
  if (!values.empty()) {
    std::stringstream ss(values);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(number(cell));
  } else {
    std::stringstream ss(range);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c) )
      throw ConfigError("sweep: --range must be start:stop:step");
    const double start = number(a), stop = number(b), step = number(c);
    if (!(step > 0.0) || stop < start) throw ConfigError("sweep: range needs start <= stop and a positive step");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 10000) throw ConfigError("sweep: range has too many values");
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  if (out.empty()) throw ConfigError("sweep: no values");
  return out;
}

struct SweepArgs {
  std::string param;
  std::string values, range;
  std::string checkpoint, train, test, labels;
  std::string out_dir = "sweep";
  bool no_point_adjust = false;
  TrainFlags flags;
};

int cmd_sweep(SweepArgs& a, Io io) {
  const std::vector<double> values = parse_values(a.values, a.range);
  if (a.test.empty() || a.labels.empty()) throw ConfigError("sweep: --test and --labels are required");
  const std::vector<int> truth = read_labels(a.labels);
  const Tensor test = read_series_csv(a.test).values;
  if (truth.size() != test.cols()) throw DataError("sweep: label count does not match the test length");

  std::vector<DetectionReport> reports;
  if (a.param == "gamma") {
    if (a.checkpoint.empty()) throw ConfigError("sweep gamma: --checkpoint is required");
    const Model model = load_checkpoint(a.checkpoint);
    if (test.rows() != model.channels()) throw ConfigError("sweep: checkpoint and test data differ in channel count");
    const auto scores = model.score_series(test).scores;
    for (double g : values) reports.push_back(make_report(scores, truth, g, !a.no_point_adjust));
  } else {
    if (a.train.empty()) throw ConfigError("sweep group_num: --train is required");
    const SeriesBundle train = load_csv(a.train, "", "");
    if (train.train.rows() != test.rows()) throw ConfigError("sweep: train and test data differ in channel count");
    TrainConfig base = a.flags.build();
    for (double v : values) {
      if (v < 1.0 || v != std::floor(v)) throw ConfigError("sweep group_num: values must be positive integers");
      TrainConfig c = base;
      c.groups = static_cast<std::size_t>(v);
      Model model(c, train.train.rows());
      model.fit_normalization(train.train);
      Trainer trainer(model, model.make_examples(train.train, c.effective_train_stride()));
      trainer.fit(c.epochs);
      reports.push_back(make_report(model.score_series(test).scores, truth, c.gamma, !a.no_point_adjust));
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const double f = a.no_point_adjust ? reports[i].raw.f1 : reports[i].adjusted.f1;
    const double fb = a.no_point_adjust ? reports[best].raw.f1 : reports[best].adjusted.f1;
    if (f > fb) best = i;
  }
  std::string table = a.param + ",precision,recall,f1,raw_f1,pa_f1,auc,best\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const Prf& head = a.no_point_adjust ? r.raw : r.adjusted;
    table += shortest(values[i]) + ',' + fixed2(head.precision) + ',' + fixed2(head.recall) + ',' + fixed2(head.f1) +
             ',' + fixed2(r.raw.f1) + ',' + fixed2(r.adjusted.f1) + ',' + (r.auc ? shortest(*r.auc) : "") + ',' +
             (i == best ? "*" : "") + '\n';
  }
  write_text(fs::path(a.out_dir) / "sweep.csv", table);
  io.out << table;
  return kExitOk;
}

struct PlotArgs {
  std::string scores, data, reconstruction, labels;
  std::string out_dir = "plot";
  double gamma = 1.0;
  CLI::Option* gamma_opt = nullptr;
};

int cmd_plot(PlotArgs& a, Io io) {
  const ScoresFile f = read_scores_csv(a.scores);
  const CsvTable data = read_series_csv(a.data);
  PlotInput in;
  in.data = data.values;
  in.channel_names = data.header;
  in.scores = f.scores;
  in.truth = a.labels.empty() ? f.truth : read_labels(a.labels);
  if (!a.reconstruction.empty()) in.recon = read_series_csv(a.reconstruction).values;
  if (a.gamma_opt->count()) in.delta = threshold_by_proportion(f.scores, a.gamma);
  const std::string svg = render_svg(in);
  const fs::path path = fs::path(a.out_dir) / "plot.svg";
  write_text(path, svg);
  io.out << "plot: " << path.string() << '\n';
  return kExitOk;
}

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = nlohmann::ordered_json::parse(config_to_json(config));
  j["config_hash"] = hex64(config_hash);
  j["seed"] = config.seed;
  nlohmann::ordered_json in = nlohmann::ordered_json::object();
  for (const auto& [role, path] : inputs) in[role] = path;
  j["inputs"] = in;
  j["checkpoint"] = checkpoint;
  j["report"] = report;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  return j.dump(2) + "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"INR-reconstruction time series anomaly detection", "tsinr"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic benchmark bundle");
  synth.add(s);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train the hypernetwork on a CSV series");
  t->add_option("--train", train.train, "training CSV")->required()->check(CLI::ExistingFile);
  t->add_option("--checkpoint", train.checkpoint, "checkpoint output path (default <out-dir>/model.tsnr)");
  t->add_option("--out-dir", train.out_dir, "output directory");
  train.flags.add(t);

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "score a test series with a trained checkpoint");
  d->add_option("--checkpoint", detect.checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  d->add_option("--test", detect.test, "test CSV")->required()->check(CLI::ExistingFile);
  d->add_option("--labels", detect.labels, "ground-truth labels")->check(CLI::ExistingFile);
  detect.gamma_opt = d->add_option("--gamma", detect.gamma, "anomaly proportion in percent (default from checkpoint)");
  d->add_flag("--no-point-adjust", detect.no_point_adjust, "headline metrics without point adjustment");
  d->add_option("--vus-buffer", detect.vus_buffer, "largest VUS buffer width");
  d->add_option("--out-dir", detect.out_dir, "output directory");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "recompute metrics from a scores CSV");
  e->add_option("--scores", eval.scores, "scores CSV (t,score,label,truth)")->required()->check(CLI::ExistingFile);
  e->add_option("--labels", eval.labels, "ground-truth labels (default: truth column)")->check(CLI::ExistingFile);
  e->add_option("--gamma", eval.gamma, "anomaly proportion in percent");
  e->add_flag("--no-point-adjust", eval.no_point_adjust, "headline metrics without point adjustment");
  e->add_option("--vus-buffer", eval.vus_buffer, "largest VUS buffer width");
  e->add_option("--out", eval.out, "write the report here as well");

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "tabulate P/R/F1 over gamma or the group count");
  w->add_option("--param", sweep.param, "swept parameter")->required()->check(CLI::IsMember({"gamma", "group_num"}));
  auto* vals = w->add_option("--values", sweep.values, "comma-separated values");
  auto* rng = w->add_option("--range", sweep.range, "start:stop:step");
  vals->excludes(rng);
  w->add_option("--checkpoint", sweep.checkpoint, "checkpoint (gamma sweep)")->check(CLI::ExistingFile);
  w->add_option("--train", sweep.train, "training CSV (group_num sweep)")->check(CLI::ExistingFile);
  w->add_option("--test", sweep.test, "test CSV")->check(CLI::ExistingFile);
  w->add_option("--labels", sweep.labels, "ground-truth labels")->check(CLI::ExistingFile);
  w->add_flag("--no-point-adjust", sweep.no_point_adjust, "rank by raw F1");
  w->add_option("--out-dir", sweep.out_dir, "output directory");
  sweep.flags.add(w);

  PlotArgs plot;
  auto* p = app.add_subcommand("plot", "render series, reconstruction and scores as SVG");
  p->add_option("--scores", plot.scores, "scores CSV")->required()->check(CLI::ExistingFile);
  p->add_option("--data", plot.data, "series CSV")->required()->check(CLI::ExistingFile);
  p->add_option("--reconstruction", plot.reconstruction, "reconstruction CSV")->check(CLI::ExistingFile);
  p->add_option("--labels", plot.labels, "ground-truth labels")->check(CLI::ExistingFile);
  plot.gamma_opt = p->add_option("--gamma", plot.gamma, "draw the threshold for this proportion");
  p->add_option("--out-dir", plot.out_dir, "output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Io io{out, err};
  try {
    if (s->parsed()) return cmd_synth(synth, io);
    if (t->parsed()) return cmd_train(train, io);
    if (d->parsed()) return cmd_detect(detect, io);
    if (e->parsed()) return cmd_eval(eval, io);
    if (w->parsed()) {
      if (vals->count() == 0 && rng->count() == 0) throw ConfigError("sweep needs --values or --range");
      return cmd_sweep(sweep, io);
    }
    if (p->parsed()) return cmd_plot(plot, io);
  } catch (const NumericError& ex) {
    err << "error: " << ex.what() << " (step " << ex.step() << ")\n";
    return kExitNumeric;
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const DataError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const CheckpointError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace tsinr
