#include "tsinr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "tsinr/errors.hpp"

namespace tsinr {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'S', 'N', 'R'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw CheckpointError(std::string("corrupt checkpoint: truncated while reading ") + what);
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_arrays(const std::vector<NamedArray>& arrays, std::uint32_t version) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, version);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.value.rank()));
    for (std::size_t e : a.value.shape()) put<std::uint64_t>(out, e);
    auto data = a.value.data();
    out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
  }
  return out;
}

std::vector<NamedArray> decode_arrays(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != std::string(kMagic, 4)) throw CheckpointError("corrupt checkpoint: bad magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto count = in.get<std::uint32_t>("entry count");
  std::vector<NamedArray> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = in.take(in.get<std::uint32_t>("name length"), "name");
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank == 0 || rank > 8) throw CheckpointError("corrupt checkpoint: array '" + a.name + "' has rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto e = in.get<std::uint64_t>("extent");
      if (e == 0 || e > (std::uint64_t{1} << 40) || numel > (std::uint64_t{1} << 40) / e)
        throw CheckpointError("corrupt checkpoint: array '" + a.name + "' has an invalid extent");
      numel *= e;
      shape.push_back(static_cast<std::size_t>(e));
    }
    if (in.remaining() / sizeof(double) < numel)
      throw CheckpointError("corrupt checkpoint: truncated payload of '" + a.name + "'");
    std::vector<double> values(numel);
    const std::string payload = in.take(numel * sizeof(double), "payload");
    std::memcpy(values.data(), payload.data(), payload.size());
    a.value = Tensor::from(std::move(shape), std::move(values));
    out.push_back(std::move(a));
  }
  if (in.remaining() != 0) throw CheckpointError("corrupt checkpoint: trailing bytes after last entry");
  return out;
}

namespace {

const char* const kEncoderNames[] = {"auto", "identity", "random", "external"};

double encoder_code(const std::string& name) {
  for (int i = 0; i < 4; ++i)
    if (name == kEncoderNames[i]) return i;
  if (name == "random_frozen") return 2;
  throw ConfigError("unknown encoder '" + name + "'");
}

std::vector<NamedArray> config_arrays(const TrainConfig& c) {
  auto s = [](const char* name, double v) { return NamedArray{std::string("config.") + name, Tensor::scalar(v)}; };
  return {
      s("window_T", static_cast<double>(c.window_T)),
      s("patch_P", static_cast<double>(c.patch_P)),
      s("lr", c.lr),
      s("epochs", static_cast<double>(c.epochs)),
      s("batch_size", static_cast<double>(c.batch_size)),
      s("seed", static_cast<double>(c.seed)),
      s("gamma", c.gamma),
      s("trend_degree", static_cast<double>(c.trend_degree)),
      s("global_layers", static_cast<double>(c.global_layers)),
      s("group_layers", static_cast<double>(c.group_layers)),
      s("groups", static_cast<double>(c.groups)),
      s("global_width", static_cast<double>(c.global_width)),
      s("group_width", static_cast<double>(c.group_width)),
      s("model_width", static_cast<double>(c.model_width)),
      s("heads", static_cast<double>(c.heads)),
      s("blocks", static_cast<double>(c.blocks)),
      s("decomposition", c.decomposition ? 1.0 : 0.0),
      s("group_based", c.group_based ? 1.0 : 0.0),
      s("encoder", encoder_code(c.encoder)),
      s("train_stride", static_cast<double>(c.train_stride)),
  };
}

Tensor row(const std::vector<double>& v) { return Tensor::from({1, v.size()}, v); }

}  // namespace

std::string serialize_model(const Model& model) {
  std::vector<NamedArray> arrays = config_arrays(model.config());
  arrays.push_back({"meta.channels", Tensor::scalar(static_cast<double>(model.channels()))});
  arrays.push_back({"norm.raw.mean", row(model.raw_stats().mean)});
  arrays.push_back({"norm.raw.std", row(model.raw_stats().std)});
  arrays.push_back({"norm.feature.mean", row(model.feature_stats().mean)});
  arrays.push_back({"norm.feature.std", row(model.feature_stats().std)});
  for (const auto& p : model.hypernet().parameters()) arrays.push_back({"param." + p.name, p.value});
  return encode_arrays(arrays);
}

Model deserialize_model(const std::string& bytes) {
  std::map<std::string, Tensor> entries;
  for (auto& a : decode_arrays(bytes))
    if (!entries.emplace(a.name, a.value).second) throw CheckpointError("corrupt checkpoint: duplicate entry '" + a.name + "'");

  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = entries.find(name);
    if (it == entries.end()) throw CheckpointError("corrupt checkpoint: missing entry '" + name + "'");
    return it->second;
  };
  auto scalar = [&](const char* name) {
    const Tensor& t = get(std::string("config.") + name);
    if (t.numel() != 1) throw CheckpointError(std::string("corrupt checkpoint: config.") + name + " is not a scalar");
    return t.item();
  };
  auto count = [&](const char* name) {
    const double v = scalar(name);
    if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::uint64_t>(v)))
      throw CheckpointError(std::string("corrupt checkpoint: config.") + name + " is not a count");
    return static_cast<std::size_t>(v);
  };

  TrainConfig c;
  c.window_T = count("window_T");
  c.patch_P = count("patch_P");
  c.lr = scalar("lr");
  c.epochs = count("epochs");
  c.batch_size = count("batch_size");
  c.seed = count("seed");
  c.gamma = scalar("gamma");
  c.trend_degree = count("trend_degree");
  c.global_layers = count("global_layers");
  c.group_layers = count("group_layers");
  c.groups = count("groups");
  c.global_width = count("global_width");
  c.group_width = count("group_width");
  c.model_width = count("model_width");
  c.heads = count("heads");
  c.blocks = count("blocks");
  c.decomposition = scalar("decomposition") != 0.0;
  c.group_based = scalar("group_based") != 0.0;
  const std::size_t enc = count("encoder");
  if (enc > 3) throw CheckpointError("corrupt checkpoint: unknown encoder code");
  c.encoder = kEncoderNames[enc];
  c.train_stride = count("train_stride");

  const Tensor& ch = get("meta.channels");
  if (ch.numel() != 1 || !(ch.item() >= 1.0)) throw CheckpointError("corrupt checkpoint: bad channel count");
  const auto channels = static_cast<std::size_t>(ch.item());

  std::optional<Model> model;
  model.emplace(c, channels);

  auto stats = [&](const std::string& prefix) {
    NormStats s;
    const Tensor& m = get(prefix + ".mean");
    const Tensor& sd = get(prefix + ".std");
    if (m.numel() != channels || sd.numel() != channels)
      throw CheckpointError("corrupt checkpoint: " + prefix + " has the wrong channel count");
    s.mean.assign(m.data().begin(), m.data().end());
    s.std.assign(sd.data().begin(), sd.data().end());
    return s;
  };
  model->set_stats(stats("norm.raw"), stats("norm.feature"));

  std::size_t used = 0;
  for (auto& p : model->hypernet().parameters()) {
    const Tensor& src = get("param." + p.name);
    if (src.shape() != p.value.shape())
      throw CheckpointError("corrupt checkpoint: param." + p.name + " has shape " + shape_to_string(src.shape()) +
                            ", expected " + shape_to_string(p.value.shape()));
    std::copy(src.data().begin(), src.data().end(), p.value.mutable_data().begin());
    ++used;
  }
  const std::size_t expected = used + config_arrays(c).size() + 5;
  if (entries.size() != expected) throw CheckpointError("corrupt checkpoint: unexpected extra entries");
  return std::move(*model);
}

void save_checkpoint(const std::string& path, const Model& model) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace tsinr
