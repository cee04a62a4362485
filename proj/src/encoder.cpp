#include "tsinr/encoder.hpp"

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <random>
#include <sstream>
#include <vector>

#include "tsinr/errors.hpp"

namespace tsinr {

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::identity: return "identity";
    case EncoderKind::random_frozen: return "random";
    case EncoderKind::external: return "external";
  }
  return "unknown";
}

EncoderKind parse_encoder_kind(const std::string& text) {
  if (text == "identity") return EncoderKind::identity;
  if (text == "random" || text == "random_frozen") return EncoderKind::random_frozen;
  if (text == "external") return EncoderKind::external;
  throw ConfigError("unknown encoder kind '" + text + "'");
}

// -- wire format -------------------------------------------------------------------

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  out.append(buf, res.ptr);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) throw EncoderError("protocol error: message is not newline-terminated");
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::pair<std::size_t, std::size_t> parse_header(const std::string& line) {
  std::istringstream is(line);
  std::string tag;
  long long d = -1, t = -1;
  std::string extra;
  if (!(is >> tag >> d >> t) || (is >> extra) || tag != kEncoderProtocolTag || d <= 0 || t <= 0)
    throw EncoderError("protocol error: bad header '" + line + "'");
  if (line != std::string(kEncoderProtocolTag) + " " + std::to_string(d) + " " + std::to_string(t))
    throw EncoderError("protocol error: non-canonical header '" + line + "'");
  return {static_cast<std::size_t>(d), static_cast<std::size_t>(t)};
}

void parse_values(const std::string& line, std::size_t expected, std::size_t channel, double* out) {
  const char* p = line.data();
  const char* end = p + line.size();
  std::size_t n = 0;
  while (p < end) {
    if (n > 0) {
      if (*p != ' ') throw EncoderError("protocol error: values must be separated by single spaces");
      ++p;
    }
    if (n == expected)
      throw EncoderError("protocol error: channel " + std::to_string(channel) + " has more than " +
                         std::to_string(expected) + " values");
    double v = 0.0;
    auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc() || (res.ptr != end && *res.ptr != ' '))
      throw EncoderError("protocol error: unparseable value in channel " + std::to_string(channel));
    if (!std::isfinite(v)) throw EncoderError("protocol error: non-finite value in channel " + std::to_string(channel));
    out[n++] = v;
    p = res.ptr;
  }
  if (n != expected)
    throw EncoderError("protocol error: channel " + std::to_string(channel) + " has " + std::to_string(n) +
                       " values, expected " + std::to_string(expected));
}

}  // namespace

std::string encode_window_message(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("encoder: window must be [d x T]");
  const std::size_t d = x.rows(), t = x.cols();
  std::string out = std::string(kEncoderProtocolTag) + " " + std::to_string(d) + " " + std::to_string(t) + "\n";
  auto v = x.data();
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t j = 0; j < t; ++j) {
      if (j) out.push_back(' ');
      append_double(out, v[c * t + j]);
    }
    out.push_back('\n');
  }
  return out;
}

Tensor decode_window_message(const std::string& message) {
  const auto lines = split_lines(message);
  if (lines.empty()) throw EncoderError("protocol error: empty message");
  const auto [d, t] = parse_header(lines[0]);
  if (lines.size() != d + 1)
    throw EncoderError("protocol error: expected " + std::to_string(d) + " value lines, got " +
                       std::to_string(lines.size() - 1));
  std::vector<double> values(d * t);
  for (std::size_t c = 0; c < d; ++c) parse_values(lines[c + 1], t, c, values.data() + c * t);
  return Tensor::from({d, t}, std::move(values));
}

// -- subprocess --------------------------------------------------------------------

struct FeatureEncoder::Process {
  explicit Process(std::string cmd) : command(std::move(cmd)) {}
  ~Process() { stop(); }

  void start() {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw EncoderError("encoder: pipe() failed: " + std::string(std::strerror(errno)));
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw EncoderError("encoder: pipe() failed: " + std::string(std::strerror(errno)));
    }
    std::signal(SIGPIPE, SIG_IGN);
    pid = fork();
    if (pid < 0) throw EncoderError("encoder: fork() failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    write_fd = to_child[1];
    reader = fdopen(from_child[0], "r");
    if (reader == nullptr) throw EncoderError("encoder: fdopen() failed");
  }

  void stop() {
    if (write_fd >= 0) close(write_fd);
    write_fd = -1;
    if (reader != nullptr) std::fclose(reader);
    reader = nullptr;
    if (pid > 0) {
      int status = 0;
      waitpid(pid, &status, 0);
    }
    pid = -1;
  }

  std::string read_line() {
    std::string line;
    int ch;
    while ((ch = std::fgetc(reader)) != EOF) {
      if (ch == '\n') return line + '\n';
      line.push_back(static_cast<char>(ch));
    }
    throw EncoderError("encoder: child process '" + command + "' closed its output" +
                       (line.empty() ? std::string() : " mid-line"));
  }

  std::string exchange(const std::string& request) {
    if (pid <= 0) start();
    std::size_t off = 0;
    while (off < request.size()) {
      const ssize_t n = ::write(write_fd, request.data() + off, request.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EncoderError("encoder: failed to write to child process '" + command + "': " + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
    std::string reply = read_line();
    // The reply header decides how many value lines follow; the caller checks
    // it against the request.
    const std::size_t lines = parse_header(reply.substr(0, reply.size() - 1)).first;
    for (std::size_t i = 0; i < lines; ++i) reply += read_line();
    return reply;
  }

  std::string command;
  pid_t pid = -1;
  int write_fd = -1;
  std::FILE* reader = nullptr;
  std::mutex mutex;  // one in-flight request per child
};

// -- FeatureEncoder --------------------------------------------------------------------

FeatureEncoder FeatureEncoder::identity() { return FeatureEncoder(EncoderKind::identity, 0, nullptr); }

FeatureEncoder FeatureEncoder::random_frozen(std::uint64_t seed) {
  return FeatureEncoder(EncoderKind::random_frozen, seed, nullptr);
}

FeatureEncoder FeatureEncoder::external(std::string command) {
  if (command.empty()) throw ConfigError("external encoder needs a command (set " + std::string(kEncoderCommandEnv) + ")");
  return FeatureEncoder(EncoderKind::external, 0, std::make_shared<Process>(std::move(command)));
}

FeatureEncoder FeatureEncoder::external_from_env() {
  const char* cmd = std::getenv(kEncoderCommandEnv);
  return external(cmd ? cmd : "");
}

Tensor FeatureEncoder::encode(const Tensor& x) const {
  if (x.rank() != 2) throw DimensionError("encoder: window must be [d x T], got " + shape_to_string(x.shape()));
  for (double v : x.data())
    if (!std::isfinite(v)) throw EncoderError("encoder: input contains non-finite values");
  switch (kind_) {
    case EncoderKind::identity: return x.detach();
    case EncoderKind::random_frozen: return encode_random(x);
    case EncoderKind::external: {
      const std::string request = encode_window_message(x);
      std::string reply;
      {
        std::lock_guard<std::mutex> lock(process_->mutex);
        try {
          reply = process_->exchange(request);
        } catch (const EncoderError&) {
          process_->stop();  // the stream is out of sync; restart on next use
          throw;
        }
      }
      Tensor z = decode_window_message(reply);
      if (z.shape() != x.shape())
        throw EncoderError("encoder: external encoder changed shape " + shape_to_string(x.shape()) + " -> " +
                           shape_to_string(z.shape()));
      return z;
    }
  }
  throw EncoderError("encoder: unknown kind");
}

// Z = X + tanh(A X + b): a fixed channel-mixing step drawn from (seed, d).
Tensor FeatureEncoder::encode_random(const Tensor& x) const {
  const std::size_t d = x.rows(), t = x.cols();
  std::mt19937_64 rng(seed_ ^ (0x9E3779B97F4A7C15ULL * (d + 1)));
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> mix(d * d), bias(d);
  for (double& v : mix) v = dist(rng);
  for (double& v : bias) v = dist(rng);
  auto in = x.data();
  std::vector<double> out(d * t);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t j = 0; j < t; ++j) {
      double acc = bias[c];
      for (std::size_t k = 0; k < d; ++k) acc += mix[c * d + k] * in[k * t + j];
      out[c * t + j] = in[c * t + j] + std::tanh(acc);
    }
  }
  return Tensor::from({d, t}, std::move(out));
}

}  // namespace tsinr
