#pragma once

// Frozen feature mapping Z = Encoder(X) applied to each [d x T] window before
// tokenization. Encoders run outside the autodiff tape and carry no trainable
// state.
//
// The external variant talks to a child process over stdin/stdout with a
// line-oriented protocol, one exchange per window:
//
//   ENC1 <d> <T>\n
//   <T space-separated decimals for channel 0>\n
//   ...                                              (d value lines)
//
// The child answers with the same framing and the same d and T.

#include <cstdint>
#include <memory>
#include <string>

#include "tsinr/tensor.hpp"

namespace tsinr {

enum class EncoderKind { identity, random_frozen, external };

std::string to_string(EncoderKind kind);
/// Accepts "identity", "random" / "random_frozen", "external".
EncoderKind parse_encoder_kind(const std::string& text);

inline constexpr const char* kEncoderCommandEnv = "TSINR_ENCODER_CMD";
inline constexpr const char* kEncoderProtocolTag = "ENC1";

/// Wire encoding of one window (header plus d value lines, newline-terminated).
std::string encode_window_message(const Tensor& x);
/// Parses a complete message; throws EncoderError on any framing deviation.
Tensor decode_window_message(const std::string& message);

class FeatureEncoder {
 public:
  static FeatureEncoder identity();
  static FeatureEncoder random_frozen(std::uint64_t seed);
  /// Spawns `/bin/sh -c command` lazily on first use.
  static FeatureEncoder external(std::string command);
  /// External encoder whose command comes from TSINR_ENCODER_CMD.
  static FeatureEncoder external_from_env();

  EncoderKind kind() const { return kind_; }

  /// Same-shape features; never modifies x.
  Tensor encode(const Tensor& x) const;

 private:
  struct Process;

  FeatureEncoder(EncoderKind kind, std::uint64_t seed, std::shared_ptr<Process> process)
      : kind_(kind), seed_(seed), process_(std::move(process)) {}

  Tensor encode_random(const Tensor& x) const;

  EncoderKind kind_;
  std::uint64_t seed_ = 0;
  std::shared_ptr<Process> process_;
};

}  // namespace tsinr
