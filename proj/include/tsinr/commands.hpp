#pragma once

// Command-line front end: synth, train, detect, eval, sweep, plot.
//
// Exit codes: 0 success, 1 other runtime failure, 2 usage or configuration
// error, 3 numeric failure during training.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsinr/pipeline.hpp"

namespace tsinr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

struct RunManifest {
  std::string command;
  TrainConfig config;
  std::uint64_t config_hash = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // role, path
  std::string checkpoint;
  std::string report;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;

  std::string to_json() const;
};

/// Arguments exclude the program name. Output goes to out/err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace tsinr
