#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace orthosect {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerdict = 1;
inline constexpr int kExitInput = 2;

struct CommandArgs {
  std::string scene;
  std::string pair;       // "NAME,NAME"
  std::string tet;
  std::string start;
  std::string partner;    // export svg: pedal figure source
  std::string out;
  std::string format;
  bool corollary4 = false;
  std::optional<std::uint64_t> seed;
  int restarts = 64;
  int steps = 50;
  double step = 1e-2;
  int direction = 1;
  int face = 4;           // 1-based
  int grid = 128;
  std::optional<std::array<double, 4>> window;
  int n = 6;
  int degree_trials = 0;
  int resolution = 16;
};

struct RunResult {
  nlohmann::json report;
  int exit_code = kExitOk;
};

/// Executes one command. Input problems yield exit code 2 with an "error"
/// entry; geometric failures yield exit code 1 with partial results.
RunResult run(const std::string& command, const CommandArgs& args);

/// Verdicts are {name, value, limit, pass} with pass == (value <= limit).
bool verdicts_consistent(const nlohmann::json& report);

}  // namespace orthosect
