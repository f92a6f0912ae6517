// Command-line parsing for releta-sim. Kept separate from main so tests can
// exercise it without spawning processes.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace releta::cli {

enum class Subcommand { kRun, kCompare, kSweep, kValidate, kOverhead };

const char* to_string(Subcommand s);

struct CliCommand {
  Subcommand subcommand = Subcommand::kRun;
  std::vector<std::string> config_paths;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "results";
  bool quiet = false;
  std::size_t repetitions = 10000;  // overhead only
};

// Bad invocation. The message names the offending flag; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for --help; carries the rendered help text (exit code 0).
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// args excludes the program name.
CliCommand parse_args(const std::vector<std::string>& args);
CliCommand parse_args(int argc, const char* const* argv);

// Worker count for multi-config subcommands: hardware concurrency capped by
// RELETA_SIM_THREADS when set to a positive integer.
unsigned thread_budget(const char* env_value);

}  // namespace releta::cli
