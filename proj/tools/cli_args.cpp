#include "cli_args.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <filesystem>
#include <thread>

namespace releta::cli {

const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::kRun: return "run";
    case Subcommand::kCompare: return "compare";
    case Subcommand::kSweep: return "sweep";
    case Subcommand::kValidate: return "validate";
    case Subcommand::kOverhead: return "overhead";
  }
  return "?";
}

namespace {

struct SubcommandInfo {
  Subcommand sub;
  const char* help;
  bool repeatable;
};

constexpr SubcommandInfo kSubcommands[] = {
    {Subcommand::kRun, "Run one experiment; writes <name>.csv and <name>.ckpt", false},
    {Subcommand::kCompare, "Run several policies on one trace; writes per-policy CSVs and a summary", true},
    {Subcommand::kSweep, "Expand the [sweep] grid; writes one CSV per point and sweep_index.csv", false},
    {Subcommand::kValidate, "Check a config and print its resolved form", false},
    {Subcommand::kOverhead, "Time decide + observe per policy", true},
};

}  // namespace

CliCommand parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Thermal-aware task allocation simulator", "releta-sim"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  CliCommand cmd;
  std::string seed_text;
  std::vector<CLI::App*> subs;
  for (const auto& info : kSubcommands) {
    auto* sub = app.add_subcommand(to_string(info.sub), info.help);
    auto* opt = sub->add_option("--config", cmd.config_paths, "Experiment config file");
    opt->required();
    if (info.repeatable)
      opt->take_all()->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->allow_extra_args(false);
    else
      opt->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    sub->add_option("--seed", seed_text, "Override the config seed");
    sub->add_option("--out", cmd.out_dir, "Output directory")->capture_default_str();
    sub->add_flag("--quiet", cmd.quiet, "Suppress progress output");
    if (info.sub == Subcommand::kOverhead)
      sub->add_option("--reps", cmd.repetitions, "Timed repetitions per policy (>= 100)")->capture_default_str();
    subs.push_back(sub);
  }

  // CLI11 consumes a vector from the back.
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (msg.empty()) msg = e.get_name();
    throw UsageError(msg);
  }

  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) cmd.subcommand = kSubcommands[i].sub;

  if (!seed_text.empty()) {
    std::uint64_t seed = 0;
    const auto* end = seed_text.data() + seed_text.size();
    auto [p, ec] = std::from_chars(seed_text.data(), end, seed);
    if (ec != std::errc() || p != end)
      throw UsageError("--seed: expected a non-negative integer, got '" + seed_text + "'");
    cmd.seed = seed;
  }
  if (cmd.out_dir.empty()) throw UsageError("--out: must not be empty");
  if (cmd.subcommand == Subcommand::kOverhead && cmd.repetitions < 100)
    throw UsageError("--reps: must be at least 100");
  for (const auto& path : cmd.config_paths) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
      throw UsageError("--config: file not found: " + path);
  }
  return cmd;
}

CliCommand parse_args(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_args(args);
}

unsigned thread_budget(const char* env_value) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (env_value != nullptr && *env_value != '\0') {
    unsigned cap = 0;
    const char* end = env_value + std::char_traits<char>::length(env_value);
    auto [p, ec] = std::from_chars(env_value, end, cap);
    if (ec == std::errc() && p == end && cap > 0) n = std::min(n, cap);
  }
  return n;
}

}  // namespace releta::cli
