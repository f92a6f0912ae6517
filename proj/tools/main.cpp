// releta-sim: command-line front end over the C library interface.
#include <releta/releta.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cli_args.hpp"

namespace fs = std::filesystem;
using releta::cli::CliCommand;
using releta::cli::Subcommand;

namespace {

constexpr int kExitRuntime = RELETA_ERR_RUNTIME;
constexpr int kExitUsage = RELETA_ERR_USAGE;

// Carries a failed library status out to main.
struct Failure {
  int code;
  std::string message;
};

void check(releta_status s, const std::string& context = {}) {
  if (s == RELETA_OK) return;
  std::string msg = releta_last_error();
  if (!context.empty()) msg = context + ": " + msg;
  throw Failure{static_cast<int>(s), msg};
}

struct ConfigDeleter {
  void operator()(releta_config* c) const { releta_config_free(c); }
};
struct ResultDeleter {
  void operator()(releta_result* r) const { releta_result_free(r); }
};
struct ComparisonDeleter {
  void operator()(releta_comparison* c) const { releta_comparison_free(c); }
};
using ConfigPtr = std::unique_ptr<releta_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<releta_result, ResultDeleter>;
using ComparisonPtr = std::unique_ptr<releta_comparison, ComparisonDeleter>;

ConfigPtr load(const std::string& path, const CliCommand& cmd) {
  releta_config* raw = nullptr;
  check(releta_config_load(path.c_str(), &raw), path);
  ConfigPtr cfg(raw);
  if (cmd.seed) check(releta_config_set_seed(cfg.get(), *cmd.seed));
  return cfg;
}

std::string config_name(const releta_config* cfg) {
  const char* name = nullptr;
  check(releta_config_name(cfg, &name));
  return name;
}

fs::path prepare_out(const CliCommand& cmd) {
  const fs::path out(cmd.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Failure{kExitRuntime, "--out: cannot create " + out.string() + ": " + ec.message()};
  return out;
}

// Distinct file stems for configs that share a name.
std::vector<std::string> unique_stems(const std::vector<std::string>& names) {
  std::map<std::string, int> seen;
  std::vector<std::string> out;
  for (const auto& n : names) {
    const int k = ++seen[n];
    out.push_back(k == 1 ? n : n + "_" + std::to_string(k));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string rate_text(const releta_result* r) {
  double rate = 0;
  int has = 0;
  check(releta_result_violation_rate(r, &rate, &has));
  return has ? fmt(rate) + "%" : "-";
}

int cmd_run(const CliCommand& cmd) {
  auto cfg = load(cmd.config_paths.front(), cmd);
  const std::string name = config_name(cfg.get());
  const fs::path out = prepare_out(cmd);
  releta_result* raw = nullptr;
  check(releta_run(cfg.get(), &raw), name);
  ResultPtr result(raw);

  const fs::path csv = out / (name + ".csv");
  check(releta_result_write_csv(result.get(), csv.c_str()));
  const fs::path ckpt = out / (name + ".ckpt");
  const releta_status s = releta_result_write_checkpoint(result.get(), ckpt.c_str());
  if (s != RELETA_OK && s != RELETA_ERR_USAGE) check(s);
  if (!cmd.quiet) {
    double peak = 0;
    check(releta_result_converged_peak(result.get(), &peak));
    std::cout << name << ": converged mean peak " << fmt(peak) << " C, violations " << rate_text(result.get())
              << "\n  wrote " << csv.string() << '\n';
    if (s == RELETA_OK) std::cout << "  wrote " << ckpt.string() << '\n';
  }
  return 0;
}

int cmd_compare(const CliCommand& cmd, unsigned threads) {
  std::vector<ConfigPtr> cfgs;
  std::vector<const releta_config*> handles;
  std::vector<std::string> names;
  for (const auto& path : cmd.config_paths) {
    cfgs.push_back(load(path, cmd));
    handles.push_back(cfgs.back().get());
    names.push_back(config_name(handles.back()));
  }
  const fs::path out = prepare_out(cmd);
  releta_comparison* raw = nullptr;
  check(releta_compare(handles.data(), handles.size(), threads, &raw), "compare");
  ComparisonPtr cmp(raw);

  const auto stems = unique_stems(names);
  for (std::size_t i = 0; i < stems.size(); ++i) {
    const releta_result* r = nullptr;
    check(releta_comparison_result(cmp.get(), i, &r));
    check(releta_result_write_csv(r, (out / (stems[i] + ".csv")).c_str()));
  }
  check(releta_comparison_write_text(cmp.get(), (out / "summary.txt").c_str()));
  check(releta_comparison_write_csv(cmp.get(), (out / "summary.csv").c_str()));
  if (!cmd.quiet) {
    const char* text = nullptr;
    check(releta_comparison_text(cmp.get(), &text));
    std::cout << text;
  }
  return 0;
}

int cmd_sweep(const CliCommand& cmd, unsigned threads) {
  auto base = load(cmd.config_paths.front(), cmd);
  std::size_t n = 0;
  check(releta_config_sweep_size(base.get(), &n));
  std::vector<ConfigPtr> points;
  std::vector<const releta_config*> handles;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    releta_config* raw = nullptr;
    check(releta_config_sweep_point(base.get(), i, &raw));
    points.emplace_back(raw);
    handles.push_back(raw);
    names.push_back(config_name(raw));
  }
  const fs::path out = prepare_out(cmd);
  std::vector<releta_result*> raw(n, nullptr);
  check(releta_run_many(handles.data(), n, threads, raw.data()), "sweep");
  std::vector<ResultPtr> results;
  for (auto* r : raw) results.emplace_back(r);

  const auto stems = unique_stems(names);
  std::ofstream index(out / "sweep_index.csv", std::ios::binary);
  if (!index) throw Failure{kExitRuntime, "cannot write " + (out / "sweep_index.csv").string()};
  index << "point,name,file,converged_peak_temp,violation_rate\n";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string file = stems[i] + ".csv";
    check(releta_result_write_csv(results[i].get(), (out / file).c_str()));
    double peak = 0, rate = 0;
    int has = 0;
    check(releta_result_converged_peak(results[i].get(), &peak));
    check(releta_result_violation_rate(results[i].get(), &rate, &has));
    char peak_buf[32], rate_buf[32] = "";
    std::snprintf(peak_buf, sizeof peak_buf, "%.17g", peak);
    if (has) std::snprintf(rate_buf, sizeof rate_buf, "%.17g", rate);
    index << i << ',' << names[i] << ',' << file << ',' << peak_buf << ',' << rate_buf << '\n';
    if (!cmd.quiet) std::cout << names[i] << ": converged mean peak " << fmt(peak) << " C\n";
  }
  if (!index) throw Failure{kExitRuntime, "write failed: " + (out / "sweep_index.csv").string()};
  if (!cmd.quiet) std::cout << "wrote " << n << " runs and " << (out / "sweep_index.csv").string() << '\n';
  return 0;
}

int cmd_validate(const CliCommand& cmd) {
  const std::string& path = cmd.config_paths.front();
  releta_config* raw = nullptr;
  const releta_status s = releta_config_load(path.c_str(), &raw);
  if (s != RELETA_OK) {
    std::cout << path << ": invalid\n  " << releta_last_error() << '\n';
    return s;
  }
  ConfigPtr cfg(raw);
  if (cmd.seed) check(releta_config_set_seed(cfg.get(), *cmd.seed));
  std::size_t points = 0;
  check(releta_config_sweep_size(cfg.get(), &points));
  std::cout << path << ": ok";
  if (points > 1) std::cout << " (" << points << " sweep points)";
  std::cout << '\n';
  if (!cmd.quiet) {
    const char* text = nullptr;
    check(releta_config_describe(cfg.get(), &text));
    std::cout << '\n' << text;
  }
  return 0;
}

int cmd_overhead(const CliCommand& cmd) {
  std::vector<std::string> names;
  std::vector<std::pair<double, double>> rows;
  for (const auto& path : cmd.config_paths) {
    auto cfg = load(path, cmd);
    const char* agent = nullptr;
    check(releta_config_agent(cfg.get(), &agent));
    double mean_us = 0, max_us = 0;
    check(releta_overhead(cfg.get(), cmd.repetitions, &mean_us, &max_us), path);
    names.push_back(config_name(cfg.get()) + " (" + agent + ")");
    rows.emplace_back(mean_us, max_us);
  }
  std::size_t width = 6;
  for (const auto& n : names) width = std::max(width, n.size());
  std::printf("%-*s  %12s  %12s\n", static_cast<int>(width), "policy", "mean_ms", "max_ms");
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::printf("%-*s  %12.6f  %12.6f\n", static_cast<int>(width), names[i].c_str(), rows[i].first / 1000.0,
                rows[i].second / 1000.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CliCommand cmd;
  try {
    cmd = releta::cli::parse_args(argc, argv);
  } catch (const releta::cli::HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const releta::cli::UsageError& e) {
    std::cerr << "releta-sim: " << e.what() << "\nRun 'releta-sim --help' for usage.\n";
    return kExitUsage;
  }

  const unsigned threads = releta::cli::thread_budget(std::getenv("RELETA_SIM_THREADS"));
  try {
    switch (cmd.subcommand) {
      case Subcommand::kRun: return cmd_run(cmd);
      case Subcommand::kCompare: return cmd_compare(cmd, threads);
      case Subcommand::kSweep: return cmd_sweep(cmd, threads);
      case Subcommand::kValidate: return cmd_validate(cmd);
      case Subcommand::kOverhead: return cmd_overhead(cmd);
    }
  } catch (const Failure& f) {
    std::cerr << "releta-sim: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "releta-sim: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
