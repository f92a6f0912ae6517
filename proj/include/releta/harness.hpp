#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "releta/agents.hpp"
#include "releta/qfunc.hpp"
#include "releta/sim_core.hpp"
#include "releta/workload.hpp"

namespace releta::harness {

struct ExperimentConfig {
  std::string name = "releta";
  sim::PlatformConfig platform;
  workload::ArrivalConfig arrivals;
  agents::AgentConfig agent;
  std::size_t settle_ticks = 10;
  std::uint64_t seed = 42;
  bool timing = false;  // record per-decision wall-clock overhead
  std::filesystem::path output_path;

  bool operator==(const ExperimentConfig&) const = default;
};

void validate(const ExperimentConfig& cfg);

// Defaults: 4-core heterogeneous platform, eight-profile taskset, releta agent.
ExperimentConfig default_experiment();

struct RunResult {
  std::string name;
  std::string agent;
  std::vector<double> peak_temp;  // per release, max sensor reading at the feedback instant
  std::vector<double> mean_temp;
  std::vector<double> reward;
  std::vector<std::size_t> action;  // chosen core
  std::vector<bool> explored;
  std::vector<std::optional<double>> latency;
  std::vector<std::optional<bool>> violated;  // empty optional: profile has no constraint
  std::vector<double> overhead_us;            // empty unless timing was enabled
  std::optional<qfunc::QNetwork> final_network;
  double end_time = 0.0;

  std::size_t releases() const { return peak_temp.size(); }
  // Percentage of constrained tasks that missed their bound; nullopt without constrained tasks.
  std::optional<double> violation_rate() const;
};

// Called after each allocation decision, before the task is released, with the
// simulator state the decision was made on.
using DecisionHook = std::function<void(std::size_t release, const workload::Simulator&, const agents::Decision&)>;

// Per release: read state, decide, allocate, and schedule a feedback sample
// `settle_ticks` later; the simulation keeps running in between, so later
// arrivals are not delayed. Runs until every task has finished.
// Divergence errors are rethrown with the release index attached.
RunResult run_episode(const ExperimentConfig& cfg, const DecisionHook& hook = {});

struct PolicyRow {
  std::string name;
  std::string agent;
  double mean_peak = 0.0;  // over the converged window
  double avg_diff = 0.0;   // mean of (this - first) peak over the converged window
  double max_diff = 0.0;
  std::optional<double> violation_rate;
  std::optional<double> mean_overhead_ms;
  std::optional<double> max_overhead_ms;
};

struct ComparisonSummary {
  std::size_t window_begin = 0;
  std::size_t window_end = 0;
  std::vector<PolicyRow> rows;  // first row is the reference
};

// Compares finished runs of configs that share platform, arrivals and seed.
// Throws Error(kRuntime) when they do not.
ComparisonSummary compare(const std::vector<ExperimentConfig>& cfgs, const std::vector<RunResult>& results);

struct Comparison {
  std::vector<RunResult> results;
  ComparisonSummary summary;
};
Comparison compare(const std::vector<ExperimentConfig>& cfgs, unsigned threads = 1);

// Runs whole configs in isolation on up to `threads` workers; output order
// follows input order.
std::vector<RunResult> run_all(const std::vector<ExperimentConfig>& cfgs, unsigned threads);

struct Overhead {
  double mean_us = 0.0;
  double max_us = 0.0;
};

// Wall-clock cost of decide + observe on a copy of `agent`, repeated on the
// state `sim` is in. repetitions >= 100.
Overhead measure_overhead(const agents::Agent& agent, const workload::Simulator& sim, std::size_t repetitions);
Overhead measure_overhead(const ExperimentConfig& cfg, std::size_t repetitions);

void write_csv(std::ostream& out, const RunResult& r);
void emit_csv(const RunResult& r, const std::filesystem::path& path);

// Parses a file written by write_csv back into the per-release columns.
RunResult read_csv(std::istream& in, const std::string& origin = "<stream>");

void write_summary_text(std::ostream& out, const ComparisonSummary& s);
void write_summary_csv(std::ostream& out, const ComparisonSummary& s);

std::string format_number(double v);

// Mean of `v[begin, end)`.
double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t end);

}  // namespace releta::harness
