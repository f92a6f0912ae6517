#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "releta/ini.hpp"
#include "releta/rng.hpp"
#include "releta/sim_core.hpp"

namespace releta::workload {

struct TaskProfile {
  std::string name;
  double work = 1.0;         // GHz*s at full utilization
  double util_demand = 1.0;  // (0, 1]
  std::optional<double> latency_constraint;  // s

  bool operator==(const TaskProfile&) const = default;
};

struct TaskInstance {
  std::uint64_t id = 0;
  std::size_t profile = 0;  // index into the arrival config's taskset
  double work = 0.0;
  double util_demand = 0.0;
  double arrival = 0.0;
  std::optional<std::size_t> core;
  std::optional<double> finish;
  double work_done = 0.0;

  bool done() const { return finish.has_value(); }
  std::optional<double> latency() const {
    return finish ? std::optional<double>(*finish - arrival) : std::nullopt;
  }
  bool operator==(const TaskInstance&) const = default;
};

struct ArrivalConfig {
  std::uint64_t seed = 42;
  double interval_min = 0.5;
  double interval_max = 2.0;
  std::size_t total_releases = 2000;
  std::vector<TaskProfile> taskset;

  bool operator==(const ArrivalConfig&) const = default;
};

void validate(const TaskProfile& p);
void validate(const ArrivalConfig& cfg);

struct Arrival {
  double time_delta = 0.0;
  std::size_t profile = 0;
  bool operator==(const Arrival&) const = default;
};

// Seeded release process; draw order per release is interval then profile.
class ArrivalStream {
 public:
  explicit ArrivalStream(const ArrivalConfig& cfg);
  ArrivalStream(const ArrivalConfig& cfg, std::uint64_t seed);

  // Throws Error(kRuntime) once total_releases draws have been made.
  Arrival next_arrival();
  std::size_t remaining() const { return cfg_.total_releases - issued_; }

 private:
  ArrivalConfig cfg_;
  Rng rng_;
  std::size_t issued_ = 0;
};

// Absolute release times and profiles for a whole episode.
struct ArrivalTrace {
  std::vector<double> times;
  std::vector<std::size_t> profiles;
  bool operator==(const ArrivalTrace&) const = default;
};
ArrivalTrace generate_trace(const ArrivalConfig& cfg);

struct TickOutcome {
  double busy_util = 0.0;  // utilization the core ran at during this tick
  std::vector<std::uint64_t> completed;
};

// Runs one tick of the core's resident queue at the core's current frequency.
// The head instance accrues freq*util_demand*dt; the others share the capacity
// left over, in proportion to their demand. Completed instances get `finish`
// = now + dt and leave the queue. `core.util` is set to the clamped demand of
// the instances resident during the tick.
TickOutcome execute_tick(sim::CoreState& core, std::map<std::uint64_t, TaskInstance>& instances, double dt,
                         double now);

double resident_util(const sim::CoreState& core, const std::map<std::uint64_t, TaskInstance>& instances);

// Taskset file: [arrivals] (optional) plus one [taskset.<name>] section per profile.
ArrivalConfig load_taskset(const std::filesystem::path& path);
ArrivalConfig taskset_from_ini(const IniDocument& doc);
// Reads [taskset.*] sections only; appends to `out` in file order.
void read_profiles(const IniDocument& doc, std::vector<TaskProfile>& out);

// The eight-profile default set. Parameters are synthetic; names are labels.
std::vector<TaskProfile> default_taskset();

// Chip plus resident tasks: the environment the allocators act on.
class Simulator {
 public:
  Simulator(sim::PlatformConfig platform, std::uint64_t seed = 0);

  const sim::Chip& chip() const { return chip_; }
  sim::Chip& chip() { return chip_; }
  std::size_t cores() const { return chip_.cores(); }
  double time() const { return chip_.time(); }
  std::uint64_t tick_count() const { return chip_.tick_count(); }

  // Places a new instance on `core`; allocation is final.
  std::uint64_t release(const TaskProfile& profile, std::size_t profile_index, double arrival, std::size_t core);

  // Pins a core's frequency until its queue drains.
  void pin_frequency(std::size_t core, double freq);

  void tick();

  const TaskInstance& instance(std::uint64_t id) const { return instances_.at(id); }
  const std::map<std::uint64_t, TaskInstance>& instances() const { return instances_; }
  std::size_t active_tasks() const;

  std::vector<double> read_sensors() { return chip_.read_sensors(); }

  bool operator==(const Simulator&) const = default;

 private:
  sim::Chip chip_;
  std::map<std::uint64_t, TaskInstance> instances_;
  std::uint64_t next_id_ = 0;
};

}  // namespace releta::workload
