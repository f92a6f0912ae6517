#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "releta/rng.hpp"

namespace releta::sim {

struct ThermalParams {
  double ambient_temp = 45.0;        // °C
  std::vector<double> r_th;          // °C/W per core
  std::vector<double> c_th;          // J/°C per core
  std::vector<double> coupling;      // n*n row-major, W/°C, zero diagonal
  double dt = 0.1;                   // s

  std::size_t cores() const { return r_th.size(); }
  bool operator==(const ThermalParams&) const = default;
  double conductance(std::size_t i, std::size_t j) const { return coupling[i * cores() + j]; }
};

struct PowerParams {
  double k_dyn = 0.25;     // W / (GHz^exp * util)
  double exp = 3.0;
  double p_static = 1.0;   // W
  double leakage = 0.0;    // W/°C above ambient; 0 disables temperature feedback

  bool operator==(const PowerParams&) const = default;
};

struct GovernorConfig {
  std::vector<double> p_states;  // GHz, ascending
  double up_threshold = 0.95;

  double f_min() const { return p_states.front(); }
  double f_max() const { return p_states.back(); }
  bool operator==(const GovernorConfig&) const = default;
};

struct SensorConfig {
  double resolution = 1.0;  // °C; 0 disables quantization
  double noise_std = 0.0;   // °C, Gaussian, applied before quantization

  bool operator==(const SensorConfig&) const = default;
};

struct CoreState {
  double temperature = 0.0;
  double freq = 0.0;
  double util = 0.0;
  std::vector<std::uint64_t> queue;  // resident task-instance ids, head first
  std::optional<double> pinned_freq; // set by policies that scale frequency themselves

  bool operator==(const CoreState&) const = default;
};

struct PlatformConfig {
  ThermalParams thermal;
  PowerParams power;
  GovernorConfig governor;
  SensorConfig sensor;

  std::size_t cores() const { return thermal.cores(); }
  bool operator==(const PlatformConfig&) const = default;
};

// Throws Error(kValidation) naming the first violated invariant.
void validate(const ThermalParams& tp);
void validate(const PowerParams& pp);
void validate(const GovernorConfig& g);
void validate(const SensorConfig& s);
void validate(const PlatformConfig& p);

double power_draw(double freq, double util, const PowerParams& p);

// One explicit-Euler step of the RC network. Throws Error(kValidation) on an
// unstable dt or mismatched lengths.
std::vector<double> thermal_step(std::span<const double> temps, std::span<const double> powers,
                                 const ThermalParams& tp);

// Solves the steady state of the RC network for constant powers (Gaussian elimination).
std::vector<double> steady_state(std::span<const double> powers, const ThermalParams& tp);

double governor_update(double util, const GovernorConfig& g);

// Quantizes (and optionally perturbs) temperatures. `noise` may be null when
// noise_std is zero.
std::vector<double> sensor_read(std::span<const double> temps, const SensorConfig& cfg, Rng* noise = nullptr);

// Default profile: 4 cores up to 3.6 GHz, r_th spread linearly over ±15 %.
PlatformConfig default_platform(std::size_t cores = 4);

// n*n matrix with `g` between every distinct pair.
std::vector<double> uniform_coupling(std::size_t cores, double g);

// The chip without any workload: per-core temperatures and frequencies,
// stepped with externally supplied utilizations.
class Chip {
 public:
  explicit Chip(PlatformConfig cfg, std::uint64_t noise_seed = 0);

  const PlatformConfig& config() const { return cfg_; }
  std::size_t cores() const { return cores_.size(); }
  const std::vector<CoreState>& core_states() const { return cores_; }
  CoreState& core(std::size_t i) { return cores_.at(i); }
  const CoreState& core(std::size_t i) const { return cores_.at(i); }

  double time() const { return time_; }
  std::uint64_t tick_count() const { return ticks_; }

  // Sets each core's frequency from its current utilization (unless pinned).
  void apply_governor();

  // Advances temperatures by one dt with the given busy utilizations and the
  // current frequencies; returns the powers used.
  std::vector<double> advance(std::span<const double> busy_util);

  std::vector<double> temperatures() const;
  std::vector<double> read_sensors();

  bool operator==(const Chip&) const = default;

 private:
  PlatformConfig cfg_;
  std::vector<CoreState> cores_;
  double time_ = 0.0;
  std::uint64_t ticks_ = 0;
  Rng noise_;
};

}  // namespace releta::sim
