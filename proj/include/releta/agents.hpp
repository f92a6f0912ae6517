#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "releta/qfunc.hpp"
#include "releta/rng.hpp"
#include "releta/workload.hpp"

namespace releta::agents {

enum class RewardVariant { kContinuous, kTernary, kLtb };

struct RewardMode {
  RewardVariant variant = RewardVariant::kContinuous;
  std::optional<double> t_em;  // present iff variant == kLtb

  static RewardMode continuous() { return {RewardVariant::kContinuous, std::nullopt}; }
  static RewardMode ternary() { return {RewardVariant::kTernary, std::nullopt}; }
  static RewardMode ltb(double t_em) { return {RewardVariant::kLtb, t_em}; }
  bool operator==(const RewardMode&) const = default;
};

std::string to_string(RewardVariant v);
RewardVariant reward_variant_from_string(const std::string& s);

// Continuous: mean_prev - action_temp. Ternary: +10 / 0 / -10 as action_temp is
// below / equal to / above mean_prev. LTB: t_em - t_max.
double compute_reward(const RewardMode& mode, double mean_prev, double action_temp, double t_max);

enum class StateModel {
  kFreqUtil,     // [f_1/f_max .. f_n/f_max, u_1 .. u_n]
  kTemperature,  // [(T_i - ambient) / (t_ref - ambient)]
};

std::string to_string(StateModel m);
StateModel state_model_from_string(const std::string& s);

std::vector<double> build_state(const workload::Simulator& sim);
std::vector<double> temperature_state(std::span<const double> temps, double ambient, double t_ref);

// What an allocator sees when a task arrives or when its feedback is sampled.
struct Observation {
  const workload::Simulator& sim;
  std::span<const double> sensor_temps;
  std::span<const double> raw_temps;
  const workload::TaskProfile* task = nullptr;  // the task being placed (decide only)
};

struct Decision {
  std::size_t core = 0;
  std::optional<std::size_t> pstate;  // index into p_states; set by frequency-scaling policies
  std::size_t action = 0;             // index into the policy's own action space
  bool explored = false;              // true when drawn by the epsilon branch
  std::vector<double> state;          // the policy's encoded state at decision time
  double mean_prev = 0.0;             // mean core temperature at decision time
};

struct Feedback {
  const Decision& decision;
  const Observation& now;
  double latency = 0.0;                   // measured, or projected if the task is still running
  std::optional<double> latency_constraint;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual Decision decide(const Observation& obs) = 0;
  // Learns from the delayed outcome of `fb.decision`; returns the reward it used.
  virtual double observe(const Feedback& fb) = 0;
  virtual std::unique_ptr<Agent> clone() const = 0;
  virtual std::size_t step_count() const { return 0; }
  virtual const qfunc::QNetwork* network() const { return nullptr; }
};

enum class TempSource { kSensor, kRaw };

struct AgentConfig {
  std::string name = "releta";
  qfunc::Hyperparams hyper;
  qfunc::Activation activation = qfunc::Activation::kIdentity;
  double init_scale = 0.1;
  std::optional<RewardVariant> reward;  // unset: the policy's own default
  std::optional<StateModel> state;      // unset: the policy's own default
  double t_em = 90.0;
  TempSource reward_temps = TempSource::kSensor;
  std::size_t replay_capacity = 10000;
  std::size_t minibatch = 32;
  std::size_t sync_period = 100;
  double weight_temp = 1.0;
  double weight_latency = 1.0;
  std::optional<double> epsilon_override;  // fixes epsilon regardless of step count

  bool operator==(const AgentConfig&) const = default;
};

void validate(const AgentConfig& cfg);
const std::vector<std::string>& agent_names();

// Epsilon-greedy learner on a QNetwork, updated online with one TD step per
// observation. ReLeTA (frequency/utilization state, continuous reward) and LTB
// (temperature state, threshold reward) are both configurations of this class.
class QAgent : public Agent {
 public:
  QAgent(std::string name, std::size_t cores, StateModel state, RewardMode reward, const AgentConfig& cfg,
         std::uint64_t seed);

  std::string name() const override { return name_; }
  Decision decide(const Observation& obs) override;
  double observe(const Feedback& fb) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<QAgent>(*this); }
  std::size_t step_count() const override { return step_count_; }
  const qfunc::QNetwork* network() const override { return &net_; }

  // Epsilon-greedy draw: one RNG draw for the trial, one more on the random branch.
  std::pair<std::size_t, bool> select_action(std::span<const double> state);
  // One TD target + SGD step; returns the pre-update loss.
  double observe(const qfunc::Transition& t);

  std::vector<double> encode(const Observation& obs) const;
  double epsilon() const;
  double prev_mean_temp() const { return prev_mean_temp_; }
  qfunc::QNetwork& net() { return net_; }
  const qfunc::Hyperparams& hyper() const { return hyper_; }
  void set_epsilon_override(std::optional<double> eps) { epsilon_override_ = eps; }
  const RewardMode& reward_mode() const { return reward_; }

 private:
  std::string name_;
  StateModel state_model_;
  RewardMode reward_;
  TempSource reward_temps_;
  double t_ref_;  // temperature-state scale
  qfunc::QNetwork net_;
  qfunc::Hyperparams hyper_;
  std::optional<double> epsilon_override_;
  std::size_t step_count_ = 0;
  double prev_mean_temp_ = 0.0;
  Rng rng_;
};

// Experience replay + lagged target network.
class DqnAgent : public Agent {
 public:
  DqnAgent(std::size_t cores, const AgentConfig& cfg, std::uint64_t seed);

  std::string name() const override { return "dqn"; }
  Decision decide(const Observation& obs) override;
  double observe(const Feedback& fb) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<DqnAgent>(*this); }
  std::size_t step_count() const override { return observe_count_; }
  const qfunc::QNetwork* network() const override { return &net_; }

  std::pair<std::size_t, bool> select_action(std::span<const double> state);
  // Stores `t`, then (once the buffer holds a minibatch) samples that many
  // transitions uniformly with replacement and applies one TD step for each.
  // Returns the number of gradient steps taken.
  std::size_t observe(const qfunc::Transition& t);

  std::size_t replay_size() const { return replay_.size(); }
  // Oldest first.
  const qfunc::Transition& replay_at(std::size_t i) const {
    if (i >= replay_.size()) throw std::out_of_range("replay_at: index out of range");
    return replay_[(replay_head_ + i) % replay_.size()];
  }
  std::size_t sync_count() const { return sync_count_; }
  std::size_t gradient_steps() const { return gradient_steps_; }
  const qfunc::QNetwork& target_net() const { return target_net_; }
  qfunc::QNetwork& net() { return net_; }
  void set_epsilon_override(std::optional<double> eps) { epsilon_override_ = eps; }

 private:
  RewardMode reward_;
  TempSource reward_temps_;
  qfunc::QNetwork net_;
  qfunc::QNetwork target_net_;
  qfunc::Hyperparams hyper_;
  std::optional<double> epsilon_override_;
  std::size_t capacity_;
  std::size_t minibatch_;
  std::size_t sync_period_;
  std::vector<qfunc::Transition> replay_;  // ring storage
  std::size_t replay_head_ = 0;             // next slot to overwrite once full
  std::size_t observe_count_ = 0;
  std::size_t sync_count_ = 0;
  std::size_t gradient_steps_ = 0;
  Rng rng_;
};

// Least-utilized core, lowest index on ties.
class LinuxLikeAgent : public Agent {
 public:
  std::string name() const override { return "linux"; }
  Decision decide(const Observation& obs) override;
  double observe(const Feedback& fb) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<LinuxLikeAgent>(*this); }
};

class RoundRobinAgent : public Agent {
 public:
  std::string name() const override { return "roundrobin"; }
  Decision decide(const Observation& obs) override;
  double observe(const Feedback& fb) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<RoundRobinAgent>(*this); }

 private:
  std::size_t next_ = 0;
};

class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  Decision decide(const Observation& obs) override;
  double observe(const Feedback& fb) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<RandomAgent>(*this); }

 private:
  Rng rng_;
};

// Joint (core, p-state) epsilon-greedy Q agent with a weighted
// temperature/latency reward. A reconstruction: only the shape of the original
// (two metrics, allocation plus frequency scaling) is known.
class DsmAgent : public Agent {
 public:
  DsmAgent(std::size_t cores, std::size_t pstates, const AgentConfig& cfg, std::uint64_t seed);

  std::string name() const override { return "dsm"; }
  Decision decide(const Observation& obs) override;
  double observe(const Feedback& fb) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<DsmAgent>(*this); }
  std::size_t step_count() const override { return step_count_; }
  const qfunc::QNetwork* network() const override { return &net_; }

  double reward(double mean_prev, double action_temp, double latency, std::optional<double> constraint) const;
  std::size_t pstates() const { return pstates_; }

 private:
  std::size_t pstates_;
  double weight_temp_;
  double weight_latency_;
  TempSource reward_temps_;
  qfunc::QNetwork net_;
  qfunc::Hyperparams hyper_;
  std::optional<double> epsilon_override_;
  std::size_t step_count_ = 0;
  Rng rng_;
};

// Builds the named policy ("releta", "dqn", "ltb", "dsm", "linux",
// "roundrobin", "random").
std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, const sim::PlatformConfig& platform, std::uint64_t seed);

double mean(std::span<const double> v);

}  // namespace releta::agents
