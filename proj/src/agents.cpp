#include "releta/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "releta/error.hpp"

namespace releta::agents {

std::string to_string(RewardVariant v) {
  switch (v) {
    case RewardVariant::kContinuous: return "continuous";
    case RewardVariant::kTernary: return "ternary";
    case RewardVariant::kLtb: return "ltb";
  }
  return "continuous";
}

RewardVariant reward_variant_from_string(const std::string& s) {
  if (s == "continuous") return RewardVariant::kContinuous;
  if (s == "ternary") return RewardVariant::kTernary;
  if (s == "ltb") return RewardVariant::kLtb;
  fail(ErrorKind::kValidation, "reward: expected continuous, ternary or ltb, got '" + s + "'");
}

std::string to_string(StateModel m) { return m == StateModel::kFreqUtil ? "freq_util" : "temperature"; }

StateModel state_model_from_string(const std::string& s) {
  if (s == "freq_util") return StateModel::kFreqUtil;
  if (s == "temperature") return StateModel::kTemperature;
  fail(ErrorKind::kValidation, "state: expected freq_util or temperature, got '" + s + "'");
}

double compute_reward(const RewardMode& mode, double mean_prev, double action_temp, double t_max) {
  switch (mode.variant) {
    case RewardVariant::kContinuous:
      return mean_prev - action_temp;
    case RewardVariant::kTernary:
      if (action_temp < mean_prev) return 10.0;
      if (action_temp > mean_prev) return -10.0;
      return 0.0;
    case RewardVariant::kLtb:
      require(mode.t_em.has_value(), ErrorKind::kValidation, "t_em: required by the ltb reward");
      return *mode.t_em - t_max;
  }
  return 0.0;
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> build_state(const workload::Simulator& sim) {
  const auto& cores = sim.chip().core_states();
  const double f_max = sim.chip().config().governor.f_max();
  const std::size_t n = cores.size();
  std::vector<double> s(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = cores[i].freq / f_max;
    s[n + i] = cores[i].util;
  }
  return s;
}

std::vector<double> temperature_state(std::span<const double> temps, double ambient, double t_ref) {
  std::vector<double> s(temps.size());
  const double span = t_ref - ambient;
  for (std::size_t i = 0; i < temps.size(); ++i) s[i] = (temps[i] - ambient) / span;
  return s;
}

void validate(const AgentConfig& cfg) {
  const auto& names = agent_names();
  require(std::find(names.begin(), names.end(), cfg.name) != names.end(), ErrorKind::kValidation,
          "agent.name: unknown policy '" + cfg.name + "'");
  qfunc::validate(cfg.hyper);
  require(cfg.init_scale >= 0 && std::isfinite(cfg.init_scale), ErrorKind::kValidation, "init_scale: must be >= 0");
  require(std::isfinite(cfg.t_em), ErrorKind::kValidation, "t_em: must be finite");
  require(cfg.replay_capacity > 0, ErrorKind::kValidation, "replay_capacity: must be > 0");
  require(cfg.minibatch > 0, ErrorKind::kValidation, "minibatch: must be > 0");
  require(cfg.sync_period > 0, ErrorKind::kValidation, "sync_period: must be > 0");
  require(cfg.weight_temp >= 0 && cfg.weight_latency >= 0 && (cfg.weight_temp > 0 || cfg.weight_latency > 0),
          ErrorKind::kValidation, "weight_temp/weight_latency: must be >= 0 and not both zero");
  if (cfg.epsilon_override)
    require(*cfg.epsilon_override >= 0 && *cfg.epsilon_override <= 1, ErrorKind::kValidation,
            "epsilon: must lie in [0, 1]");
}

const std::vector<std::string>& agent_names() {
  static const std::vector<std::string> names = {"releta", "dqn", "ltb", "dsm", "linux", "roundrobin", "random"};
  return names;
}

namespace {

std::span<const double> pick(const Observation& obs, TempSource src) {
  return src == TempSource::kSensor ? obs.sensor_temps : obs.raw_temps;
}

std::pair<std::size_t, bool> epsilon_greedy(Rng& rng, double eps, const qfunc::QNetwork& net,
                                            std::span<const double> state) {
  if (rng.bernoulli(eps)) return {rng.index(net.output_size()), true};
  return {qfunc::argmax_action(net.forward(state)), false};
}

double ambient_of(const Observation& obs) { return obs.sim.chip().config().thermal.ambient_temp; }

}  // namespace

// --- QAgent ---------------------------------------------------------------

QAgent::QAgent(std::string name, std::size_t cores, StateModel state, RewardMode reward, const AgentConfig& cfg,
               std::uint64_t seed)
    : name_(std::move(name)),
      state_model_(state),
      reward_(reward),
      reward_temps_(cfg.reward_temps),
      t_ref_(cfg.t_em),
      net_(state == StateModel::kFreqUtil ? 2 * cores : cores, 2 * cores, cores, cfg.activation),
      hyper_(cfg.hyper),
      epsilon_override_(cfg.epsilon_override),
      rng_(seed) {
  net_.init_uniform(rng_, cfg.init_scale);
}

double QAgent::epsilon() const { return epsilon_override_ ? *epsilon_override_ : qfunc::epsilon_at(step_count_, hyper_); }

std::pair<std::size_t, bool> QAgent::select_action(std::span<const double> state) {
  return epsilon_greedy(rng_, epsilon(), net_, state);
}

double QAgent::observe(const qfunc::Transition& t) {
  const double loss = qfunc::td_update(net_, net_, t, hyper_);
  ++step_count_;
  return loss;
}

std::vector<double> QAgent::encode(const Observation& obs) const {
  if (state_model_ == StateModel::kFreqUtil) return build_state(obs.sim);
  return temperature_state(obs.sensor_temps, ambient_of(obs), t_ref_);
}

Decision QAgent::decide(const Observation& obs) {
  Decision d;
  d.state = encode(obs);
  d.mean_prev = mean(pick(obs, reward_temps_));
  prev_mean_temp_ = d.mean_prev;
  const auto [action, explored] = select_action(d.state);
  d.core = d.action = action;
  d.explored = explored;
  return d;
}

double QAgent::observe(const Feedback& fb) {
  const auto temps = pick(fb.now, reward_temps_);
  const double action_temp = temps[fb.decision.core];
  const double t_max = *std::max_element(temps.begin(), temps.end());
  qfunc::Transition t;
  t.state = fb.decision.state;
  t.action = fb.decision.action;
  t.reward = compute_reward(reward_, fb.decision.mean_prev, action_temp, t_max);
  t.next_state = encode(fb.now);
  observe(t);
  return t.reward;
}

// --- DqnAgent -------------------------------------------------------------

DqnAgent::DqnAgent(std::size_t cores, const AgentConfig& cfg, std::uint64_t seed)
    : reward_(cfg.reward.value_or(RewardVariant::kTernary) == RewardVariant::kLtb
                  ? RewardMode::ltb(cfg.t_em)
                  : RewardMode{cfg.reward.value_or(RewardVariant::kTernary), std::nullopt}),
      reward_temps_(cfg.reward_temps),
      net_(qfunc::QNetwork::for_cores(cores, cfg.activation)),
      hyper_(cfg.hyper),
      epsilon_override_(cfg.epsilon_override),
      capacity_(cfg.replay_capacity),
      minibatch_(cfg.minibatch),
      sync_period_(cfg.sync_period),
      rng_(seed) {
  net_.init_uniform(rng_, cfg.init_scale);
  target_net_ = net_;
  replay_.reserve(std::min<std::size_t>(capacity_, 1024));
}

std::pair<std::size_t, bool> DqnAgent::select_action(std::span<const double> state) {
  const double eps = epsilon_override_ ? *epsilon_override_ : qfunc::epsilon_at(observe_count_, hyper_);
  return epsilon_greedy(rng_, eps, net_, state);
}

std::size_t DqnAgent::observe(const qfunc::Transition& t) {
  if (replay_.size() < capacity_) {
    replay_.push_back(t);
  } else {
    replay_[replay_head_] = t;
    replay_head_ = (replay_head_ + 1) % capacity_;
  }
  std::size_t steps = 0;
  if (replay_.size() >= minibatch_) {
    for (std::size_t j = 0; j < minibatch_; ++j) {
      const auto& sample = replay_[rng_.index(replay_.size())];
      qfunc::td_update(net_, target_net_, sample, hyper_);
      ++steps;
    }
  }
  gradient_steps_ += steps;
  ++observe_count_;
  if (observe_count_ % sync_period_ == 0) {
    target_net_ = net_;
    ++sync_count_;
  }
  return steps;
}

Decision DqnAgent::decide(const Observation& obs) {
  Decision d;
  d.state = build_state(obs.sim);
  d.mean_prev = mean(pick(obs, reward_temps_));
  const auto [action, explored] = select_action(d.state);
  d.core = d.action = action;
  d.explored = explored;
  return d;
}

double DqnAgent::observe(const Feedback& fb) {
  const auto temps = pick(fb.now, reward_temps_);
  qfunc::Transition t;
  t.state = fb.decision.state;
  t.action = fb.decision.action;
  t.reward = compute_reward(reward_, fb.decision.mean_prev, temps[fb.decision.core],
                            *std::max_element(temps.begin(), temps.end()));
  t.next_state = build_state(fb.now.sim);
  observe(t);
  return t.reward;
}

// --- baselines ------------------------------------------------------------

namespace {

Decision fixed_choice(const Observation& obs, std::size_t core) {
  Decision d;
  d.core = d.action = core;
  d.mean_prev = mean(obs.sensor_temps);
  return d;
}

double passive_reward(const Feedback& fb) {
  return fb.decision.mean_prev - fb.now.sensor_temps[fb.decision.core];
}

}  // namespace

Decision LinuxLikeAgent::decide(const Observation& obs) {
  const auto& cores = obs.sim.chip().core_states();
  std::size_t best = 0;
  for (std::size_t i = 1; i < cores.size(); ++i)
    if (cores[i].util < cores[best].util) best = i;
  return fixed_choice(obs, best);
}

double LinuxLikeAgent::observe(const Feedback& fb) { return passive_reward(fb); }

Decision RoundRobinAgent::decide(const Observation& obs) {
  const std::size_t core = next_;
  next_ = (next_ + 1) % obs.sim.cores();
  return fixed_choice(obs, core);
}

double RoundRobinAgent::observe(const Feedback& fb) { return passive_reward(fb); }

Decision RandomAgent::decide(const Observation& obs) {
  Decision d = fixed_choice(obs, rng_.index(obs.sim.cores()));
  d.explored = true;
  return d;
}

double RandomAgent::observe(const Feedback& fb) { return passive_reward(fb); }

// --- DsmAgent -------------------------------------------------------------

DsmAgent::DsmAgent(std::size_t cores, std::size_t pstates, const AgentConfig& cfg, std::uint64_t seed)
    : pstates_(pstates),
      weight_temp_(cfg.weight_temp),
      weight_latency_(cfg.weight_latency),
      reward_temps_(cfg.reward_temps),
      net_(2 * cores, 2 * cores, cores * pstates, cfg.activation),
      hyper_(cfg.hyper),
      epsilon_override_(cfg.epsilon_override),
      rng_(seed) {
  net_.init_uniform(rng_, cfg.init_scale);
}

double DsmAgent::reward(double mean_prev, double action_temp, double latency,
                        std::optional<double> constraint) const {
  const double overrun = constraint ? std::max(0.0, latency - *constraint) : 0.0;
  return weight_temp_ * (mean_prev - action_temp) - weight_latency_ * overrun;
}

Decision DsmAgent::decide(const Observation& obs) {
  Decision d;
  d.state = build_state(obs.sim);
  d.mean_prev = mean(pick(obs, reward_temps_));
  const double eps = epsilon_override_ ? *epsilon_override_ : qfunc::epsilon_at(step_count_, hyper_);
  const auto [action, explored] = epsilon_greedy(rng_, eps, net_, d.state);
  d.action = action;
  d.core = action / pstates_;
  d.pstate = action % pstates_;
  d.explored = explored;
  return d;
}

double DsmAgent::observe(const Feedback& fb) {
  const auto temps = pick(fb.now, reward_temps_);
  qfunc::Transition t;
  t.state = fb.decision.state;
  t.action = fb.decision.action;
  t.reward = reward(fb.decision.mean_prev, temps[fb.decision.core], fb.latency, fb.latency_constraint);
  t.next_state = build_state(fb.now.sim);
  qfunc::td_update(net_, net_, t, hyper_);
  ++step_count_;
  return t.reward;
}

// --- factory --------------------------------------------------------------

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, const sim::PlatformConfig& platform, std::uint64_t seed) {
  validate(cfg);
  const std::size_t n = platform.cores();
  auto reward_for = [&](RewardVariant fallback) {
    const RewardVariant v = cfg.reward.value_or(fallback);
    return v == RewardVariant::kLtb ? RewardMode::ltb(cfg.t_em) : RewardMode{v, std::nullopt};
  };
  if (cfg.name == "releta")
    return std::make_unique<QAgent>("releta", n, cfg.state.value_or(StateModel::kFreqUtil),
                                    reward_for(RewardVariant::kContinuous), cfg, seed);
  if (cfg.name == "ltb")
    return std::make_unique<QAgent>("ltb", n, cfg.state.value_or(StateModel::kTemperature),
                                    reward_for(RewardVariant::kLtb), cfg, seed);
  if (cfg.name == "dqn") return std::make_unique<DqnAgent>(n, cfg, seed);
  if (cfg.name == "dsm") return std::make_unique<DsmAgent>(n, platform.governor.p_states.size(), cfg, seed);
  if (cfg.name == "linux") return std::make_unique<LinuxLikeAgent>();
  if (cfg.name == "roundrobin") return std::make_unique<RoundRobinAgent>();
  return std::make_unique<RandomAgent>(seed);
}

}  // namespace releta::agents
