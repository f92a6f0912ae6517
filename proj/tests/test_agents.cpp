#include <doctest.h>

#include <cmath>
#include <map>

#include "releta/agents.hpp"
#include "releta/rng.hpp"
#include "test_util.hpp"

using namespace releta;
using namespace releta::agents;
using releta::test::contains;
using releta::test::error_of;

namespace {

sim::PlatformConfig platform_with_fmin_one(std::size_t n) {
  auto p = sim::default_platform(n);
  p.governor.p_states = {1.0, 2.0, 3.0, 3.6};
  return p;
}

// Observation over a simulator's current state.
struct Snapshot {
  explicit Snapshot(workload::Simulator& sim) : sim(sim), sensor(sim.read_sensors()), raw(sim.chip().temperatures()) {}
  Observation obs() const { return {sim, sensor, raw, nullptr}; }
  workload::Simulator& sim;
  std::vector<double> sensor;
  std::vector<double> raw;
};

qfunc::Transition transition(std::vector<double> s, std::size_t a, double r) {
  return {s, a, r, s, false};
}

}  // namespace

TEST_CASE("build_state of an idle chip") {
  workload::Simulator sim(platform_with_fmin_one(4));
  const auto s = build_state(sim);
  REQUIRE(s.size() == 8);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(s[i] == doctest::Approx(1.0 / 3.6).epsilon(1e-15));
    CHECK(s[4 + i] == 0.0);
  }
  CHECK(build_state(sim) == s);
}

TEST_CASE("build_state at the boundaries") {
  workload::Simulator sim(platform_with_fmin_one(2));
  sim.release({"hog", 1000.0, 1.0, std::nullopt}, 0, 0.0, 0);
  sim.tick();
  const auto s = build_state(sim);
  CHECK(s == std::vector<double>{1.0, 1.0 / 3.6, 1.0, 0.0});
  for (double x : s) CHECK((x >= 0.0 && x <= 1.0));
}

TEST_CASE("temperature state scales by the reference span") {
  const std::vector<double> t{45.0, 67.5, 90.0};
  CHECK(temperature_state(t, 45.0, 90.0) == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("reward examples") {
  CHECK(compute_reward(RewardMode::continuous(), 50, 47, 0) == 3.0);
  CHECK(compute_reward(RewardMode::ternary(), 45, 45, 0) == 0.0);
  CHECK(compute_reward(RewardMode::ltb(80), 0, 0, 63) == 17.0);
  CHECK(compute_reward(RewardMode::ternary(), 45, 48, 0) == -10.0);
  CHECK(compute_reward(RewardMode::ternary(), 45, 44, 0) == 10.0);
}

TEST_CASE("continuous reward sign law and antisymmetry") {
  Rng rng(77);
  for (int k = 0; k < 10000; ++k) {
    const double a = rng.uniform(40, 100), b = rng.uniform(40, 100);
    const double r = compute_reward(RewardMode::continuous(), a, b, 0);
    CHECK((r > 0) == (b < a));
    CHECK(r == -compute_reward(RewardMode::continuous(), b, a, 0));
  }
}

TEST_CASE("ternary reward range") {
  Rng rng(78);
  for (int k = 0; k < 100000; ++k) {
    const double a = std::round(rng.uniform(40, 100)), b = std::round(rng.uniform(40, 100));
    const double r = compute_reward(RewardMode::ternary(), a, b, 0);
    REQUIRE((r == -10.0 || r == 0.0 || r == 10.0));
  }
}

TEST_CASE("greedy selection with epsilon zero") {
  AgentConfig cfg;
  cfg.epsilon_override = 0.0;
  QAgent agent("releta", 3, StateModel::kFreqUtil, RewardMode::continuous(), cfg, 5);
  auto& net = agent.net();
  for (double& p : net.params()) p = 0.0;
  net.b2(2) = 1.0;
  for (int k = 0; k < 20; ++k) {
    const auto [a, explored] = agent.select_action(std::vector<double>(6, 0.3));
    CHECK(a == 2);
    CHECK_FALSE(explored);
  }
}

TEST_CASE("uniform selection with epsilon one") {
  AgentConfig cfg;
  cfg.epsilon_override = 1.0;
  QAgent agent("releta", 4, StateModel::kFreqUtil, RewardMode::continuous(), cfg, 6);
  std::map<std::size_t, int> counts;
  for (int k = 0; k < 10000; ++k) ++counts[agent.select_action(std::vector<double>(8, 0.0)).first];
  REQUIRE(counts.size() == 4);
  for (const auto& [a, c] : counts) CHECK(std::abs(c / 10000.0 - 0.25) <= 0.02);
}

TEST_CASE("fresh agents with the same seed act identically") {
  const AgentConfig cfg;
  QAgent a("releta", 4, StateModel::kFreqUtil, RewardMode::continuous(), cfg, 11);
  QAgent b("releta", 4, StateModel::kFreqUtil, RewardMode::continuous(), cfg, 11);
  const std::vector<double> s{0.2, 0.4, 1, 1, 0.1, 0.5, 0.9, 0};
  for (int k = 0; k < 200; ++k) CHECK(a.select_action(s) == b.select_action(s));
}

TEST_CASE("selection consumes one draw, plus one on the random branch") {
  AgentConfig cfg;
  const std::uint64_t seed = 3;
  QAgent agent("releta", 4, StateModel::kFreqUtil, RewardMode::continuous(), cfg, seed);
  // Replay the constructor's draws on a replica generator.
  Rng replica(seed);
  auto scratch = qfunc::QNetwork::for_cores(4);
  scratch.init_uniform(replica, cfg.init_scale);
  const std::vector<double> s(8, 0.5);
  for (int k = 0; k < 300; ++k) {
    const double eps = k % 3 == 0 ? 1.0 : (k % 3 == 1 ? 0.0 : 0.5);
    agent.set_epsilon_override(eps);
    const auto [a, explored] = agent.select_action(s);
    const bool random_branch = replica.bernoulli(eps);
    REQUIRE(explored == random_branch);
    if (random_branch) REQUIRE(a == replica.index(4));
  }
}

TEST_CASE("non-greedy fraction matches epsilon (n-1)/n") {
  AgentConfig cfg;
  cfg.epsilon_override = 0.3;
  QAgent agent("releta", 4, StateModel::kFreqUtil, RewardMode::continuous(), cfg, 12);
  const std::vector<double> s{0.2, 0.4, 1, 1, 0.1, 0.5, 0.9, 0};
  const auto greedy = qfunc::argmax_action(agent.net().forward(s));
  const int m = 20000;
  int off = 0;
  for (int k = 0; k < m; ++k) off += agent.select_action(s).first != greedy;
  const double p = 0.3 * 3.0 / 4.0;
  const double sigma = std::sqrt(p * (1 - p) / m);
  CHECK(std::abs(off / double(m) - p) < 3 * sigma);
}

TEST_CASE("online observe counts steps and converges toward a fixed target") {
  AgentConfig cfg;
  cfg.hyper.gamma = 0.0;
  QAgent agent("releta", 2, StateModel::kFreqUtil, RewardMode::continuous(), cfg, 21);
  const std::vector<double> s{0.5, 0.25, 1.0, 0.0};
  SUBCASE("zero TD error leaves parameters unchanged") {
    const auto before = agent.net();
    const double q = agent.net().forward(s)[1];
    agent.observe(transition(s, 1, q));
    CHECK(agent.net() == before);
    CHECK(agent.step_count() == 1);
  }
  SUBCASE("positive TD error closes monotonically") {
    const double target = agent.net().forward(s)[0] + 5.0;
    double gap = 5.0;
    std::size_t k = 0;
    for (; k < 100 && gap > 1e-12; ++k) {
      CHECK(agent.step_count() == k);
      agent.observe(transition(s, 0, target));
      const double now = target - agent.net().forward(s)[0];
      CHECK(now >= 0.0);
      CHECK(now < gap);
      gap = now;
    }
    CHECK(gap <= 1e-12);
  }
}

TEST_CASE("decide records the mean temperature and the encoded state") {
  workload::Simulator sim(sim::default_platform(4));
  sim.release({"t", 100.0, 0.8, std::nullopt}, 0, 0.0, 2);
  for (int k = 0; k < 40; ++k) sim.tick();
  Snapshot snap(sim);
  auto agent = make_agent(AgentConfig{}, sim.chip().config(), 1);
  const auto d = agent->decide(snap.obs());
  CHECK(d.mean_prev == doctest::Approx(mean(snap.sensor)));
  CHECK(d.state == build_state(sim));
  CHECK(d.core < 4);
  auto* q = dynamic_cast<QAgent*>(agent.get());
  REQUIRE(q != nullptr);
  CHECK(q->prev_mean_temp() == d.mean_prev);
}

TEST_CASE("dqn warm-up stores without learning") {
  AgentConfig cfg;
  cfg.name = "dqn";
  cfg.minibatch = 4;
  DqnAgent agent(2, cfg, 1);
  const auto before = agent.net();
  for (int k = 0; k < 3; ++k) CHECK(agent.observe(transition({0, 0, 0, 0}, 0, 1.0)) == 0);
  CHECK(agent.replay_size() == 3);
  CHECK(agent.gradient_steps() == 0);
  CHECK(agent.net() == before);
  CHECK(agent.observe(transition({0, 0, 0, 0}, 0, 1.0)) == 4);
}

TEST_CASE("dqn replay evicts the oldest transition") {
  AgentConfig cfg;
  cfg.replay_capacity = 3;
  cfg.minibatch = 100;
  DqnAgent agent(2, cfg, 1);
  for (int k = 0; k < 4; ++k) agent.observe(transition({0, 0, 0, 0}, 0, double(k)));
  REQUIRE(agent.replay_size() == 3);
  CHECK(agent.replay_at(0).reward == 1.0);
  CHECK(agent.replay_at(1).reward == 2.0);
  CHECK(agent.replay_at(2).reward == 3.0);
  for (int k = 4; k < 9; ++k) agent.observe(transition({0, 0, 0, 0}, 0, double(k)));
  CHECK(agent.replay_size() == 3);
  CHECK(agent.replay_at(0).reward == 6.0);
  CHECK(agent.replay_at(2).reward == 8.0);
}

TEST_CASE("dqn target network syncs every C observations") {
  AgentConfig cfg;
  cfg.minibatch = 1;
  cfg.sync_period = 2;
  DqnAgent agent(2, cfg, 4);
  const auto initial = agent.net();
  CHECK(agent.target_net() == initial);
  const std::vector<double> s{0.3, 0.6, 0.5, 0.5};
  agent.observe(transition(s, 0, 5.0));
  CHECK(agent.sync_count() == 0);
  CHECK(agent.target_net() == initial);
  CHECK_FALSE(agent.net() == initial);
  agent.observe(transition(s, 1, 5.0));
  CHECK(agent.sync_count() == 1);
  const auto snapshot = agent.net();
  CHECK(agent.target_net() == snapshot);
  agent.observe(transition(s, 0, 5.0));
  CHECK(agent.target_net() == snapshot);
  agent.observe(transition(s, 1, 5.0));
  CHECK(agent.sync_count() == 2);
  CHECK(agent.gradient_steps() == 4);
}

TEST_CASE("dqn targets come from the lagged network") {
  AgentConfig cfg;
  cfg.minibatch = 1;
  cfg.sync_period = 1000;
  cfg.hyper.step_rule = qfunc::StepRule::kPlain;
  cfg.hyper.alpha = 0.01;
  DqnAgent agent(2, cfg, 9);
  // Reproduce one step by hand against the initial (target) network.
  const std::vector<double> s{0.3, 0.6, 0.5, 0.5};
  const std::vector<double> s2{0.9, 0.1, 0.2, 0.7};
  agent.observe(qfunc::Transition{s, 0, 1.0, s2, false});
  auto replica = agent.target_net();
  const auto next_q = replica.forward(s2);
  qfunc::sgd_update(replica, s, 0, 1.0 + cfg.hyper.gamma * std::max(next_q[0], next_q[1]), 0.01);
  CHECK(agent.net() == replica);
}

TEST_CASE("linux-like picks the least utilized core") {
  workload::Simulator sim(sim::default_platform(4));
  const double utils[] = {0.9, 0.1, 0.5, 0.5};
  for (std::size_t i = 0; i < 4; ++i) sim.chip().core(i).util = utils[i];
  Snapshot snap(sim);
  LinuxLikeAgent agent;
  CHECK(agent.decide(snap.obs()).core == 1);
  sim.chip().core(0).util = 0.1;
  CHECK(agent.decide(Snapshot(sim).obs()).core == 0);
}

TEST_CASE("round robin cycles") {
  workload::Simulator sim(sim::default_platform(4));
  Snapshot snap(sim);
  RoundRobinAgent agent;
  std::vector<std::size_t> got;
  for (int k = 0; k < 5; ++k) got.push_back(agent.decide(snap.obs()).core);
  CHECK(got == std::vector<std::size_t>{0, 1, 2, 3, 0});
}

TEST_CASE("random agent is uniform and seeded") {
  workload::Simulator sim(sim::default_platform(4));
  Snapshot snap(sim);
  RandomAgent a(8), b(8);
  std::map<std::size_t, int> counts;
  for (int k = 0; k < 8000; ++k) {
    const auto da = a.decide(snap.obs());
    REQUIRE(da.core == b.decide(snap.obs()).core);
    ++counts[da.core];
  }
  for (const auto& [c, n] : counts) CHECK(std::abs(n / 8000.0 - 0.25) < 0.02);
}

TEST_CASE("dsm reward and action encoding") {
  AgentConfig cfg;
  cfg.weight_latency = 0.0;
  DsmAgent temp_only(4, 8, cfg, 1);
  CHECK(temp_only.reward(50, 47, 100.0, 2.0) == 3.0);
  cfg.weight_latency = 2.0;
  DsmAgent both(4, 8, cfg, 1);
  CHECK(both.reward(50, 47, 3.5, 2.0) == 3.0 - 2.0 * 1.5);
  CHECK(both.reward(50, 47, 1.0, 2.0) == 3.0);
  CHECK(both.reward(50, 47, 9.0, std::nullopt) == 3.0);
  CHECK(both.network()->output_size() == 32);

  workload::Simulator sim(sim::default_platform(4));
  Snapshot snap(sim);
  cfg.epsilon_override = 1.0;
  DsmAgent explorer(4, 8, cfg, 2);
  for (int k = 0; k < 200; ++k) {
    const auto d = explorer.decide(snap.obs());
    REQUIRE(d.pstate.has_value());
    CHECK(d.core == d.action / 8);
    CHECK(*d.pstate == d.action % 8);
  }
}

TEST_CASE("factory builds every named policy") {
  const auto platform = sim::default_platform(4);
  for (const auto& name : agent_names()) {
    AgentConfig cfg;
    cfg.name = name;
    const auto agent = make_agent(cfg, platform, 1);
    CHECK(agent->name() == name);
  }
  AgentConfig cfg;
  cfg.name = "ltb";
  auto ltb = make_agent(cfg, platform, 1);
  auto* q = dynamic_cast<QAgent*>(ltb.get());
  REQUIRE(q != nullptr);
  CHECK(q->reward_mode() == RewardMode::ltb(90.0));
  CHECK(q->network()->input_size() == 4);
  cfg.name = "cfs";
  auto [kind, msg] = error_of([&] { make_agent(cfg, platform, 1); });
  CHECK(kind == ErrorKind::kValidation);
  CHECK(contains(msg, "cfs"));
}

TEST_CASE("agent config invariants") {
  AgentConfig cfg;
  cfg.weight_temp = cfg.weight_latency = 0.0;
  CHECK(error_of([&] { validate(cfg); }).first == ErrorKind::kValidation);
  cfg = {};
  cfg.epsilon_override = 1.5;
  CHECK(contains(error_of([&] { validate(cfg); }).second, "epsilon"));
  cfg = {};
  cfg.sync_period = 0;
  CHECK(contains(error_of([&] { validate(cfg); }).second, "sync_period"));
}

TEST_CASE("clones evolve independently") {
  AgentConfig cfg;
  auto a = make_agent(cfg, sim::default_platform(4), 3);
  auto b = a->clone();
  workload::Simulator sim(sim::default_platform(4));
  Snapshot snap(sim);
  for (int k = 0; k < 50; ++k) CHECK(a->decide(snap.obs()).core == b->decide(snap.obs()).core);
}
