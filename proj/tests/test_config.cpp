#include <doctest.h>

#include "releta/config.hpp"
#include "test_util.hpp"

using namespace releta;
using namespace releta::config;
using releta::test::contains;
using releta::test::error_of;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(RELETA_SOURCE_DIR) / "configs";

harness::ExperimentConfig from_text(const std::string& text) { return config_from_ini(IniDocument::parse(text, "t.cfg")); }

// A complete reference config, built field by field.
harness::ExperimentConfig hand_built_default() {
  harness::ExperimentConfig c;
  c.name = "releta";
  c.seed = 42;
  c.settle_ticks = 10;
  c.timing = false;
  auto& t = c.platform.thermal;
  t.ambient_temp = 45.0;
  t.r_th = {1.7, 1.9, 2.1, 2.3};
  t.c_th = {1.5, 1.5, 1.5, 1.5};
  t.coupling = std::vector<double>(16, 0.05);
  for (std::size_t i = 0; i < 4; ++i) t.coupling[i * 4 + i] = 0.0;
  t.dt = 0.1;
  c.platform.power = {0.25, 3.0, 1.0, 0.0};
  c.platform.governor.p_states = {0.8, 1.2, 1.6, 2.0, 2.4, 2.8, 3.2, 3.6};
  c.platform.governor.up_threshold = 0.95;
  c.platform.sensor = {1.0, 0.0};
  auto& a = c.arrivals;
  a.seed = 42;
  a.interval_min = 0.5;
  a.interval_max = 2.0;
  a.total_releases = 2000;
  a.taskset = {
      {"bodytrack", 6.0, 0.80, std::nullopt},    {"blackscholes", 4.0, 0.50, std::nullopt},
      {"canneal", 3.0, 0.70, 2.0},               {"dedup", 4.5, 0.60, 4.0},
      {"facesim", 12.0, 0.90, 5.0},              {"ferret", 6.0, 0.75, std::nullopt},
      {"fluidanimate", 7.0, 0.85, std::nullopt}, {"freqmine", 5.0, 0.65, std::nullopt},
  };
  auto& g = c.agent;
  g.name = "releta";
  g.hyper.alpha = 0.8;
  g.hyper.gamma = 0.9;
  g.hyper.eps_start = 0.1;
  g.hyper.eps_end = 0.03;
  g.hyper.eps_decay_steps = 1000;
  g.hyper.step_rule = qfunc::StepRule::kNormalized;
  g.activation = qfunc::Activation::kIdentity;
  g.init_scale = 0.1;
  g.t_em = 90.0;
  g.reward_temps = agents::TempSource::kSensor;
  g.replay_capacity = 10000;
  g.minibatch = 32;
  g.sync_period = 100;
  g.weight_temp = 1.0;
  g.weight_latency = 1.0;
  return c;
}

}  // namespace

TEST_CASE("the shipped default config equals the hand-built reference") {
  const auto loaded = load_config(kConfigs / "default.cfg");
  const auto reference = hand_built_default();
  CHECK(loaded.platform == reference.platform);
  CHECK(loaded.arrivals == reference.arrivals);
  CHECK(loaded.agent == reference.agent);
  CHECK(loaded == reference);
  CHECK(loaded == harness::default_experiment());
}

TEST_CASE("every shipped example config loads") {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs / "examples")) {
    CAPTURE(entry.path().string());
    const auto doc = IniDocument::load(entry.path());
    const auto points = expand_sweep(doc, entry.path().parent_path());
    CHECK_FALSE(points.empty());
    if (!doc.find("sweep")) CHECK(points.front().config == load_config(entry.path()));
  }
}

TEST_CASE("omitted keys take the documented defaults") {
  const auto cfg = from_text("[agent]\nalpha = 0.5\n");
  CHECK(cfg.agent.hyper.gamma == 0.9);
  CHECK(cfg.agent.hyper.alpha == 0.5);
  CHECK(cfg.agent.hyper.eps_start == 0.1);
  CHECK(cfg.agent.hyper.eps_end == 0.03);
  CHECK(cfg.platform == sim::default_platform(4));
  CHECK(cfg.arrivals.taskset == workload::default_taskset());
  CHECK(from_text("") == harness::default_experiment());
}

TEST_CASE("an unstable dt is a validation error naming dt") {
  auto [kind, msg] = error_of([] { from_text("[platform]\ndt = 5\n"); });
  CHECK(kind == ErrorKind::kValidation);
  CHECK(contains(msg, "dt"));
}

TEST_CASE("other invariants surface as validation errors naming the key") {
  const std::pair<const char*, const char*> cases[] = {
      {"[agent]\ngamma = 1.5\n", "gamma"},
      {"[agent]\nalpha = 0\n", "alpha"},
      {"[agent]\nname = nope\n", "name"},
      {"[platform]\nr_th = 1, 2\n", "r_th"},
      {"[platform]\np_states = 2, 1\n", "p_states"},
      {"[arrivals]\ntotal_releases = 0\n", "total_releases"},
      {"[arrivals]\ninterval_min = 3\ninterval_max = 1\n", "interval"},
      {"[arrivals]\nprofiles = nope\n", "profiles"},
      {"[experiment]\nsettle_ticks = 0\n", "settle_ticks"},
      {"[taskset.a]\nwork = 1\nutil_demand = 2\n", "util_demand"},
  };
  for (const auto& [text, key] : cases) {
    CAPTURE(text);
    auto [kind, msg] = error_of([&] { from_text(text); });
    CHECK(kind == ErrorKind::kValidation);
    CHECK(contains(msg, key));
  }
}

TEST_CASE("syntax errors are parse errors with a line number") {
  {
    auto [kind, msg] = error_of([] { from_text("[agent]\nalpha = 0.5\ngamma 0.9\n"); });
    CHECK(kind == ErrorKind::kParse);
    CHECK(contains(msg, "t.cfg:3"));
  }
  {
    auto [kind, msg] = error_of([] { from_text("[agent]\n\nalpha = fast\n"); });
    CHECK(kind == ErrorKind::kParse);
    CHECK(contains(msg, "t.cfg:3"));
    CHECK(contains(msg, "alpha"));
  }
  {
    auto [kind, msg] = error_of([] { from_text("[agent\nalpha = 1\n"); });
    CHECK(kind == ErrorKind::kParse);
    CHECK(contains(msg, "t.cfg:1"));
  }
}

TEST_CASE("unknown sections and keys are parse errors") {
  auto [kind, msg] = error_of([] { from_text("[agent]\nalpha = 0.5\n\n[bogus]\nx = 1\n"); });
  CHECK(kind == ErrorKind::kParse);
  CHECK(contains(msg, "t.cfg:4"));
  CHECK(contains(msg, "bogus"));

  std::tie(kind, msg) = error_of([] { from_text("[platform]\ncores = 2\nflux = 3\n"); });
  CHECK(kind == ErrorKind::kParse);
  CHECK(contains(msg, "t.cfg:3"));
  CHECK(contains(msg, "flux"));

  CHECK(error_of([] { from_text("alpha = 1\n"); }).first == ErrorKind::kParse);
}

TEST_CASE("a missing config file is a runtime error naming the path") {
  auto [kind, msg] = error_of([] { load_config("/nonexistent/x.cfg"); });
  CHECK(kind == ErrorKind::kRuntime);
  CHECK(contains(msg, "/nonexistent/x.cfg"));
}

TEST_CASE("comments and boolean spellings") {
  const auto cfg = from_text(
      "# leading comment\n"
      "; another\n"
      "[experiment]\n"
      "timing = yes   # trailing\n"
      "seed = 7 ; trailing\n");
  CHECK(cfg.timing);
  CHECK(cfg.seed == 7);
  CHECK(cfg.arrivals.seed == 7);
  CHECK_FALSE(from_text("[experiment]\ntiming = off\n").timing);
  CHECK(from_text("[experiment]\ntiming = 1\n").timing);
}

TEST_CASE("scalar per-core values broadcast and cores rebuilds the platform") {
  const auto cfg = from_text("[platform]\ncores = 2\nc_th = 3\ncoupling = 0.1\n");
  CHECK(cfg.platform.cores() == 2);
  CHECK(cfg.platform.thermal.r_th == sim::default_platform(2).thermal.r_th);
  CHECK(cfg.platform.thermal.c_th == std::vector<double>{3.0, 3.0});
  CHECK(cfg.platform.thermal.coupling == std::vector<double>{0.0, 0.1, 0.1, 0.0});
}

TEST_CASE("name defaults to the agent name") {
  CHECK(from_text("[agent]\nname = ltb\n").name == "ltb");
  CHECK(from_text("[experiment]\nname = x\n[agent]\nname = ltb\n").name == "x");
}

TEST_CASE("taskset files resolve relative to the config and profiles selects") {
  test::TempDir dir("config_taskset");
  dir.write("sets/two.ini", "[taskset.a]\nwork = 1\nutil_demand = 0.5\n\n[taskset.b]\nwork = 2\nutil_demand = 1\nlatency_constraint = 3\n");
  dir.write("exp/run.cfg", "[arrivals]\ntaskset = ../sets/two.ini\n");
  const auto cfg = load_config(dir / "exp/run.cfg");
  REQUIRE(cfg.arrivals.taskset.size() == 2);
  CHECK(cfg.arrivals.taskset[0] == workload::TaskProfile{"a", 1.0, 0.5, std::nullopt});
  CHECK(cfg.arrivals.taskset[1] == workload::TaskProfile{"b", 2.0, 1.0, 3.0});

  dir.write("exp/pick.cfg", "[arrivals]\ntaskset = ../sets/two.ini\nprofiles = b\n");
  const auto picked = load_config(dir / "exp/pick.cfg");
  REQUIRE(picked.arrivals.taskset.size() == 1);
  CHECK(picked.arrivals.taskset[0].name == "b");

  dir.write("exp/dup.cfg", "[arrivals]\ntaskset = ../sets/two.ini\n\n[taskset.a]\nwork = 1\nutil_demand = 1\n");
  auto [kind, msg] = error_of([&] { load_config(dir / "exp/dup.cfg"); });
  CHECK(kind == ErrorKind::kValidation);
  CHECK(contains(msg, "duplicate"));
}

TEST_CASE("inline taskset sections replace the default set") {
  const auto cfg = from_text("[taskset.only]\nwork = 2\nutil_demand = 0.25\n");
  REQUIRE(cfg.arrivals.taskset.size() == 1);
  CHECK(cfg.arrivals.taskset[0].name == "only");
}

TEST_CASE("describe output parses back to the same config") {
  auto cfg = harness::default_experiment();
  CHECK(from_text(describe(cfg)) == cfg);

  cfg = from_text(
      "[experiment]\nname = x\nseed = 9\ntiming = true\n[platform]\ncores = 3\nsensor_noise = 0.25\nleakage = 0.01\n"
      "[agent]\nname = ltb\nreward = ternary\nstate = freq_util\nepsilon = 0.2\nreward_temps = raw\n"
      "[arrivals]\nprofiles = canneal, facesim\n");
  CHECK(from_text(describe(cfg)) == cfg);
}

TEST_CASE("sweep expansion: cartesian product, last key fastest") {
  const auto doc = IniDocument::parse(
      "[arrivals]\ntotal_releases = 10\n[sweep]\nagent.alpha = 0.2, 0.5\nagent.gamma = 0, 0.5, 0.9\n", "s.cfg");
  const auto points = expand_sweep(doc);
  REQUIRE(points.size() == 6);
  const double alphas[] = {0.2, 0.2, 0.2, 0.5, 0.5, 0.5};
  const double gammas[] = {0.0, 0.5, 0.9, 0.0, 0.5, 0.9};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(points[i].config.agent.hyper.alpha == alphas[i]);
    CHECK(points[i].config.agent.hyper.gamma == gammas[i]);
    CHECK(points[i].config.arrivals.total_releases == 10);
  }
  CHECK(points[0].label == "alpha=0.2_gamma=0");
  CHECK(points[0].config.name == "releta__alpha=0.2_gamma=0");
  CHECK(points[5].overrides == std::vector<std::pair<std::string, std::string>>{{"agent.alpha", "0.5"},
                                                                                 {"agent.gamma", "0.9"}});
}

TEST_CASE("a document without sweep yields one point") {
  const auto points = expand_sweep(IniDocument::parse("[agent]\nname = linux\n"));
  REQUIRE(points.size() == 1);
  CHECK(points[0].label.empty());
  CHECK(points[0].config.name == "linux");
}

TEST_CASE("malformed sweep entries") {
  CHECK(error_of([] { expand_sweep(IniDocument::parse("[sweep]\nalpha = 1\n")); }).first == ErrorKind::kParse);
  auto [kind, msg] = error_of([] { expand_sweep(IniDocument::parse("[sweep]\nagent.gamma = 0.5, 2\n")); });
  CHECK(kind == ErrorKind::kValidation);
  CHECK(contains(msg, "gamma"));
}
