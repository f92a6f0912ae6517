#include "releta/config.hpp"

#include <algorithm>
#include <sstream>

#include "releta/error.hpp"

namespace releta::config {

namespace {

std::string where(const IniDocument& doc, const IniEntry& e) {
  return doc.origin() + ":" + std::to_string(e.line) + ": " + e.key;
}

[[noreturn]] void unknown_key(const IniDocument& doc, const IniEntry& e, const std::string& section) {
  fail(ErrorKind::kParse, where(doc, e) + ": unknown key in [" + section + "]");
}

std::vector<double> per_core(const std::vector<double>& values, std::size_t cores, const std::string& key) {
  if (values.size() == 1) return std::vector<double>(cores, values.front());
  require(values.size() == cores, ErrorKind::kValidation,
          key + ": expected 1 or " + std::to_string(cores) + " values, got " + std::to_string(values.size()));
  return values;
}

void apply_experiment(const IniDocument& doc, harness::ExperimentConfig& cfg) {
  const IniSection* s = doc.find("experiment");
  if (!s) return;
  for (const auto& e : s->entries) {
    if (e.key == "name") cfg.name = e.value;
    else if (e.key == "seed") cfg.seed = parse_uint(e.value, where(doc, e));
    else if (e.key == "settle_ticks") cfg.settle_ticks = parse_uint(e.value, where(doc, e));
    else if (e.key == "timing") cfg.timing = parse_bool(e.value, where(doc, e));
    else if (e.key == "output") cfg.output_path = e.value;
    else unknown_key(doc, e, "experiment");
  }
}

void apply_platform(const IniDocument& doc, harness::ExperimentConfig& cfg) {
  const IniSection* s = doc.find("platform");
  if (!s) return;
  std::size_t cores = cfg.platform.cores();
  if (const IniEntry* e = s->find("cores")) {
    cores = parse_uint(e->value, where(doc, *e));
    require(cores >= 1, ErrorKind::kValidation, "cores: must be >= 1");
    cfg.platform = sim::default_platform(cores);
  }
  auto& p = cfg.platform;
  for (const auto& e : s->entries) {
    const std::string w = where(doc, e);
    if (e.key == "cores") continue;
    if (e.key == "ambient") p.thermal.ambient_temp = parse_double(e.value, w);
    else if (e.key == "r_th") p.thermal.r_th = per_core(parse_double_list(e.value, w), cores, "r_th");
    else if (e.key == "c_th") p.thermal.c_th = per_core(parse_double_list(e.value, w), cores, "c_th");
    else if (e.key == "coupling") {
      const auto v = parse_double_list(e.value, w);
      if (v.size() == 1) {
        p.thermal.coupling = sim::uniform_coupling(cores, v.front());
      } else {
        require(v.size() == cores * cores, ErrorKind::kValidation,
                "coupling: expected 1 or " + std::to_string(cores * cores) + " values");
        p.thermal.coupling = v;
      }
    } else if (e.key == "dt") p.thermal.dt = parse_double(e.value, w);
    else if (e.key == "k_dyn") p.power.k_dyn = parse_double(e.value, w);
    else if (e.key == "power_exp") p.power.exp = parse_double(e.value, w);
    else if (e.key == "p_static") p.power.p_static = parse_double(e.value, w);
    else if (e.key == "leakage") p.power.leakage = parse_double(e.value, w);
    else if (e.key == "p_states") p.governor.p_states = parse_double_list(e.value, w);
    else if (e.key == "up_threshold") p.governor.up_threshold = parse_double(e.value, w);
    else if (e.key == "sensor_resolution") p.sensor.resolution = parse_double(e.value, w);
    else if (e.key == "sensor_noise") p.sensor.noise_std = parse_double(e.value, w);
    else unknown_key(doc, e, "platform");
  }
}

void apply_arrivals(const IniDocument& doc, const std::filesystem::path& base_dir, harness::ExperimentConfig& cfg) {
  auto& a = cfg.arrivals;
  std::vector<workload::TaskProfile> profiles;
  std::vector<std::string> selection;
  if (const IniSection* s = doc.find("arrivals")) {
    for (const auto& e : s->entries) {
      const std::string w = where(doc, e);
      if (e.key == "interval_min") a.interval_min = parse_double(e.value, w);
      else if (e.key == "interval_max") a.interval_max = parse_double(e.value, w);
      else if (e.key == "total_releases") a.total_releases = parse_uint(e.value, w);
      else if (e.key == "taskset") {
        std::filesystem::path path = e.value;
        if (path.is_relative()) path = base_dir / path;
        workload::read_profiles(IniDocument::load(path), profiles);
      } else if (e.key == "profiles") {
        selection = split_list(e.value);
      } else {
        unknown_key(doc, e, "arrivals");
      }
    }
  }
  workload::read_profiles(doc, profiles);
  if (profiles.empty()) profiles = workload::default_taskset();
  if (!selection.empty()) {
    std::vector<workload::TaskProfile> picked;
    for (const auto& name : selection) {
      auto it = std::find_if(profiles.begin(), profiles.end(), [&](const auto& p) { return p.name == name; });
      require(it != profiles.end(), ErrorKind::kValidation, "profiles: unknown profile '" + name + "'");
      picked.push_back(*it);
    }
    profiles = std::move(picked);
  }
  for (std::size_t i = 0; i < profiles.size(); ++i)
    for (std::size_t j = i + 1; j < profiles.size(); ++j)
      require(profiles[i].name != profiles[j].name, ErrorKind::kValidation,
              "taskset: duplicate profile '" + profiles[i].name + "'");
  a.taskset = std::move(profiles);
}

void apply_agent(const IniDocument& doc, harness::ExperimentConfig& cfg) {
  const IniSection* s = doc.find("agent");
  if (!s) return;
  auto& g = cfg.agent;
  auto& h = g.hyper;
  for (const auto& e : s->entries) {
    const std::string w = where(doc, e);
    if (e.key == "name") g.name = e.value;
    else if (e.key == "alpha") h.alpha = parse_double(e.value, w);
    else if (e.key == "gamma") h.gamma = parse_double(e.value, w);
    else if (e.key == "eps_start") h.eps_start = parse_double(e.value, w);
    else if (e.key == "eps_end") h.eps_end = parse_double(e.value, w);
    else if (e.key == "eps_decay_steps") h.eps_decay_steps = parse_uint(e.value, w);
    else if (e.key == "step_rule") h.step_rule = qfunc::step_rule_from_string(e.value);
    else if (e.key == "activation") g.activation = qfunc::activation_from_string(e.value);
    else if (e.key == "init_scale") g.init_scale = parse_double(e.value, w);
    else if (e.key == "reward") g.reward = agents::reward_variant_from_string(e.value);
    else if (e.key == "state") g.state = agents::state_model_from_string(e.value);
    else if (e.key == "t_em") g.t_em = parse_double(e.value, w);
    else if (e.key == "reward_temps") {
      if (e.value == "sensor") g.reward_temps = agents::TempSource::kSensor;
      else if (e.value == "raw") g.reward_temps = agents::TempSource::kRaw;
      else fail(ErrorKind::kValidation, "reward_temps: expected sensor or raw, got '" + e.value + "'");
    } else if (e.key == "replay_capacity") g.replay_capacity = parse_uint(e.value, w);
    else if (e.key == "minibatch") g.minibatch = parse_uint(e.value, w);
    else if (e.key == "sync_period") g.sync_period = parse_uint(e.value, w);
    else if (e.key == "weight_temp") g.weight_temp = parse_double(e.value, w);
    else if (e.key == "weight_latency") g.weight_latency = parse_double(e.value, w);
    else if (e.key == "epsilon") g.epsilon_override = parse_double(e.value, w);
    else unknown_key(doc, e, "agent");
  }
}

void check_sections(const IniDocument& doc) {
  static const std::vector<std::string> known = {"", "experiment", "platform", "arrivals", "agent", "sweep"};
  for (const auto& s : doc.sections()) {
    if (s.name.rfind("taskset.", 0) == 0) continue;
    if (std::find(known.begin(), known.end(), s.name) == known.end())
      fail(ErrorKind::kParse, doc.origin() + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    if (s.name.empty() && !s.entries.empty())
      fail(ErrorKind::kParse, where(doc, s.entries.front()) + ": key outside of any section");
  }
}

}  // namespace

harness::ExperimentConfig config_from_ini(const IniDocument& doc, const std::filesystem::path& base_dir) {
  check_sections(doc);
  harness::ExperimentConfig cfg = harness::default_experiment();
  apply_experiment(doc, cfg);
  apply_platform(doc, cfg);
  apply_arrivals(doc, base_dir, cfg);
  apply_agent(doc, cfg);
  const IniSection* exp = doc.find("experiment");
  if (!exp || !exp->find("name")) cfg.name = cfg.agent.name;
  cfg.arrivals.seed = cfg.seed;
  harness::validate(cfg);
  return cfg;
}

harness::ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_ini(IniDocument::load(path), path.parent_path());
}

std::vector<SweepPoint> expand_sweep(const IniDocument& doc, const std::filesystem::path& base_dir) {
  struct Axis {
    std::string section;
    std::string key;
    std::vector<std::string> values;
  };
  std::vector<Axis> axes;
  if (const IniSection* s = doc.find("sweep")) {
    for (const auto& e : s->entries) {
      const auto dot = e.key.find('.');
      if (dot == std::string::npos)
        fail(ErrorKind::kParse, where(doc, e) + ": sweep keys take the form section.key");
      Axis ax{e.key.substr(0, dot), e.key.substr(dot + 1), split_list(e.value)};
      if (ax.values.empty()) fail(ErrorKind::kParse, where(doc, e) + ": sweep needs at least one value");
      axes.push_back(std::move(ax));
    }
  }
  IniDocument base = doc;
  std::vector<SweepPoint> points;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    IniDocument variant = base;
    SweepPoint pt;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& v = axes[a].values[idx[a]];
      variant.set(axes[a].section, axes[a].key, v);
      pt.overrides.emplace_back(axes[a].section + "." + axes[a].key, v);
      if (!pt.label.empty()) pt.label += "_";
      pt.label += axes[a].key + "=" + v;
    }
    pt.config = config_from_ini(variant, base_dir);
    if (!pt.label.empty()) pt.config.name += "__" + pt.label;
    points.push_back(std::move(pt));

    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return points;
    }
    if (axes.empty()) return points;
  }
}

std::string describe(const harness::ExperimentConfig& cfg) {
  std::ostringstream os;
  const auto& p = cfg.platform;
  auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ", ") + harness::format_number(x);
    return s;
  };
  os << "[experiment]\nname = " << cfg.name << "\nseed = " << cfg.seed << "\nsettle_ticks = " << cfg.settle_ticks
     << "\ntiming = " << (cfg.timing ? "true" : "false") << "\n\n";
  os << "[platform]\ncores = " << p.cores() << "\nambient = " << harness::format_number(p.thermal.ambient_temp)
     << "\nr_th = " << list(p.thermal.r_th) << "\nc_th = " << list(p.thermal.c_th)
     << "\ncoupling = " << list(p.thermal.coupling) << "\ndt = " << harness::format_number(p.thermal.dt)
     << "\nk_dyn = " << harness::format_number(p.power.k_dyn) << "\npower_exp = " << harness::format_number(p.power.exp)
     << "\np_static = " << harness::format_number(p.power.p_static)
     << "\nleakage = " << harness::format_number(p.power.leakage) << "\np_states = " << list(p.governor.p_states)
     << "\nup_threshold = " << harness::format_number(p.governor.up_threshold)
     << "\nsensor_resolution = " << harness::format_number(p.sensor.resolution)
     << "\nsensor_noise = " << harness::format_number(p.sensor.noise_std) << "\n\n";
  const auto& a = cfg.arrivals;
  os << "[arrivals]\ninterval_min = " << harness::format_number(a.interval_min)
     << "\ninterval_max = " << harness::format_number(a.interval_max) << "\ntotal_releases = " << a.total_releases
     << "\n\n";
  const auto& g = cfg.agent;
  os << "[agent]\nname = " << g.name << "\nalpha = " << harness::format_number(g.hyper.alpha)
     << "\ngamma = " << harness::format_number(g.hyper.gamma)
     << "\neps_start = " << harness::format_number(g.hyper.eps_start)
     << "\neps_end = " << harness::format_number(g.hyper.eps_end) << "\neps_decay_steps = " << g.hyper.eps_decay_steps
     << "\nstep_rule = " << qfunc::to_string(g.hyper.step_rule) << "\nactivation = " << qfunc::to_string(g.activation)
     << "\ninit_scale = " << harness::format_number(g.init_scale);
  if (g.reward) os << "\nreward = " << agents::to_string(*g.reward);
  if (g.state) os << "\nstate = " << agents::to_string(*g.state);
  os << "\nt_em = " << harness::format_number(g.t_em)
     << "\nreward_temps = " << (g.reward_temps == agents::TempSource::kSensor ? "sensor" : "raw")
     << "\nreplay_capacity = " << g.replay_capacity << "\nminibatch = " << g.minibatch
     << "\nsync_period = " << g.sync_period << "\nweight_temp = " << harness::format_number(g.weight_temp)
     << "\nweight_latency = " << harness::format_number(g.weight_latency);
  if (g.epsilon_override) os << "\nepsilon = " << harness::format_number(*g.epsilon_override);
  os << "\n";
  for (const auto& t : a.taskset) {
    os << "\n[taskset." << t.name << "]\nwork = " << harness::format_number(t.work)
       << "\nutil_demand = " << harness::format_number(t.util_demand) << "\n";
    if (t.latency_constraint) os << "latency_constraint = " << harness::format_number(*t.latency_constraint) << "\n";
  }
  return os.str();
}

}  // namespace releta::config
