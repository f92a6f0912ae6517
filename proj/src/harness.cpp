#include "releta/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <deque>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "releta/error.hpp"
#include "releta/ini.hpp"
#include "releta/rng.hpp"

namespace releta::harness {

namespace {

constexpr std::uint64_t kAgentStream = 1;
constexpr std::uint64_t kSensorStream = 2;
// Hard stop for draining tasks after the last release.
constexpr std::uint64_t kDrainTickLimit = 50'000'000;

std::uint64_t tick_of(double time, double dt) {
  return static_cast<std::uint64_t>(std::ceil(time / dt - 1e-9));
}

struct Pending {
  std::size_t release = 0;
  std::uint64_t due_tick = 0;
  std::uint64_t task = 0;
  agents::Decision decision;
};

using Clock = std::chrono::steady_clock;

double micros(Clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); }

}  // namespace

void validate(const ExperimentConfig& cfg) {
  sim::validate(cfg.platform);
  workload::validate(cfg.arrivals);
  agents::validate(cfg.agent);
  require(cfg.settle_ticks >= 1, ErrorKind::kValidation, "settle_ticks: must be >= 1");
  require(!cfg.name.empty(), ErrorKind::kValidation, "name: must not be empty");
}

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.platform = sim::default_platform(4);
  cfg.arrivals.taskset = workload::default_taskset();
  cfg.arrivals.seed = cfg.seed;
  return cfg;
}

std::optional<double> RunResult::violation_rate() const {
  std::size_t constrained = 0;
  std::size_t missed = 0;
  for (const auto& v : violated) {
    if (!v) continue;
    ++constrained;
    if (*v) ++missed;
  }
  if (constrained == 0) return std::nullopt;
  return 100.0 * static_cast<double>(missed) / static_cast<double>(constrained);
}

RunResult run_episode(const ExperimentConfig& cfg, const DecisionHook& hook) {
  validate(cfg);
  workload::ArrivalConfig arrivals = cfg.arrivals;
  arrivals.seed = cfg.seed;
  const workload::ArrivalTrace trace = workload::generate_trace(arrivals);
  const std::size_t releases = trace.times.size();
  const double dt = cfg.platform.thermal.dt;

  workload::Simulator sim(cfg.platform, mix_seed(cfg.seed, kSensorStream));
  std::unique_ptr<agents::Agent> agent = agents::make_agent(cfg.agent, cfg.platform, mix_seed(cfg.seed, kAgentStream));

  RunResult r;
  r.name = cfg.name;
  r.agent = cfg.agent.name;
  r.peak_temp.assign(releases, 0.0);
  r.mean_temp.assign(releases, 0.0);
  r.reward.assign(releases, 0.0);
  r.action.assign(releases, 0);
  r.explored.assign(releases, false);
  if (cfg.timing) r.overhead_us.assign(releases, 0.0);
  std::vector<std::uint64_t> task_of(releases, 0);

  std::deque<Pending> pending;
  std::size_t next = 0;
  std::uint64_t drain_ticks = 0;

  for (;;) {
    const std::uint64_t now = sim.tick_count();
    const bool feedback_due = !pending.empty() && pending.front().due_tick <= now;
    const bool arrival_due = next < releases && tick_of(trace.times[next], dt) <= now;

    if (feedback_due || arrival_due) {
      const std::vector<double> sensors = sim.read_sensors();
      const std::vector<double> raw = sim.chip().temperatures();

      while (!pending.empty() && pending.front().due_tick <= now) {
        Pending p = std::move(pending.front());
        pending.pop_front();
        const agents::Observation obs{sim, sensors, raw, nullptr};
        const workload::TaskInstance& inst = sim.instance(p.task);
        double latency = 0.0;
        if (auto l = inst.latency()) {
          latency = *l;
        } else {
          const auto& core = sim.chip().core(*inst.core);
          latency = sim.time() - inst.arrival + (inst.work - inst.work_done) / (core.freq * inst.util_demand);
        }
        const agents::Feedback fb{p.decision, obs, latency,
                                  cfg.arrivals.taskset[inst.profile].latency_constraint};
        const auto t0 = Clock::now();
        try {
          r.reward[p.release] = agent->observe(fb);
        } catch (const Error& e) {
          fail(e.kind(), "release " + std::to_string(p.release) + ": " + e.what());
        }
        if (cfg.timing) r.overhead_us[p.release] += micros(Clock::now() - t0);
        r.peak_temp[p.release] = *std::max_element(sensors.begin(), sensors.end());
        r.mean_temp[p.release] = agents::mean(sensors);
      }

      while (next < releases && tick_of(trace.times[next], dt) <= now) {
        const std::size_t profile = trace.profiles[next];
        const workload::TaskProfile& task = cfg.arrivals.taskset[profile];
        const agents::Observation obs{sim, sensors, raw, &task};
        const auto t0 = Clock::now();
        agents::Decision d;
        try {
          d = agent->decide(obs);
        } catch (const Error& e) {
          fail(e.kind(), "release " + std::to_string(next) + ": " + e.what());
        }
        if (cfg.timing) r.overhead_us[next] = micros(Clock::now() - t0);
        if (hook) hook(next, sim, d);
        r.action[next] = d.core;
        r.explored[next] = d.explored;
        task_of[next] = sim.release(task, profile, trace.times[next], d.core);
        if (d.pstate) sim.pin_frequency(d.core, cfg.platform.governor.p_states.at(*d.pstate));
        pending.push_back(Pending{next, now + cfg.settle_ticks, task_of[next], std::move(d)});
        ++next;
      }
    }

    if (next == releases && pending.empty()) {
      if (sim.active_tasks() == 0) break;
      require(++drain_ticks < kDrainTickLimit, ErrorKind::kRuntime, "run_episode: tasks never drained");
    }
    sim.tick();
  }

  r.latency.resize(releases);
  r.violated.resize(releases);
  for (std::size_t k = 0; k < releases; ++k) {
    const auto& inst = sim.instance(task_of[k]);
    r.latency[k] = inst.latency();
    const auto& bound = cfg.arrivals.taskset[inst.profile].latency_constraint;
    if (bound) r.violated[k] = *r.latency[k] > *bound;
  }
  if (cfg.timing) {
    // Timer granularity can round a sub-nanosecond decision to zero.
    for (double& us : r.overhead_us) us = std::max(us, 1e-3);
  }
  if (const auto* net = agent->network()) r.final_network = *net;
  r.end_time = sim.time();
  return r;
}

double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  if (end <= begin) return 0.0;
  double s = 0.0;
  for (std::size_t k = begin; k < end; ++k) s += v[k];
  return s / static_cast<double>(end - begin);
}

ComparisonSummary compare(const std::vector<ExperimentConfig>& cfgs, const std::vector<RunResult>& results) {
  require(!cfgs.empty() && cfgs.size() == results.size(), ErrorKind::kRuntime,
          "compare: one result per config is required");
  const ExperimentConfig& ref = cfgs.front();
  workload::ArrivalConfig ref_arrivals = ref.arrivals;
  ref_arrivals.seed = ref.seed;
  const auto ref_trace = workload::generate_trace(ref_arrivals);
  for (std::size_t i = 1; i < cfgs.size(); ++i) {
    workload::ArrivalConfig a = cfgs[i].arrivals;
    a.seed = cfgs[i].seed;
    require(a == ref_arrivals && workload::generate_trace(a) == ref_trace, ErrorKind::kRuntime,
            "compare: '" + cfgs[i].name + "' has a different arrival sequence than '" + ref.name + "'");
    require(cfgs[i].platform == ref.platform && cfgs[i].settle_ticks == ref.settle_ticks, ErrorKind::kRuntime,
            "compare: '" + cfgs[i].name + "' runs on a different platform than '" + ref.name + "'");
  }

  ComparisonSummary s;
  const std::size_t n = results.front().releases();
  s.window_begin = n / 2;
  s.window_end = n;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const RunResult& r = results[i];
    PolicyRow row;
    row.name = r.name;
    row.agent = r.agent;
    row.mean_peak = window_mean(r.peak_temp, s.window_begin, s.window_end);
    double sum = 0.0;
    double mx = -INFINITY;
    for (std::size_t k = s.window_begin; k < s.window_end; ++k) {
      const double d = r.peak_temp[k] - results.front().peak_temp[k];
      sum += d;
      mx = std::max(mx, d);
    }
    const std::size_t w = s.window_end - s.window_begin;
    row.avg_diff = w ? sum / static_cast<double>(w) : 0.0;
    row.max_diff = w ? mx : 0.0;
    row.violation_rate = r.violation_rate();
    if (!r.overhead_us.empty()) {
      row.mean_overhead_ms = window_mean(r.overhead_us, 0, r.overhead_us.size()) / 1000.0;
      row.max_overhead_ms = *std::max_element(r.overhead_us.begin(), r.overhead_us.end()) / 1000.0;
    }
    s.rows.push_back(std::move(row));
  }
  return s;
}

std::vector<RunResult> run_all(const std::vector<ExperimentConfig>& cfgs, unsigned threads) {
  std::vector<RunResult> results(cfgs.size());
  std::vector<std::exception_ptr> errors(cfgs.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < cfgs.size(); i = cursor++) {
      try {
        results[i] = run_episode(cfgs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfgs.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

Comparison compare(const std::vector<ExperimentConfig>& cfgs, unsigned threads) {
  Comparison c;
  c.results = run_all(cfgs, threads);
  c.summary = compare(cfgs, c.results);
  return c;
}

Overhead measure_overhead(const agents::Agent& agent, const workload::Simulator& sim, std::size_t repetitions) {
  require(repetitions >= 100, ErrorKind::kValidation, "repetitions: must be >= 100");
  auto probe = agent.clone();
  workload::Simulator env = sim;
  const std::vector<double> sensors = env.read_sensors();
  const std::vector<double> raw = env.chip().temperatures();
  const agents::Observation obs{env, sensors, raw, nullptr};
  Overhead o;
  double total = 0.0;
  for (std::size_t k = 0; k < repetitions; ++k) {
    const auto t0 = Clock::now();
    const agents::Decision d = probe->decide(obs);
    probe->observe(agents::Feedback{d, obs, 0.0, std::nullopt});
    const double us = std::max(micros(Clock::now() - t0), 1e-3);
    total += us;
    o.max_us = std::max(o.max_us, us);
  }
  o.mean_us = total / static_cast<double>(repetitions);
  return o;
}

Overhead measure_overhead(const ExperimentConfig& cfg, std::size_t repetitions) {
  validate(cfg);
  workload::Simulator sim(cfg.platform, mix_seed(cfg.seed, kSensorStream));
  // A representative mid-load state: half the cores busy.
  for (std::size_t c = 0; c < sim.cores(); c += 2) sim.release(cfg.arrivals.taskset.front(), 0, 0.0, c);
  for (std::size_t t = 0; t < cfg.settle_ticks; ++t) sim.tick();
  auto agent = agents::make_agent(cfg.agent, cfg.platform, mix_seed(cfg.seed, kAgentStream));
  return measure_overhead(*agent, sim, repetitions);
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const RunResult& r) {
  out << "release_index,peak_temp,mean_temp,reward,action,latency,violated,overhead_us\n";
  for (std::size_t k = 0; k < r.releases(); ++k) {
    out << k << ',' << format_number(r.peak_temp[k]) << ',' << format_number(r.mean_temp[k]) << ','
        << format_number(r.reward[k]) << ',' << r.action[k] << ',';
    if (k < r.latency.size() && r.latency[k]) out << format_number(*r.latency[k]);
    out << ',';
    if (k < r.violated.size() && r.violated[k]) out << (*r.violated[k] ? 1 : 0);
    out << ',';
    if (k < r.overhead_us.size()) out << format_number(r.overhead_us[k]);
    out << '\n';
  }
}

void emit_csv(const RunResult& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kRuntime, "cannot write " + path.string());
  write_csv(out, r);
  out.flush();
  if (!out) fail(ErrorKind::kRuntime, "write failed: " + path.string());
}

RunResult read_csv(std::istream& in, const std::string& origin) {
  RunResult r;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) ||
      line != "release_index,peak_temp,mean_temp,reward,action,latency,violated,overhead_us")
    fail(ErrorKind::kParse, origin + ":1: unexpected header");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const auto comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    const std::string where = origin + ":" + std::to_string(line_no);
    if (f.size() != 8) fail(ErrorKind::kParse, where + ": expected 8 columns");
    if (parse_uint(f[0], where) != r.releases()) fail(ErrorKind::kParse, where + ": release_index out of sequence");
    r.peak_temp.push_back(parse_double(f[1], where));
    r.mean_temp.push_back(parse_double(f[2], where));
    r.reward.push_back(parse_double(f[3], where));
    r.action.push_back(parse_uint(f[4], where));
    r.explored.push_back(false);
    r.latency.push_back(f[5].empty() ? std::nullopt : std::optional<double>(parse_double(f[5], where)));
    r.violated.push_back(f[6].empty() ? std::nullopt : std::optional<bool>(parse_bool(f[6], where)));
    if (!f[7].empty()) r.overhead_us.push_back(parse_double(f[7], where));
  }
  return r;
}

namespace {

std::string opt_fixed(const std::optional<double>& v, int prec) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << *v;
  return os.str();
}

}  // namespace

void write_summary_text(std::ostream& out, const ComparisonSummary& s) {
  std::size_t name_w = 16;
  std::size_t agent_w = 12;
  for (const auto& row : s.rows) {
    name_w = std::max(name_w, row.name.size() + 2);
    agent_w = std::max(agent_w, row.agent.size() + 2);
  }
  const auto nw = static_cast<int>(name_w);
  const auto aw = static_cast<int>(agent_w);
  out << "window: releases [" << s.window_begin << ", " << s.window_end << ")\n";
  out << std::left << std::setw(nw) << "policy" << std::setw(aw) << "agent" << std::right << std::setw(12)
      << "mean_peak" << std::setw(10) << "avg_diff" << std::setw(10) << "max_diff" << std::setw(12) << "violation%"
      << std::setw(14) << "mean_ovh_ms" << std::setw(13) << "max_ovh_ms" << "\n";
  for (const auto& row : s.rows) {
    out << std::left << std::setw(nw) << row.name << std::setw(aw) << row.agent << std::right << std::setw(12)
        << opt_fixed(row.mean_peak, 3) << std::setw(10) << opt_fixed(row.avg_diff, 3) << std::setw(10)
        << opt_fixed(row.max_diff, 3) << std::setw(12) << opt_fixed(row.violation_rate, 2) << std::setw(14)
        << opt_fixed(row.mean_overhead_ms, 4) << std::setw(13) << opt_fixed(row.max_overhead_ms, 4) << "\n";
  }
}

void write_summary_csv(std::ostream& out, const ComparisonSummary& s) {
  out << "policy,agent,mean_peak,avg_diff,max_diff,violation_rate,mean_overhead_ms,max_overhead_ms\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& row : s.rows) {
    out << row.name << ',' << row.agent << ',' << format_number(row.mean_peak) << ',' << format_number(row.avg_diff)
        << ',' << format_number(row.max_diff) << ',' << opt(row.violation_rate) << ','
        << opt(row.mean_overhead_ms) << ',' << opt(row.max_overhead_ms) << '\n';
  }
}

}  // namespace releta::harness
