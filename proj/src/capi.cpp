#include "releta/releta.h"

#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "releta/config.hpp"
#include "releta/error.hpp"
#include "releta/harness.hpp"

struct releta_config {
  releta::harness::ExperimentConfig cfg;
  releta::IniDocument doc;  // kept for sweep expansion
  std::filesystem::path base_dir;
  std::string scratch;
};

struct releta_result {
  releta::harness::RunResult result;
};

struct releta_comparison {
  std::vector<releta_result> results;
  releta::harness::ComparisonSummary summary;
  std::string text;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
releta_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RELETA_OK;
  } catch (const releta::Error& e) {
    g_last_error = e.what();
    return static_cast<releta_status>(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return RELETA_ERR_RUNTIME;
}

template <typename T>
T& deref(T* p, const char* what) {
  if (p == nullptr) releta::fail(releta::ErrorKind::kUsage, std::string(what) + " must not be null");
  return *p;
}

const char* need(const char* s, const char* what) {
  if (s == nullptr) releta::fail(releta::ErrorKind::kUsage, std::string(what) + " must not be null");
  return s;
}

void check_release(const releta_result* r, size_t k) {
  if (k >= deref(r, "result").result.releases())
    releta::fail(releta::ErrorKind::kUsage, "release index " + std::to_string(k) + " out of range");
}

releta_config* make_config(releta::IniDocument doc, std::filesystem::path base_dir) {
  auto cfg = releta::config::config_from_ini(doc, base_dir);
  return new releta_config{std::move(cfg), std::move(doc), std::move(base_dir), {}};
}

std::vector<releta::harness::ExperimentConfig> gather(const releta_config* const* cfgs, size_t count) {
  if (count == 0) releta::fail(releta::ErrorKind::kUsage, "at least one config is required");
  deref(cfgs, "cfgs");
  std::vector<releta::harness::ExperimentConfig> out;
  for (size_t i = 0; i < count; ++i) out.push_back(deref(cfgs[i], "cfgs[i]").cfg);
  return out;
}

}  // namespace

extern "C" {

const char* releta_version(void) { return "0.1.0"; }

const char* releta_last_error(void) { return g_last_error.c_str(); }

releta_status releta_config_load(const char* path, releta_config** out) {
  return guarded([&] {
    deref(out, "out") = nullptr;
    const std::filesystem::path p(need(path, "path"));
    *out = make_config(releta::IniDocument::load(p), p.parent_path());
  });
}

releta_status releta_config_parse(const char* text, const char* base_dir, releta_config** out) {
  return guarded([&] {
    deref(out, "out") = nullptr;
    *out = make_config(releta::IniDocument::parse(need(text, "text")), base_dir ? base_dir : "");
  });
}

releta_status releta_config_default(releta_config** out) {
  return guarded([&] {
    deref(out, "out") = new releta_config{releta::harness::default_experiment(), {}, {}, {}};
  });
}

releta_status releta_config_clone(const releta_config* cfg, releta_config** out) {
  return guarded([&] { deref(out, "out") = new releta_config(deref(cfg, "cfg")); });
}

void releta_config_free(releta_config* cfg) { delete cfg; }

releta_status releta_config_set_seed(releta_config* cfg, uint64_t seed) {
  return guarded([&] {
    auto& c = deref(cfg, "cfg");
    c.cfg.seed = seed;
    c.cfg.arrivals.seed = seed;
    c.doc.set("experiment", "seed", std::to_string(seed));
  });
}

releta_status releta_config_seed(const releta_config* cfg, uint64_t* out) {
  return guarded([&] { deref(out, "out") = deref(cfg, "cfg").cfg.seed; });
}

releta_status releta_config_set_timing(releta_config* cfg, int enabled) {
  return guarded([&] {
    auto& c = deref(cfg, "cfg");
    c.cfg.timing = enabled != 0;
    c.doc.set("experiment", "timing", enabled ? "true" : "false");
  });
}

releta_status releta_config_name(const releta_config* cfg, const char** out) {
  return guarded([&] { deref(out, "out") = deref(cfg, "cfg").cfg.name.c_str(); });
}

releta_status releta_config_agent(const releta_config* cfg, const char** out) {
  return guarded([&] { deref(out, "out") = deref(cfg, "cfg").cfg.agent.name.c_str(); });
}

releta_status releta_config_describe(const releta_config* cfg, const char** out) {
  return guarded([&] {
    auto& c = const_cast<releta_config&>(deref(cfg, "cfg"));
    c.scratch = releta::config::describe(c.cfg);
    deref(out, "out") = c.scratch.c_str();
  });
}

releta_status releta_config_releases(const releta_config* cfg, size_t* out) {
  return guarded([&] { deref(out, "out") = deref(cfg, "cfg").cfg.arrivals.total_releases; });
}

releta_status releta_config_sweep_size(const releta_config* cfg, size_t* out) {
  return guarded([&] {
    const auto& c = deref(cfg, "cfg");
    deref(out, "out") = releta::config::expand_sweep(c.doc, c.base_dir).size();
  });
}

releta_status releta_config_sweep_point(const releta_config* cfg, size_t index, releta_config** out) {
  return guarded([&] {
    deref(out, "out") = nullptr;
    const auto& c = deref(cfg, "cfg");
    auto points = releta::config::expand_sweep(c.doc, c.base_dir);
    if (index >= points.size()) releta::fail(releta::ErrorKind::kUsage, "sweep index out of range");
    releta::IniDocument doc = c.doc;
    for (const auto& [key, value] : points[index].overrides) {
      const auto dot = key.find('.');
      doc.set(key.substr(0, dot), key.substr(dot + 1), value);
    }
    *out = new releta_config{std::move(points[index].config), std::move(doc), c.base_dir, {}};
  });
}

releta_status releta_run(const releta_config* cfg, releta_result** out) {
  return guarded([&] {
    deref(out, "out") = nullptr;
    *out = new releta_result{releta::harness::run_episode(deref(cfg, "cfg").cfg)};
  });
}

void releta_result_free(releta_result* result) { delete result; }

releta_status releta_result_releases(const releta_result* r, size_t* out) {
  return guarded([&] { deref(out, "out") = deref(r, "result").result.releases(); });
}

releta_status releta_result_peak_temp(const releta_result* r, size_t release, double* out) {
  return guarded([&] {
    check_release(r, release);
    deref(out, "out") = r->result.peak_temp[release];
  });
}

releta_status releta_result_mean_temp(const releta_result* r, size_t release, double* out) {
  return guarded([&] {
    check_release(r, release);
    deref(out, "out") = r->result.mean_temp[release];
  });
}

releta_status releta_result_reward(const releta_result* r, size_t release, double* out) {
  return guarded([&] {
    check_release(r, release);
    deref(out, "out") = r->result.reward[release];
  });
}

releta_status releta_result_action(const releta_result* r, size_t release, size_t* out) {
  return guarded([&] {
    check_release(r, release);
    deref(out, "out") = r->result.action[release];
  });
}

releta_status releta_result_violation_rate(const releta_result* r, double* out, int* has_rate) {
  return guarded([&] {
    const auto rate = deref(r, "result").result.violation_rate();
    deref(has_rate, "has_rate") = rate ? 1 : 0;
    deref(out, "out") = rate.value_or(0.0);
  });
}

releta_status releta_result_converged_peak(const releta_result* r, double* out) {
  return guarded([&] {
    const auto& res = deref(r, "result").result;
    deref(out, "out") = releta::harness::window_mean(res.peak_temp, res.releases() / 2, res.releases());
  });
}

releta_status releta_result_write_csv(const releta_result* r, const char* path) {
  return guarded([&] { releta::harness::emit_csv(deref(r, "result").result, need(path, "path")); });
}

releta_status releta_result_write_checkpoint(const releta_result* r, const char* path) {
  return guarded([&] {
    const auto& res = deref(r, "result").result;
    if (!res.final_network)
      releta::fail(releta::ErrorKind::kUsage, "policy '" + res.agent + "' has no network to checkpoint");
    releta::qfunc::save_checkpoint(need(path, "path"), *res.final_network);
  });
}

releta_status releta_run_many(const releta_config* const* cfgs, size_t count, unsigned threads,
                              releta_result** results) {
  return guarded([&] {
    deref(results, "results");
    auto runs = releta::harness::run_all(gather(cfgs, count), threads);
    for (size_t i = 0; i < count; ++i) results[i] = new releta_result{std::move(runs[i])};
  });
}

releta_status releta_compare(const releta_config* const* cfgs, size_t count, unsigned threads,
                             releta_comparison** out) {
  return guarded([&] {
    deref(out, "out") = nullptr;
    auto cmp = releta::harness::compare(gather(cfgs, count), threads);
    auto c = std::make_unique<releta_comparison>();
    for (auto& r : cmp.results) c->results.push_back(releta_result{std::move(r)});
    c->summary = std::move(cmp.summary);
    std::ostringstream os;
    releta::harness::write_summary_text(os, c->summary);
    c->text = os.str();
    *out = c.release();
  });
}

void releta_comparison_free(releta_comparison* c) { delete c; }

releta_status releta_comparison_rows(const releta_comparison* c, size_t* out) {
  return guarded([&] { deref(out, "out") = deref(c, "comparison").summary.rows.size(); });
}

releta_status releta_comparison_row(const releta_comparison* c, size_t row, const char** name, double* mean_peak,
                                    double* avg_diff, double* max_diff) {
  return guarded([&] {
    const auto& rows = deref(c, "comparison").summary.rows;
    if (row >= rows.size()) releta::fail(releta::ErrorKind::kUsage, "row index out of range");
    if (name) *name = rows[row].name.c_str();
    if (mean_peak) *mean_peak = rows[row].mean_peak;
    if (avg_diff) *avg_diff = rows[row].avg_diff;
    if (max_diff) *max_diff = rows[row].max_diff;
  });
}

releta_status releta_comparison_result(const releta_comparison* c, size_t row, const releta_result** out) {
  return guarded([&] {
    const auto& results = deref(c, "comparison").results;
    if (row >= results.size()) releta::fail(releta::ErrorKind::kUsage, "row index out of range");
    deref(out, "out") = &results[row];
  });
}

releta_status releta_comparison_write_text(const releta_comparison* c, const char* path) {
  return guarded([&] {
    const auto& cmp = deref(c, "comparison");
    std::ofstream f(need(path, "path"), std::ios::binary);
    if (!f) releta::fail(releta::ErrorKind::kRuntime, std::string("cannot write ") + path);
    f << cmp.text;
    if (!f) releta::fail(releta::ErrorKind::kRuntime, std::string("write failed: ") + path);
  });
}

releta_status releta_comparison_write_csv(const releta_comparison* c, const char* path) {
  return guarded([&] {
    const auto& cmp = deref(c, "comparison");
    std::ofstream f(need(path, "path"), std::ios::binary);
    if (!f) releta::fail(releta::ErrorKind::kRuntime, std::string("cannot write ") + path);
    releta::harness::write_summary_csv(f, cmp.summary);
    if (!f) releta::fail(releta::ErrorKind::kRuntime, std::string("write failed: ") + path);
  });
}

releta_status releta_comparison_text(const releta_comparison* c, const char** out) {
  return guarded([&] { deref(out, "out") = deref(c, "comparison").text.c_str(); });
}

releta_status releta_overhead(const releta_config* cfg, size_t repetitions, double* mean_us, double* max_us) {
  return guarded([&] {
    const auto o = releta::harness::measure_overhead(deref(cfg, "cfg").cfg, repetitions);
    deref(mean_us, "mean_us") = o.mean_us;
    deref(max_us, "max_us") = o.max_us;
  });
}

}  // extern "C"
