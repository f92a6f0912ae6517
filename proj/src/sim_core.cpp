#include "releta/sim_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "releta/error.hpp"

namespace releta::sim {

namespace {

std::string at(const char* name, std::size_t i) {
  std::ostringstream os;
  os << name << "[" << i << "]";
  return os.str();
}

}  // namespace

void validate(const ThermalParams& tp) {
  const std::size_t n = tp.cores();
  require(n >= 1, ErrorKind::kValidation, "r_th: at least one core is required");
  require(tp.c_th.size() == n, ErrorKind::kValidation, "c_th: length must equal the number of cores");
  require(tp.coupling.size() == n * n, ErrorKind::kValidation, "coupling: must be an n*n matrix");
  require(std::isfinite(tp.ambient_temp), ErrorKind::kValidation, "ambient: must be finite");
  double min_tau = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    require(tp.r_th[i] > 0 && std::isfinite(tp.r_th[i]), ErrorKind::kValidation, at("r_th", i) + " must be > 0");
    require(tp.c_th[i] > 0 && std::isfinite(tp.c_th[i]), ErrorKind::kValidation, at("c_th", i) + " must be > 0");
    min_tau = std::min(min_tau, tp.r_th[i] * tp.c_th[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double g = tp.conductance(i, j);
      require(g >= 0 && std::isfinite(g), ErrorKind::kValidation, "coupling: entries must be >= 0");
      require(g == tp.conductance(j, i), ErrorKind::kValidation, "coupling: matrix must be symmetric");
      if (i == j) require(g == 0, ErrorKind::kValidation, "coupling: diagonal must be zero");
    }
  }
  require(tp.dt > 0 && tp.dt < min_tau, ErrorKind::kValidation,
          "dt: must satisfy 0 < dt < min(r_th*c_th) for a stable explicit update");
}

void validate(const PowerParams& pp) {
  require(pp.k_dyn >= 0 && std::isfinite(pp.k_dyn), ErrorKind::kValidation, "k_dyn: must be >= 0");
  require(pp.exp >= 1 && std::isfinite(pp.exp), ErrorKind::kValidation, "power_exp: must be >= 1");
  require(pp.p_static >= 0 && std::isfinite(pp.p_static), ErrorKind::kValidation, "p_static: must be >= 0");
  require(pp.leakage >= 0 && std::isfinite(pp.leakage), ErrorKind::kValidation, "leakage: must be >= 0");
}

void validate(const GovernorConfig& g) {
  require(!g.p_states.empty(), ErrorKind::kValidation, "p_states: at least one frequency level is required");
  require(g.p_states.front() > 0, ErrorKind::kValidation, "p_states: frequencies must be > 0");
  require(std::is_sorted(g.p_states.begin(), g.p_states.end()) &&
              std::adjacent_find(g.p_states.begin(), g.p_states.end()) == g.p_states.end(),
          ErrorKind::kValidation, "p_states: must be strictly ascending");
  require(g.up_threshold > 0 && g.up_threshold <= 1, ErrorKind::kValidation, "up_threshold: must be in (0, 1]");
}

void validate(const SensorConfig& s) {
  require(s.resolution >= 0 && std::isfinite(s.resolution), ErrorKind::kValidation, "sensor_resolution: must be >= 0");
  require(s.noise_std >= 0 && std::isfinite(s.noise_std), ErrorKind::kValidation, "sensor_noise: must be >= 0");
}

void validate(const PlatformConfig& p) {
  validate(p.thermal);
  validate(p.power);
  validate(p.governor);
  validate(p.sensor);
}

double power_draw(double freq, double util, const PowerParams& p) {
  require(freq > 0 && std::isfinite(freq), ErrorKind::kValidation, "power_draw: freq must be > 0");
  require(util >= 0 && util <= 1, ErrorKind::kValidation, "power_draw: util must lie in [0, 1]");
  return p.p_static + p.k_dyn * util * std::pow(freq, p.exp);
}

std::vector<double> thermal_step(std::span<const double> temps, std::span<const double> powers,
                                 const ThermalParams& tp) {
  const std::size_t n = tp.cores();
  require(temps.size() == n && powers.size() == n, ErrorKind::kValidation,
          "thermal_step: temperature and power vectors must have one entry per core");
  double min_tau = INFINITY;
  for (std::size_t i = 0; i < n; ++i) min_tau = std::min(min_tau, tp.r_th[i] * tp.c_th[i]);
  require(tp.dt > 0 && tp.dt < min_tau, ErrorKind::kValidation,
          "dt: must satisfy 0 < dt < min(r_th*c_th) for a stable explicit update");

  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    double flow = powers[i] - (temps[i] - tp.ambient_temp) / tp.r_th[i];
    for (std::size_t j = 0; j < n; ++j) flow -= tp.conductance(i, j) * (temps[i] - temps[j]);
    next[i] = temps[i] + tp.dt / tp.c_th[i] * flow;
  }
  return next;
}

std::vector<double> steady_state(std::span<const double> powers, const ThermalParams& tp) {
  // (1/r_i + sum_j g_ij) T_i - sum_j g_ij T_j = P_i + ambient / r_i
  const std::size_t n = tp.cores();
  require(powers.size() == n, ErrorKind::kValidation, "steady_state: one power per core is required");
  std::vector<double> a(n * n, 0.0);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i * n + i] = 1.0 / tp.r_th[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      a[i * n + i] += tp.conductance(i, j);
      a[i * n + j] -= tp.conductance(i, j);
    }
    b[i] = powers[i] + tp.ambient_temp / tp.r_th[i];
  }
  // Diagonally dominant; no pivoting needed.
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] / a[k * n + k];
      for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> t(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k * n + j] * t[j];
    t[k] = s / a[k * n + k];
  }
  return t;
}

double governor_update(double util, const GovernorConfig& g) {
  require(util >= 0 && util <= 1, ErrorKind::kValidation, "governor_update: util must lie in [0, 1]");
  if (util >= g.up_threshold) return g.f_max();
  const double wanted = util * g.f_max();
  auto it = std::lower_bound(g.p_states.begin(), g.p_states.end(), wanted);
  return it == g.p_states.end() ? g.f_max() : *it;
}

std::vector<double> sensor_read(std::span<const double> temps, const SensorConfig& cfg, Rng* noise) {
  std::vector<double> out(temps.begin(), temps.end());
  if (cfg.noise_std > 0) {
    require(noise != nullptr, ErrorKind::kRuntime, "sensor_read: noise enabled without a generator");
    for (double& t : out) t += cfg.noise_std * noise->normal();
  }
  if (cfg.resolution > 0) {
    for (double& t : out) t = std::round(t / cfg.resolution) * cfg.resolution;
  }
  return out;
}

std::vector<double> uniform_coupling(std::size_t cores, double g) {
  std::vector<double> m(cores * cores, g);
  for (std::size_t i = 0; i < cores; ++i) m[i * cores + i] = 0.0;
  return m;
}

PlatformConfig default_platform(std::size_t cores) {
  PlatformConfig p;
  p.thermal.ambient_temp = 45.0;
  p.thermal.dt = 0.1;
  constexpr double kBaseR = 2.0;
  constexpr double kSpread = 0.15;
  for (std::size_t i = 0; i < cores; ++i) {
    const double pos = cores > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(cores - 1) - 1.0 : 0.0;
    p.thermal.r_th.push_back(kBaseR * (1.0 + kSpread * pos));
    p.thermal.c_th.push_back(1.5);
  }
  p.thermal.coupling = uniform_coupling(cores, 0.05);
  p.governor.p_states = {0.8, 1.2, 1.6, 2.0, 2.4, 2.8, 3.2, 3.6};
  p.governor.up_threshold = 0.95;
  return p;
}

Chip::Chip(PlatformConfig cfg, std::uint64_t noise_seed) : cfg_(std::move(cfg)), noise_(noise_seed) {
  validate(cfg_);
  cores_.resize(cfg_.cores());
  for (auto& c : cores_) {
    c.temperature = cfg_.thermal.ambient_temp;
    c.freq = cfg_.governor.f_min();
    c.util = 0.0;
  }
}

void Chip::apply_governor() {
  for (auto& c : cores_) c.freq = c.pinned_freq ? *c.pinned_freq : governor_update(c.util, cfg_.governor);
}

std::vector<double> Chip::advance(std::span<const double> busy_util) {
  require(busy_util.size() == cores_.size(), ErrorKind::kValidation, "advance: one utilization per core is required");
  std::vector<double> powers(cores_.size());
  std::vector<double> temps = temperatures();
  for (std::size_t i = 0; i < cores_.size(); ++i) {
    powers[i] = power_draw(cores_[i].freq, busy_util[i], cfg_.power) +
                cfg_.power.leakage * std::max(0.0, temps[i] - cfg_.thermal.ambient_temp);
  }
  temps = thermal_step(temps, powers, cfg_.thermal);
  for (std::size_t i = 0; i < cores_.size(); ++i) cores_[i].temperature = temps[i];
  ++ticks_;
  time_ = static_cast<double>(ticks_) * cfg_.thermal.dt;
  return powers;
}

std::vector<double> Chip::temperatures() const {
  std::vector<double> t(cores_.size());
  std::transform(cores_.begin(), cores_.end(), t.begin(), [](const CoreState& c) { return c.temperature; });
  return t;
}

std::vector<double> Chip::read_sensors() { return sensor_read(temperatures(), cfg_.sensor, &noise_); }

}  // namespace releta::sim
