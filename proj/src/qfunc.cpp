#include "releta/qfunc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "releta/error.hpp"
#include "releta/ini.hpp"

namespace releta::qfunc {

std::string to_string(Activation a) { return a == Activation::kIdentity ? "identity" : "rectifier"; }

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "rectifier" || s == "relu") return Activation::kRectifier;
  fail(ErrorKind::kValidation, "activation: expected identity or rectifier, got '" + s + "'");
}

std::string to_string(StepRule r) { return r == StepRule::kPlain ? "plain" : "normalized"; }

StepRule step_rule_from_string(const std::string& s) {
  if (s == "plain") return StepRule::kPlain;
  if (s == "normalized") return StepRule::kNormalized;
  fail(ErrorKind::kValidation, "step_rule: expected plain or normalized, got '" + s + "'");
}

QNetwork::QNetwork(std::size_t input, std::size_t hidden, std::size_t output, Activation act)
    : input_(input), hidden_(hidden), output_(output), act_(act),
      params_(hidden * input + hidden + output * hidden + output, 0.0) {
  require(input > 0 && hidden > 0 && output > 0, ErrorKind::kValidation, "QNetwork: layer sizes must be > 0");
}

QNetwork QNetwork::for_cores(std::size_t n, Activation act) { return QNetwork(2 * n, 2 * n, n, act); }

void QNetwork::init_uniform(Rng& rng, double scale) {
  for (std::size_t h = 0; h < hidden_; ++h) {
    for (std::size_t i = 0; i < input_; ++i) w1(h, i) = rng.uniform(-scale, scale);
    b1(h) = 0.0;
  }
  for (std::size_t a = 0; a < output_; ++a) {
    for (std::size_t h = 0; h < hidden_; ++h) w2(a, h) = rng.uniform(-scale, scale);
    b2(a) = 0.0;
  }
}

void QNetwork::check_state(std::span<const double> state) const {
  if (state.size() != input_) {
    fail(ErrorKind::kRuntime, "forward: state has " + std::to_string(state.size()) + " entries, network expects " +
                                  std::to_string(input_));
  }
  for (double x : state) require(std::isfinite(x), ErrorKind::kRuntime, "forward: state entries must be finite");
}

std::vector<double> QNetwork::hidden_pre(std::span<const double> state) const {
  std::vector<double> pre(hidden_);
  for (std::size_t h = 0; h < hidden_; ++h) {
    double z = b1(h);
    for (std::size_t i = 0; i < input_; ++i) z += w1(h, i) * state[i];
    pre[h] = z;
  }
  return pre;
}

namespace {

double activate(Activation act, double z) { return act == Activation::kRectifier ? std::max(0.0, z) : z; }
double activate_slope(Activation act, double z) {
  return act == Activation::kRectifier ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

}  // namespace

std::vector<double> QNetwork::forward(std::span<const double> state) const {
  check_state(state);
  std::vector<double> hid = hidden_pre(state);
  for (double& z : hid) z = activate(act_, z);
  std::vector<double> q(output_);
  for (std::size_t a = 0; a < output_; ++a) {
    double v = b2(a);
    for (std::size_t h = 0; h < hidden_; ++h) v += w2(a, h) * hid[h];
    q[a] = v;
  }
  return q;
}

std::vector<double> QNetwork::q_gradient(std::span<const double> state, std::size_t action) const {
  check_state(state);
  require(action < output_, ErrorKind::kRuntime, "q_gradient: action out of range");
  const std::vector<double> pre = hidden_pre(state);
  std::vector<double> g(params_.size(), 0.0);
  const std::size_t b1_off = hidden_ * input_;
  const std::size_t w2_off = w2_offset();
  const std::size_t b2_off = w2_off + output_ * hidden_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double back = w2(action, h) * activate_slope(act_, pre[h]);
    for (std::size_t i = 0; i < input_; ++i) g[h * input_ + i] = back * state[i];
    g[b1_off + h] = back;
    g[w2_off + action * hidden_ + h] = activate(act_, pre[h]);
  }
  g[b2_off + action] = 1.0;
  return g;
}

bool QNetwork::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double x) { return std::isfinite(x); });
}

void validate(const Hyperparams& h) {
  require(h.alpha > 0 && std::isfinite(h.alpha), ErrorKind::kValidation, "alpha: must be > 0");
  require(h.gamma >= 0 && h.gamma <= 1, ErrorKind::kValidation, "gamma: must lie in [0, 1]");
  require(h.eps_end >= 0 && h.eps_end <= h.eps_start && h.eps_start <= 1, ErrorKind::kValidation,
          "eps_start/eps_end: must satisfy 0 <= eps_end <= eps_start <= 1");
}

double td_target(double reward, std::span<const double> next_q, double gamma, bool terminal) {
  if (terminal) return reward;
  require(!next_q.empty(), ErrorKind::kRuntime, "td_target: next_q must not be empty");
  return reward + gamma * *std::max_element(next_q.begin(), next_q.end());
}

std::vector<double> loss_gradient(const QNetwork& net, std::span<const double> state, std::size_t action,
                                  double target) {
  const double q = net.forward(state)[action];
  std::vector<double> g = net.q_gradient(state, action);
  const double scale = -2.0 * (target - q);
  for (double& x : g) x *= scale;
  return g;
}

double sgd_update(QNetwork& net, std::span<const double> state, std::size_t action, double target, double alpha) {
  require(std::isfinite(target), ErrorKind::kRuntime, "sgd_update: target is not finite (training diverged)");
  require(action < net.output_size(), ErrorKind::kRuntime, "sgd_update: action out of range");
  const double err = target - net.forward(state)[action];
  const double loss = err * err;
  const std::vector<double> g = loss_gradient(net, state, action, target);
  std::vector<double> next(net.params().begin(), net.params().end());
  for (std::size_t k = 0; k < next.size(); ++k) {
    require(std::isfinite(g[k]), ErrorKind::kRuntime, "sgd_update: non-finite gradient (training diverged)");
    next[k] -= alpha * g[k];
    require(std::isfinite(next[k]), ErrorKind::kRuntime, "sgd_update: non-finite parameter (training diverged)");
  }
  std::copy(next.begin(), next.end(), net.params().begin());
  return loss;
}

double normalized_rate(const QNetwork& net, std::span<const double> state, std::size_t action, double alpha) {
  double norm2 = 0.0;
  for (double x : net.q_gradient(state, action)) norm2 += x * x;
  // dQ/db2[action] == 1, so norm2 >= 1.
  return alpha / (2.0 * norm2);
}

double td_update(QNetwork& net, const QNetwork& target_net, const Transition& t, const Hyperparams& h) {
  const double y = td_target(t.reward, t.terminal ? std::span<const double>{} : target_net.forward(t.next_state),
                             h.gamma, t.terminal);
  const double rate = h.step_rule == StepRule::kNormalized ? normalized_rate(net, t.state, t.action, h.alpha) : h.alpha;
  return sgd_update(net, t.state, t.action, y, rate);
}

std::size_t argmax_action(std::span<const double> q) {
  require(!q.empty(), ErrorKind::kRuntime, "argmax_action: empty Q vector");
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

double epsilon_at(std::size_t step, const Hyperparams& h) {
  if (h.eps_decay_steps == 0 || step >= h.eps_decay_steps) return h.eps_end;
  const double frac = static_cast<double>(step) / static_cast<double>(h.eps_decay_steps);
  return h.eps_start + (h.eps_end - h.eps_start) * frac;
}

void write_checkpoint(std::ostream& out, const QNetwork& net) {
  out << "releta-qnetwork 1\n"
      << "input " << net.input_size() << "\n"
      << "hidden " << net.hidden_size() << "\n"
      << "output " << net.output_size() << "\n"
      << "activation " << to_string(net.activation()) << "\n"
      << "params " << net.param_count() << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double x : net.params()) out << x << "\n";
}

QNetwork read_checkpoint(std::istream& in, const std::string& origin) {
  std::size_t line = 0;
  auto where = [&] { return origin + ":" + std::to_string(line); };
  auto next_line = [&]() {
    std::string s;
    ++line;
    if (!std::getline(in, s)) fail(ErrorKind::kParse, where() + ": unexpected end of checkpoint");
    return s;
  };
  auto header = [&](const std::string& key) {
    std::istringstream ls(next_line());
    std::string k;
    std::string v;
    ls >> k >> v;
    if (k != key) fail(ErrorKind::kParse, where() + ": expected '" + key + "'");
    return v;
  };
  // Read before formatting the location: argument evaluation order is unspecified.
  auto header_uint = [&](const std::string& key) {
    const std::string v = header(key);
    return parse_uint(v, where());
  };
  if (header("releta-qnetwork") != "1") fail(ErrorKind::kParse, where() + ": unsupported checkpoint version");
  const auto input = header_uint("input");
  const auto hidden = header_uint("hidden");
  const auto output = header_uint("output");
  const Activation act = activation_from_string(header("activation"));
  const auto count = header_uint("params");
  QNetwork net(input, hidden, output, act);
  if (count != net.param_count()) fail(ErrorKind::kParse, where() + ": parameter count does not match dimensions");
  for (double& x : net.params()) {
    const std::string text = next_line();
    x = parse_double(text, where());
  }
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const QNetwork& net) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kRuntime, "cannot write " + path.string());
  write_checkpoint(out, net);
  if (!out) fail(ErrorKind::kRuntime, "write failed: " + path.string());
}

QNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kRuntime, "cannot open " + path.string());
  return read_checkpoint(in, path.string());
}

double TabularQ::max_q(std::size_t s) const {
  const auto first = q_.begin() + static_cast<std::ptrdiff_t>(s * actions_);
  return *std::max_element(first, first + static_cast<std::ptrdiff_t>(actions_));
}

void TabularQ::update(std::size_t s, std::size_t a, double reward, std::size_t next, double alpha, double gamma) {
  double& cell = q_[s * actions_ + a];
  cell += alpha * (reward + gamma * max_q(next) - cell);
}

}  // namespace releta::qfunc
