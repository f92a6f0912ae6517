#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "releta/rng.hpp"

namespace releta::qfunc {

enum class Activation { kIdentity, kRectifier };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// input -> hidden -> output, one output per action. Parameters live in a single
// flat vector laid out as w1 (hidden x input, row-major) | b1 | w2 (output x
// hidden, row-major) | b2.
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(std::size_t input, std::size_t hidden, std::size_t output, Activation act = Activation::kIdentity);

  // 2n -> 2n -> n, the allocator's shape for n cores.
  static QNetwork for_cores(std::size_t n, Activation act = Activation::kIdentity);

  // Weights uniform in [-scale, scale], biases zero.
  void init_uniform(Rng& rng, double scale);

  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }
  std::size_t output_size() const { return output_; }
  Activation activation() const { return act_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  double& w1(std::size_t h, std::size_t i) { return params_[h * input_ + i]; }
  double& b1(std::size_t h) { return params_[hidden_ * input_ + h]; }
  double& w2(std::size_t a, std::size_t h) { return params_[w2_offset() + a * hidden_ + h]; }
  double& b2(std::size_t a) { return params_[w2_offset() + output_ * hidden_ + a]; }
  double w1(std::size_t h, std::size_t i) const { return params_[h * input_ + i]; }
  double b1(std::size_t h) const { return params_[hidden_ * input_ + h]; }
  double w2(std::size_t a, std::size_t h) const { return params_[w2_offset() + a * hidden_ + h]; }
  double b2(std::size_t a) const { return params_[w2_offset() + output_ * hidden_ + a]; }

  // Throws Error(kRuntime) on a dimension mismatch or non-finite input.
  std::vector<double> forward(std::span<const double> state) const;

  // dQ(state, action)/dtheta in the flat parameter layout.
  std::vector<double> q_gradient(std::span<const double> state, std::size_t action) const;

  bool all_finite() const;
  bool operator==(const QNetwork&) const = default;

 private:
  std::size_t w2_offset() const { return hidden_ * input_ + hidden_; }
  std::vector<double> hidden_pre(std::span<const double> state) const;
  void check_state(std::span<const double> state) const;

  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
  std::size_t output_ = 0;
  Activation act_ = Activation::kIdentity;
  std::vector<double> params_;
};

enum class StepRule {
  kPlain,       // theta -= alpha * dL/dtheta
  kNormalized,  // step scaled so Q(s,a) moves by alpha * (y - Q) to first order
};

std::string to_string(StepRule r);
StepRule step_rule_from_string(const std::string& s);

struct Hyperparams {
  double alpha = 0.8;
  double gamma = 0.9;
  double eps_start = 0.1;
  double eps_end = 0.03;
  std::size_t eps_decay_steps = 1000;
  StepRule step_rule = StepRule::kNormalized;

  bool operator==(const Hyperparams&) const = default;
};

void validate(const Hyperparams& h);

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;

  bool operator==(const Transition&) const = default;
};

double td_target(double reward, std::span<const double> next_q, double gamma, bool terminal);

// Gradient of (target - Q(state, action))^2 with respect to every parameter.
std::vector<double> loss_gradient(const QNetwork& net, std::span<const double> state, std::size_t action,
                                  double target);

// One plain gradient step on (target - Q(state, action))^2. Returns the
// pre-update loss. Throws Error(kRuntime) if the gradient or the updated
// parameters are non-finite; `net` is left untouched in that case.
double sgd_update(QNetwork& net, std::span<const double> state, std::size_t action, double target, double alpha);

// Learning rate that makes a plain step move Q(state, action) by alpha * TD
// error to first order: alpha / (2 * |dQ/dtheta|^2).
double normalized_rate(const QNetwork& net, std::span<const double> state, std::size_t action, double alpha);

// td_target against `target_net` followed by one sgd_update on `net` using the
// hyperparameters' step rule. Returns the pre-update loss.
double td_update(QNetwork& net, const QNetwork& target_net, const Transition& t, const Hyperparams& h);

// Lowest index among maxima.
std::size_t argmax_action(std::span<const double> q);

double epsilon_at(std::size_t step, const Hyperparams& h);

// Plain-text checkpoint: header lines then one parameter per line with 17
// significant digits.
void write_checkpoint(std::ostream& out, const QNetwork& net);
QNetwork read_checkpoint(std::istream& in, const std::string& origin = "<stream>");
void save_checkpoint(const std::filesystem::path& path, const QNetwork& net);
QNetwork load_checkpoint(const std::filesystem::path& path);

// Table-driven Q-learning on discrete states and actions.
class TabularQ {
 public:
  TabularQ(std::size_t states, std::size_t actions) : actions_(actions), q_(states * actions, 0.0) {}

  double q(std::size_t s, std::size_t a) const { return q_[s * actions_ + a]; }
  double max_q(std::size_t s) const;

  // Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))
  void update(std::size_t s, std::size_t a, double reward, std::size_t next, double alpha, double gamma);

 private:
  std::size_t actions_;
  std::vector<double> q_;
};

}  // namespace releta::qfunc
