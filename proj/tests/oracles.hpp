// Reference computations written independently of the library code. Tests
// compare library results against these.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace releta::oracle {

// Q(state, action) for a 2-layer network stored as w1 | b1 | w2 | b2, computed
// directly from the flat parameter vector.
inline double q_value(std::span<const double> theta, std::size_t in, std::size_t hid, std::size_t out,
                      bool rectifier, std::span<const double> s, std::size_t action) {
  const double* w1 = theta.data();
  const double* b1 = w1 + hid * in;
  const double* w2 = b1 + hid;
  const double* b2 = w2 + out * hid;
  double q = b2[action];
  for (std::size_t h = 0; h < hid; ++h) {
    double z = b1[h];
    for (std::size_t i = 0; i < in; ++i) z += w1[h * in + i] * s[i];
    if (rectifier && z < 0) z = 0;
    q += w2[action * hid + h] * z;
  }
  return q;
}

// Central finite differences of (target - Q)^2 over every parameter.
inline std::vector<double> fd_loss_gradient(std::vector<double> theta, std::size_t in, std::size_t hid,
                                            std::size_t out, bool rectifier, std::span<const double> s,
                                            std::size_t action, double target, double h = 1e-6) {
  std::vector<double> g(theta.size());
  auto loss = [&] {
    const double e = target - q_value(theta, in, hid, out, rectifier, s, action);
    return e * e;
  };
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + h;
    const double up = loss();
    theta[k] = saved - h;
    const double down = loss();
    theta[k] = saved;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

// Norm-wise relative error |a - b| / (|a| + |b|); zero when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double denom = std::sqrt(na) + std::sqrt(nb);
  return denom == 0 ? 0.0 : std::sqrt(diff) / denom;
}

// Deterministic MDP with S states and A actions: reward[s][a], next[s][a].
template <std::size_t S, std::size_t A>
struct Mdp {
  std::array<std::array<double, A>, S> reward{};
  std::array<std::array<std::size_t, A>, S> next{};
};

// Q* by value iteration to a fixed point.
template <std::size_t S, std::size_t A>
std::array<std::array<double, A>, S> value_iteration(const Mdp<S, A>& m, double gamma, double tol = 1e-13) {
  std::array<std::array<double, A>, S> q{};
  for (int it = 0; it < 100000; ++it) {
    auto nq = q;
    double delta = 0;
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        const auto& row = q[m.next[s][a]];
        nq[s][a] = m.reward[s][a] + gamma * *std::max_element(row.begin(), row.end());
        delta = std::max(delta, std::abs(nq[s][a] - q[s][a]));
      }
    q = nq;
    if (delta < tol) break;
  }
  return q;
}

}  // namespace releta::oracle
