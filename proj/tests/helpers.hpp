#pragma once

#include <functional>

#include <cmath>
#include <random>
#include <string>

#include "vrld/potentials.hpp"
#include "vrld/rng.hpp"

namespace vrld::test {

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline ParamMap params(std::initializer_list<std::pair<std::string, Value>> kv) {
  ParamMap p;
  for (const auto& [k, v] : kv) p.set(k, v);
  return p;
}

inline FiniteSumObjective quadratic(std::int64_t n, std::int64_t d, std::int64_t seed = 1, double spread = 0.0) {
  return make_builtin("gaussian_quadratic", params({{"n", n}, {"d", d}, {"data_seed", seed}, {"curvature_spread", spread}}));
}

inline Vector random_vector(std::size_t d, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(static_cast<Eigen::Index>(d));
  for (auto& x : v) x = normal(gen);
  return v;
}

/// Central-difference gradient of a scalar function.
template <class F>
Vector fd_gradient(F&& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

}  // namespace vrld::test
