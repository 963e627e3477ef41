#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vrld/potentials.hpp"

namespace vrld {

struct GaussianMoments {
  Vector mean;
  Matrix cov;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
  /// Throws Numerical unless cov is symmetric (1e-12) and positive definite.
  void validate() const;
};

/// Exact moments of LMC on F = 1/2 |x|^2 after k steps from N(m0, S0):
/// m <- (1 - eta) m,  S <- (1 - eta)^2 S + (2 eta / gamma) I.
GaussianMoments gaussian_moment_oracle_lmc(double eta, double gamma, std::size_t k, const Vector& m0, const Matrix& S0);

/// Fixed point of the recursion above: N(0, I / (gamma (1 - eta/2))).
GaussianMoments lmc_stationary_moments(double eta, double gamma, std::size_t d);

/// Gibbs law of a quadratic objective: N(x*, diag(mean curvature)^{-1} / gamma).
GaussianMoments gibbs_moments(const QuadraticFamily& family, double gamma);

/// Exact first and second moments of SVRG-LD on a diagonal-curvature quadratic,
/// started from x0 ~ N(m0, S0), at each step in `steps` (ascending).
/// The chain state (x, anchor) has exactly computable moments because the
/// minibatch error at an inner step is diag(delta)(x - anchor) with
/// E[delta_j delta_l] = xi * Cov_i(h_ij, h_il), independent of the state.
std::vector<GaussianMoments> svrg_moment_path(const QuadraticFamily& family, double eta, double gamma,
                                              std::size_t batch, std::size_t m, std::span<const std::size_t> steps,
                                              const Vector& m0, const Matrix& S0);

/// Iterates the recursion epoch by epoch until the moments at epoch starts stop
/// changing (relative 1e-15) or max_epochs is hit; returns moments at an epoch start.
GaussianMoments svrg_stationary_moments(const QuadraticFamily& family, double eta, double gamma, std::size_t batch,
                                        std::size_t m, std::size_t max_epochs = 1000000);

double kl_gaussians(const GaussianMoments& p, const GaussianMoments& q);
double kl_symmetric(const GaussianMoments& p, const GaussianMoments& q);
/// Bures-Wasserstein distance.
double w2_gaussians(const GaussianMoments& p, const GaussianMoments& q);
/// Quantile coupling of the two empirical laws; sizes may differ.
double w2_empirical_1d(std::span<const double> xs, std::span<const double> ys);

struct SampleStats {
  std::size_t count = 0;
  Vector mean;
  Matrix cov;      // unbiased (N - 1) normalisation
  Vector mean_se;  // sqrt(diag(cov) / N)
  Matrix cov_se;   // plug-in standard error of each covariance entry
  std::optional<double> mean_value;  // mean objective value when an objective is given
  std::optional<double> value_se;
};

/// Rows of `samples` (count x d, row-major) are the draws. Accumulates in row
/// order, so the result is independent of how the rows were produced.
SampleStats sample_stats(std::span<const double> samples, std::size_t d, const FiniteSumObjective* obj = nullptr);

/// KL(N(stats.mean, stats.cov) || target), labelled a moment surrogate by callers.
double moment_kl_surrogate(const GaussianMoments& fitted, const GaussianMoments& target);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Mean of F over the rows minus F_star. Throws Config if F_star is not declared.
Estimate suboptimality(const FiniteSumObjective& obj, std::span<const double> samples);

/// E[F(X)] - F* for X ~ N(mean, cov) on a quadratic objective.
double quadratic_suboptimality(const QuadraticFamily& family, const GaussianMoments& law);

struct VarianceIdentity {
  double lhs = 0.0;  // average over all C(n, B) subsets of |v - grad F(x)|^2
  double rhs = 0.0;  // xi * (1/n) sum_i |grad f_i(x) - grad f_i(a) + grad F(a) - grad F(x)|^2
  double gap = 0.0;  // |lhs - rhs|
};

/// Exhaustive over subsets; requires n <= 12.
VarianceIdentity svrg_variance_identity_check(const FiniteSumObjective& obj, const Vector& x, const Vector& anchor,
                                              std::size_t batch);

struct MomentBoundCheck {
  double lhs = 0.0;  // Monte-Carlo E |grad F|^2
  double se = 0.0;
  double bound = 0.0;  // d L / gamma
  bool holds = false;  // lhs <= bound + 3 se
};

MomentBoundCheck grad_second_moment_bound_check(const FiniteSumObjective& obj, double gamma,
                                                std::span<const double> samples);

struct PolyakReport {
  double min_gap = 0.0;  // min over grid of (F - F*) - |grad F|^2 / (2L)
  Vector argmin;
  bool holds = false;    // min_gap >= -1e-10
};

PolyakReport polyak_gap_check(const FiniteSumObjective& obj, std::span<const Vector> grid);

/// KL(N(mean, std^2) || nu) with nu proportional to exp(-gamma F) on a 1-d
/// objective, by trapezoidal quadrature on [lo, hi] with `points` nodes.
double kl_gaussian_to_gibbs_1d(const FiniteSumObjective& obj, double gamma, double mean, double std, double lo,
                               double hi, std::size_t points = 200001);

/// E_nu[F] - F* for the 1-d Gibbs law, same quadrature.
double gibbs_expected_suboptimality_1d(const FiniteSumObjective& obj, double gamma, double lo, double hi,
                                       std::size_t points = 200001);

}  // namespace vrld
