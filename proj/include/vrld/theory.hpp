#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vrld/params.hpp"
#include "vrld/samplers.hpp"

namespace vrld::theory {

/// Constants feeding the closed-form bounds. Unset fields are unknown.
struct TheoryConstants {
  std::optional<double> L, alpha, gamma;
  std::optional<std::size_t> d, n;
  std::optional<double> M, b;
  std::optional<double> lambda_dagger, L_prime;
  std::optional<double> A_star, B_star;
  double C_star = 1.0;  // universal constant of unknown value; 1 unless supplied
  std::optional<double> C_F;

  /// Throws Hypothesis if alpha > gamma L, a constant is nonpositive, or
  /// lambda_dagger / C_F fall outside (0, 1].
  void validate() const;
  /// Non-fatal remarks (L < 1, C_star left at its default).
  std::vector<std::string> warnings() const;
};

// ---------------------------------------------------------------------------
// Variance-reduction constants

/// (n - B) / (B (n - 1)); 0 when n = 1.
double xi(std::size_t n, std::size_t batch);
/// 1 + 2 xi
double lambda_coef(std::size_t n, std::size_t batch);
/// Lambda + xi + 1 + 2 m xi, never above 7 when B >= m.
double upsilon(std::size_t n, std::size_t batch, std::size_t m);

/// Strict upper bound on eta. SVRG: alpha / (16 sqrt6 L^2 m gamma); SARAH: sqrt3 times that.
/// LMC and SGLD have no cap here and throw InvalidArgument.
double step_cap(Variant variant, double alpha, double L, std::size_t m, double gamma);

struct KlBoundInputs {
  Variant variant = Variant::SVRG_LD;
  double H0 = 0.0;
  std::size_t k = 0;
  double eta = 0.0, gamma = 1.0, alpha = 1.0;
  std::size_t d = 1;
  double L = 1.0;
  std::size_t n = 1, batch = 1, m = 1;
};

struct KlBound {
  double decay = 0.0;        // e^{-alpha eta k / gamma} H0
  double bias = 0.0;         // tight bias: (32 eta gamma d L^2 / 3 alpha) * Upsilon (SVRG) or * (2 + xi + 2 m xi) (SARAH)
  double bias_coarse = 0.0;  // SVRG: Upsilon replaced by its cap 7, i.e. 224 eta gamma d L^2 / (3 alpha); SARAH: = bias
  double bias_as_printed = 0.0;  // SVRG: (224 eta gamma d L^2 / 3 alpha)(2 + 3 xi + 2 m xi); SARAH: = bias
  double total() const { return decay + bias; }
};

/// Throws Hypothesis naming the violated condition (eta above the cap,
/// SVRG with B < m, gamma < 1, alpha > gamma L).
KlBound kl_bound(const KlBoundInputs& in);

/// Smallest k >= 0 with (gamma / (alpha eta)) log(2 H0 / eps) <= k.
std::uint64_t iterations_for_eps(double eps, double H0, double gamma, double alpha, double eta);

/// Step size that makes the bias at most eps / 2.
/// SVRG: 3 alpha eps / (448 gamma d L^2); SARAH: 3 alpha eps / (64 gamma d L^2 (2 + xi + 2 m xi)).
double eta_for_eps(Variant variant, double eps, double alpha, double gamma, std::size_t d, double L, std::size_t n,
                   std::size_t batch, std::size_t m);

/// min(step_cap, eta_for_eps): the largest permissible step for target eps.
double recommended_eta(Variant variant, double eps, double alpha, double gamma, std::size_t d, double L,
                       std::size_t n, std::size_t batch, std::size_t m);

/// Component-gradient evaluations of k steps: (k/m)(n + 2B(m-1)) for SVRG/SARAH,
/// k B for SGLD, k n for LMC. Throws InvalidArgument if m does not divide k.
std::uint64_t gradient_complexity(std::uint64_t k, std::size_t batch, std::size_t m, std::size_t n);
std::uint64_t gradient_complexity(Variant variant, std::uint64_t k, std::size_t batch, std::size_t m, std::size_t n);

/// sqrt(2 H / alpha): upper bound on W2 from the KL divergence.
double talagrand_w2(double H, double alpha);

// ---------------------------------------------------------------------------
// Log-Sobolev constants

struct LsiDissipative {
  double alpha = 0.0;      // gamma C1 e^{-C2 gamma}; may underflow to 0, see log_alpha
  double log_alpha = 0.0;
  double C1 = 0.0;
  double log_C1 = 0.0;
  double C2 = 0.0;
};

/// Throws Hypothesis if gamma < 2 / M.
LsiDissipative lsi_dissipative(double gamma, double L, double M, double b, std::size_t d, double A_star,
                               double B_star, double C_star);

struct LsiWeakMorse {
  double alpha = 0.0;        // C3 / gamma
  double C3 = 0.0;           // 1 / bracket
  double a2 = 0.0;           // 24 d L / C_F^2
  double gamma_floor = 0.0;  // max(1, a2 4 d L'^2 / lambda^2, 4 L'^2 a2^3)
  double gamma_floor_squared_variant = 0.0;  // same with a2 replaced by a2^2 in the middle term
  double poincare = 0.0;     // lambda_dagger / 35
};

/// Evaluates the constants without checking the gamma floor.
LsiWeakMorse lsi_weak_morse_constants(double gamma, double lambda_dagger, double M, double L, std::size_t d,
                                      double L_prime, double C_F);
/// As above, and throws Hypothesis naming the binding floor term if gamma is below the floor.
LsiWeakMorse lsi_weak_morse(double gamma, double lambda_dagger, double M, double L, std::size_t d, double L_prime,
                            double C_F);

// ---------------------------------------------------------------------------
// Optimization mode

/// max(4d/eps log(eL/M), 8db/eps^2, 1, 2/M). Requires L >= M.
double gamma_for_optimization(double eps, std::size_t d, double L, double M, double b);

/// (d / 2 gamma) log((e L / M)(b gamma / d + 1)). Requires gamma >= 2/M.
double gibbs_suboptimality_bound(double gamma, std::size_t d, double L, double M, double b);

/// L W2^2 + 2 gibbs_bound.
double suboptimality_decomposition(double W2, double L, double gibbs_bound);

/// KL level sufficient for L W2^2 <= eps / 2: alpha eps / (4 L).
double kl_requirement_for_optimization(double alpha, double eps, double L);

/// min(alpha / (16 sqrt6 L^2 sqrt(n) gamma), (3/1792) alpha^2 eps / (L^2 d gamma)).
double optimization_step_size(double alpha, double L, std::size_t n, double gamma, std::size_t d, double eps);

/// max over gamma >= 1 of (d / gamma) log((e L / M)(b gamma / d + 1)), found numerically.
double chi_constant(std::size_t d, double L, double M, double b);

// ---------------------------------------------------------------------------
// Annealing schedule

/// 3 v (8 L g^2 / (C1^2 eta_bar))^{mu/(mu-3)} v (2 / (mu C2 L^2 eta_bar^2))^{mu/(mu-2)}.
double anneal_sigma_floor(double L, double g, double eta_bar, double mu, double C1, double C2);

struct AnnealReport {
  bool ok = true;                // both step-size inequalities hold for s = 0..epochs
  std::optional<std::size_t> first_violation;
  std::string violated;          // which inequality failed first
  bool temperature_coupling_ok = true;  // Delta gamma_s 2L/alpha_{s-1} <= alpha_s eta_s / (2 gamma_s)
  std::optional<std::size_t> first_coupling_violation;
  bool monotone = true;          // eta_s strictly decreasing, gamma_s strictly increasing
  bool gamma_bar_matches = true; // gamma_bar == 1 / C2
  double max_ratio = 0.0;        // max over s of Delta gamma_s / (eta_s^2 L^2)
};

/// Checks Delta gamma_s <= eta_s^2 L^2 <= 1/4 for s = 0..epochs. Delta gamma_0
/// uses the schedule extended to s = -1.
AnnealReport anneal_validate(const AnnealSchedule& sched, double L, double C1, double C2, std::size_t epochs);

// ---------------------------------------------------------------------------
// Named-formula queries (CLI `theory` subcommand and the C API)

struct QueryResult {
  std::string name;
  std::vector<std::pair<std::string, double>> values;
  std::string formula;
  std::vector<std::string> notes;
};

/// Names accepted by evaluate_query, each with a one-line usage string.
const std::vector<std::pair<std::string, std::string>>& query_catalog();

/// `args` holds key=value pairs; a bare token is read as the variant.
/// Greek letters are accepted as key aliases (α, γ, η, ε, λ†, μ, σ, η̄, γ̄).
QueryResult evaluate_query(const std::string& name, const std::vector<std::string>& args);

}  // namespace vrld::theory
