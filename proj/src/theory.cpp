#include "vrld/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vrld/format.hpp"

namespace vrld::theory {

namespace {

constexpr double kSqrt6 = 2.449489742783178;  // sqrt(6)

void positive(double v, const char* name) {
  if (!(std::isfinite(v) && v > 0)) fail(ErrorKind::InvalidArgument, std::string(name) + " must be positive and finite");
}

void nonnegative(double v, const char* name) {
  if (!(std::isfinite(v) && v >= 0))
    fail(ErrorKind::InvalidArgument, std::string(name) + " must be nonnegative and finite");
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::string num(double v) { return format_real(v); }

}  // namespace

void TheoryConstants::validate() const {
  auto pos = [](const std::optional<double>& v, const char* name) {
    if (v && !(std::isfinite(*v) && *v > 0)) fail(ErrorKind::Hypothesis, std::string(name) + " must be positive");
  };
  pos(L, "L");
  pos(alpha, "alpha");
  pos(gamma, "gamma");
  pos(M, "M");
  pos(L_prime, "L_prime");
  if (b && *b < 0) fail(ErrorKind::Hypothesis, "b must be nonnegative");
  if (d && *d < 1) fail(ErrorKind::Hypothesis, "d must be >= 1");
  if (n && *n < 1) fail(ErrorKind::Hypothesis, "n must be >= 1");
  if (lambda_dagger && !(*lambda_dagger > 0 && *lambda_dagger <= 1))
    fail(ErrorKind::Hypothesis, "lambda_dagger must lie in (0, 1]");
  if (C_F && !(*C_F > 0 && *C_F <= 1)) fail(ErrorKind::Hypothesis, "C_F must lie in (0, 1]");
  if (A_star && *A_star < 0) fail(ErrorKind::Hypothesis, "A_star must be nonnegative");
  if (B_star && *B_star < 0) fail(ErrorKind::Hypothesis, "B_star must be nonnegative");
  if (!(C_star >= 0)) fail(ErrorKind::Hypothesis, "C_star must be nonnegative");
  if (alpha && gamma && L && *alpha > *gamma * *L * (1 + 1e-12))
    fail(ErrorKind::Hypothesis, "alpha <= gamma L violated (alpha = " + num(*alpha) + ", gamma L = " +
                                    num(*gamma * *L) + ")");
}

std::vector<std::string> TheoryConstants::warnings() const {
  std::vector<std::string> out;
  if (L && *L < 1) out.push_back("L < 1: several bounds assume L >= 1");
  if (C_star == 1.0) out.push_back("C_star is an unknown universal constant; the value 1 is a placeholder");
  return out;
}

// ---------------------------------------------------------------------------

double xi(std::size_t n, std::size_t batch) {
  if (n < 1 || batch < 1 || batch > n) fail(ErrorKind::InvalidArgument, "xi needs 1 <= B <= n");
  if (n == 1) return 0.0;
  return static_cast<double>(n - batch) / (static_cast<double>(batch) * static_cast<double>(n - 1));
}

double lambda_coef(std::size_t n, std::size_t batch) { return 1 + 2 * xi(n, batch); }

double upsilon(std::size_t n, std::size_t batch, std::size_t m) {
  if (m < 1) fail(ErrorKind::InvalidArgument, "m must be >= 1");
  const double x = xi(n, batch);
  return lambda_coef(n, batch) + x + 1 + 2 * static_cast<double>(m) * x;
}

double step_cap(Variant variant, double alpha, double L, std::size_t m, double gamma) {
  positive(alpha, "alpha");
  positive(L, "L");
  positive(gamma, "gamma");
  if (m < 1) fail(ErrorKind::InvalidArgument, "m must be >= 1");
  const double svrg = alpha / (16 * kSqrt6 * L * L * static_cast<double>(m) * gamma);
  switch (variant) {
    case Variant::SVRG_LD: return svrg;
    case Variant::SARAH_LD: return alpha / (16 * std::numbers::sqrt2 * L * L * static_cast<double>(m) * gamma);
    default: fail(ErrorKind::InvalidArgument, "step caps are defined for svrg_ld and sarah_ld only");
  }
}

KlBound kl_bound(const KlBoundInputs& in) {
  nonnegative(in.H0, "H0");
  positive(in.eta, "eta");
  positive(in.alpha, "alpha");
  positive(in.L, "L");
  if (in.d < 1) fail(ErrorKind::InvalidArgument, "d must be >= 1");
  if (!(in.gamma >= 1)) fail(ErrorKind::Hypothesis, "hypothesis gamma >= 1 violated (gamma = " + num(in.gamma) + ")");
  if (in.alpha > in.gamma * in.L * (1 + 1e-12))
    fail(ErrorKind::Hypothesis, "alpha <= gamma L violated: the LSI constant is inconsistent with L");
  if (in.variant == Variant::SVRG_LD && in.batch < in.m)
    fail(ErrorKind::Hypothesis, "SVRG-LD bound requires B >= m (B = " + std::to_string(in.batch) +
                                    ", m = " + std::to_string(in.m) + ")");
  const double cap = step_cap(in.variant, in.alpha, in.L, in.m, in.gamma);
  if (in.eta > cap * (1 + 1e-12))
    fail(ErrorKind::Hypothesis, "step-size cap violated: eta = " + num(in.eta) + " exceeds " + num(cap));

  const double x = xi(in.n, in.batch);
  const double m = static_cast<double>(in.m);
  const double scale = in.eta * in.gamma * static_cast<double>(in.d) * in.L * in.L / (3 * in.alpha);
  KlBound out;
  out.decay = std::exp(-in.alpha * in.eta * static_cast<double>(in.k) / in.gamma) * in.H0;
  if (in.variant == Variant::SVRG_LD) {
    out.bias = 32 * scale * upsilon(in.n, in.batch, in.m);
    out.bias_coarse = 224 * scale;
    out.bias_as_printed = 224 * scale * (2 + 3 * x + 2 * m * x);
  } else {
    out.bias = 32 * scale * (2 + x + 2 * m * x);
    out.bias_coarse = out.bias;
    out.bias_as_printed = out.bias;
  }
  return out;
}

std::uint64_t iterations_for_eps(double eps, double H0, double gamma, double alpha, double eta) {
  if (!(eps > 0)) fail(ErrorKind::InvalidArgument, "eps must be positive");
  if (!(H0 > 0)) fail(ErrorKind::InvalidArgument, "H0 must be positive");
  positive(gamma, "gamma");
  positive(alpha, "alpha");
  positive(eta, "eta");
  const double ratio = 2 * H0 / eps;
  if (ratio <= 1) return 0;
  const double k = gamma / (alpha * eta) * std::log(ratio);
  if (!(k < 1.8e19)) fail(ErrorKind::Numerical, "iteration count overflows 64 bits");
  return static_cast<std::uint64_t>(std::ceil(k));
}

double eta_for_eps(Variant variant, double eps, double alpha, double gamma, std::size_t d, double L, std::size_t n,
                   std::size_t batch, std::size_t m) {
  if (!(eps > 0)) fail(ErrorKind::InvalidArgument, "eps must be positive");
  positive(alpha, "alpha");
  positive(gamma, "gamma");
  positive(L, "L");
  const double base = alpha * eps / (gamma * static_cast<double>(d) * L * L);
  switch (variant) {
    case Variant::SVRG_LD: return 3 * base / 448;
    case Variant::SARAH_LD: {
      const double x = xi(n, batch);
      return 3 * base / (64 * (2 + x + 2 * static_cast<double>(m) * x));
    }
    default: fail(ErrorKind::InvalidArgument, "eta_for_eps is defined for svrg_ld and sarah_ld only");
  }
}

double recommended_eta(Variant variant, double eps, double alpha, double gamma, std::size_t d, double L,
                       std::size_t n, std::size_t batch, std::size_t m) {
  return std::min(step_cap(variant, alpha, L, m, gamma), eta_for_eps(variant, eps, alpha, gamma, d, L, n, batch, m));
}

std::uint64_t gradient_complexity(std::uint64_t k, std::size_t batch, std::size_t m, std::size_t n) {
  if (m < 1) fail(ErrorKind::InvalidArgument, "m must be >= 1");
  if (k % m != 0) fail(ErrorKind::InvalidArgument, "m must divide k");
  return (k / m) * (n + 2 * batch * (m - 1));
}

std::uint64_t gradient_complexity(Variant variant, std::uint64_t k, std::size_t batch, std::size_t m, std::size_t n) {
  switch (variant) {
    case Variant::LMC: return k * n;
    case Variant::SGLD: return k * batch;
    default: return gradient_complexity(k, batch, m, n);
  }
}

double talagrand_w2(double H, double alpha) {
  nonnegative(H, "H");
  positive(alpha, "alpha");
  return std::sqrt(2 * H / alpha);
}

// ---------------------------------------------------------------------------

LsiDissipative lsi_dissipative(double gamma, double L, double M, double b, std::size_t d, double A_star,
                               double B_star, double C_star) {
  positive(L, "L");
  positive(M, "M");
  positive(gamma, "gamma");
  nonnegative(b, "b");
  nonnegative(A_star, "A_star");
  nonnegative(B_star, "B_star");
  nonnegative(C_star, "C_star");
  if (d < 1) fail(ErrorKind::InvalidArgument, "d must be >= 1");
  if (gamma < 2 / M)
    fail(ErrorKind::Hypothesis, "hypothesis gamma >= 2/M violated (gamma = " + num(gamma) + ", 2/M = " + num(2 / M) + ")");
  const double dd = static_cast<double>(d);
  const double t1 = (2 * M * M + 2 * L * L) / (M * M * L);
  const double log_inner =
      log_add_exp(-std::log(M * dd), std::log(2 * C_star * dd / M) + (2 * dd / M) * (L + B_star));
  const double log_bracket = log_add_exp(std::log(t1), std::log(6 * L * dd / M + 2) + log_inner);

  LsiDissipative out;
  out.log_C1 = -log_bracket;
  out.C1 = std::exp(out.log_C1);
  out.C2 = (2 * b / M) * (L + B_star) + (A_star + B_star) + b + 1;
  out.log_alpha = std::log(gamma) + out.log_C1 - out.C2 * gamma;
  out.alpha = std::exp(out.log_alpha);
  return out;
}

LsiWeakMorse lsi_weak_morse_constants(double gamma, double lambda_dagger, double M, double L, std::size_t d,
                                      double L_prime, double C_F) {
  positive(gamma, "gamma");
  positive(M, "M");
  positive(L, "L");
  positive(L_prime, "L_prime");
  if (!(lambda_dagger > 0 && lambda_dagger <= 1)) fail(ErrorKind::InvalidArgument, "lambda_dagger must lie in (0, 1]");
  if (!(C_F > 0 && C_F <= 1)) fail(ErrorKind::InvalidArgument, "C_F must lie in (0, 1]");
  if (d < 1) fail(ErrorKind::InvalidArgument, "d must be >= 1");
  const double dd = static_cast<double>(d);
  const double bracket = (2 * M * M + 8 * L * L) / (M * M * L) + (6 * L * (dd + 1) / M + 2) * 35 / lambda_dagger;

  LsiWeakMorse out;
  out.C3 = 1 / bracket;
  out.alpha = out.C3 / gamma;
  out.a2 = 24 * dd * L / (C_F * C_F);
  const double lp2 = L_prime * L_prime;
  const double lam2 = lambda_dagger * lambda_dagger;
  const double cubic = 4 * lp2 * out.a2 * out.a2 * out.a2;
  out.gamma_floor = std::max({1.0, out.a2 * 4 * dd * lp2 / lam2, cubic});
  out.gamma_floor_squared_variant = std::max({1.0, out.a2 * out.a2 * 4 * dd * lp2 / lam2, cubic});
  out.poincare = lambda_dagger / 35;
  return out;
}

LsiWeakMorse lsi_weak_morse(double gamma, double lambda_dagger, double M, double L, std::size_t d, double L_prime,
                            double C_F) {
  LsiWeakMorse out = lsi_weak_morse_constants(gamma, lambda_dagger, M, L, d, L_prime, C_F);
  if (gamma < out.gamma_floor) {
    const double dd = static_cast<double>(d);
    const double middle = out.a2 * 4 * dd * L_prime * L_prime / (lambda_dagger * lambda_dagger);
    const double cubic = 4 * L_prime * L_prime * out.a2 * out.a2 * out.a2;
    std::string term = gamma < 1 ? "gamma >= 1" : "";
    if (gamma < middle) term += std::string(term.empty() ? "" : ", ") + "gamma >= a^2 4 d L'^2 / lambda^2 = " + num(middle);
    if (gamma < cubic) term += std::string(term.empty() ? "" : ", ") + "gamma >= 4 L'^2 a^6 = " + num(cubic);
    fail(ErrorKind::Hypothesis, "weak-Morse gamma floor violated: " + term);
  }
  return out;
}

// ---------------------------------------------------------------------------

double gamma_for_optimization(double eps, std::size_t d, double L, double M, double b) {
  positive(eps, "eps");
  positive(L, "L");
  positive(M, "M");
  nonnegative(b, "b");
  if (L < M) fail(ErrorKind::Hypothesis, "gamma_for_optimization requires L >= M");
  const double dd = static_cast<double>(d);
  return std::max({4 * dd / eps * std::log(std::numbers::e * L / M), 8 * dd * b / (eps * eps), 1.0, 2 / M});
}

double gibbs_suboptimality_bound(double gamma, std::size_t d, double L, double M, double b) {
  positive(gamma, "gamma");
  positive(L, "L");
  positive(M, "M");
  nonnegative(b, "b");
  if (gamma < 2 / M) fail(ErrorKind::Hypothesis, "hypothesis gamma >= 2/M violated");
  const double dd = static_cast<double>(d);
  return dd / (2 * gamma) * std::log(std::numbers::e * L / M * (b * gamma / dd + 1));
}

double suboptimality_decomposition(double W2, double L, double gibbs_bound) {
  nonnegative(W2, "W2");
  positive(L, "L");
  nonnegative(gibbs_bound, "gibbs bound");
  return L * W2 * W2 + 2 * gibbs_bound;
}

double kl_requirement_for_optimization(double alpha, double eps, double L) {
  positive(alpha, "alpha");
  positive(eps, "eps");
  positive(L, "L");
  return alpha * eps / (4 * L);
}

double optimization_step_size(double alpha, double L, std::size_t n, double gamma, std::size_t d, double eps) {
  positive(alpha, "alpha");
  positive(L, "L");
  positive(gamma, "gamma");
  positive(eps, "eps");
  const double first = alpha / (16 * kSqrt6 * L * L * std::sqrt(static_cast<double>(n)) * gamma);
  const double second = 3.0 / 1792.0 * alpha * alpha * eps / (L * L * static_cast<double>(d) * gamma);
  return std::min(first, second);
}

double chi_constant(std::size_t d, double L, double M, double b) {
  positive(L, "L");
  positive(M, "M");
  nonnegative(b, "b");
  const double dd = static_cast<double>(d);
  auto f = [&](double g) { return dd / g * std::log(std::numbers::e * L / M * (b * g / dd + 1)); };
  // Coarse log-spaced scan over [1, 1e12], then golden-section refinement around the best point.
  double best_t = 0.0, best = f(1.0);
  for (int j = 1; j <= 1200; ++j) {
    const double t = j / 100.0;
    const double v = f(std::pow(10.0, t));
    if (v > best) best = v, best_t = t;
  }
  double lo = std::max(0.0, best_t - 0.01), hi = best_t + 0.01;
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 100; ++it) {
    const double a = hi - phi * (hi - lo), c = lo + phi * (hi - lo);
    if (f(std::pow(10.0, a)) < f(std::pow(10.0, c))) lo = a;
    else hi = c;
  }
  return std::max(best, f(std::pow(10.0, 0.5 * (lo + hi))));
}

// ---------------------------------------------------------------------------

double anneal_sigma_floor(double L, double g, double eta_bar, double mu, double C1, double C2) {
  positive(L, "L");
  positive(eta_bar, "eta_bar");
  positive(C1, "C1");
  positive(C2, "C2");
  if (!(mu > 3)) fail(ErrorKind::Hypothesis, "annealing requires mu > 3");
  if (!(g >= std::numbers::e)) fail(ErrorKind::Hypothesis, "annealing requires g >= e");
  const double second = std::pow(8 * L * g * g / (C1 * C1 * eta_bar), mu / (mu - 3));
  const double third = std::pow(2 / (mu * C2 * L * L * eta_bar * eta_bar), mu / (mu - 2));
  return std::max({3.0, second, third});
}

AnnealReport anneal_validate(const AnnealSchedule& sched, double L, double C1, double C2, std::size_t epochs) {
  sched.validate();
  positive(L, "L");
  positive(C1, "C1");
  positive(C2, "C2");
  AnnealReport rep;
  rep.gamma_bar_matches = std::abs(sched.gamma_bar * C2 - 1) <= 1e-12;

  auto alpha_at = [&](double gam) { return gam * C1 * std::exp(-C2 * gam); };

  for (std::size_t s = 0; s <= epochs; ++s) {
    const double eta = sched.eta(s);
    const double gam = sched.gamma(s);
    // Differences from s - 1 (s = 0 uses the schedule extended to s = -1),
    // in closed form so they stay accurate when sigma is large.
    const double step = std::log1p(1.0 / (static_cast<double>(s) - 1.0 + sched.sigma));
    const double dgamma = sched.gamma_bar / sched.mu * step;
    const double deta = -std::expm1(-step / sched.mu) * sched.eta_bar *
                        std::pow(static_cast<double>(s) - 1.0 + sched.sigma, -1.0 / sched.mu);
    const double gam_prev = gam - dgamma;
    const double eta2L2 = eta * eta * L * L;
    rep.max_ratio = std::max(rep.max_ratio, dgamma / eta2L2);

    if (rep.ok) {
      if (dgamma > eta2L2) {
        rep.ok = false;
        rep.first_violation = s;
        rep.violated = "Delta gamma_s <= eta_s^2 L^2";
      } else if (eta2L2 > 0.25) {
        rep.ok = false;
        rep.first_violation = s;
        rep.violated = "eta_s^2 L^2 <= 1/4";
      }
    }
    const double lhs = dgamma * 2 * L / alpha_at(gam_prev);
    const double rhs = alpha_at(gam) * eta / (2 * gam);
    if (rep.temperature_coupling_ok && lhs > rhs) {
      rep.temperature_coupling_ok = false;
      rep.first_coupling_violation = s;
    }
    if (s > 0 && !(deta > 0 && dgamma > 0)) rep.monotone = false;
  }
  return rep;
}

}  // namespace vrld::theory
