#include <cmath>
#include <map>
#include <set>

#include "vrld/format.hpp"
#include "vrld/theory.hpp"

namespace vrld::theory {

namespace {

const std::map<std::string, std::string>& key_aliases() {
  static const std::map<std::string, std::string> aliases{
      {"α", "alpha"},         {"γ", "gamma"},          {"η", "eta"},          {"ε", "eps"},
      {"ϵ", "eps"},           {"epsilon", "eps"},      {"λ†", "lambda_dagger"}, {"λ", "lambda_dagger"},
      {"lambda", "lambda_dagger"}, {"μ", "mu"},        {"σ", "sigma"},        {"η̄", "eta_bar"},
      {"γ̄", "gamma_bar"},     {"L′", "L_prime"},       {"L'", "L_prime"},     {"H₀", "H0"},
      {"batch", "B"},         {"epoch_length", "m"},   {"C*", "C_star"},      {"A*", "A_star"},
      {"B*", "B_star"},       {"C₁", "C1"},            {"C₂", "C2"},          {"W₂", "W2"},
      {"steps", "k"},         {"K", "k"},
  };
  return aliases;
}

const std::map<std::string, std::string>& name_aliases() {
  static const std::map<std::string, std::string> aliases{
      {"Ξ", "xi"},
      {"Υ", "upsilon"},
      {"iters", "iterations_for_eps"},
      {"gc", "gradient_complexity"},
      {"gamma_for_optimization", "gamma_opt"},
      {"gibbs_suboptimality_bound", "gibbs_subopt"},
      {"suboptimality_decomposition", "subopt_decomposition"},
      {"optimization_step_size", "opt_step"},
      {"talagrand", "talagrand_w2"},
  };
  return aliases;
}

class Args {
 public:
  explicit Args(const std::vector<std::string>& tokens) {
    for (const auto& tok : tokens) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) {
        if (variant_) fail(ErrorKind::Config, "more than one bare token: '" + tok + "'");
        variant_ = parse_variant(tok);
        continue;
      }
      std::string key = tok.substr(0, eq);
      if (auto it = key_aliases().find(key); it != key_aliases().end()) key = it->second;
      if (values_.count(key)) fail(ErrorKind::Config, "argument '" + key + "' given twice");
      values_[key] = tok.substr(eq + 1);
    }
  }

  double real(const std::string& key) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::Config, "missing argument '" + key + "'");
    return parse_real(it->second, key);
  }
  double real(const std::string& key, double fallback) { return has(key) ? real(key) : fallback; }
  std::size_t size(const std::string& key) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::Config, "missing argument '" + key + "'");
    const long long v = parse_int(it->second, key);
    if (v < 0) fail(ErrorKind::Config, key + " must be nonnegative");
    return static_cast<std::size_t>(v);
  }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  Variant variant() {
    if (!variant_) fail(ErrorKind::Config, "this query needs a variant (svrg or sarah)");
    variant_used_ = true;
    return *variant_;
  }
  std::optional<Variant> maybe_variant() {
    variant_used_ = true;
    return variant_;
  }
  void finish() const {
    for (const auto& [k, _] : values_)
      if (!used_.count(k)) fail(ErrorKind::Config, "unknown argument '" + k + "' for this query");
    if (variant_ && !variant_used_) fail(ErrorKind::Config, "this query takes no variant");
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
  std::optional<Variant> variant_;
  bool variant_used_ = false;
};

}  // namespace

const std::vector<std::pair<std::string, std::string>>& query_catalog() {
  static const std::vector<std::pair<std::string, std::string>> catalog{
      {"xi", "xi n=.. B=.."},
      {"upsilon", "upsilon n=.. B=.. m=.."},
      {"step_cap", "step_cap svrg|sarah alpha=.. L=.. m=.. gamma=.."},
      {"kl_bound", "kl_bound svrg|sarah H0=.. k=.. eta=.. gamma=.. alpha=.. d=.. L=.. n=.. B=.. m=.."},
      {"iterations_for_eps", "iterations_for_eps eps=.. H0=.. gamma=.. alpha=.. eta=.."},
      {"eta_for_eps", "eta_for_eps svrg|sarah eps=.. alpha=.. gamma=.. d=.. L=.. n=.. B=.. m=.."},
      {"gradient_complexity", "gradient_complexity [variant] k=.. B=.. m=.. n=.."},
      {"talagrand_w2", "talagrand_w2 H=.. alpha=.."},
      {"lsi_dissipative", "lsi_dissipative gamma=.. L=.. M=.. b=.. d=.. A_star=.. B_star=.. [C_star=1]"},
      {"lsi_weak_morse", "lsi_weak_morse gamma=.. lambda_dagger=.. M=.. L=.. d=.. L_prime=.. C_F=.."},
      {"gamma_opt", "gamma_opt eps=.. d=.. L=.. M=.. b=.."},
      {"gibbs_subopt", "gibbs_subopt gamma=.. d=.. L=.. M=.. b=.."},
      {"subopt_decomposition", "subopt_decomposition W2=.. L=.. gamma=.. d=.. M=.. b=.. [alpha=.. eps=..]"},
      {"kl_requirement", "kl_requirement alpha=.. eps=.. L=.."},
      {"opt_step", "opt_step alpha=.. L=.. n=.. gamma=.. d=.. eps=.."},
      {"chi", "chi d=.. L=.. M=.. b=.."},
      {"poincare", "poincare lambda_dagger=.."},
      {"anneal_sigma_floor", "anneal_sigma_floor L=.. g=.. eta_bar=.. mu=.. C1=.. C2=.."},
      {"anneal_schedule", "anneal_schedule eta_bar=.. gamma_bar=.. sigma=.. mu=.. g=.. s=.."},
      {"anneal_validate", "anneal_validate eta_bar=.. gamma_bar=.. sigma=.. mu=.. g=.. L=.. C1=.. C2=.. epochs=.."},
  };
  return catalog;
}

QueryResult evaluate_query(const std::string& raw_name, const std::vector<std::string>& tokens) {
  std::string name = raw_name;
  if (auto it = name_aliases().find(name); it != name_aliases().end()) name = it->second;
  Args a(tokens);
  QueryResult r;
  r.name = name;

  if (name == "xi") {
    const auto n = a.size("n"), B = a.size("B");
    r.values = {{"xi", xi(n, B)}};
    r.formula = "xi = (n - B) / (B (n - 1))";
  } else if (name == "upsilon") {
    const auto n = a.size("n"), B = a.size("B"), m = a.size("m");
    r.values = {{"xi", xi(n, B)}, {"lambda", lambda_coef(n, B)}, {"upsilon", upsilon(n, B, m)}, {"upsilon_cap", 7}};
    r.formula = "upsilon = Lambda + xi + 1 + 2 m xi, Lambda = 1 + 2 xi (at most 7 when B >= m)";
    if (B < m) r.notes.push_back("B < m: the cap 7 does not apply");
  } else if (name == "step_cap") {
    const Variant v = a.variant();
    const double cap = step_cap(v, a.real("alpha"), a.real("L"), a.size("m"), a.real("gamma"));
    r.values = {{"step_cap", cap}};
    r.formula = v == Variant::SVRG_LD ? "eta < alpha / (16 sqrt(6) L^2 m gamma)" : "eta < alpha / (16 sqrt(2) L^2 m gamma)";
  } else if (name == "kl_bound") {
    KlBoundInputs in;
    in.variant = a.variant();
    in.H0 = a.real("H0");
    in.k = a.size("k");
    in.eta = a.real("eta");
    in.gamma = a.real("gamma");
    in.alpha = a.real("alpha");
    in.d = a.size("d");
    in.L = a.real("L");
    in.n = a.size("n");
    in.batch = a.size("B");
    in.m = a.size("m");
    const KlBound b = kl_bound(in);
    r.values = {{"decay", b.decay},
                {"bias", b.bias},
                {"total", b.total()},
                {"bias_coarse", b.bias_coarse},
                {"bias_as_printed", b.bias_as_printed}};
    if (in.variant == Variant::SVRG_LD) {
      r.formula = "H_k <= exp(-alpha eta k / gamma) H0 + (32 eta gamma d L^2 / (3 alpha)) upsilon";
      r.notes.push_back("bias_coarse replaces upsilon by 7; bias_as_printed = (224 eta gamma d L^2 / (3 alpha))(2 + 3 xi + 2 m xi)");
    } else {
      r.formula = "H_k <= exp(-alpha eta k / gamma) H0 + (32 eta gamma d L^2 / (3 alpha))(2 + xi + 2 m xi)";
    }
  } else if (name == "iterations_for_eps") {
    const double eps = a.real("eps"), H0 = a.real("H0");
    r.values = {{"k", static_cast<double>(iterations_for_eps(eps, H0, a.real("gamma"), a.real("alpha"), a.real("eta")))}};
    r.formula = "k = ceil((gamma / (alpha eta)) log(2 H0 / eps))";
  } else if (name == "eta_for_eps") {
    const Variant v = a.variant();
    const double eps = a.real("eps"), alpha = a.real("alpha"), gamma = a.real("gamma"), L = a.real("L");
    const auto d = a.size("d"), n = a.size("n"), B = a.size("B"), m = a.size("m");
    const double e = eta_for_eps(v, eps, alpha, gamma, d, L, n, B, m);
    const double cap = step_cap(v, alpha, L, m, gamma);
    r.values = {{"eta_eps", e}, {"step_cap", cap}, {"eta", std::min(e, cap)}};
    r.formula = v == Variant::SVRG_LD ? "eta = min(cap, 3 alpha eps / (448 gamma d L^2))"
                                      : "eta = min(cap, 3 alpha eps / (64 gamma d L^2 (2 + xi + 2 m xi)))";
  } else if (name == "gradient_complexity") {
    const auto v = a.maybe_variant();
    const auto k = a.size("k"), B = a.size("B"), m = a.size("m"), n = a.size("n");
    const auto gc = v ? gradient_complexity(*v, k, B, m, n) : gradient_complexity(k, B, m, n);
    r.values = {{"grad_evals", static_cast<double>(gc)}};
    r.formula = "(k / m)(n + 2 B (m - 1))";
  } else if (name == "talagrand_w2") {
    r.values = {{"w2_bound", talagrand_w2(a.real("H"), a.real("alpha"))}};
    r.formula = "W2 <= sqrt(2 H / alpha)";
  } else if (name == "lsi_dissipative") {
    const double C_star = a.real("C_star", 1.0);
    const auto res = lsi_dissipative(a.real("gamma"), a.real("L"), a.real("M"), a.real("b"), a.size("d"),
                                     a.real("A_star"), a.real("B_star"), C_star);
    r.values = {{"alpha", res.alpha}, {"log_alpha", res.log_alpha}, {"C1", res.C1}, {"log_C1", res.log_C1}, {"C2", res.C2}};
    r.formula = "alpha = gamma C1 exp(-C2 gamma)";
    if (!a.has("C_star")) r.notes.push_back("C_star defaulted to 1; its true value is unknown");
  } else if (name == "lsi_weak_morse") {
    const auto res = lsi_weak_morse(a.real("gamma"), a.real("lambda_dagger"), a.real("M"), a.real("L"), a.size("d"),
                                    a.real("L_prime"), a.real("C_F"));
    r.values = {{"alpha", res.alpha},
                {"C3", res.C3},
                {"gamma_floor", res.gamma_floor},
                {"gamma_floor_squared_variant", res.gamma_floor_squared_variant},
                {"poincare", res.poincare}};
    r.formula = "1/alpha = ((2M^2 + 8L^2)/(M^2 L) + (6L(d+1)/M + 2) 35/lambda) gamma";
  } else if (name == "gamma_opt") {
    r.values = {{"gamma", gamma_for_optimization(a.real("eps"), a.size("d"), a.real("L"), a.real("M"), a.real("b"))}};
    r.formula = "gamma = max(4d/eps log(eL/M), 8db/eps^2, 1, 2/M)";
  } else if (name == "gibbs_subopt") {
    r.values = {{"bound", gibbs_suboptimality_bound(a.real("gamma"), a.size("d"), a.real("L"), a.real("M"), a.real("b"))}};
    r.formula = "E_nu F - F* <= (d / 2 gamma) log((eL/M)(b gamma / d + 1))";
  } else if (name == "subopt_decomposition") {
    const double L = a.real("L");
    const double g = gibbs_suboptimality_bound(a.real("gamma"), a.size("d"), L, a.real("M"), a.real("b"));
    r.values = {{"gibbs_bound", g}, {"bound", suboptimality_decomposition(a.real("W2"), L, g)}};
    if (a.has("alpha") || a.has("eps"))
      r.values.emplace_back("kl_requirement", kl_requirement_for_optimization(a.real("alpha"), a.real("eps"), L));
    r.formula = "E F(X_k) - F* <= L W2^2 + 2 (E_nu F - F*)";
  } else if (name == "kl_requirement") {
    r.values = {{"kl_requirement", kl_requirement_for_optimization(a.real("alpha"), a.real("eps"), a.real("L"))}};
    r.formula = "H <= alpha eps / (4 L)";
  } else if (name == "opt_step") {
    r.values = {{"eta", optimization_step_size(a.real("alpha"), a.real("L"), a.size("n"), a.real("gamma"), a.size("d"),
                                               a.real("eps"))}};
    r.formula = "eta = min(alpha / (16 sqrt(6) L^2 sqrt(n) gamma), (3/1792) alpha^2 eps / (L^2 d gamma))";
  } else if (name == "chi") {
    r.values = {{"chi", chi_constant(a.size("d"), a.real("L"), a.real("M"), a.real("b"))}};
    r.formula = "chi = max_{gamma >= 1} (d / gamma) log((eL/M)(b gamma / d + 1))";
  } else if (name == "poincare") {
    const double lam = a.real("lambda_dagger");
    if (!(lam > 0 && lam <= 1)) fail(ErrorKind::InvalidArgument, "lambda_dagger must lie in (0, 1]");
    r.values = {{"kappa", lam / 35}};
    r.formula = "kappa = lambda / 35";
  } else if (name == "anneal_sigma_floor") {
    r.values = {{"sigma", anneal_sigma_floor(a.real("L"), a.real("g"), a.real("eta_bar"), a.real("mu"), a.real("C1"),
                                             a.real("C2"))}};
    r.formula = "sigma = 3 v (8 L g^2 / (C1^2 eta_bar))^(mu/(mu-3)) v (2 / (mu C2 L^2 eta_bar^2))^(mu/(mu-2))";
  } else if (name == "anneal_schedule") {
    AnnealSchedule s{a.real("eta_bar"), a.real("gamma_bar"), a.real("sigma"), a.real("mu"), a.real("g", std::exp(1.0))};
    s.validate();
    const auto idx = a.size("s");
    r.values = {{"eta_s", s.eta(idx)}, {"gamma_s", s.gamma(idx)}};
    r.formula = "eta_s = eta_bar (s + sigma)^(-1/mu), gamma_s = gamma_bar log(g (s + sigma)^(1/mu))";
  } else if (name == "anneal_validate") {
    AnnealSchedule s{a.real("eta_bar"), a.real("gamma_bar"), a.real("sigma"), a.real("mu"), a.real("g", std::exp(1.0))};
    const auto rep = anneal_validate(s, a.real("L"), a.real("C1"), a.real("C2"), a.size("epochs"));
    r.values = {{"ok", rep.ok ? 1.0 : 0.0},
                {"temperature_coupling_ok", rep.temperature_coupling_ok ? 1.0 : 0.0},
                {"monotone", rep.monotone ? 1.0 : 0.0},
                {"gamma_bar_matches", rep.gamma_bar_matches ? 1.0 : 0.0},
                {"max_ratio", rep.max_ratio}};
    if (rep.first_violation)
      r.notes.push_back("first violation at s = " + std::to_string(*rep.first_violation) + ": " + rep.violated);
    r.formula = "Delta gamma_s <= eta_s^2 L^2 <= 1/4";
  } else {
    fail(ErrorKind::Config, "unknown theory formula '" + raw_name + "'");
  }
  a.finish();
  return r;
}

}  // namespace vrld::theory
