#include "vrld/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "vrld/format.hpp"
#include "vrld/theory.hpp"

namespace vrld {

namespace {

std::size_t get_count(const ParamMap& p, std::string_view key, std::size_t fallback) {
  const auto v = p.get<std::int64_t>(key, static_cast<std::int64_t>(fallback));
  if (v < 0) fail(ErrorKind::Config, std::string(key) + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> integral_list(const Reals& r, const std::string& what) {
  std::vector<std::size_t> out;
  for (double v : r) {
    if (!(v >= 0 && v == std::floor(v) && v < 1e18)) fail(ErrorKind::Config, what + " entries must be nonnegative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

LsiMode parse_lsi(const std::string& s) {
  if (s == "declared") return LsiMode::Declared;
  if (s == "dissipative") return LsiMode::Dissipative;
  if (s == "weak_morse") return LsiMode::WeakMorse;
  fail(ErrorKind::Config, "lsi_mode must be declared, dissipative or weak_morse");
}

std::string_view lsi_name(LsiMode m) {
  switch (m) {
    case LsiMode::Declared: return "declared";
    case LsiMode::Dissipative: return "dissipative";
    case LsiMode::WeakMorse: return "weak_morse";
  }
  return "declared";
}

const QuadraticFamily* as_quadratic(const FiniteSumObjective& obj) {
  return dynamic_cast<const QuadraticFamily*>(&obj.family());
}

std::optional<double> compute_H0(const FiniteSumObjective& obj, const InitLaw& init, double gamma) {
  if (!(init.std > 0)) return std::nullopt;
  const auto d = static_cast<Eigen::Index>(obj.d());
  if (const auto* q = as_quadratic(obj)) {
    GaussianMoments rho{init.mean, init.std * init.std * Matrix::Identity(d, d)};
    return kl_gaussians(rho, gibbs_moments(*q, gamma));
  }
  if (obj.d() == 1) {
    const double centre = obj.regularity().x_star ? std::abs((*obj.regularity().x_star)[0]) : 0.0;
    const double reach = 2 * centre + 10 / std::sqrt(gamma) + 1;
    const double lo = std::min(init.mean[0] - 12 * init.std, -reach);
    const double hi = std::max(init.mean[0] + 12 * init.std, reach);
    return kl_gaussian_to_gibbs_1d(obj, gamma, init.mean[0], init.std, lo, hi);
  }
  return std::nullopt;
}

ConfigFile to_config(const ExperimentConfig& c, const std::optional<double>& alpha, const std::optional<double>& H0) {
  ConfigFile f;
  f.section_mut("potential") = c.potential;
  ParamMap& s = f.section_mut("sampler");
  s.set("variant", std::string(to_string(c.sampler.variant)));
  s.set("mode", std::string(c.auto_mode ? "auto" : "manual"));
  if (!c.sampler.anneal) {
    s.set("eta", c.sampler.eta);
    s.set("gamma", c.sampler.gamma);
  }
  s.set("batch", static_cast<std::int64_t>(c.sampler.batch));
  s.set("epoch_length", static_cast<std::int64_t>(c.sampler.epoch_length));
  s.set("steps", static_cast<std::int64_t>(c.sampler.steps));
  s.set("thin", static_cast<std::int64_t>(c.sampler.thin));
  s.set("lsi_mode", std::string(lsi_name(c.lsi)));
  s.set("objective", std::string(c.goal == Goal::Sampling ? "sampling" : "optimization"));
  s.set("enforce_hypotheses", c.enforce_hypotheses);
  if (c.auto_mode) s.set("target_eps", c.target_eps);
  if (c.sampler.check_telescoping) s.set("check_telescoping", true);
  if (c.sampler.anneal) {
    ParamMap& a = f.section_mut("anneal");
    a.set("eta_bar", c.sampler.anneal->eta_bar);
    a.set("gamma_bar", c.sampler.anneal->gamma_bar);
    a.set("sigma", c.sampler.anneal->sigma);
    a.set("mu", c.sampler.anneal->mu);
    a.set("g", c.sampler.anneal->g);
  }
  ParamMap& i = f.section_mut("init");
  i.set("mean", Reals(c.init.mean.data(), c.init.mean.data() + c.init.mean.size()));
  i.set("std", c.init.std);
  ParamMap& t = f.section_mut("theory");
  auto opt = [&t](const char* key, const std::optional<double>& v) {
    if (v) t.set(key, *v);
  };
  opt("alpha", alpha ? alpha : c.theory.alpha);
  opt("H0", H0 ? H0 : c.theory.H0);
  opt("lambda_dagger", c.theory.lambda_dagger);
  opt("L_prime", c.theory.L_prime);
  opt("C_F", c.theory.C_F);
  opt("A_star", c.theory.A_star);
  opt("B_star", c.theory.B_star);
  t.set("C_star", c.theory.C_star);
  ParamMap& e = f.section_mut("experiment");
  e.set("replicates", static_cast<std::int64_t>(c.replicates));
  e.set("seed", static_cast<std::int64_t>(c.sampler.seed));
  e.set("burn_in", static_cast<std::int64_t>(c.burn_in));
  if (!c.checkpoints.empty()) {
    Reals cp;
    for (auto k : c.checkpoints) cp.push_back(static_cast<double>(k));
    e.set("checkpoints", cp);
  }
  if (!c.compare_variants.empty()) {
    ParamMap& cm = f.section_mut("compare");
    Strings names;
    for (auto v : c.compare_variants) names.emplace_back(to_string(v));
    cm.set("variants", names);
    cm.set("threshold", c.compare_threshold);
    cm.set("metric", c.compare_metric);
  }
  if (!c.sweep_axis.empty()) {
    ParamMap& sw = f.section_mut("sweep");
    sw.set("axis", c.sweep_axis);
    sw.set("values", c.sweep_values);
  }
  return f;
}

std::string header_block(const std::string& title, const ConfigFile& resolved) {
  std::string out = "# vrld " + title + "\n";
  std::istringstream in(resolved.serialize());
  std::string line;
  while (std::getline(in, line)) out += line.empty() ? "#\n" : "# " + line + "\n";
  return out;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out + "\n";
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_experiment(const ConfigFile& file) {
  static const std::vector<std::string> known{"potential", "sampler", "anneal", "init",
                                              "theory",    "experiment", "compare", "sweep"};
  for (const auto& name : file.section_names())
    if (std::find(known.begin(), known.end(), name) == known.end())
      fail(ErrorKind::Config, "unknown section [" + name + "]");
  if (!file.has("potential")) fail(ErrorKind::Config, "missing [potential] section");

  ExperimentConfig c;
  c.source = file;
  c.potential = file.section("potential");
  c.potential.require<std::string>("name");

  const ParamMap& s = file.section("sampler");
  s.check_keys({"variant", "mode", "eta", "gamma", "batch", "epoch_length", "steps", "target_eps", "lsi_mode",
                "objective", "thin", "enforce_hypotheses", "check_telescoping"},
               "[sampler]");
  c.sampler.variant = parse_variant(s.get<std::string>("variant", "lmc"));
  const auto mode = s.get<std::string>("mode", "manual");
  if (mode != "manual" && mode != "auto") fail(ErrorKind::Config, "sampler mode must be manual or auto");
  c.auto_mode = mode == "auto";
  c.sampler.eta = s.get<double>("eta", 0.01);
  c.sampler.gamma = s.get<double>("gamma", 1.0);
  c.sampler.batch = get_count(s, "batch", 1);
  c.sampler.epoch_length = get_count(s, "epoch_length", 1);
  c.sampler.steps = get_count(s, "steps", 1000);
  c.sampler.thin = get_count(s, "thin", 1);
  c.sampler.check_telescoping = s.get<bool>("check_telescoping", false);
  c.target_eps = s.get<double>("target_eps", 0.0);
  c.lsi = parse_lsi(s.get<std::string>("lsi_mode", "declared"));
  const auto goal = s.get<std::string>("objective", "sampling");
  if (goal != "sampling" && goal != "optimization") fail(ErrorKind::Config, "objective must be sampling or optimization");
  c.goal = goal == "sampling" ? Goal::Sampling : Goal::Optimization;
  c.enforce_hypotheses = s.get<bool>("enforce_hypotheses", true);
  if (c.auto_mode && !(c.target_eps > 0)) fail(ErrorKind::Config, "auto mode needs target_eps > 0");

  if (file.has("anneal")) {
    const ParamMap& a = file.section("anneal");
    a.check_keys({"eta_bar", "gamma_bar", "sigma", "mu", "g"}, "[anneal]");
    AnnealSchedule sched;
    sched.eta_bar = a.require<double>("eta_bar");
    sched.gamma_bar = a.require<double>("gamma_bar");
    sched.sigma = a.get<double>("sigma", 3.0);
    sched.mu = a.get<double>("mu", 4.0);
    sched.g = a.get<double>("g", std::exp(1.0));
    sched.validate();
    c.sampler.anneal = sched;
    if (c.auto_mode) fail(ErrorKind::Config, "auto mode and [anneal] cannot be combined");
  }

  const ParamMap& i = file.section("init");
  i.check_keys({"mean", "std"}, "[init]");
  const Reals mean = i.get<Reals>("mean", {});
  c.init.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  c.init.std = i.get<double>("std", 0.0);
  if (!(c.init.std >= 0)) fail(ErrorKind::Config, "init std must be >= 0");

  const ParamMap& t = file.section("theory");
  t.check_keys({"alpha", "C_star", "lambda_dagger", "L_prime", "C_F", "H0", "A_star", "B_star"}, "[theory]");
  c.theory.alpha = t.find<double>("alpha");
  c.theory.lambda_dagger = t.find<double>("lambda_dagger");
  c.theory.L_prime = t.find<double>("L_prime");
  c.theory.C_F = t.find<double>("C_F");
  c.theory.H0 = t.find<double>("H0");
  c.theory.A_star = t.find<double>("A_star");
  c.theory.B_star = t.find<double>("B_star");
  c.theory.C_star = t.get<double>("C_star", 1.0);

  const ParamMap& e = file.section("experiment");
  e.check_keys({"replicates", "seed", "workers", "burn_in", "checkpoints", "output"}, "[experiment]");
  c.replicates = get_count(e, "replicates", 1);
  if (c.replicates < 1) fail(ErrorKind::Config, "replicates must be >= 1");
  c.sampler.seed = static_cast<std::uint64_t>(e.get<std::int64_t>("seed", 0));
  c.workers = std::max<std::size_t>(1, get_count(e, "workers", 1));
  c.burn_in = get_count(e, "burn_in", 0);
  c.checkpoints = integral_list(e.get<Reals>("checkpoints", {}), "checkpoints");
  std::sort(c.checkpoints.begin(), c.checkpoints.end());
  c.output = e.get<std::string>("output", "out");

  if (file.has("compare")) {
    const ParamMap& cm = file.section("compare");
    cm.check_keys({"variants", "threshold", "metric"}, "[compare]");
    for (const auto& v : cm.require<Strings>("variants")) c.compare_variants.push_back(parse_variant(v));
    c.compare_threshold = cm.require<double>("threshold");
    c.compare_metric = cm.get<std::string>("metric", "moment_kl");
    if (c.compare_metric != "moment_kl" && c.compare_metric != "suboptimality" && c.compare_metric != "distance")
      fail(ErrorKind::Config, "compare metric must be moment_kl, suboptimality or distance");
  }
  if (file.has("sweep")) {
    const ParamMap& sw = file.section("sweep");
    sw.check_keys({"axis", "values"}, "[sweep]");
    c.sweep_axis = sw.require<std::string>("axis");
    c.sweep_values = sw.require<Reals>("values");
    static const std::vector<std::string> axes{"eta", "gamma", "batch", "epoch", "n"};
    if (std::find(axes.begin(), axes.end(), c.sweep_axis) == axes.end())
      fail(ErrorKind::Config, "sweep axis must be one of eta, gamma, batch, epoch, n");
    if (c.sweep_values.empty()) fail(ErrorKind::Config, "sweep needs at least one value");
  }
  return c;
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) { cfg.sampler.seed = seed; }
void override_workers(ExperimentConfig& cfg, std::size_t workers) { cfg.workers = std::max<std::size_t>(1, workers); }

// ---------------------------------------------------------------------------

std::vector<std::string> hypothesis_violations(const ResolvedExperiment& r) {
  const ExperimentConfig& c = r.cfg;
  const SamplerConfig& s = c.sampler;
  const Regularity& reg = r.objective.regularity();
  std::vector<std::string> v;
  const bool vr = is_variance_reduced(s.variant);
  if (!s.anneal && s.gamma < 1) v.push_back("gamma >= 1 (got " + format_real(s.gamma) + ")");
  if (s.variant == Variant::SVRG_LD && s.batch < s.epoch_length)
    v.push_back("B >= m for SVRG-LD (got B = " + std::to_string(s.batch) + ", m = " + std::to_string(s.epoch_length) + ")");
  if (vr && r.alpha && reg.L && !s.anneal) {
    const double cap = theory::step_cap(s.variant, *r.alpha, reg.L->value, s.epoch_length, s.gamma);
    if (s.eta > cap * (1 + 1e-12))
      v.push_back("step-size cap eta < " + format_real(cap) + " (got " + format_real(s.eta) + ")");
  }
  if (r.alpha && reg.L && !s.anneal && *r.alpha > s.gamma * reg.L->value * (1 + 1e-12))
    v.push_back("alpha <= gamma L (alpha = " + format_real(*r.alpha) + ")");
  if ((c.lsi == LsiMode::Dissipative || c.goal == Goal::Optimization) && !s.anneal) {
    if (!reg.M || !reg.b) v.push_back("dissipativity constants M and b must be known");
    else if (s.gamma < 2 / reg.M->value)
      v.push_back("gamma >= 2/M (got gamma = " + format_real(s.gamma) + ", 2/M = " + format_real(2 / reg.M->value) + ")");
  }
  if (c.lsi == LsiMode::WeakMorse && !s.anneal && reg.M && reg.L && c.theory.lambda_dagger && c.theory.L_prime &&
      c.theory.C_F) {
    const auto wm = theory::lsi_weak_morse_constants(s.gamma, *c.theory.lambda_dagger, reg.M->value, reg.L->value,
                                                     r.objective.d(), *c.theory.L_prime, *c.theory.C_F);
    if (s.gamma < wm.gamma_floor)
      v.push_back("weak-Morse gamma floor gamma >= " + format_real(wm.gamma_floor) + " (got " + format_real(s.gamma) + ")");
  }
  if (c.auto_mode && reg.L && reg.L->source == Provenance::Estimated)
    v.push_back("L is a grid estimate; declare it before using auto mode");
  return v;
}

ResolvedExperiment resolve(const ExperimentConfig& input) {
  ExperimentConfig c = input;
  FiniteSumObjective obj = make_builtin(c.potential.require<std::string>("name"), c.potential);
  const Regularity& reg = obj.regularity();
  const std::size_t n = obj.n(), d = obj.d();
  std::vector<std::string> notes;

  if (c.init.mean.size() == 0) c.init.mean = Vector::Zero(static_cast<Eigen::Index>(d));
  if (c.init.mean.size() != static_cast<Eigen::Index>(d))
    fail(ErrorKind::Config, "init mean has " + std::to_string(c.init.mean.size()) + " entries, expected d = " +
                                std::to_string(d));
  if (reg.L && reg.L->value < 1) notes.push_back("L < 1: several bounds assume L >= 1");
  if (reg.L && reg.L->source == Provenance::AnalyticOnDomain) notes.push_back("L " + reg.domain_note);

  const ParamMap& given = c.source.section("sampler");
  if (c.auto_mode) {
    if (!is_variance_reduced(c.sampler.variant)) fail(ErrorKind::Config, "auto mode needs variant svrg or sarah");
    if (!reg.L) fail(ErrorKind::Config, "auto mode needs a known L");
    const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    if (!given.contains("batch")) c.sampler.batch = std::max<std::size_t>(1, root);
    if (!given.contains("epoch_length")) c.sampler.epoch_length = std::max<std::size_t>(1, root);
    if (c.goal == Goal::Optimization) {
      if (!reg.M || !reg.b) fail(ErrorKind::Config, "optimization needs dissipativity constants M and b");
      c.sampler.gamma = theory::gamma_for_optimization(c.target_eps, d, reg.L->value, reg.M->value, reg.b->value);
    }
  }

  // LSI constant.
  std::optional<double> alpha = c.theory.alpha;
  const double gamma = c.sampler.gamma;
  if (c.lsi == LsiMode::Dissipative) {
    if (!reg.L || !reg.M || !reg.b) fail(ErrorKind::Config, "lsi_mode dissipative needs L, M and b");
    const OriginConstants oc = origin_constants(obj);
    const double A = c.theory.A_star.value_or(oc.A_star), B = c.theory.B_star.value_or(oc.B_star);
    if (gamma >= 2 / reg.M->value)
      alpha = theory::lsi_dissipative(gamma, reg.L->value, reg.M->value, reg.b->value, d, A, B, c.theory.C_star).alpha;
    if (c.theory.C_star == 1.0) notes.push_back("C_star is unknown; 1 is a placeholder");
  } else if (c.lsi == LsiMode::WeakMorse) {
    if (!reg.L || !reg.M || !c.theory.lambda_dagger || !c.theory.L_prime || !c.theory.C_F)
      fail(ErrorKind::Config, "lsi_mode weak_morse needs L, M, lambda_dagger, L_prime and C_F");
    auto wm = theory::lsi_weak_morse_constants(gamma, *c.theory.lambda_dagger, reg.M->value, reg.L->value, d,
                                               *c.theory.L_prime, *c.theory.C_F);
    if (c.auto_mode && c.goal == Goal::Optimization && c.sampler.gamma < wm.gamma_floor) {
      c.sampler.gamma = wm.gamma_floor;
      wm = theory::lsi_weak_morse_constants(c.sampler.gamma, *c.theory.lambda_dagger, reg.M->value, reg.L->value, d,
                                            *c.theory.L_prime, *c.theory.C_F);
    }
    alpha = wm.alpha;
  }

  std::optional<double> H0 = c.theory.H0;
  if (!H0 && !c.sampler.anneal) H0 = compute_H0(obj, c.init, c.sampler.gamma);

  if (c.auto_mode) {
    if (!alpha) fail(ErrorKind::Config, "auto mode needs an LSI constant (declare theory.alpha or pick an lsi_mode)");
    const double L = reg.L->value, eps = c.target_eps, g = c.sampler.gamma;
    const std::size_t B = c.sampler.batch, m = c.sampler.epoch_length;
    double eps_kl = eps;
    if (c.goal == Goal::Optimization) {
      c.sampler.eta = theory::optimization_step_size(*alpha, L, n, g, d, eps);
      eps_kl = theory::kl_requirement_for_optimization(*alpha, eps, L);
    } else {
      c.sampler.eta = theory::recommended_eta(c.sampler.variant, eps, *alpha, g, d, L, n, B, m);
    }
    if (!H0) fail(ErrorKind::Config, "auto mode needs theory.H0 (it can only be computed for quadratic or 1-d targets)");
    const std::uint64_t k = theory::iterations_for_eps(eps_kl, *H0, g, *alpha, c.sampler.eta);
    const std::uint64_t epochs = std::max<std::uint64_t>(1, (k + m - 1) / m);
    c.sampler.steps = static_cast<std::size_t>(epochs * m);
  }
  c.sampler.checkpoints = c.checkpoints;

  ResolvedExperiment r{c, obj, alpha, H0, notes, to_config(c, alpha, H0)};
  const auto violations = hypothesis_violations(r);
  if (!violations.empty()) {
    if (c.auto_mode || c.enforce_hypotheses) {
      std::string msg = "hypothesis violated:";
      for (const auto& v : violations) msg += "\n  - " + v;
      fail(ErrorKind::Hypothesis, msg);
    }
    for (const auto& v : violations) r.notes.push_back("unchecked hypothesis violated: " + v);
  }
  validate(c.sampler, n);
  return r;
}

// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ResolvedExperiment& r) {
  const ExperimentConfig& c = r.cfg;
  const FiniteSumObjective& obj = r.objective;
  const Regularity& reg = obj.regularity();
  const std::size_t d = obj.d();
  const auto dd = static_cast<Eigen::Index>(d);

  ExperimentResult res{r, run_replicates(obj, c.sampler, c.init, c.replicates, c.workers), {}, {}, {}, {}};
  const auto& traces = res.traces;
  const std::size_t R = traces.size();
  const QuadraticFamily* quad = as_quadratic(obj);
  const bool annealed = c.sampler.anneal.has_value();
  const std::size_t m = std::max<std::size_t>(1, c.sampler.epoch_length);

  std::optional<GaussianMoments> gibbs;
  if (quad && !annealed) gibbs = gibbs_moments(*quad, c.sampler.gamma);

  const bool want_kl_bound = is_variance_reduced(c.sampler.variant) && r.alpha && r.H0 && reg.L && !annealed;
  std::optional<double> gibbs_bound;
  if (reg.L && reg.M && reg.b && !annealed && c.sampler.gamma >= 2 / reg.M->value && reg.L->value >= reg.M->value)
    gibbs_bound = theory::gibbs_suboptimality_bound(c.sampler.gamma, d, reg.L->value, reg.M->value, reg.b->value);

  const auto& steps = traces.front().recorded_steps;
  std::vector<double> rows(R * d);
  for (std::size_t j = 0; j < steps.size(); ++j) {
    CheckpointSummary cs;
    cs.step = steps[j];
    cs.epoch = cs.step / m;
    cs.grad_evals = traces.front().grad_evals[cs.step];
    for (std::size_t t = 0; t < R; ++t)
      std::copy_n(traces[t].iterates.begin() + static_cast<std::ptrdiff_t>(j * d), d, rows.begin() + static_cast<std::ptrdiff_t>(t * d));
    if (R >= 2) {
      const SampleStats st = sample_stats(rows, d, &obj);
      cs.mean = st.mean;
      cs.mean_se = st.mean_se;
      cs.mean_f = *st.mean_value;
      cs.se_f = *st.value_se;
      if (gibbs && R > d) {
        Eigen::LLT<Matrix> llt(st.cov);
        if (llt.info() == Eigen::Success) cs.moment_kl = moment_kl_surrogate({st.mean, st.cov}, *gibbs);
      }
    } else {
      cs.mean = Eigen::Map<const Vector>(rows.data(), dd);
      cs.mean_se = Vector::Zero(dd);
      cs.mean_f = obj.value(cs.mean);
    }
    if (reg.F_star) {
      const Estimate e = suboptimality(obj, rows);
      cs.subopt = e.value;
      cs.subopt_se = e.se;
    }
    if (want_kl_bound) {
      theory::KlBoundInputs in{c.sampler.variant, *r.H0, cs.step, c.sampler.eta, c.sampler.gamma, *r.alpha, d,
                               reg.L->value, obj.n(), c.sampler.batch, c.sampler.epoch_length};
      try {
        const auto b = theory::kl_bound(in);
        cs.bound_kl = b.total();
        cs.bound_kl_decay = b.decay;
        cs.bound_kl_bias = b.bias;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Hypothesis) throw;
      }
    }
    cs.bound_gibbs = gibbs_bound;
    res.summary.push_back(std::move(cs));
  }

  std::vector<double> pooled;
  for (const auto& tr : traces)
    for (std::size_t j = 0; j < tr.recorded_steps.size(); ++j)
      if (tr.recorded_steps[j] >= c.burn_in)
        pooled.insert(pooled.end(), tr.iterates.begin() + static_cast<std::ptrdiff_t>(j * d),
                      tr.iterates.begin() + static_cast<std::ptrdiff_t>((j + 1) * d));
  if (pooled.size() >= 2 * d) {
    res.stationary = sample_stats(pooled, d, &obj);
    if (gibbs) {
      Eigen::LLT<Matrix> llt(res.stationary->cov);
      if (llt.info() == Eigen::Success)
        res.stationary_moment_kl = moment_kl_surrogate({res.stationary->mean, res.stationary->cov}, *gibbs);
    }
    if (reg.F_star) res.stationary_subopt = suboptimality(obj, pooled);
  }
  return res;
}

// ---------------------------------------------------------------------------

std::string trace_csv(const ExperimentResult& res, std::size_t replicate) {
  require(replicate < res.traces.size(), ErrorKind::InvalidArgument, "replicate out of range");
  const auto& c = res.run.cfg;
  const auto& obj = res.run.objective;
  const RunTrace& tr = res.traces[replicate];
  const std::size_t d = obj.d();
  const bool annealed = c.sampler.anneal.has_value();
  const bool has_fstar = obj.regularity().F_star.has_value();
  const bool has_bound = std::any_of(res.summary.begin(), res.summary.end(), [](const auto& s) { return s.bound_kl.has_value(); });
  const std::size_t m = std::max<std::size_t>(1, c.sampler.epoch_length);

  std::string out = header_block("trace replicate=" + std::to_string(replicate), res.run.resolved);
  std::vector<std::string> head{"step", "epoch", "grad_evals"};
  for (std::size_t j = 0; j < d; ++j) head.push_back("x_" + std::to_string(j));
  head.push_back("f");
  if (has_fstar) head.push_back("subopt");
  if (annealed) {
    head.push_back("eta_s");
    head.push_back("gamma_s");
  }
  if (has_bound) {
    head.push_back("bound_kl");
    head.push_back("bound_kl_decay");
    head.push_back("bound_kl_bias");
  }
  out += join(head);

  for (std::size_t j = 0; j < tr.recorded_steps.size(); ++j) {
    const std::size_t step = tr.recorded_steps[j];
    const Vector x = tr.iterate(j);
    const double f = obj.value(x);
    std::vector<std::string> row{std::to_string(step), std::to_string(step / m), std::to_string(tr.grad_evals[step])};
    for (Eigen::Index k = 0; k < x.size(); ++k) row.push_back(format_real(x[k]));
    row.push_back(format_real(f));
    if (has_fstar) row.push_back(format_real(f - obj.regularity().F_star->value));
    if (annealed) {
      const std::size_t s = std::min(step / m, tr.epoch_eta.size() - 1);
      row.push_back(format_real(tr.epoch_eta[s]));
      row.push_back(format_real(tr.epoch_gamma[s]));
    }
    if (has_bound) {
      const auto& cs = res.summary[j];
      row.push_back(opt_cell(cs.bound_kl));
      row.push_back(opt_cell(cs.bound_kl_decay));
      row.push_back(opt_cell(cs.bound_kl_bias));
    }
    out += join(row);
  }
  return out;
}

std::string summary_csv(const ExperimentResult& res) {
  const std::size_t d = res.run.objective.d();
  const auto& S = res.summary;
  auto any = [&](auto member) { return std::any_of(S.begin(), S.end(), [&](const auto& s) { return (s.*member).has_value(); }); };
  const bool sub = any(&CheckpointSummary::subopt), kl = any(&CheckpointSummary::moment_kl),
             bound = any(&CheckpointSummary::bound_kl), gib = any(&CheckpointSummary::bound_gibbs);

  std::string out = header_block("summary replicates=" + std::to_string(res.traces.size()), res.run.resolved);
  std::vector<std::string> head{"step", "epoch", "grad_evals"};
  for (std::size_t j = 0; j < d; ++j) {
    head.push_back("mean_x_" + std::to_string(j));
    head.push_back("se_x_" + std::to_string(j));
  }
  head.push_back("mean_f");
  head.push_back("se_f");
  if (sub) {
    head.push_back("subopt");
    head.push_back("subopt_se");
  }
  if (kl) head.push_back("moment_kl");
  if (bound) {
    head.push_back("bound_kl");
    head.push_back("bound_kl_decay");
    head.push_back("bound_kl_bias");
  }
  if (gib) head.push_back("bound_gibbs_subopt");
  out += join(head);
  for (const auto& s : S) {
    std::vector<std::string> row{std::to_string(s.step), std::to_string(s.epoch), std::to_string(s.grad_evals)};
    for (std::size_t j = 0; j < d; ++j) {
      row.push_back(format_real(s.mean[static_cast<Eigen::Index>(j)]));
      row.push_back(format_real(s.mean_se[static_cast<Eigen::Index>(j)]));
    }
    row.push_back(format_real(s.mean_f));
    row.push_back(format_real(s.se_f));
    if (sub) {
      row.push_back(opt_cell(s.subopt));
      row.push_back(opt_cell(s.subopt_se));
    }
    if (kl) row.push_back(opt_cell(s.moment_kl));
    if (bound) {
      row.push_back(opt_cell(s.bound_kl));
      row.push_back(opt_cell(s.bound_kl_decay));
      row.push_back(opt_cell(s.bound_kl_bias));
    }
    if (gib) row.push_back(opt_cell(s.bound_gibbs));
    out += join(row);
  }
  return out;
}

std::string summary_text(const ExperimentResult& res) {
  const auto& c = res.run.cfg;
  std::string out;
  auto kv = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  kv("potential", res.run.objective.name());
  kv("variant", std::string(to_string(c.sampler.variant)));
  kv("n", std::to_string(res.run.objective.n()));
  kv("d", std::to_string(res.run.objective.d()));
  if (!c.sampler.anneal) {
    kv("eta", format_real(c.sampler.eta));
    kv("gamma", format_real(c.sampler.gamma));
  }
  kv("batch", std::to_string(c.sampler.batch));
  kv("epoch_length", std::to_string(c.sampler.epoch_length));
  kv("steps", std::to_string(c.sampler.steps));
  kv("replicates", std::to_string(res.traces.size()));
  kv("grad_evals_per_replicate", std::to_string(res.traces.front().grad_evals.back()));
  if (res.run.alpha) kv("alpha", format_real(*res.run.alpha));
  if (res.run.H0) kv("H0", format_real(*res.run.H0));
  if (!res.summary.empty()) {
    const auto& last = res.summary.back();
    kv("final_mean_f", format_real(last.mean_f));
    if (last.subopt) kv("final_subopt", format_real(*last.subopt) + " +- " + format_real(*last.subopt_se));
    if (last.moment_kl) kv("final_moment_kl", format_real(*last.moment_kl));
    if (last.bound_kl) kv("final_bound_kl", format_real(*last.bound_kl));
  }
  if (res.stationary) {
    kv("stationary_samples", std::to_string(res.stationary->count));
    if (res.stationary_moment_kl) kv("stationary_moment_kl", format_real(*res.stationary_moment_kl));
    if (res.stationary_subopt)
      kv("stationary_subopt", format_real(res.stationary_subopt->value) + " +- " + format_real(res.stationary_subopt->se));
  }
  for (const auto& n : res.run.notes) kv("note", n);
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<std::filesystem::path> write_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::vector<std::filesystem::path> paths;
  for (std::size_t r = 0; r < res.traces.size(); ++r) {
    char name[32];
    std::snprintf(name, sizeof name, "trace_r%03zu.csv", r);
    paths.push_back(dir / name);
    write_file(paths.back(), trace_csv(res, r));
  }
  paths.push_back(dir / "summary.csv");
  write_file(paths.back(), summary_csv(res));
  paths.push_back(dir / "summary.txt");
  write_file(paths.back(), summary_text(res));
  return paths;
}

// ---------------------------------------------------------------------------

CompareResult run_compare(const ExperimentConfig& cfg) {
  if (cfg.compare_variants.size() < 2) fail(ErrorKind::Config, "compare needs at least two variants");
  CompareResult out;
  out.metric = cfg.compare_metric;
  out.threshold = cfg.compare_threshold;
  for (Variant v : cfg.compare_variants) {
    ExperimentConfig c = cfg;
    c.sampler.variant = v;
    const ResolvedExperiment r = resolve(c);
    if (out.resolved.section_names().empty()) out.resolved = r.resolved;
    const ExperimentResult res = run_experiment(r);
    CompareRow row;
    row.variant = v;
    row.se = std::numeric_limits<double>::quiet_NaN();
    if (cfg.compare_metric == "distance") {
      const auto& xs = r.objective.regularity().x_star;
      if (!xs) fail(ErrorKind::Config, "the distance metric needs a known minimizer");
      std::vector<double> hits;
      for (const auto& tr : res.traces) {
        for (std::size_t j = 0; j < tr.recorded_steps.size(); ++j) {
          if ((tr.iterate(j) - *xs).squaredNorm() <= cfg.compare_threshold) {
            hits.push_back(static_cast<double>(tr.grad_evals[tr.recorded_steps[j]]));
            break;
          }
        }
      }
      row.reached = hits.size() == res.traces.size();
      if (row.reached) {
        double mean = 0, var = 0;
        for (double h : hits) mean += h;
        mean /= static_cast<double>(hits.size());
        for (double h : hits) var += (h - mean) * (h - mean);
        row.grad_evals = mean;
        row.se = hits.size() > 1 ? std::sqrt(var / static_cast<double>(hits.size() - 1) / static_cast<double>(hits.size())) : 0.0;
      }
    } else {
      for (const auto& s : res.summary) {
        const auto& metric = cfg.compare_metric == "moment_kl" ? s.moment_kl : s.subopt;
        if (cfg.compare_metric == "moment_kl" && !metric.has_value() && &s == &res.summary.front())
          fail(ErrorKind::Config, "moment_kl needs a quadratic target and more replicates than dimensions");
        if (metric && *metric <= cfg.compare_threshold) {
          row.reached = true;
          row.step = s.step;
          row.grad_evals = static_cast<double>(s.grad_evals);
          break;
        }
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

std::string compare_csv(const CompareResult& res) {
  std::string out = header_block("compare", res.resolved);
  out += "variant,metric,threshold,reached,step,grad_evals,se\n";
  for (const auto& r : res.rows) {
    std::vector<std::string> row{std::string(to_string(r.variant)), res.metric, format_real(res.threshold),
                                 r.reached ? "true" : "false"};
    if (r.reached) {
      row.push_back(res.metric == "distance" ? "" : std::to_string(r.step));
      row.push_back(format_real(r.grad_evals));
    } else {
      row.push_back("not_reached");
      row.push_back("not_reached");
    }
    row.push_back(format_real(r.se));
    out += join(row);
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_axis.empty()) fail(ErrorKind::Config, "sweep needs a [sweep] section");
  if (cfg.auto_mode && (cfg.sweep_axis == "eta" || cfg.sweep_axis == "gamma"))
    fail(ErrorKind::Config, "sweeping " + cfg.sweep_axis + " conflicts with auto mode, which chooses it");
  SweepResult out;
  out.axis = cfg.sweep_axis;
  for (double v : cfg.sweep_values) {
    ExperimentConfig c = cfg;
    auto count = [&]() {
      if (!(v >= 1 && v == std::floor(v))) fail(ErrorKind::Config, "sweep values for " + cfg.sweep_axis + " must be positive integers");
      return static_cast<std::size_t>(v);
    };
    if (cfg.sweep_axis == "eta") c.sampler.eta = v;
    else if (cfg.sweep_axis == "gamma") c.sampler.gamma = v;
    else if (cfg.sweep_axis == "batch") {
      c.sampler.batch = count();
      c.source.section_mut("sampler").set("batch", static_cast<std::int64_t>(c.sampler.batch));
    } else if (cfg.sweep_axis == "epoch") {
      c.sampler.epoch_length = count();
      c.source.section_mut("sampler").set("epoch_length", static_cast<std::int64_t>(c.sampler.epoch_length));
    } else {
      c.potential.set("n", static_cast<std::int64_t>(count()));
    }
    out.values.push_back(v);
    out.points.push_back(run_experiment(resolve(c)));
  }
  return out;
}

std::string sweep_csv(const SweepResult& res) {
  const auto& first = res.points.front();
  const std::size_t d = first.run.objective.d();
  std::string out = header_block("sweep axis=" + res.axis, first.run.resolved);
  std::vector<std::string> head{"axis", "value", "replicate", "step", "epoch", "grad_evals"};
  for (std::size_t j = 0; j < d; ++j) head.push_back("x_" + std::to_string(j));
  head.push_back("f");
  out += join(head);
  for (std::size_t p = 0; p < res.points.size(); ++p) {
    const auto& pt = res.points[p];
    const std::size_t m = std::max<std::size_t>(1, pt.run.cfg.sampler.epoch_length);
    for (std::size_t r = 0; r < pt.traces.size(); ++r) {
      const auto& tr = pt.traces[r];
      for (std::size_t j = 0; j < tr.recorded_steps.size(); ++j) {
        const std::size_t step = tr.recorded_steps[j];
        const Vector x = tr.iterate(j);
        std::vector<std::string> row{res.axis, format_real(res.values[p]), std::to_string(r), std::to_string(step),
                                     std::to_string(step / m), std::to_string(tr.grad_evals[step])};
        for (Eigen::Index k = 0; k < x.size(); ++k) row.push_back(format_real(x[k]));
        row.push_back(format_real(pt.run.objective.value(x)));
        out += join(row);
      }
    }
  }
  return out;
}

std::string sweep_summary_csv(const SweepResult& res) {
  std::string out = header_block("sweep summary axis=" + res.axis, res.points.front().run.resolved);
  out += "axis,value,step,grad_evals,mean_f,se_f,subopt,moment_kl,bound_kl\n";
  for (std::size_t p = 0; p < res.points.size(); ++p) {
    for (const auto& s : res.points[p].summary) {
      out += join({res.axis, format_real(res.values[p]), std::to_string(s.step), std::to_string(s.grad_evals),
                   format_real(s.mean_f), format_real(s.se_f), opt_cell(s.subopt), opt_cell(s.moment_kl),
                   opt_cell(s.bound_kl)});
    }
  }
  return out;
}

}  // namespace vrld
