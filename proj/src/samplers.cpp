#include "vrld/samplers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <thread>

namespace vrld {

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::LMC: return "lmc";
    case Variant::SGLD: return "sgld";
    case Variant::SVRG_LD: return "svrg_ld";
    case Variant::SARAH_LD: return "sarah_ld";
  }
  return "unknown";
}

Variant parse_variant(std::string_view text) {
  std::string key;
  for (char c : text) key += c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (key == "lmc") return Variant::LMC;
  if (key == "sgld") return Variant::SGLD;
  if (key == "svrg" || key == "svrg_ld") return Variant::SVRG_LD;
  if (key == "sarah" || key == "sarah_ld") return Variant::SARAH_LD;
  fail(ErrorKind::Config, "unknown sampler variant '" + std::string(text) + "'");
}

bool is_variance_reduced(Variant v) noexcept { return v == Variant::SVRG_LD || v == Variant::SARAH_LD; }

double AnnealSchedule::eta(std::size_t s) const {
  return eta_bar * std::pow(static_cast<double>(s) + sigma, -1.0 / mu);
}

double AnnealSchedule::gamma(std::size_t s) const {
  return gamma_bar * std::log(g * std::pow(static_cast<double>(s) + sigma, 1.0 / mu));
}

void AnnealSchedule::validate() const {
  require(eta_bar > 0, ErrorKind::Config, "anneal eta_bar must be positive");
  require(gamma_bar > 0, ErrorKind::Config, "anneal gamma_bar must be positive");
  require(mu > 3, ErrorKind::Config, "anneal schedule needs mu > 3");
  require(g >= std::numbers::e, ErrorKind::Config, "anneal schedule needs g >= e");
  require(sigma >= 3, ErrorKind::Config, "anneal schedule needs sigma >= 3");
}

void validate(const SamplerConfig& cfg, std::size_t n) {
  require(cfg.steps >= 1, ErrorKind::Config, "K (steps) must be >= 1");
  require(cfg.epoch_length >= 1, ErrorKind::Config, "m (epoch_length) must be >= 1");
  require(cfg.thin >= 1, ErrorKind::Config, "thin must be >= 1");
  if (cfg.variant != Variant::LMC)
    require(cfg.batch >= 1 && cfg.batch <= n, ErrorKind::Config,
            "B (batch) must lie in [1, n] with n = " + std::to_string(n));
  if (cfg.anneal) {
    cfg.anneal->validate();
  } else {
    require(std::isfinite(cfg.eta) && cfg.eta > 0, ErrorKind::Config, "eta must be positive");
    require(std::isfinite(cfg.gamma) && cfg.gamma >= 1, ErrorKind::Config, "gamma must be >= 1");
  }
  if (is_variance_reduced(cfg.variant) || cfg.anneal)
    require(cfg.steps % cfg.epoch_length == 0, ErrorKind::Config,
            "m must divide K (K = " + std::to_string(cfg.steps) + ", m = " + std::to_string(cfg.epoch_length) + ")");
  for (std::size_t c : cfg.checkpoints)
    require(c <= cfg.steps, ErrorKind::Config, "checkpoint " + std::to_string(c) + " exceeds K");
}

Vector RunTrace::iterate(std::size_t j) const {
  require(j < size(), ErrorKind::InvalidArgument, "trace row out of range");
  return Eigen::Map<const Vector>(iterates.data() + j * d, static_cast<Eigen::Index>(d));
}

std::optional<Vector> RunTrace::at_step(std::size_t step) const {
  auto it = std::lower_bound(recorded_steps.begin(), recorded_steps.end(), step);
  if (it == recorded_steps.end() || *it != step) return std::nullopt;
  return iterate(static_cast<std::size_t>(it - recorded_steps.begin()));
}

DivergenceError::DivergenceError(std::size_t step, RunTrace partial)
    : Error(ErrorKind::Diverged, "non-finite iterate at step " + std::to_string(step)),
      step_(step),
      partial_(std::move(partial)) {}

// ---------------------------------------------------------------------------

IndexSampler::IndexSampler(std::size_t n) : pool_(n) {
  for (std::size_t i = 0; i < n; ++i) pool_[i] = i;
}

void IndexSampler::draw(std::size_t batch, Philox4x32& rng, std::vector<std::size_t>& out) {
  const std::size_t n = pool_.size();
  require(batch >= 1 && batch <= n, ErrorKind::InvalidArgument, "subset size must lie in [1, n]");
  for (std::size_t j = 0; j < batch; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(pool_[j], pool_[pick(rng)]);
  }
  out.assign(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(batch));
  std::sort(out.begin(), out.end());
}

std::vector<std::size_t> sample_index_set(std::size_t n, std::size_t batch, Philox4x32& rng) {
  require(batch >= 1 && batch <= n, ErrorKind::InvalidArgument, "subset size must lie in [1, n]");
  std::vector<std::size_t> out;
  IndexSampler(n).draw(batch, rng, out);
  return out;
}

void for_each_subset(std::size_t n, std::size_t batch, const std::function<void(std::span<const std::size_t>)>& f) {
  require(batch >= 1 && batch <= n, ErrorKind::InvalidArgument, "subset size must lie in [1, n]");
  std::vector<std::size_t> idx(batch);
  for (std::size_t j = 0; j < batch; ++j) idx[j] = j;
  while (true) {
    f(idx);
    std::size_t j = batch;
    while (j > 0 && idx[j - 1] == n - batch + (j - 1)) --j;
    if (j == 0) return;
    ++idx[j - 1];
    for (std::size_t t = j; t < batch; ++t) idx[t] = idx[t - 1] + 1;
  }
}

Vector step_lmc(const FiniteSumObjective& obj, const Vector& x, double eta, double gamma, const Vector& noise) {
  Vector next = x - eta * obj.full_gradient(x) + std::sqrt(2 * eta / gamma) * noise;
  if (!next.allFinite()) fail(ErrorKind::Diverged, "non-finite LMC update");
  return next;
}

Vector step_sgld(const FiniteSumObjective& obj, const Vector& x, double eta, double gamma,
                 std::span<const std::size_t> idx, const Vector& noise) {
  Vector next = x - eta * obj.minibatch_gradient(x, idx) + std::sqrt(2 * eta / gamma) * noise;
  if (!next.allFinite()) fail(ErrorKind::Diverged, "non-finite SGLD update");
  return next;
}

void svrg_estimate(const FiniteSumObjective& obj, const Vector& x, const Vector& anchor, const Vector& anchor_grad,
                   std::span<const std::size_t> idx, Vector& out) {
  obj.batch_difference(x, anchor, idx, out);
  out += anchor_grad;
}

void sarah_increment(const FiniteSumObjective& obj, const Vector& x, const Vector& prev,
                     std::span<const std::size_t> idx, Vector& out) {
  obj.batch_difference(x, prev, idx, out);
}

// ---------------------------------------------------------------------------

namespace {

class Recorder {
 public:
  Recorder(const SamplerConfig& cfg, RunTrace& trace) : cfg_(cfg), trace_(trace) {
    if (!cfg.checkpoints.empty()) {
      wanted_ = cfg.checkpoints;
      std::sort(wanted_.begin(), wanted_.end());
      wanted_.erase(std::unique(wanted_.begin(), wanted_.end()), wanted_.end());
    }
  }
  void offer(std::size_t step, const Vector& x) {
    bool keep;
    if (wanted_.empty()) {
      keep = step % cfg_.thin == 0 || step == cfg_.steps;
    } else {
      keep = next_ < wanted_.size() && wanted_[next_] == step;
      if (keep) ++next_;
    }
    if (!keep) return;
    trace_.recorded_steps.push_back(step);
    trace_.iterates.insert(trace_.iterates.end(), x.data(), x.data() + x.size());
  }

 private:
  const SamplerConfig& cfg_;
  RunTrace& trace_;
  std::vector<std::size_t> wanted_;
  std::size_t next_ = 0;
};

}  // namespace

RunTrace run_chain(const FiniteSumObjective& shared_obj, const SamplerConfig& cfg, const Vector& x0) {
  const std::size_t n = shared_obj.n();
  const auto d = static_cast<Eigen::Index>(shared_obj.d());
  validate(cfg, n);
  require(x0.size() == d, ErrorKind::InvalidArgument, "x0 has the wrong dimension");
  require(x0.allFinite(), ErrorKind::InvalidArgument, "x0 must be finite");

  // Private counter so per-step evaluation counts are measured for this chain alone.
  const FiniteSumObjective obj = shared_obj.with_regularity(shared_obj.regularity());

  RunTrace trace;
  trace.d = shared_obj.d();
  trace.grad_evals.reserve(cfg.steps + 1);
  trace.grad_evals.push_back(0);
  Recorder recorder(cfg, trace);

  Philox4x32 noise_rng(cfg.seed, stream_id(cfg.replicate, Substream::Noise));
  Philox4x32 index_rng(cfg.seed, stream_id(cfg.replicate, Substream::Index));
  std::normal_distribution<double> normal;
  IndexSampler sampler(n);
  std::vector<std::size_t> idx;

  const bool vr = is_variance_reduced(cfg.variant);
  const std::size_t m = cfg.epoch_length;
  const bool epochs = vr || cfg.anneal.has_value();

  Vector x = x0, prev(d), v(d), inc(d), anchor(d), anchor_grad(d), noise(d), telescoped(d);
  double eta = cfg.eta, gamma = cfg.gamma, scale = std::sqrt(2 * eta / gamma);
  recorder.offer(0, x);

  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const std::size_t r = epochs ? k % m : k;
    if (epochs && r == 0) {
      const std::size_t s = k / m;
      if (cfg.anneal) {
        eta = cfg.anneal->eta(s);
        gamma = cfg.anneal->gamma(s);
        scale = std::sqrt(2 * eta / gamma);
      }
      trace.epoch_starts.push_back(k);
      trace.epoch_eta.push_back(eta);
      trace.epoch_gamma.push_back(gamma);
    }

    for (Eigen::Index j = 0; j < d; ++j) noise[j] = normal(noise_rng);

    auto diverged = [&] {
      trace.final_state = x;
      trace.steps_done = k;
      shared_obj.add_evaluations(obj.evaluations());
      return DivergenceError(k + 1, std::move(trace));
    };

    try {
      switch (cfg.variant) {
        case Variant::LMC:
          obj.full_gradient(x, v);
          break;
        case Variant::SGLD:
          sampler.draw(cfg.batch, index_rng, idx);
          obj.batch_gradient(x, idx, v);
          break;
        case Variant::SVRG_LD:
          if (r == 0) {
            anchor = x;
            obj.full_gradient(anchor, anchor_grad);
            v = anchor_grad;
          } else {
            sampler.draw(cfg.batch, index_rng, idx);
            svrg_estimate(obj, x, anchor, anchor_grad, idx, v);
          }
          break;
        case Variant::SARAH_LD:
          if (r == 0) {
            obj.full_gradient(x, v);
            anchor_grad = v;
            telescoped.setZero();
          } else {
            sampler.draw(cfg.batch, index_rng, idx);
            sarah_increment(obj, x, prev, idx, inc);
            v += inc;
            if (cfg.check_telescoping) {
              telescoped += inc;
              const double gap = (v - telescoped - anchor_grad).norm();
              if (gap > 1e-12 * (1 + v.norm() + telescoped.norm() + anchor_grad.norm()))
                fail(ErrorKind::Contract, "SARAH telescoping identity broken at step " + std::to_string(k));
            }
          }
          break;
      }
    } catch (const Error& e) {
      // A finite iterate can still overflow the gradient sum.
      if (e.kind() != ErrorKind::Numerical) throw;
      throw diverged();
    }

    prev = x;
    x.noalias() -= eta * v;
    x.noalias() += scale * noise;
    if (!x.allFinite()) {
      x = prev;
      throw diverged();
    }
    trace.grad_evals.push_back(obj.evaluations());
    recorder.offer(k + 1, x);
  }

  trace.final_state = x;
  trace.steps_done = cfg.steps;
  shared_obj.add_evaluations(obj.evaluations());
  return trace;
}

RunTrace run_svrg_ld(const FiniteSumObjective& obj, SamplerConfig cfg, const Vector& x0) {
  cfg.variant = Variant::SVRG_LD;
  return run_chain(obj, cfg, x0);
}

RunTrace run_sarah_ld(const FiniteSumObjective& obj, SamplerConfig cfg, const Vector& x0) {
  cfg.variant = Variant::SARAH_LD;
  return run_chain(obj, cfg, x0);
}

RunTrace run_annealed(const FiniteSumObjective& obj, Variant variant, const AnnealSchedule& sched, std::size_t batch,
                      std::size_t epoch_length, std::size_t steps, std::uint64_t seed, const Vector& x0) {
  SamplerConfig cfg;
  cfg.variant = variant;
  cfg.anneal = sched;
  cfg.batch = batch;
  cfg.epoch_length = epoch_length;
  cfg.steps = steps;
  cfg.seed = seed;
  return run_chain(obj, cfg, x0);
}

Vector draw_initial(const InitLaw& law, std::uint64_t seed, std::uint64_t replicate) {
  require(law.std >= 0 && std::isfinite(law.std), ErrorKind::Config, "init std must be finite and >= 0");
  Vector x = law.mean;
  if (law.std == 0) return x;
  Philox4x32 rng(seed, stream_id(replicate, Substream::Init));
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] += law.std * normal(rng);
  return x;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<RunTrace> run_replicates(const FiniteSumObjective& obj, const SamplerConfig& cfg, const InitLaw& law,
                                     std::size_t replicates, std::size_t workers) {
  require(replicates >= 1, ErrorKind::Config, "replicates must be >= 1");
  validate(cfg, obj.n());
  std::vector<RunTrace> out(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    SamplerConfig local = cfg;
    local.replicate = r;
    out[r] = run_chain(obj, local, draw_initial(law, cfg.seed, r));
  });
  return out;
}

}  // namespace vrld
