#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vrld/potentials.hpp"
#include "vrld/rng.hpp"

namespace vrld {

enum class Variant { LMC, SGLD, SVRG_LD, SARAH_LD };

std::string_view to_string(Variant v) noexcept;
/// Accepts lmc, sgld, svrg, svrg_ld, svrg-ld, sarah, ... (case-insensitive).
Variant parse_variant(std::string_view text);
bool is_variance_reduced(Variant v) noexcept;

/// eta_s = eta_bar (s + sigma)^(-1/mu),  gamma_s = gamma_bar log(g (s + sigma)^(1/mu)).
struct AnnealSchedule {
  double eta_bar = 0.0;
  double gamma_bar = 1.0;
  double sigma = 3.0;
  double mu = 4.0;
  double g = 2.718281828459045;

  double eta(std::size_t s) const;
  double gamma(std::size_t s) const;
  /// Throws Config unless mu > 3, g >= e, sigma >= 3 and eta_bar, gamma_bar > 0.
  void validate() const;
};

struct SamplerConfig {
  Variant variant = Variant::LMC;
  double eta = 0.01;
  double gamma = 1.0;
  std::size_t batch = 1;         // B
  std::size_t epoch_length = 1;  // m
  std::size_t steps = 1;         // K
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;   // selects the RNG streams (see stream_id)
  std::size_t thin = 1;          // record every thin-th iterate (and the last)
  std::vector<std::size_t> checkpoints;  // if nonempty, record exactly these steps instead
  std::optional<AnnealSchedule> anneal;  // per-epoch (eta_s, gamma_s) instead of (eta, gamma)
  bool check_telescoping = false;        // SARAH: assert the increment telescoping identity
};

/// Throws Config describing the first invalid field. Variance-reduced and
/// annealed runs need m | K.
void validate(const SamplerConfig& cfg, std::size_t n);

struct RunTrace {
  std::size_t d = 0;
  std::vector<std::size_t> recorded_steps;
  std::vector<double> iterates;            // recorded_steps.size() x d, row-major
  std::vector<std::uint64_t> grad_evals;   // cumulative after step k, k = 0..steps_done
  std::vector<std::size_t> epoch_starts;   // step index at which each epoch begins
  std::vector<double> epoch_eta;           // step size used in each epoch
  std::vector<double> epoch_gamma;
  Vector final_state;
  std::size_t steps_done = 0;

  std::size_t size() const noexcept { return recorded_steps.size(); }
  Vector iterate(std::size_t j) const;
  /// Row of the recorded iterate at `step`, or nullopt when not recorded.
  std::optional<Vector> at_step(std::size_t step) const;
};

/// Non-finite iterate. Carries the trace up to (not including) the failing step.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, RunTrace partial);
  std::size_t step() const noexcept { return step_; }
  const RunTrace& partial() const noexcept { return partial_; }

 private:
  std::size_t step_;
  RunTrace partial_;
};

// ---------------------------------------------------------------------------
// Building blocks, shared by the runner and by the exhaustive-enumeration tests.

/// Uniform size-B subset of {0..n-1} without replacement (partial Fisher-Yates
/// over a persistent pool), returned sorted.
class IndexSampler {
 public:
  explicit IndexSampler(std::size_t n);
  void draw(std::size_t batch, Philox4x32& rng, std::vector<std::size_t>& out);

 private:
  std::vector<std::size_t> pool_;
};

std::vector<std::size_t> sample_index_set(std::size_t n, std::size_t batch, Philox4x32& rng);

/// Calls f on every size-B subset of {0..n-1} in lexicographic order.
void for_each_subset(std::size_t n, std::size_t batch, const std::function<void(std::span<const std::size_t>)>& f);

/// x - eta grad F(x) + sqrt(2 eta / gamma) noise
Vector step_lmc(const FiniteSumObjective& obj, const Vector& x, double eta, double gamma, const Vector& noise);
/// x - eta (1/B) sum_{i in idx} grad f_i(x) + sqrt(2 eta / gamma) noise
Vector step_sgld(const FiniteSumObjective& obj, const Vector& x, double eta, double gamma,
                 std::span<const std::size_t> idx, const Vector& noise);

/// (1/B) sum_{i in idx} (grad f_i(x) - grad f_i(anchor)) + anchor_grad
void svrg_estimate(const FiniteSumObjective& obj, const Vector& x, const Vector& anchor, const Vector& anchor_grad,
                   std::span<const std::size_t> idx, Vector& out);
/// (1/B) sum_{i in idx} (grad f_i(x) - grad f_i(prev))
void sarah_increment(const FiniteSumObjective& obj, const Vector& x, const Vector& prev,
                     std::span<const std::size_t> idx, Vector& out);

// ---------------------------------------------------------------------------

/// Runs one chain of cfg.steps steps from x0. Noise and minibatch indices come
/// from separate substreams of (cfg.seed, cfg.replicate), so every variant
/// sees the same Gaussian noise sequence.
RunTrace run_chain(const FiniteSumObjective& obj, const SamplerConfig& cfg, const Vector& x0);

RunTrace run_svrg_ld(const FiniteSumObjective& obj, SamplerConfig cfg, const Vector& x0);
RunTrace run_sarah_ld(const FiniteSumObjective& obj, SamplerConfig cfg, const Vector& x0);
RunTrace run_annealed(const FiniteSumObjective& obj, Variant variant, const AnnealSchedule& sched, std::size_t batch,
                      std::size_t epoch_length, std::size_t steps, std::uint64_t seed, const Vector& x0);

/// Initial law N(mean, std^2 I).
struct InitLaw {
  Vector mean;
  double std = 0.0;
};

/// Draw for replicate r from the Init substream of (seed, r).
Vector draw_initial(const InitLaw& law, std::uint64_t seed, std::uint64_t replicate);

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Exceptions are
/// collected and the one from the lowest index is rethrown after all threads join.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Replicate r uses cfg with replicate = r and x0 = draw_initial(law, cfg.seed, r).
/// Results are returned in replicate order regardless of scheduling.
std::vector<RunTrace> run_replicates(const FiniteSumObjective& obj, const SamplerConfig& cfg, const InitLaw& law,
                                     std::size_t replicates, std::size_t workers);

}  // namespace vrld
