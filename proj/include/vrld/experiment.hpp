#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vrld/config.hpp"
#include "vrld/diagnostics.hpp"
#include "vrld/potentials.hpp"
#include "vrld/samplers.hpp"

namespace vrld {

enum class LsiMode { Declared, Dissipative, WeakMorse };
enum class Goal { Sampling, Optimization };

struct TheoryInputs {
  std::optional<double> alpha, lambda_dagger, L_prime, C_F, H0, A_star, B_star;
  double C_star = 1.0;
};

/// Typed view of a config file. See README for every key and its default.
struct ExperimentConfig {
  ConfigFile source;
  ParamMap potential;  // includes `name`
  SamplerConfig sampler;
  bool auto_mode = false;
  double target_eps = 0.0;
  LsiMode lsi = LsiMode::Declared;
  Goal goal = Goal::Sampling;
  bool enforce_hypotheses = true;
  InitLaw init;  // empty mean means the origin
  TheoryInputs theory;
  std::size_t replicates = 1;
  std::size_t workers = 1;
  std::size_t burn_in = 0;
  std::vector<std::size_t> checkpoints;
  std::string output = "out";
  std::vector<Variant> compare_variants;
  double compare_threshold = 0.0;
  std::string compare_metric = "moment_kl";
  std::string sweep_axis;
  Reals sweep_values;
};

/// Checks sections, keys and types; unknown keys are errors.
ExperimentConfig parse_experiment(const ConfigFile& file);

/// A config with every sampler parameter fixed and the objective built.
struct ResolvedExperiment {
  ExperimentConfig cfg;
  FiniteSumObjective objective;
  std::optional<double> alpha;
  std::optional<double> H0;
  std::vector<std::string> notes;
  ConfigFile resolved;  // the effective configuration, embedded in every CSV header
};

/// Builds the objective, fills in theory-chosen parameters in auto mode and
/// checks hypotheses. Throws Hypothesis listing every violated condition.
ResolvedExperiment resolve(const ExperimentConfig& cfg);

/// Every violated hypothesis of the resolved parameters (empty when all hold).
std::vector<std::string> hypothesis_violations(const ResolvedExperiment& r);

struct CheckpointSummary {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::uint64_t grad_evals = 0;
  Vector mean, mean_se;
  double mean_f = 0.0, se_f = 0.0;
  std::optional<double> subopt, subopt_se;
  std::optional<double> moment_kl;
  std::optional<double> bound_kl, bound_kl_decay, bound_kl_bias;
  std::optional<double> bound_gibbs;
};

struct ExperimentResult {
  ResolvedExperiment run;
  std::vector<RunTrace> traces;
  std::vector<CheckpointSummary> summary;
  std::optional<SampleStats> stationary;  // pooled recorded iterates at steps >= burn_in
  std::optional<double> stationary_moment_kl;
  std::optional<Estimate> stationary_subopt;
};

ExperimentResult run_experiment(const ResolvedExperiment& r);

std::string trace_csv(const ExperimentResult& res, std::size_t replicate);
std::string summary_csv(const ExperimentResult& res);
std::string summary_text(const ExperimentResult& res);
/// Writes trace_rNNN.csv, summary.csv and summary.txt under dir; returns the paths.
std::vector<std::filesystem::path> write_outputs(const ExperimentResult& res, const std::filesystem::path& dir);

struct CompareRow {
  Variant variant = Variant::LMC;
  bool reached = false;
  std::size_t step = 0;
  double grad_evals = 0.0;  // mean over replicates for per-replicate metrics
  double se = 0.0;          // NaN for ensemble metrics
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::string metric;
  double threshold = 0.0;
  ConfigFile resolved;
};

/// Runs each variant under the shared seed and reports the component-gradient
/// count at which the metric first drops to the threshold.
/// Metrics: moment_kl (ensemble, quadratic targets), suboptimality (ensemble mean),
/// distance (per replicate |x - x*|^2, mean and SE of the hitting cost).
CompareResult run_compare(const ExperimentConfig& cfg);
std::string compare_csv(const CompareResult& res);

struct SweepResult {
  std::string axis;
  std::vector<double> values;
  std::vector<ExperimentResult> points;
};

/// Axis: eta, gamma, batch, epoch or n.
SweepResult run_sweep(const ExperimentConfig& cfg);
std::string sweep_csv(const SweepResult& res);
std::string sweep_summary_csv(const SweepResult& res);

/// `--seed` / `--workers` overrides.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);
void override_workers(ExperimentConfig& cfg, std::size_t workers);

}  // namespace vrld
