#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vrld/vrld.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kDiverged = 3, kIo = 4 };

int exit_code(vrld_status s) {
  switch (s) {
    case VRLD_OK: return kOk;
    case VRLD_E_INVALID_ARGUMENT:
    case VRLD_E_CONTRACT:
    case VRLD_E_CONFIG:
    case VRLD_E_HYPOTHESIS: return kConfig;
    case VRLD_E_NUMERICAL:
    case VRLD_E_DIVERGED: return kDiverged;
    case VRLD_E_IO: return kIo;
    default: return kUsage;
  }
}

struct Failure {
  vrld_status status;
};

void check(vrld_status s) {
  if (s != VRLD_OK) throw Failure{s};
}

struct Str {
  char* p = nullptr;
  ~Str() { vrld_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

using Experiment = std::unique_ptr<vrld_experiment, decltype(&vrld_experiment_free)>;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
  bool quiet = false;
  std::string query;
  std::vector<std::string> query_args;
};

Experiment load(const Options& o) {
  if (o.config.empty()) {
    std::cerr << "error: --config is required\n";
    throw Failure{VRLD_E_CONFIG};
  }
  vrld_experiment* raw = nullptr;
  check(vrld_experiment_load(o.config.c_str(), &raw));
  Experiment exp(raw, vrld_experiment_free);
  if (o.seed) check(vrld_experiment_set_seed(exp.get(), *o.seed));
  if (o.workers) check(vrld_experiment_set_workers(exp.get(), *o.workers));
  return exp;
}

std::filesystem::path out_dir(const Options& o, const vrld_experiment* exp) {
  if (!o.out.empty()) return o.out;
  Str s;
  check(vrld_experiment_output_dir(exp, &s.p));
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << "error: cannot write " << path.string() << "\n";
    throw Failure{VRLD_E_IO};
  }
}

int cmd_run(const Options& o) {
  auto exp = load(o);
  vrld_result* raw = nullptr;
  check(vrld_experiment_run(exp.get(), &raw));
  std::unique_ptr<vrld_result, decltype(&vrld_result_free)> res(raw, vrld_result_free);
  const auto dir = out_dir(o, exp.get());
  check(vrld_result_write(res.get(), dir.string().c_str()));
  if (!o.quiet) {
    Str text;
    check(vrld_result_summary_text(res.get(), &text.p));
    std::cout << text.str() << "output = " << dir.string() << "\n";
  }
  return kOk;
}

int cmd_compare(const Options& o) {
  auto exp = load(o);
  Str csv;
  check(vrld_experiment_compare(exp.get(), &csv.p));
  const auto path = out_dir(o, exp.get()) / "compare.csv";
  write_text(path, csv.str());
  if (!o.quiet) {
    std::string text = csv.str();
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto end = text.find('\n', pos);
      const std::string line = text.substr(pos, end - pos);
      if (!line.empty() && line[0] != '#') std::cout << line << "\n";
      if (end == std::string::npos) break;
      pos = end + 1;
    }
    std::cout << "output = " << path.string() << "\n";
  }
  return kOk;
}

int cmd_sweep(const Options& o) {
  auto exp = load(o);
  Str csv, summary;
  check(vrld_experiment_sweep(exp.get(), &csv.p, &summary.p));
  const auto dir = out_dir(o, exp.get());
  write_text(dir / "sweep.csv", csv.str());
  write_text(dir / "sweep_summary.csv", summary.str());
  if (!o.quiet) std::cout << "output = " << (dir / "sweep.csv").string() << "\n";
  return kOk;
}

int cmd_validate(const Options& o) {
  auto exp = load(o);
  Str text;
  check(vrld_experiment_validate(exp.get(), &text.p));
  if (!o.quiet) std::cout << text.str();
  return kOk;
}

int cmd_theory(const Options& o) {
  Str text;
  if (o.query.empty() || o.query == "list") {
    check(vrld_theory_catalog(&text.p));
  } else {
    std::vector<const char*> args;
    for (const auto& a : o.query_args) args.push_back(a.c_str());
    check(vrld_theory_query(o.query.c_str(), args.data(), args.size(), &text.p));
  }
  std::cout << text.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced stochastic gradient Langevin dynamics: runs, comparisons, sweeps and theory."};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Experiment config file");
  app.add_option("--seed", o.seed, "Override experiment seed");
  app.add_option("--out", o.out, "Output directory (overrides experiment.output)");
  app.add_option("--workers", o.workers, "Worker threads for replicate chains")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", o.quiet, "Only print errors");

  auto* run = app.add_subcommand("run", "Run replicate chains and write traces and a summary");
  auto* compare = app.add_subcommand("compare", "Gradient evaluations to reach a threshold, per variant");
  auto* sweep = app.add_subcommand("sweep", "Run a grid over one parameter axis");
  auto* validate = app.add_subcommand("validate-config", "Resolve a config and check hypotheses without running");
  auto* theory = app.add_subcommand("theory", "Evaluate a theory formula, e.g. `theory xi n=16 B=4`");
  theory->add_option("query", o.query, "Formula name (omit or `list` for the catalog)");
  theory->add_option("args", o.query_args, "key=value inputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (compare->parsed()) return cmd_compare(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (validate->parsed()) return cmd_validate(o);
    if (theory->parsed()) return cmd_theory(o);
  } catch (const Failure& f) {
    const std::string msg = vrld_last_error();
    if (!msg.empty()) std::cerr << "error (" << vrld_status_name(f.status) << "): " << msg << "\n";
    return exit_code(f.status);
  }
  return kUsage;
}
