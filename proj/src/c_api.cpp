#include "vrld/vrld.h"

#include <cstring>
#include <filesystem>

#include "vrld/config.hpp"
#include "vrld/experiment.hpp"
#include "vrld/format.hpp"
#include "vrld/theory.hpp"

struct vrld_objective {
  vrld::FiniteSumObjective obj;
};

struct vrld_experiment {
  vrld::ExperimentConfig cfg;
};

struct vrld_result {
  vrld::ExperimentResult res;
};

namespace {

thread_local std::string last_error;

vrld_status to_status(vrld::ErrorKind k) {
  using vrld::ErrorKind;
  switch (k) {
    case ErrorKind::InvalidArgument: return VRLD_E_INVALID_ARGUMENT;
    case ErrorKind::Contract: return VRLD_E_CONTRACT;
    case ErrorKind::Numerical: return VRLD_E_NUMERICAL;
    case ErrorKind::Config: return VRLD_E_CONFIG;
    case ErrorKind::Hypothesis: return VRLD_E_HYPOTHESIS;
    case ErrorKind::Diverged: return VRLD_E_DIVERGED;
    case ErrorKind::Io: return VRLD_E_IO;
  }
  return VRLD_E_INTERNAL;
}

template <class F>
vrld_status guard(F&& f) {
  last_error.clear();
  try {
    f();
    return VRLD_OK;
  } catch (const vrld::Error& e) {
    last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return VRLD_E_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) vrld::fail(vrld::ErrorKind::InvalidArgument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* vrld_last_error(void) { return last_error.c_str(); }

const char* vrld_status_name(vrld_status status) {
  switch (status) {
    case VRLD_OK: return "ok";
    case VRLD_E_INVALID_ARGUMENT: return "invalid_argument";
    case VRLD_E_CONTRACT: return "contract_violation";
    case VRLD_E_NUMERICAL: return "numerical_domain";
    case VRLD_E_CONFIG: return "config";
    case VRLD_E_HYPOTHESIS: return "hypothesis_violation";
    case VRLD_E_DIVERGED: return "diverged";
    case VRLD_E_IO: return "io";
    case VRLD_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* vrld_version(void) { return "0.1.0"; }

void vrld_string_free(char* s) { std::free(s); }

vrld_status vrld_objective_create(const char* name, const char* params, vrld_objective** out) {
  return guard([&] {
    need(name, "name");
    need(out, "out");
    *out = nullptr;
    const std::string text = std::string("[p]\n") + (params ? params : "");
    const auto file = vrld::ConfigFile::parse(text, "<params>");
    *out = new vrld_objective{vrld::make_builtin(name, file.section("p"))};
  });
}

void vrld_objective_free(vrld_objective* obj) { delete obj; }

vrld_status vrld_objective_dims(const vrld_objective* obj, size_t* n, size_t* d) {
  return guard([&] {
    need(obj, "objective");
    if (n) *n = obj->obj.n();
    if (d) *d = obj->obj.d();
  });
}

vrld_status vrld_objective_value(const vrld_objective* obj, const double* x, double* out) {
  return guard([&] {
    need(obj, "objective");
    need(x, "x");
    need(out, "out");
    const vrld::Vector v = Eigen::Map<const vrld::Vector>(x, static_cast<Eigen::Index>(obj->obj.d()));
    *out = obj->obj.value(v);
  });
}

vrld_status vrld_objective_gradient(const vrld_objective* obj, const double* x, double* out) {
  return guard([&] {
    need(obj, "objective");
    need(x, "x");
    need(out, "out");
    const auto d = static_cast<Eigen::Index>(obj->obj.d());
    const vrld::Vector g = obj->obj.full_gradient(Eigen::Map<const vrld::Vector>(x, d));
    std::copy_n(g.data(), d, out);
  });
}

vrld_status vrld_objective_minibatch_gradient(const vrld_objective* obj, const double* x, const size_t* idx,
                                              size_t count, double* out) {
  return guard([&] {
    need(obj, "objective");
    need(x, "x");
    need(out, "out");
    if (count) need(idx, "idx");
    const auto d = static_cast<Eigen::Index>(obj->obj.d());
    const vrld::Vector g = obj->obj.minibatch_gradient(Eigen::Map<const vrld::Vector>(x, d),
                                                       std::span<const std::size_t>(idx, count));
    std::copy_n(g.data(), d, out);
  });
}

vrld_status vrld_objective_evaluations(const vrld_objective* obj, uint64_t* out) {
  return guard([&] {
    need(obj, "objective");
    need(out, "out");
    *out = obj->obj.evaluations();
  });
}

vrld_status vrld_experiment_load(const char* path, vrld_experiment** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new vrld_experiment{vrld::parse_experiment(vrld::ConfigFile::load(path))};
  });
}

vrld_status vrld_experiment_parse(const char* text, vrld_experiment** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = nullptr;
    *out = new vrld_experiment{vrld::parse_experiment(vrld::ConfigFile::parse(text))};
  });
}

void vrld_experiment_free(vrld_experiment* exp) { delete exp; }

vrld_status vrld_experiment_set_seed(vrld_experiment* exp, uint64_t seed) {
  return guard([&] {
    need(exp, "experiment");
    vrld::override_seed(exp->cfg, seed);
  });
}

vrld_status vrld_experiment_set_workers(vrld_experiment* exp, size_t workers) {
  return guard([&] {
    need(exp, "experiment");
    vrld::override_workers(exp->cfg, workers);
  });
}

vrld_status vrld_experiment_output_dir(const vrld_experiment* exp, char** out) {
  return guard([&] {
    need(exp, "experiment");
    need(out, "out");
    *out = dup(exp->cfg.output);
  });
}

vrld_status vrld_experiment_validate(const vrld_experiment* exp, char** out) {
  return guard([&] {
    need(exp, "experiment");
    need(out, "out");
    const auto r = vrld::resolve(exp->cfg);
    std::string text = r.resolved.serialize();
    for (const auto& n : r.notes) text += "# note: " + n + "\n";
    *out = dup(text);
  });
}

vrld_status vrld_experiment_run(const vrld_experiment* exp, vrld_result** out) {
  return guard([&] {
    need(exp, "experiment");
    need(out, "out");
    *out = nullptr;
    *out = new vrld_result{vrld::run_experiment(vrld::resolve(exp->cfg))};
  });
}

void vrld_result_free(vrld_result* res) { delete res; }

vrld_status vrld_result_replicates(const vrld_result* res, size_t* out) {
  return guard([&] {
    need(res, "result");
    need(out, "out");
    *out = res->res.traces.size();
  });
}

vrld_status vrld_result_trace_csv(const vrld_result* res, size_t replicate, char** out) {
  return guard([&] {
    need(res, "result");
    need(out, "out");
    *out = dup(vrld::trace_csv(res->res, replicate));
  });
}

vrld_status vrld_result_summary_csv(const vrld_result* res, char** out) {
  return guard([&] {
    need(res, "result");
    need(out, "out");
    *out = dup(vrld::summary_csv(res->res));
  });
}

vrld_status vrld_result_summary_text(const vrld_result* res, char** out) {
  return guard([&] {
    need(res, "result");
    need(out, "out");
    *out = dup(vrld::summary_text(res->res));
  });
}

vrld_status vrld_result_write(const vrld_result* res, const char* dir) {
  return guard([&] {
    need(res, "result");
    need(dir, "dir");
    vrld::write_outputs(res->res, dir);
  });
}

vrld_status vrld_experiment_compare(const vrld_experiment* exp, char** csv) {
  return guard([&] {
    need(exp, "experiment");
    need(csv, "csv");
    *csv = dup(vrld::compare_csv(vrld::run_compare(exp->cfg)));
  });
}

vrld_status vrld_experiment_sweep(const vrld_experiment* exp, char** csv, char** summary_csv) {
  return guard([&] {
    need(exp, "experiment");
    need(csv, "csv");
    const auto res = vrld::run_sweep(exp->cfg);
    std::string a = vrld::sweep_csv(res), b = vrld::sweep_summary_csv(res);
    char* first = dup(a);
    if (summary_csv) {
      try {
        *summary_csv = dup(b);
      } catch (...) {
        std::free(first);
        throw;
      }
    }
    *csv = first;
  });
}

vrld_status vrld_theory_query(const char* name, const char* const* args, size_t nargs, char** out) {
  return guard([&] {
    need(name, "name");
    need(out, "out");
    if (nargs) need(args, "args");
    std::vector<std::string> tokens;
    for (size_t i = 0; i < nargs; ++i) {
      need(args[i], "argument");
      tokens.emplace_back(args[i]);
    }
    const auto q = vrld::theory::evaluate_query(name, tokens);
    std::string text = "query=" + q.name + "\n";
    for (const auto& [k, v] : q.values) text += k + "=" + vrld::format_real(v) + "\n";
    text += "formula=" + q.formula + "\n";
    for (const auto& n : q.notes) text += "note=" + n + "\n";
    *out = dup(text);
  });
}

vrld_status vrld_theory_catalog(char** out) {
  return guard([&] {
    need(out, "out");
    std::string text;
    for (const auto& [name, usage] : vrld::theory::query_catalog()) text += name + "  " + usage + "\n";
    *out = dup(text);
  });
}

}  // extern "C"
