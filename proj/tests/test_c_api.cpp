#include <cstring>
#include <string>

#include "doctest.h"
#include "vrld/vrld.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  vrld_string_free(s);
  return out;
}

const char* kConfig = R"(
[potential]
name:str = gaussian_quadratic
n:int = 8
d:int = 1

[sampler]
variant:str = sarah
eta:real = 0.001
gamma:real = 1
batch:int = 2
epoch_length:int = 2
steps:int = 20

[init]
mean:reals = 2
std:real = 0.1

[experiment]
replicates:int = 3
seed:int = 1
)";

}  // namespace

TEST_CASE("objective handles") {
  vrld_objective* obj = nullptr;
  REQUIRE(vrld_objective_create("gaussian_quadratic", "d:int = 1\ncenters:reals = 1, 3", &obj) == VRLD_OK);
  size_t n = 0, d = 0;
  CHECK(vrld_objective_dims(obj, &n, &d) == VRLD_OK);
  CHECK(n == 2);
  CHECK(d == 1);
  const double x = 0;
  double f = 0, g = 0;
  CHECK(vrld_objective_value(obj, &x, &f) == VRLD_OK);
  CHECK(f == 2.5);
  CHECK(vrld_objective_gradient(obj, &x, &g) == VRLD_OK);
  CHECK(g == -2.0);
  const size_t idx[] = {1};
  CHECK(vrld_objective_minibatch_gradient(obj, &x, idx, 1, &g) == VRLD_OK);
  CHECK(g == -3.0);
  const size_t bad[] = {2};
  CHECK(vrld_objective_minibatch_gradient(obj, &x, bad, 1, &g) == VRLD_E_CONTRACT);
  CHECK(std::strlen(vrld_last_error()) > 0);
  uint64_t evals = 0;
  CHECK(vrld_objective_evaluations(obj, &evals) == VRLD_OK);
  CHECK(evals == 3);
  vrld_objective_free(obj);
}

TEST_CASE("error codes and messages") {
  vrld_objective* obj = nullptr;
  CHECK(vrld_objective_create("nope", "", &obj) == VRLD_E_CONFIG);
  CHECK(obj == nullptr);
  CHECK(std::string(vrld_last_error()).find("nope") != std::string::npos);
  CHECK(vrld_objective_create(nullptr, "", &obj) == VRLD_E_INVALID_ARGUMENT);
  CHECK(vrld_objective_value(nullptr, nullptr, nullptr) == VRLD_E_INVALID_ARGUMENT);
  vrld_experiment* exp = nullptr;
  CHECK(vrld_experiment_load("/no/such/config", &exp) == VRLD_E_IO);
  CHECK(std::string(vrld_status_name(VRLD_E_HYPOTHESIS)) == "hypothesis_violation");
  char* out = nullptr;
  const char* args[] = {"n=16", "B=4"};
  CHECK(vrld_theory_query("xi", args, 2, &out) == VRLD_OK);
  CHECK(std::string(vrld_last_error()).empty());
  vrld_string_free(out);
}

TEST_CASE("theory queries") {
  char* out = nullptr;
  const char* args[] = {"svrg", "α=1", "L=1", "m=4", "γ=1"};
  REQUIRE(vrld_theory_query("step_cap", args, 5, &out) == VRLD_OK);
  const auto text = take(out);
  CHECK(text.find("step_cap=0.00637887953849786") != std::string::npos);
  CHECK(text.find("formula=") != std::string::npos);
  REQUIRE(vrld_theory_catalog(&out) == VRLD_OK);
  CHECK(take(out).find("gamma_opt") != std::string::npos);
}

TEST_CASE("experiment lifecycle") {
  vrld_experiment* exp = nullptr;
  REQUIRE(vrld_experiment_parse(kConfig, &exp) == VRLD_OK);
  CHECK(vrld_experiment_set_seed(exp, 5) == VRLD_OK);
  CHECK(vrld_experiment_set_workers(exp, 2) == VRLD_OK);
  char* text = nullptr;
  REQUIRE(vrld_experiment_validate(exp, &text) == VRLD_OK);
  CHECK(take(text).find("seed:int = 5") != std::string::npos);
  vrld_result* res = nullptr;
  REQUIRE(vrld_experiment_run(exp, &res) == VRLD_OK);
  size_t reps = 0;
  CHECK(vrld_result_replicates(res, &reps) == VRLD_OK);
  CHECK(reps == 3);
  REQUIRE(vrld_result_summary_csv(res, &text) == VRLD_OK);
  CHECK(take(text).find("step,epoch,grad_evals") != std::string::npos);
  CHECK(vrld_result_trace_csv(res, 3, &text) == VRLD_E_INVALID_ARGUMENT);
  REQUIRE(vrld_result_trace_csv(res, 2, &text) == VRLD_OK);
  take(text);
  vrld_result_free(res);
  vrld_experiment_free(exp);
}

TEST_CASE("hypothesis failures surface as their own code") {
  std::string cfg = kConfig;
  cfg.replace(cfg.find("gamma:real = 1"), 14, "gamma:real = 0.5");
  vrld_experiment* exp = nullptr;
  REQUIRE(vrld_experiment_parse(cfg.c_str(), &exp) == VRLD_OK);
  vrld_result* res = nullptr;
  CHECK(vrld_experiment_run(exp, &res) == VRLD_E_HYPOTHESIS);
  CHECK(res == nullptr);
  CHECK(std::string(vrld_last_error()).find("gamma >= 1") != std::string::npos);
  vrld_experiment_free(exp);
}

TEST_CASE("divergence surfaces as its own code") {
  std::string cfg = kConfig;
  cfg.replace(cfg.find("eta:real = 0.001"), 16, "eta:real = 3.5");
  cfg.replace(cfg.find("steps:int = 20"), 14, "steps:int = 4000");
  cfg.replace(cfg.find("[experiment]"), 12, "[experiment]\n");
  cfg += "\n";
  cfg.insert(cfg.find("steps:int"), "enforce_hypotheses:bool = false\n");
  vrld_experiment* exp = nullptr;
  REQUIRE(vrld_experiment_parse(cfg.c_str(), &exp) == VRLD_OK);
  vrld_result* res = nullptr;
  CHECK(vrld_experiment_run(exp, &res) == VRLD_E_DIVERGED);
  vrld_experiment_free(exp);
}
