#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "vrld/experiment.hpp"
#include "vrld/theory.hpp"

using namespace vrld;

namespace {

const char* kBase = R"(
[potential]
name:str = gaussian_quadratic
n:int = 16
d:int = 2
data_seed:int = 3

[sampler]
variant:str = svrg
eta:real = 0.001
gamma:real = 1
batch:int = 4
epoch_length:int = 4
steps:int = 80

[init]
mean:reals = 1, 1
std:real = 0.5

[theory]
alpha:real = 1

[experiment]
replicates:int = 5
seed:int = 9
checkpoints:reals = 0, 20, 40, 80
)";

ExperimentConfig parse(const std::string& text) { return parse_experiment(ConfigFile::parse(text)); }

std::string with(const std::string& base, const std::string& section, const std::string& line) {
  const auto pos = base.find("[" + section + "]");
  REQUIRE(pos != std::string::npos);
  const auto eol = base.find('\n', pos);
  return base.substr(0, eol + 1) + line + "\n" + base.substr(eol + 1);
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string error_of(const std::function<void()>& f, ErrorKind expected) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.kind() == expected);
    return e.what();
  }
  FAIL("no error");
  return "";
}

std::string data_lines(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

std::vector<std::string> data_header(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') break;
  std::vector<std::string> cols;
  std::stringstream ss(line);
  std::string c;
  while (std::getline(ss, c, ',')) cols.push_back(c);
  return cols;
}

}  // namespace

TEST_CASE("unknown sections and keys are errors") {
  CHECK(error_of([] { parse(with(kBase, "sampler", "etaa:real = 1")); }, ErrorKind::Config).find("etaa") !=
        std::string::npos);
  CHECK_THROWS_AS(parse(std::string(kBase) + "\n[extra]\nx:int = 1\n"), Error);
  CHECK_THROWS_AS(parse(replace(kBase, "variant:str = svrg", "variant:str = adam")), Error);
  CHECK_THROWS_AS(parse(with(kBase, "sampler", "mode:str = auto")), Error);  // no target_eps
}

TEST_CASE("auto mode picks B = m = sqrt(n) and theory step and length") {
  auto text = replace(kBase, "batch:int = 4\nepoch_length:int = 4\n", "");
  text = with(text, "sampler", "mode:str = auto\ntarget_eps:real = 0.5");
  const auto r = resolve(parse(text));
  const auto& s = r.cfg.sampler;
  CHECK(s.batch == 4);
  CHECK(s.epoch_length == 4);
  CHECK(s.eta == theory::recommended_eta(Variant::SVRG_LD, 0.5, 1, 1, 2, 1, 16, 4, 4));
  REQUIRE(r.H0);
  const auto k = theory::iterations_for_eps(0.5, *r.H0, 1, 1, s.eta);
  CHECK(s.steps % 4 == 0);
  CHECK(s.steps >= k);
  CHECK(s.steps < k + 4);
  const auto& sec = r.resolved.section("sampler");
  CHECK(sec.require<double>("eta") == s.eta);
  CHECK(sec.require<std::int64_t>("batch") == 4);
}

TEST_CASE("H0 of a gaussian start on a quadratic is exact") {
  const auto r = resolve(parse(kBase));
  REQUIRE(r.H0);
  const auto& fam = dynamic_cast<const QuadraticFamily&>(r.objective.family());
  GaussianMoments rho{Vector::Ones(2), 0.25 * Matrix::Identity(2, 2)};
  CHECK(*r.H0 == doctest::Approx(kl_gaussians(rho, gibbs_moments(fam, 1.0))).epsilon(1e-14));
}

TEST_CASE("svrg with B < m is rejected citing the hypothesis") {
  const auto text = replace(kBase, "batch:int = 4", "batch:int = 2");
  const auto msg = error_of([&] { resolve(parse(text)); }, ErrorKind::Hypothesis);
  CHECK(msg.find("B >= m") != std::string::npos);
  const auto both = replace(text, "gamma:real = 1", "gamma:real = 0.5");
  const auto msg2 = error_of([&] { resolve(parse(both)); }, ErrorKind::Hypothesis);
  CHECK(msg2.find("B >= m") != std::string::npos);
  CHECK(msg2.find("gamma >= 1") != std::string::npos);
  const auto loose = with(text, "sampler", "enforce_hypotheses:bool = false");
  const auto r = resolve(parse(loose));
  CHECK(std::any_of(r.notes.begin(), r.notes.end(), [](const auto& n) { return n.find("B >= m") != std::string::npos; }));
}

TEST_CASE("step above the cap is rejected when alpha is known") {
  const auto text = replace(kBase, "eta:real = 0.001", "eta:real = 0.01");
  CHECK(error_of([&] { resolve(parse(text)); }, ErrorKind::Hypothesis).find("cap") != std::string::npos);
}

TEST_CASE("runs are deterministic and independent of workers") {
  auto cfg = parse(kBase);
  const auto a = run_experiment(resolve(cfg));
  const auto b = run_experiment(resolve(cfg));
  override_workers(cfg, 3);
  const auto c = run_experiment(resolve(cfg));
  CHECK(summary_csv(a) == summary_csv(b));
  CHECK(summary_csv(a) == summary_csv(c));
  CHECK(trace_csv(a, 4) == trace_csv(c, 4));
  override_seed(cfg, 10);
  CHECK(summary_csv(a) != summary_csv(run_experiment(resolve(cfg))));
}

TEST_CASE("csv schema and embedded config") {
  const auto res = run_experiment(resolve(parse(kBase)));
  const auto sum = summary_csv(res);
  const auto cols = data_header(sum);
  REQUIRE(cols.size() > 3);
  CHECK(cols[0] == "step");
  CHECK(cols[1] == "epoch");
  CHECK(cols[2] == "grad_evals");
  bool seen_bound = false;
  for (const auto& c : cols) {
    if (c.rfind("bound_", 0) == 0) seen_bound = true;
    else CHECK_FALSE(seen_bound);
  }
  CHECK(seen_bound);
  CHECK(sum.find("# eta:real = 0.001\n") != std::string::npos);
  const auto tcols = data_header(trace_csv(res, 0));
  CHECK(tcols[3] == "x_0");
  CHECK(tcols.back().rfind("bound_", 0) == 0);

  // The embedded config parses back to the same resolved experiment.
  std::istringstream in(sum);
  std::string line, embedded;
  std::getline(in, line);
  while (std::getline(in, line) && line[0] == '#') embedded += line.size() > 2 ? line.substr(2) + "\n" : "\n";
  CHECK(ConfigFile::parse(embedded) == res.run.resolved);
  CHECK(summary_csv(run_experiment(resolve(parse_experiment(ConfigFile::parse(embedded))))) == sum);
}

TEST_CASE("gradient counts in the summary") {
  const auto res = run_experiment(resolve(parse(kBase)));
  for (const auto& s : res.summary) CHECK(s.grad_evals == theory::gradient_complexity(s.step, 4, 4, 16));
}

TEST_CASE("compare: identical variants and unreachable thresholds") {
  auto text = std::string(kBase) + "\n[compare]\nvariants:strs = svrg, svrg\nthreshold:real = 1e-9\nmetric:str = moment_kl\n";
  const auto res = run_compare(parse(text));
  REQUIRE(res.rows.size() == 2);
  CHECK_FALSE(res.rows[0].reached);
  const auto csv = compare_csv(res);
  CHECK(csv.find("not_reached") != std::string::npos);
  text = replace(text, "threshold:real = 1e-9", "threshold:real = 100");
  const auto hit = run_compare(parse(text));
  CHECK(hit.rows[0].reached);
  CHECK(hit.rows[0].grad_evals == hit.rows[1].grad_evals);
  CHECK(hit.rows[0].step == hit.rows[1].step);
}

TEST_CASE("sweep: single point equals run, full batch equals lmc") {
  const auto single = std::string(kBase) + "\n[sweep]\naxis:str = eta\nvalues:reals = 0.001\n";
  const auto sw = run_sweep(parse(single));
  REQUIRE(sw.points.size() == 1);
  CHECK(data_lines(summary_csv(sw.points[0])) == data_lines(summary_csv(run_experiment(resolve(parse(kBase))))));

  auto lmc_text = replace(kBase, "variant:str = svrg", "variant:str = lmc");
  lmc_text = replace(lmc_text, "alpha:real = 1", "");
  const auto lmc = run_experiment(resolve(parse(lmc_text)));
  auto sgld_text = replace(lmc_text, "variant:str = lmc", "variant:str = sgld");
  sgld_text = replace(sgld_text, "epoch_length:int = 4", "epoch_length:int = 1");
  sgld_text += "\n[sweep]\naxis:str = batch\nvalues:reals = 16\n";
  const auto full = run_sweep(parse(sgld_text));
  for (std::size_t r = 0; r < lmc.traces.size(); ++r)
    CHECK(lmc.traces[r].iterates == full.points[0].traces[r].iterates);
  CHECK_THROWS_AS(run_sweep(parse(with(replace(single, "eta:real = 0.001\n", ""), "sampler",
                                       "mode:str = auto\ntarget_eps:real = 1"))),
                  Error);
}

TEST_CASE("sweep output has one row per value, replicate and checkpoint") {
  const auto text = std::string(kBase) + "\n[sweep]\naxis:str = epoch\nvalues:reals = 1, 2, 4\n";
  const auto sw = run_sweep(parse(text));
  const auto csv = sweep_csv(sw);
  std::istringstream in(csv);
  std::string line;
  int rows = -1;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 3 * 5 * 4);
}
