#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome cli(const std::string& args) {
  const std::string cmd = std::string(VRLD_CLI) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), got);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "vrld_cli_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

const char* kRun = R"(
[potential]
name:str = gaussian_quadratic
n:int = 16
d:int = 2

[sampler]
variant:str = lmc
eta:real = 0.05
gamma:real = 2
steps:int = 100

[init]
mean:reals = 1, -1
std:real = 0.5

[experiment]
replicates:int = 4
seed:int = 3
checkpoints:reals = 0, 50, 100
)";

}  // namespace

TEST_CASE("cli theory examples") {
  auto o = cli("theory xi n=16 B=4");
  CHECK(o.code == 0);
  CHECK(o.out.find("xi=0.2\n") != std::string::npos);
  o = cli("theory step_cap svrg α=1 L=1 m=4 γ=1");
  CHECK(o.code == 0);
  CHECK(o.out.find("step_cap=0.0063788") != std::string::npos);
  o = cli("theory gamma_opt eps=0.5 d=1 L=1 M=1 b=0.25");
  CHECK(o.out.find("gamma=8\n") != std::string::npos);
  CHECK(cli("theory unknown_formula").code == 2);
  CHECK(cli("theory").out.find("kl_bound") != std::string::npos);
}

TEST_CASE("cli run is byte-identical on rerun") {
  const auto cfg = write_config("run.cfg", kRun);
  const auto a = scratch() / "a", b = scratch() / "b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(cli("run --config " + cfg.string() + " --out " + a.string() + " --quiet").code == 0);
  REQUIRE(cli("run --config " + cfg.string() + " --out " + b.string() + " --quiet --workers 3").code == 0);
  for (const char* f : {"trace_r000.csv", "trace_r003.csv", "summary.csv", "summary.txt"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  REQUIRE(cli("run --config " + cfg.string() + " --out " + b.string() + " --quiet --seed 4").code == 0);
  CHECK(slurp(a / "summary.csv") != slurp(b / "summary.csv"));
  CHECK(slurp(b / "summary.csv").find("# seed:int = 4") != std::string::npos);
}

TEST_CASE("cli validate-config and exit codes") {
  std::string text = kRun;
  auto o = cli("validate-config --config " + write_config("ok.cfg", text).string());
  CHECK(o.code == 0);
  CHECK(o.out.find("[sampler]") != std::string::npos);

  std::string svrg = text;
  svrg.replace(svrg.find("variant:str = lmc"), 17, "variant:str = svrg\nbatch:int = 2\nepoch_length:int = 4");
  o = cli("validate-config --config " + write_config("bm.cfg", svrg).string());
  CHECK(o.code == 2);
  CHECK(o.out.find("B >= m") != std::string::npos);

  std::string typo = text;
  typo.replace(typo.find("steps:int"), 9, "stepz:int");
  o = cli("run --config " + write_config("typo.cfg", typo).string() + " --quiet");
  CHECK(o.code == 2);
  CHECK(o.out.find("stepz") != std::string::npos);

  std::string blowup = text;
  blowup.replace(blowup.find("eta:real = 0.05"), 15, "eta:real = 3.5");
  blowup.replace(blowup.find("steps:int = 100"), 15, "steps:int = 4000");
  o = cli("run --config " + write_config("blow.cfg", blowup).string() + " --quiet --out " + (scratch() / "c").string());
  CHECK(o.code == 3);
  CHECK(o.out.find("diverged") != std::string::npos);

  CHECK(cli("run --config /no/such/file.cfg").code == 4);
  CHECK(cli("run").code == 2);
  CHECK(cli("frobnicate").code == 1);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("cli auto mode selects B = m = 4 for n = 16") {
  std::string text = kRun;
  text.replace(text.find("variant:str = lmc"), 17, "variant:str = svrg\nmode:str = auto\ntarget_eps:real = 0.5");
  text.replace(text.find("checkpoints:reals = 0, 50, 100\n"), 31, "");
  text += "\n[theory]\nalpha:real = 1\n";
  const auto o = cli("validate-config --config " + write_config("auto.cfg", text).string());
  CHECK(o.code == 0);
  CHECK(o.out.find("batch:int = 4") != std::string::npos);
  CHECK(o.out.find("epoch_length:int = 4") != std::string::npos);
}

TEST_CASE("cli compare and sweep write their tables") {
  std::string text = kRun;
  text += "\n[compare]\nvariants:strs = lmc, sgld\nthreshold:real = 1e-12\nmetric:str = suboptimality\n";
  text += "\n[sweep]\naxis:str = eta\nvalues:reals = 0.01, 0.02\n";
  const auto cfg = write_config("cmp.cfg", text);
  const auto out = scratch() / "cmp";
  auto o = cli("compare --config " + cfg.string() + " --out " + out.string());
  CHECK(o.code == 0);
  CHECK(o.out.find("not_reached") != std::string::npos);
  CHECK(slurp(out / "compare.csv").find("variant,metric,threshold,reached,step,grad_evals,se") != std::string::npos);
  o = cli("sweep --config " + cfg.string() + " --out " + out.string() + " --quiet");
  CHECK(o.code == 0);
  CHECK(o.out.empty());
  CHECK(slurp(out / "sweep.csv").find("axis,value,replicate,step,epoch,grad_evals,x_0,x_1,f") != std::string::npos);
  CHECK(fs::exists(out / "sweep_summary.csv"));
}
