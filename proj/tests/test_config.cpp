#include <cstring>
#include <functional>
#include <random>

#include "doctest.h"
#include "vrld/config.hpp"
#include "vrld/format.hpp"

using namespace vrld;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("format_real round-trips bit patterns") {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 20000; ++i) {
    std::uint64_t bits = gen();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    const double back = parse_real(format_real(v), "v");
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(8.0) == "8");
  CHECK(format_real(std::nan("")) == "nan");
  CHECK(format_real(-HUGE_VAL) == "-inf");
}

TEST_CASE("strict number parsing") {
  CHECK(parse_real("2.5e-3", "x") == 0.0025);
  CHECK(kind_of([] { parse_real(" 2.5", "x"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_real("1.0x", "x"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_real("", "x"); }) == ErrorKind::Config);
  CHECK(parse_int("-12", "k") == -12);
  CHECK(kind_of([] { parse_int("1.5", "k"); }) == ErrorKind::Config);
}

TEST_CASE("typed sections") {
  const auto cfg = ConfigFile::parse(R"(
# comment
[sampler]
variant:str = svrg
eta:real = 0.001
steps:int = 400
check:bool = true
[potential]
centers:reals = 1, -1, 2.5
names:strs = a, b
)");
  const auto& s = cfg.section("sampler");
  CHECK(s.require<std::string>("variant") == "svrg");
  CHECK(s.require<double>("eta") == 0.001);
  CHECK(s.require<std::int64_t>("steps") == 400);
  CHECK(s.require<double>("steps") == 400.0);
  CHECK(s.require<bool>("check"));
  CHECK(cfg.section("potential").require<Reals>("centers") == Reals{1, -1, 2.5});
  CHECK(cfg.section("potential").require<Strings>("names") == Strings{"a", "b"});
  CHECK(cfg.section_names() == std::vector<std::string>{"sampler", "potential"});
  CHECK(cfg.section("absent").empty());
}

TEST_CASE("malformed configs are rejected") {
  CHECK(kind_of([] { ConfigFile::parse("x:int = 1\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { ConfigFile::parse("[a]\nx = 1\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { ConfigFile::parse("[a]\nx:float = 1\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { ConfigFile::parse("[a]\nx:int = 1\nx:int = 2\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { ConfigFile::parse("[a]\n[a]\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { ConfigFile::parse("[a]\nb:bool = yes\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { ConfigFile::load("/nonexistent/file.cfg"); }) == ErrorKind::Io);
  try {
    ConfigFile::parse("[a]\n\nx:int = one\n", "f.cfg");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("f.cfg:3") != std::string::npos);
  }
}

TEST_CASE("unknown keys are listed") {
  ParamMap p;
  p.set("eta", 1.0);
  p.set("etta", 1.0);
  p.set("gama", 1.0);
  try {
    p.check_keys({"eta", "gamma"}, "[sampler]");
    FAIL("no error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(msg.find("etta") != std::string::npos);
    CHECK(msg.find("gama") != std::string::npos);
  }
}

TEST_CASE("parse, serialize, parse is the identity") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    ConfigFile f;
    auto& a = f.section_mut("alpha");
    a.set("r", normal(gen));
    a.set("i", static_cast<std::int64_t>(gen() >> 8) - (1LL << 54));
    a.set("b", trial % 2 == 0);
    a.set("s", std::string("text_") + std::to_string(trial));
    Reals rs;
    for (int k = 0; k < trial % 5; ++k) rs.push_back(normal(gen) * 1e-7);
    a.set("rs", rs);
    f.section_mut("beta").set("names", Strings{"x", "y_z"});
    const auto once = ConfigFile::parse(f.serialize());
    CHECK(once == f);
    CHECK(ConfigFile::parse(once.serialize()) == once);
    CHECK(once.serialize() == f.serialize());
  }
}
