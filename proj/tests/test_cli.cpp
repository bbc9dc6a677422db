#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tasil/cli.hpp"

namespace fs = std::filesystem;
using tasil::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result tasil_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("TASIL_TEST_TMP");
  fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "tasil_cli_test";
  dir /= name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
  CHECK(tasil_cli({}).code == 1);
  CHECK(tasil_cli({"--help"}).code == 0);
  CHECK(tasil_cli({"score", "--help"}).code == 0);
  CHECK(tasil_cli({"frobnicate"}).code == 1);
  CHECK(tasil_cli({"synth", "grid"}).code == 1);  // --seed is required
  CHECK(tasil_cli({"score", "x.tlg", "--conn", "6"}).code == 1);
  CHECK(tasil_cli({"--version"}).out == tasil::cli::version() + "\n");
}

TEST_CASE("data errors exit 2") {
  const auto dir = scratch("errors");
  write(dir / "bad.tlg", "TLG v1 1 2 35.0\nTX\n");
  const auto r = tasil_cli({"score", (dir / "bad.tlg").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.tlg:2: unknown class code 'X'") != std::string::npos);
  CHECK(tasil_cli({"survival", "km", "--cohort", (dir / "missing.csv").string()}).code == 2);
}

TEST_CASE("score writes a sorted CSV and a manifest") {
  const auto dir = scratch("score");
  write(dir / "b.tlg", "TLG v1 2 2 35.0\nTL\nSS\n");
  write(dir / "a.tlg", "TLG v1 1 3 35.0\nTTT\n");
  const auto out = dir / "scores.csv";
  const auto r = tasil_cli({"score", dir.string(), "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(out) ==
        "slide_id,tasil,l_percentage,ts_ratio,ic_coloc,tilab\n"
        "a,,0,1,0,0\n"
        "b,0.4,0.25,0.333333333333,1,0.75\n");
  const auto m = nlohmann::json::parse(slurp(dir / "scores.csv.manifest.json"));
  CHECK(m["tool"] == "tasil");
  CHECK(m["command"] == "score");
  CHECK(m["config"]["conn"] == "8");
  CHECK(m["inputs"].size() == 2);
  CHECK(m["outputs"][0] == out.string());
  CHECK(m.contains("seeds"));

  const auto four = tasil_cli({"score", (dir / "b.tlg").string(), "--conn", "4", "--backend", "scalar"});
  CHECK(four.out.find("b,0.333333333333,") != std::string::npos);
}

TEST_CASE("eval-seg reports agreement") {
  const auto dir = scratch("evalseg");
  write(dir / "t.tlg", "TLG v1 2 2 35.0\nTL\nSS\n");
  write(dir / "p.tlg", "TLG v1 2 2 35.0\nTL\nST\n");
  const auto r = tasil_cli({"eval-seg", "--truth", (dir / "t.tlg").string(), "--pred",
                            (dir / "p.tlg").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("accuracy,0.75\n") != std::string::npos);
  CHECK(r.out.find("S,1,1,0,0\n") != std::string::npos);
  write(dir / "q.tlg", "TLG v1 1 2 35.0\nTL\n");
  CHECK(tasil_cli({"eval-seg", "--truth", (dir / "t.tlg").string(), "--pred",
                   (dir / "q.tlg").string()})
            .code == 2);
}

TEST_CASE("correlate accepts TIL category names") {
  const auto dir = scratch("correlate");
  write(dir / "d.csv",
        "slide_id,tasil,til_level\n"
        "a,0.1,Low\n"
        "b,0.2,Low\n"
        "c,0.5,Moderate\n"
        "d,,High\n"
        "e,0.9,High\n");
  const auto r = tasil_cli({"correlate", "--file", (dir / "d.csv").string(), "--x", "tasil",
                            "--y", "til_level"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("n,4\n") != std::string::npos);
  CHECK(r.out.find("excluded,1\n") != std::string::npos);
  CHECK(r.out.find("p_method,exact-permutation\n") != std::string::npos);
}

TEST_CASE("synth, score, stratify, plot pipeline") {
  const auto dir = scratch("pipeline");
  const auto s = [&](const char* f) { return (dir / f).string(); };
  auto run_ok = [](std::vector<std::string> a) {
    const auto r = tasil_cli(std::move(a));
    INFO(r.err);
    REQUIRE(r.code == 0);
    return r;
  };
  run_ok({"synth", "cohort", "--seed", "1", "--n", "120", "--beta", "3", "--rows", "40", "--cols",
          "40", "--nests", "2", "--out", s("disc.csv"), "--grids-dir", s("grids"), "--threads", "3"});
  run_ok({"synth", "cohort", "--seed", "2", "--n", "120", "--beta", "3", "--rows", "40", "--cols",
          "40", "--nests", "2", "--out", s("val.csv")});
  CHECK(fs::exists(dir / "disc.theta.csv"));
  const auto m = nlohmann::json::parse(slurp(dir / "disc.csv.manifest.json"));
  CHECK(m["seeds"][0] == 1);

  run_ok({"score", s("grids"), "--cohort", s("disc.csv"), "--cohort-out", s("joined.csv"),
          "--out", s("scores.csv")});
  CHECK(slurp(dir / "joined.csv") == slurp(dir / "disc.csv"));

  run_ok({"stratify", "--discovery", s("joined.csv"), "--validation", s("val.csv"), "--out",
          s("report.txt"), "--km-out", s("km.csv")});
  const std::string report = slurp(dir / "report.txt");
  CHECK(report.rfind("score,tasil\nthreshold,", 0) == 0);

  run_ok({"plot-km", "--in", s("report.txt"), "--out", s("km.svg")});
  CHECK(slurp(dir / "km.svg").find("log-rank p = ") != std::string::npos);

  const auto cox = run_ok({"survival", "cox", "--cohort", s("val.csv"), "--covariates", "tasil"});
  CHECK(cox.out.rfind("covariate,beta,se,hazard_ratio", 0) == 0);
  const auto cidx = run_ok({"cindex", "--cohort", s("val.csv"), "--score-col", "tasil,l_percentage",
                            "--direction", "lower-risk"});
  CHECK(cidx.out.find("\ntasil,lower-risk,") != std::string::npos);
  CHECK(cidx.out.find("\nl_percentage,lower-risk,") != std::string::npos);

  run_ok({"synth", "cohort", "--seed", "1", "--n", "120", "--beta", "3", "--rows", "40", "--cols",
          "40", "--nests", "2", "--out", s("again.csv")});
  CHECK(slurp(dir / "again.csv") == slurp(dir / "disc.csv"));
}

TEST_CASE("synthetic effect shows up in cindex") {
  const auto dir = scratch("cindex");
  const auto cohort = (dir / "c.csv").string();
  REQUIRE(tasil_cli({"synth", "cohort", "--seed", "8", "--n", "1000", "--beta", "3", "--threads",
                     "4", "--out", cohort}).code == 0);
  const auto r = tasil_cli({"cindex", "--cohort", cohort, "--score-col", "tasil", "--direction",
                            "lower-risk"});
  REQUIRE(r.code == 0);
  const auto row = r.out.find("\ntasil,lower-risk,");
  REQUIRE(row != std::string::npos);
  const double c = std::stod(r.out.substr(row + std::string("\ntasil,lower-risk,").size()));
  CHECK(c > 0.6);
}

TEST_CASE("survival km and logrank by group column") {
  const auto dir = scratch("km");
  write(dir / "c.csv",
        "case_id,time_months,event,arm\n"
        "a,2,1,0\nb,4,0,0\nc,5,1,0\nd,7,1,0\n"
        "e,1,1,1\nf,3,1,1\ng,6,0,\n");
  const auto km = tasil_cli({"survival", "km", "--cohort", (dir / "c.csv").string(), "--group-col", "arm"});
  REQUIRE(km.code == 0);
  CHECK(km.out.find("0,2,0.75,4,1\n0,4,0.75,3,0\n0,5,0.375,2,1\n0,7,0,1,1\n") != std::string::npos);
  CHECK(km.err.find("excluded 1") != std::string::npos);
  const auto lr = tasil_cli({"survival", "logrank", "--cohort", (dir / "c.csv").string(),
                             "--group-col", "arm"});
  REQUIRE(lr.code == 0);
  CHECK(lr.out.find("n_a,4\nn_b,2\n") != std::string::npos);
}
