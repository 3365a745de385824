#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bpi/cli.hpp"
#include "bpi/inference.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run bpi_run(std::vector<std::string> args) {
  args.insert(args.begin(), "bpi");
  std::ostringstream out, err;
  Run r;
  r.code = bpi::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bpi_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove(p);
  return p;
}

std::string sample_file(std::size_t T = 3000, int d = 2, const std::string& dist = "beta-uniform") {
  const fs::path p = scratch(dist + "_" + std::to_string(T) + "_" + std::to_string(d) + ".csv");
  const Run r = bpi_run({"generate", "--dist", dist, "--T", std::to_string(T), "--d",
                         std::to_string(d), "--seed", "4", "-o", p.string()});
  REQUIRE(r.code == 0);
  return p.string();
}

}  // namespace

TEST_CASE("help and version exit zero", "[cli]") {
  const Run h = bpi_run({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("entropy") != std::string::npos);
  const Run sh = bpi_run({"entropy", "--help"});
  CHECK(sh.code == 0);
  CHECK(sh.out.find("--k-rule") != std::string::npos);
  CHECK(bpi_run({"--version"}).code == 0);
}

TEST_CASE("usage errors exit 2", "[cli]") {
  const std::string in = sample_file();
  CHECK(bpi_run({}).code == 2);
  CHECK(bpi_run({"nope"}).code == 2);
  CHECK(bpi_run({"entropy"}).code == 2);
  CHECK(bpi_run({"entropy", "-i", in, "--k", "10", "--k-rule", "rate"}).code == 2);
  CHECK(bpi_run({"entropy", "-i", in, "--delta", "0.5"}).code == 2);
  CHECK(bpi_run({"entropy", "-i", in, "--eps0", "zero"}).code == 2);
  CHECK(bpi_run({"entropy", "-i", in, "--alpha-frac", "1.5"}).code == 2);
  CHECK(bpi_run({"renyi", "-i", in, "--alpha", "1"}).code == 2);
  CHECK(bpi_run({"mi", "-i", in, "--x", "0", "--y", "7"}).code == 2);
  CHECK(bpi_run({"generate", "--dist", "gaussian"}).code == 2);
  const Run r = bpi_run({"entropy", "-i", in, "--threads", "0"});
  CHECK(r.code == 2);
  CHECK(!r.err.empty());
  CHECK(r.out.empty());
}

TEST_CASE("runtime and data errors exit 1", "[cli]") {
  CHECK(bpi_run({"entropy", "-i", scratch("missing.csv").string()}).code == 1);
  const fs::path bad = scratch("bad.csv");
  std::ofstream(bad) << "0.1,0.2\n0.3\n";
  CHECK(bpi_run({"entropy", "-i", bad.string()}).code == 1);
  const fs::path dup = scratch("dup.csv");
  {
    std::ofstream f(dup);
    for (int i = 0; i < 200; ++i) f << "0.5,0.5\n";
  }
  CHECK(bpi_run({"entropy", "-i", dup.string(), "--k", "5"}).code == 1);
}

TEST_CASE("no output file is written on failure", "[cli]") {
  const std::string in = sample_file();
  const fs::path out = scratch("never.json");
  CHECK(bpi_run({"entropy", "-i", in, "--delta", "2", "-o", out.string()}).code == 2);
  CHECK(!fs::exists(out));
  CHECK(bpi_run({"mi", "-i", in, "--x", "0", "--y", "9", "-o", out.string()}).code == 2);
  CHECK(!fs::exists(out));
}

TEST_CASE("entropy output carries the replay fields", "[cli]") {
  const std::string in = sample_file();
  const Run r = bpi_run({"entropy", "-i", in, "--seed", "9"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["schema_version"] == bpi::cli::schema_version);
  CHECK(j["command"] == "entropy");
  CHECK(j["seed"] == 9);
  CHECK(j["N"].get<int>() + j["M"].get<int>() == 3000);
  CHECK(j["M"] == 2100);
  CHECK(j["k"] == 46);
  CHECK(j["variant"] == "bpi_bias_corrected+boundary");
  CHECK(j["config"]["k_rule"] == "rate");
  CHECK(j["report"]["estimate"].is_number());
  CHECK(j["report"]["k"] == j["k"]);
}

TEST_CASE("reruns are byte identical and thread independent", "[cli]") {
  const std::string in = sample_file();
  const Run a = bpi_run({"entropy", "-i", in, "--k", "15", "--threads", "1"});
  const Run b = bpi_run({"entropy", "-i", in, "--k", "15", "--threads", "3"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const fs::path p1 = scratch("gen1.csv"), p2 = scratch("gen2.csv");
  REQUIRE(bpi_run({"generate", "--T", "500", "--seed", "3", "-o", p1.string()}).code == 0);
  REQUIRE(bpi_run({"generate", "--T", "500", "--seed", "3", "-o", p2.string()}).code == 0);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("the seed changes the split", "[cli]") {
  const std::string in = sample_file();
  const json a = json::parse(bpi_run({"entropy", "-i", in, "--seed", "1"}).out);
  const json b = json::parse(bpi_run({"entropy", "-i", in, "--seed", "2"}).out);
  CHECK(a["report"]["estimate"] != b["report"]["estimate"]);
}

TEST_CASE("fixed k and uncorrected variants", "[cli]") {
  const std::string in = sample_file();
  const json j = json::parse(
      bpi_run({"entropy", "-i", in, "--k", "12", "--no-bias-correction", "--no-boundary-correction"})
          .out);
  CHECK(j["k"] == 12);
  CHECK(j["config"]["k_rule"] == "fixed");
  CHECK(j["variant"] == "bpi+standard");
  CHECK(j["report"]["estimate"] == j["report"]["plain_estimate"]);
  CHECK(j["report"]["boundary_corrected"] == false);
}

TEST_CASE("density CSV has one row per evaluation point", "[cli]") {
  const std::string in = sample_file();
  for (const std::string est : {"standard", "corrected", "uniform-kernel"}) {
    const Run r = bpi_run({"density", "-i", in, "--estimator", est, "--k", "10"});
    REQUIRE(r.code == 0);
    std::istringstream s(r.out);
    std::string line;
    std::getline(s, line);
    CHECK(line.rfind("# bpi density", 0) == 0);
    CHECK(line.find("variant=" + est) != std::string::npos);
    std::getline(s, line);
    CHECK(line.rfind("row,density,", 0) == 0);
    std::size_t rows = 0;
    while (std::getline(s, line)) ++rows;
    CHECK(rows == 900);
  }
}

TEST_CASE("renyi and mutual information", "[cli]") {
  const std::string in = sample_file();
  const json r = json::parse(bpi_run({"renyi", "-i", in, "--alpha", "0.5"}).out);
  CHECK(r["config"]["alpha"] == 0.5);
  CHECK(r["report"]["estimate"].get<double>() > 0.0);
  const json h = json::parse(bpi_run({"renyi", "-i", in, "--alpha", "0.5", "--entropy"}).out);
  CHECK(h["config"]["entropy"] == true);
  const Run m = bpi_run({"mi", "-i", in, "--x", "0", "--y", "1"});
  REQUIRE(m.code == 0);
  const json mj = json::parse(m.out);
  const double diff = mj["h_x"]["estimate"].get<double>() + mj["h_y"]["estimate"].get<double>() -
                      mj["h_xy"]["estimate"].get<double>();
  CHECK_THAT(mj["mi"]["estimate"].get<double>(), Catch::Matchers::WithinAbs(diff, 1e-12));
}

TEST_CASE("tune in oracle and empirical modes", "[cli]") {
  const Run o = bpi_run({"tune", "--dist", "beta-uniform", "--d", "3", "--n-mc", "20000"});
  REQUIRE(o.code == 0);
  const json oj = json::parse(o.out);
  CHECK(oj["variant"] == "oracle");
  CHECK(oj["constants"]["c1"].is_number());
  CHECK(oj["optimal_k"]["k"].get<int>() >= 3);
  CHECK(oj["rate_matched_k"] == 35);
  const std::string in = sample_file();
  const json ej = json::parse(bpi_run({"tune", "-i", in}).out);
  CHECK(ej["variant"] == "empirical");
  CHECK(ej["constants"]["c1"].is_null());
  CHECK(bpi_run({"tune"}).code == 2);
  CHECK(bpi_run({"tune", "-i", in, "--dist", "uniform"}).code == 2);
}

TEST_CASE("experiment merges the spec with flags and writes trials", "[cli]") {
  const fs::path spec = scratch("spec.json");
  std::ofstream(spec) << R"({"generator": "uniform", "d": 2, "T": 1500, "k": 10, "truth": 0.0,
                             "trials": 5})";
  const fs::path out = scratch("exp.json");
  const Run r = bpi_run({"experiment", "--spec", spec.string(), "--trials", "4", "-o",
                         out.string(), "--oracle-mc", "2000"});
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(out));
  CHECK(j["config"]["trials"] == 4);
  CHECK(j["config"]["generator"] == "uniform");
  CHECK(j["config"]["k_rule"] == bpi::to_string(bpi::KRule::fixed));
  CHECK(j["k"] == 10);
  CHECK(j["truth"] == 0.0);
  CHECK(j["summary"]["ks_p"].is_null());
  const std::string csv = slurp(out.string() + ".trials.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(bpi_run({"experiment", "--spec", scratch("none.json").string()}).code == 2);
  CHECK(bpi_run({"experiment", "--k", "2", "--truth", "0"}).code == 2);
  CHECK(bpi_run({"experiment", "--truth-mc", "100"}).code == 2);
}

TEST_CASE("dimension and scan", "[cli]") {
  const std::string in = sample_file(6000, 2, "manifold");
  const Run d = bpi_run({"dimension", "-i", in});
  REQUIRE(d.code == 0);
  const json j = json::parse(d.out);
  CHECK(j["d_rounded"] == 2);
  CHECK(j["config"]["D"] == 3);
  const Run s = bpi_run({"dimension-scan", "-i", in, "--window", "2000", "--stride", "1000"});
  REQUIRE(s.code == 0);
  CHECK(std::count(s.out.begin(), s.out.end(), '\n') == 2 + 5);
  CHECK(bpi_run({"dimension-scan", "-i", in, "--window", "100", "--stride", "10"}).code == 2);
  CHECK(bpi_run({"dimension", "-i", in, "--k1", "10", "--k2", "5"}).code == 2);
}

TEST_CASE("structure compares every pair by default", "[cli]") {
  const std::string in = sample_file(15000, 3, "beta-pair");
  const fs::path models = scratch("models.json");
  std::ofstream(models) << R"({"models": {"full": [[0, 1, 2]], "split": [[0], [1, 2]],
                               "indep": [[0], [1], [2]]}})";
  const Run r = bpi_run({"structure", "-i", in, "--models", models.string(), "--N", "500", "--M",
                         "2000"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["comparisons"].size() == 3);
  for (const auto& c : j["comparisons"]) {
    const bool picks_n = c["statistic"].get<double>() < 0.0;
    CHECK(c["decision"] == (picks_n ? c["model_n"] : c["model_l"]));
  }
  const fs::path bad = scratch("bad_models.json");
  std::ofstream(bad) << R"({"models": {"a": [[0, 1]], "b": [[0], [1], [2]]}})";
  CHECK(bpi_run({"structure", "-i", in, "--models", bad.string()}).code == 2);
  CHECK(bpi_run({"structure", "-i", in, "--models", models.string()}).code == 2);
}

TEST_CASE("experiment replays from its echoed config", "[cli]") {
  const fs::path first = scratch("replay1.json"), cfg = scratch("replay_cfg.json"),
                 second = scratch("replay2.json");
  REQUIRE(bpi_run({"experiment", "--T", "1500", "--trials", "3", "--seed", "11", "--oracle-mc",
                   "5000", "--truth-mc", "20000", "-o", first.string()})
              .code == 0);
  std::ofstream(cfg) << json::parse(slurp(first))["config"].dump();
  REQUIRE(bpi_run({"experiment", "--spec", cfg.string(), "-o", second.string()}).code == 0);
  CHECK(slurp(first) == slurp(second));
  CHECK(slurp(first.string() + ".trials.csv") == slurp(second.string() + ".trials.csv"));
}
