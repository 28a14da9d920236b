#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using json = nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sgues");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = sgues::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sgues_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

const std::string kScalarUser = R"({
  "dimension": 1,
  "modes": [[["-0.5"]], [["0.3"]]],
  "edges": [[1, 2, [["2"]]], [2, 1, [["0.5"]]]],
  "self_jumps": [[1, [["0.7"]]], [2, [["1.1"]]]],
  "constraints": {
    "impulse_adt": [
      {"mode": 1, "N0": "-1", "T_J": "0.5", "direction": "lower"},
      {"mode": 2, "N0": "1", "T_J": "0.5", "direction": "upper"}
    ],
    "switching_adt": {"lower": {"N0": "-1", "T": "1"}},
    "activation_groups": [
      {"modes": [2], "N_a": "0.3", "T_a": "0.5", "direction": "upper"},
      {"modes": [1], "N_a": "0.7", "T_a": "-0.5", "direction": "lower"}
    ]
  },
  "lyapunov": {
    "data": {
      "lambda_bar": ["-1", "0.6"],
      "r_bar": [["0.49", "4"], ["0.25", "1.21"]],
      "P": [[1, [["1"]]], [2, [["1"]]]]
    }
  }
})";

}  // namespace

TEST_CASE("certify reproduces the table and exits 0") {
  const auto dir = fresh_dir("certify");
  const auto r = run_cli({"certify", fixture::data_path("two_mode_unstable.json"), "--L", "1,2,3", "--cs", "0.6",
                          "--ci", "1=0.8", "--ci", "2=2.3", "--out", dir.string()});
  CHECK(r.code == 0);
  const auto rep = json::parse(slurp(dir / "certification_report.json"));
  REQUIRE(rep.at("certificates").size() == 3);
  CHECK(rep["certificates"][0]["valid"] == false);
  CHECK(rep["certificates"][1]["valid"] == true);
  CHECK(std::abs(rep["certificates"][1]["K"].get<double>() - 682.917) < 0.01);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(slurp(dir / "combined_bound.csv").starts_with("s,beta,beta_1"));
}

TEST_CASE("certify exits 1 without a valid certificate") {
  const auto dir = fresh_dir("invalid");
  const auto r = run_cli({"certify", fixture::data_path("two_mode_unstable.json"), "--L", "1", "--cs", "0.6", "--ci",
                          "1=0.8", "--ci", "2=2.3", "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(fs::exists(dir / "certification_report.json"));
}

TEST_CASE("one-way graph has no walk of length two") {
  const auto dir = fresh_dir("noway");
  std::string text = kScalarUser;
  text.replace(text.find(R"(, [2, 1, [["0.5"]]])"), std::string(R"(, [2, 1, [["0.5"]]])").size(), "");
  text.replace(text.find(R"([["0.49", "4"], ["0.25", "1.21"]])"), std::string(R"([["0.49", "4"], ["0.25", "1.21"]])").size(),
               R"([["0.49", "4"], [null, "1.21"]])");
  const auto spec = write_file(dir, "spec.json", text);
  const auto r = run_cli({"certify", spec.string(), "--L", "2", "--cs", "0.5", "--ci", "1=0.5", "--ci", "2=2", "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("no-walk"));
}

TEST_CASE("classification mismatch is an input error") {
  const auto dir = fresh_dir("mismatch");
  std::string text = slurp(fixture::data_path("two_mode_perturbed.json"));
  text.replace(text.find(R"("continuous": [1], "user": [2])"), std::string(R"("continuous": [1], "user": [2])").size(),
               R"("continuous": [1, 2])");
  const auto spec = write_file(dir, "spec.json", text);
  const auto r = run_cli({"synth", spec.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("classification mismatch"));
}

TEST_CASE("bad input is reported with its line") {
  const auto dir = fresh_dir("bad");
  const auto spec = write_file(dir, "spec.json", "{\n  \"dimension\": 1,\n  \"modes\": [[[\"x\"]]]\n}\n");
  const auto r = run_cli({"synth", spec.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("spec.json:3:"));
  CHECK(run_cli({"certify", "/nonexistent.json", "--out", dir.string()}).code == 2);
}

TEST_CASE("user Lyapunov data passes through synthesis") {
  const auto dir = fresh_dir("user");
  const auto spec = write_file(dir, "spec.json", kScalarUser);
  const auto r = run_cli({"synth", spec.string(), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto rep = json::parse(slurp(dir / "lyapunov_report.json"));
  CHECK(rep["source"] == "user");
  CHECK(rep["lyapunov"]["lambda_bar"][0].get<double>() == -1.0);
  CHECK(rep["lyapunov"]["r_bar"][0][1].get<double>() == 4.0);
}

TEST_CASE("outputs are deterministic apart from the manifest") {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  for (const auto& dir : {a, b}) {
    const auto r = run_cli({"simulate", fixture::data_path("two_mode_unstable.json"), "--seeds", "3", "--horizon", "1",
                            "--out", dir.string()});
    REQUIRE(r.code == 0);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == "manifest.json") continue;
    CHECK(slurp(entry.path()) == slurp(b / name));
    ++compared;
  }
  CHECK(compared >= 7);
  CHECK(slurp(a / "traj_seed_0.csv").starts_with("t,x_1,x_2,mode,n_nu,n_mu,bound_value"));
}

TEST_CASE("zero horizon simulation") {
  const auto dir = fresh_dir("zero");
  const auto r = run_cli({"simulate", fixture::data_path("two_mode_unstable.json"), "--seeds", "1", "--horizon", "0",
                          "--out", dir.string()});
  CHECK(r.code == 0);
  const auto rep = json::parse(slurp(dir / "run_report.json"));
  REQUIRE(rep["seeds"].size() == 1);
  CHECK(rep["seeds"][0]["events"] == 0);
  CHECK_THAT(rep["max_ratio"].get<double>(), Catch::Matchers::WithinRel(1.0 / 682.917, 1e-5));
}

TEST_CASE("verify recomputes a stored report") {
  const auto dir = fresh_dir("verify");
  const auto spec = fixture::data_path("two_mode_unstable.json");
  REQUIRE(run_cli({"certify", spec, "--out", dir.string()}).code == 0);
  const auto report = (dir / "certification_report.json").string();
  const auto ok = run_cli({"verify", spec, "--report", report});
  CHECK(ok.code == 0);
  CHECK_THAT(ok.out, ContainsSubstring("[matches]"));

  auto doc = json::parse(slurp(report));
  doc["certificates"][1]["K"] = 1.0;
  write_file(dir, "tampered.json", doc.dump());
  const auto bad = run_cli({"verify", spec, "--report", (dir / "tampered.json").string()});
  CHECK(bad.code == 1);
  CHECK_THAT(bad.out, ContainsSubstring("MISMATCH"));
}

TEST_CASE("version and usage") {
  CHECK(run_cli({"--version"}).out.find(sgues::cli::kToolVersion) != std::string::npos);
  CHECK(run_cli({"frobnicate"}).code == 2);
}
