#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace zenosos::cli;

namespace {

std::string sys_path(const std::string& name) { return std::string(ZENOSOS_SYSTEMS_DIR) + "/" + name; }

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("zenosos_cli_" + std::to_string(std::hash<const void*>{}(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(slurp(path)); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void check_manifest(const std::string& out_path, const std::string& command) {
  auto m = read_json(manifest_path_for(out_path));
  for (const char* key : {"id", "command", "input", "input_hash", "config", "version", "started", "wall_seconds",
                          "outcome"}) {
    INFO(std::string(key));
    CHECK(m.contains(key));
  }
  CHECK(m["command"] == command);
  CHECK(m["version"] == kVersion);
  CHECK(m["id"].get<std::string>().size() == 16);
}

}  // namespace

TEST_CASE("cli: usage errors exit 1") {
  CHECK(cli({}).code == kUsage);
  CHECK(cli({"frobnicate"}).code == kUsage);
  auto missing = cli({"verify", sys_path("missing.json")});
  CHECK(missing.code == kUsage);
  CHECK(missing.err.find("error:") != std::string::npos);
  CHECK(cli({"verify", sys_path("example1.json"), "--set", "nope=1"}).code == kUsage);
  CHECK(cli({"bisect", sys_path("example4.json"), "--param", "C", "--bracket", "1.5", "0.5"}).code == kUsage);
  CHECK(cli({"bisect", sys_path("example4.json"), "--param", "C", "--bracket", "0.5", "1.5", "--direction", "up"})
            .code == kUsage);
  CHECK(cli({"sweep", sys_path("classical_ball.json")}).code == kUsage);
  CHECK(cli({"sweep", sys_path("classical_ball.json"), "--grid", "c=0.1:0.5:3", "--mc", "2"}).code == kUsage);
  CHECK(cli({"simulate", sys_path("classical_ball.json"), "--init", "7", "1", "0"}).code == kUsage);
  CHECK(cli({"simulate", sys_path("classical_ball.json"), "--init", "1", "1"}).code == kUsage);
  CHECK(cli({"check-sos", "x^2 +", "--vars", "x"}).code == kUsage);
  CHECK(cli({"check-sos", "x^2 + y", "--vars", "x"}).code == kUsage);
  auto version = cli({"--version"});
  CHECK(version.code == kOk);
  CHECK(version.out.find(kVersion) != std::string::npos);
  CHECK(cli({"--help"}).code == kOk);
}

TEST_CASE("cli: check-sos verdicts") {
  auto square = cli({"check-sos", "x^2 - 2*x*y + y^2", "--vars", "x,y", "--gram"});
  CHECK(square.code == kOk);
  CHECK(square.out.rfind("sos", 0) == 0);
  auto j = nlohmann::json::parse(square.out.substr(square.out.find('{')));
  CHECK(j["basis"].size() == j["gram"].size());
  CHECK(j["reconstruction_error"].get<double>() <= 1e-7);
  CHECK(cli({"check-sos", "x^2 + 1", "--vars", "x"}).code == kOk);
  auto motzkin = cli({"check-sos", "x^4*y^2 + x^2*y^4 - 3*x^2*y^2 + 1", "--vars", "x,y"});
  CHECK(motzkin.code == kNegative);
  CHECK(motzkin.out.find("dual ray verified") != std::string::npos);
}

TEST_CASE("cli: verify writes a certificate that references its manifest") {
  TempDir tmp;
  const auto cert = tmp.file("cert.json");
  auto r = cli({"verify", sys_path("classical_ball.json"), "--degree", "4", "--samples", "2000", "--out", cert});
  REQUIRE(r.code == kOk);
  CHECK(r.out.find("outcome certified") != std::string::npos);
  auto j = read_json(cert);
  for (const char* key : {"manifest", "outcome", "system", "degree", "parametric", "variables", "lyapunov", "constants",
                          "sampling", "max_identity_residual", "sdp", "program", "system_constants",
                          "fixed_parameters", "config"}) {
    INFO(std::string(key));
    CHECK(j.contains(key));
  }
  for (const char* key : {"alpha", "gamma", "r"}) {
    INFO(std::string(key));
    CHECK(j["constants"].contains(key));
  }
  CHECK(j["lyapunov"]["1"].contains("text"));
  CHECK(j["system_constants"]["c"] == 0.5);
  CHECK(j["sampling"]["passed"] == true);
  CHECK(j["outcome"] == "certified");
  check_manifest(cert, "verify");
  auto m = read_json(manifest_path_for(cert));
  CHECK(j["manifest"] == m["id"]);
  CHECK(m["input_hash"] == file_hash(sys_path("classical_ball.json")));
  CHECK(m["outcome"]["outcome"] == "certified");

  // Same inputs and flags give the same manifest id and certificate body.
  const auto cert2 = tmp.file("cert2.json");
  REQUIRE(cli({"verify", sys_path("classical_ball.json"), "--degree", "4", "--samples", "2000", "--out", cert2}).code ==
          kOk);
  auto j2 = read_json(cert2);
  CHECK(j2["manifest"] == j["manifest"]);
  CHECK(j2["lyapunov"] == j["lyapunov"]);
}

TEST_CASE("cli: verify reports failure without writing a certificate") {
  TempDir tmp;
  const auto cert = tmp.file("cert.json");
  auto r = cli({"verify", sys_path("example1.json"), "--set", "c2=1.5", "--out", cert});
  CHECK((r.code == kNegative || r.code == kInconclusive));
  CHECK_FALSE(fs::exists(cert));
  check_manifest(cert, "verify");
}

TEST_CASE("cli: simulate output") {
  TempDir tmp;
  const auto traj = tmp.file("traj.csv");
  auto r = cli({"simulate", sys_path("classical_ball.json"), "--init", "1", "1", "0", "--sample-dt", "0.05", "--out",
                traj});
  REQUIRE(r.code == kOk);
  CHECK(r.out.find("verdict=zeno-detected") != std::string::npos);
  auto lines = lines_of(slurp(traj));
  REQUIRE(lines.size() > 3);
  auto m = read_json(manifest_path_for(traj));
  CHECK(lines[0] == "# manifest=" + m["id"].get<std::string>());
  CHECK(lines[1] == "t,mode,x1,x2");
  const auto& last = lines.back();
  REQUIRE(last.rfind("# verdict=zeno-detected", 0) == 0);
  const double t = std::stod(last.substr(last.find("zeno_time=") + 10));
  const double expect = std::sqrt(2.0) * 1.5 / 0.5;
  CHECK(std::abs(t - expect) <= 0.01 * expect);

  auto stdout_csv = cli({"simulate", sys_path("classical_ball.json"), "--init", "1", "1", "0", "--set", "c=1.1",
                         "--horizon", "10"});
  CHECK(stdout_csv.code == kOk);
  CHECK(stdout_csv.out.rfind("t,mode,x1,x2", 0) == 0);
  CHECK(stdout_csv.out.find("zeno_time=none") != std::string::npos);
}

TEST_CASE("cli: sweep CSV schema") {
  TempDir tmp;
  const auto csv = tmp.file("sweep.csv");
  auto r = cli({"sweep", sys_path("classical_ball.json"), "--grid", "c=0.2,1.1", "--degree", "4", "--samples", "1000",
                "--out", csv});
  REQUIRE(r.code == kOk);
  auto lines = lines_of(slurp(csv));
  REQUIRE(lines.size() == 4);
  auto m = read_json(manifest_path_for(csv));
  CHECK(lines[0] == "# manifest=" + m["id"].get<std::string>());
  CHECK(lines[1] == "c,verdict,solve-time-seconds,sdp-iterations");
  CHECK(lines[2].rfind("0.20000000000000001,feasible,", 0) == 0);
  CHECK(lines[3].rfind("1.1000000000000001,infeasible,", 0) == 0);

  auto one = cli({"sweep", sys_path("classical_ball.json"), "--mc", "1", "--range", "c=0.2:0.6", "--degree", "4",
                  "--samples", "1000"});
  REQUIRE(one.code == kOk);
  auto rows = lines_of(one.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "c,verdict,solve-time-seconds,sdp-iterations");

  auto bad = cli({"sweep", sys_path("classical_ball.json"), "--grid", "c=1.1,1.3", "--degree", "4"});
  CHECK(bad.code == kOk);
  for (std::size_t k = 1; k < lines_of(bad.out).size(); ++k) CHECK(lines_of(bad.out)[k].find(",infeasible,") != std::string::npos);

  auto grid = cli({"sweep", sys_path("classical_ball.json"), "--grid", "c=0.1:1.2:12", "--grid", "g=1:2:2",
                   "--degree", "2", "--samples", "100", "--workers", "1"});
  auto grid_rows = lines_of(grid.out);
  REQUIRE(grid_rows.size() == 25);
  CHECK(grid_rows[1].rfind("0.10000000000000001,1,", 0) == 0);
  CHECK(grid_rows[19].rfind("1,1,", 0) == 0);
}

TEST_CASE("cli: bisect JSON schema and exit codes") {
  TempDir tmp;
  const auto out = tmp.file("bisect.json");
  auto r = cli({"bisect", sys_path("classical_ball.json"), "--param", "c", "--bracket", "0.5", "1.5", "--tol", "0.1",
                "--degree", "4", "--samples", "1000", "--out", out});
  REQUIRE(r.code == kOk);
  auto j = read_json(out);
  for (const char* key : {"name", "direction", "bracket", "established", "bound", "degenerate", "monotone", "probes",
                          "notes", "manifest"}) {
    INFO(std::string(key));
    CHECK(j.contains(key));
  }
  CHECK(j["direction"] == "max");
  CHECK(j["bound"].get<double>() < 1.0);
  CHECK(j["bound"].get<double>() >= 0.85);
  CHECK(j["probes"][0].contains("verdict"));
  check_manifest(out, "bisect");
  CHECK(j["manifest"] == read_json(manifest_path_for(out))["id"]);

  auto none = cli({"bisect", sys_path("classical_ball.json"), "--param", "c", "--bracket", "1.1", "1.5", "--degree",
                   "4", "--samples", "1000"});
  CHECK(none.code == kNegative);
  CHECK(none.out.find("bound none") != std::string::npos);
}
