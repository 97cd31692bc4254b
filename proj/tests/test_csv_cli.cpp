#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polymerlab/cli.hpp"
#include "polymerlab/csv.hpp"
#include "polymerlab/error.hpp"

using namespace polymerlab;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("polymerlab_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

const std::vector<std::vector<std::string>> kCsvCommands = {
    {"analytic", "--d", "2", "--law", "bernoulli:p=0.25"},
    {"simulate", "--depth", "12", "--beta", "0.3,0.6,1.2", "--alpha", "0.0,0.2,0.4", "--seed", "7"},
    {"simulate", "--depth", "12", "--beta", "0.3,0.6", "--engine", "stream", "--seed", "7"},
    {"gibbs-ray", "--depth", "10", "--beta", "0.5", "--rays", "20"},
    {"subtree", "--beta", "0.6", "--delta", "a/sqrt:3.0", "--depth", "12"},
    {"topk", "--beta", "0.5", "--c", "0.2", "--depth", "12"},
    {"percolation", "--d", "2", "--rho", "0.9", "--p", "0.20:0.50:0.05", "--depth", "12", "--replicas", "20",
     "--pc-line"},
    {"spine", "--mode", "h-estimate", "--walks", "300"},
    {"spine", "--mode", "conditioned", "--walks", "300", "--depth", "300", "--replicas", "5"},
    {"spine", "--mode", "bernoulli", "--p", "0.7", "--depth", "1000", "--replicas", "5"},
};

}  // namespace

TEST_CASE("csv writer quotes and terminates records per RFC 4180") {
  std::ostringstream os;
  CsvWriter w(os, {"a", "b"});
  w.row({"x,y", "say \"hi\""});
  w.row({"", format_real(0.1)});
  CHECK(os.str() == "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n,0.10000000000000001\r\n");
  const CsvTable t = parse_csv(os.str());
  CHECK(t.rows[0][0] == "x,y");
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(std::stod(t.rows[1][1]) == 0.1);
  CHECK_THROWS_AS(w.row({"1"}), InconsistencyError);
}

TEST_CASE("csv parser rejects malformed input") {
  CHECK_THROWS_AS(parse_csv("a,b\n1,2\n"), DomainError);
  CHECK_THROWS_AS(parse_csv("a,b\r\n1\r\n"), DomainError);
  CHECK_THROWS_AS(parse_csv("a,b\r\n\"1,2\r\n"), DomainError);
  CHECK_THROWS_AS(parse_csv("a,b\r\n1,2"), DomainError);
  CHECK(!check_csv("a,a\r\n1,2\r\n").ok);
  CHECK(!check_csv("a,b\r\n1,zz\r\n").ok);
  CHECK(check_csv("a,b\r\n1,\r\n-inf,3e-5\r\n").ok);
}

TEST_CASE("doubles round-trip through 17 significant digits") {
  for (double x : {0.1, 1.0 / 3, -2.5e-300, 6.02214076e23, 0.33770442620239929})
    CHECK(std::strtod(format_real(x).c_str(), nullptr) == x);
}

TEST_CASE("grid parsing") {
  CHECK(parse_grid("0.3,0.6,1.2") == std::vector<double>{0.3, 0.6, 1.2});
  CHECK(parse_grid("0.20:0.50:0.02").size() == 16);
  CHECK(parse_grid("1:1:0.5") == std::vector<double>{1.0});
  CHECK_THROWS_AS(parse_grid("1:0:0.5"), UsageError);
  CHECK_THROWS_AS(parse_grid("a,b"), UsageError);
  CHECK(log_checkpoints(10000).back() == 10000);
  CHECK(log_checkpoints(10000).front() == 1);
  CHECK(log_checkpoints(1) == std::vector<int>{1});
}

TEST_CASE("analytic smoke run on stdout") {
  const Run r = run({"analytic", "--d", "2", "--law", "normal", "--out", "-"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("beta,lambda,lambda_prime,f,phi\r\n", 0) == 0);
  CHECK(check_csv(r.out).ok);
}

TEST_CASE("percolation threshold printing") {
  CHECK(run({"percolation-threshold", "--d", "2", "--rho", "1"}).out == "0.5\n");
  CHECK(run({"percolation-threshold", "--d", "2", "--rho", "0.9"}).out == "0.337704426203\n");
}

TEST_CASE("errors are JSON on stderr with distinct exit codes") {
  const Run cap = run({"simulate", "--depth", "40", "--engine", "array"});
  CHECK(cap.code == 1);
  const auto j = nlohmann::json::parse(cap.err);
  CHECK(j["code"] == "resource_error");
  CHECK(j["message"].get<std::string>().find("67108864") != std::string::npos);

  const Run flag = run({"simulate", "--nope", "1"});
  CHECK(flag.code == 2);
  CHECK(nlohmann::json::parse(flag.err)["code"] == "usage_error");
  CHECK(nlohmann::json::parse(flag.err)["context"].get<std::string>().find("--depth") != std::string::npos);

  const Run sub = run({"frobnicate"});
  CHECK(sub.code == 2);
  CHECK(nlohmann::json::parse(sub.err)["context"].get<std::string>().find("percolation") != std::string::npos);

  const Run dom = run({"topk", "--beta", "0.5", "--c", "0.9", "--depth", "8"});
  CHECK(dom.code == 1);
  CHECK(nlohmann::json::parse(dom.err)["code"] == "domain_error");

  const Run law = run({"analytic", "--law", "cauchy"});
  CHECK(law.code == 1);
  CHECK(run({"spine", "--mode", "sideways"}).code == 2);
  CHECK(run({"simulate", "--depth", "4", "--alpha", "0.1", "--engine", "stream"}).code == 1);
}

TEST_CASE("every emitted CSV passes the checker") {
  int i = 0;
  for (auto args : kCsvCommands) {
    const fs::path out = scratch() / ("rt" + std::to_string(i++) + ".csv");
    args.insert(args.end(), {"--out", out.string(), "--workers", "2"});
    const Run r = run(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(out.string() + ".json"));
    const Run c = run({"check", out.string()});
    CHECK_MESSAGE(c.code == 0, args[0], c.err);
  }
}

TEST_CASE("worker count does not change any output byte") {
  int i = 0;
  for (auto args : kCsvCommands) {
    auto one = args, eight = args;
    one.insert(one.end(), {"--workers", "1"});
    eight.insert(eight.end(), {"--workers", "8"});
    const Run a = run(one), b = run(eight);
    CHECK(a.code == 0);
    CHECK_MESSAGE(a.out == b.out, args[0], " #", i);
    ++i;
  }
}

TEST_CASE("the sidecar reproduces the run") {
  int i = 0;
  for (auto args : kCsvCommands) {
    const fs::path first = scratch() / ("rep" + std::to_string(i) + "a.csv");
    const fs::path second = scratch() / ("rep" + std::to_string(i) + "b.csv");
    ++i;
    args.insert(args.end(), {"--out", first.string(), "--salt", "99"});
    REQUIRE(run(args).code == 0);
    const auto side = nlohmann::json::parse(slurp(first.string() + ".json"));
    std::vector<std::string> again = side["argv"].get<std::vector<std::string>>();
    again.insert(again.end(), {"--out", second.string(), "--workers", "3"});
    REQUIRE(run(again).code == 0);
    CHECK(slurp(first) == slurp(second));
  }
}

TEST_CASE("analytic sidecar carries the critical values") {
  const fs::path out = scratch() / "profile.csv";
  REQUIRE(run({"analytic", "--d", "2", "--law", "bernoulli:p=0.6", "--out", out.string()}).code == 0);
  const auto side = nlohmann::json::parse(slurp(out.string() + ".json"));
  CHECK(side["results"]["beta_c"] == "inf");
  CHECK(side["results"]["slope_c"] == 1.0);
  CHECK(side["results"]["d"] == 2);
  CHECK(side["results"]["law"] == "bernoulli:p=0.59999999999999998");
}

TEST_CASE("environment override of the worker count") {
  ::setenv("POLYMERLAB_WORKERS", "x", 1);
  CHECK(run({"percolation-threshold", "--d", "2", "--rho", "1"}).code == 2);
  ::setenv("POLYMERLAB_WORKERS", "3", 1);
  CHECK(run({"percolation-threshold", "--d", "2", "--rho", "1"}).code == 0);
  ::unsetenv("POLYMERLAB_WORKERS");
}

TEST_CASE("check reports malformed files") {
  const fs::path bad = scratch() / "bad.csv";
  std::ofstream(bad, std::ios::binary) << "a,b\n1,2\n";
  const Run r = run({"check", bad.string()});
  CHECK(r.code == 1);
  CHECK(run({"check", (scratch() / "missing.csv").string()}).code == 1);
}
