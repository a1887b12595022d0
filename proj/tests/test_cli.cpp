#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "cli_runner.hpp"

using nlohmann::json;

namespace {

json report(const cli::Run& r) { return json::parse(r.out); }

}  // namespace

TEST_CASE("dist on the flat plane") {
  const auto r = cli::run("dist --metric flat --from 0,0 --to 3,4");
  REQUIRE(r.exit_code == 0);
  const auto j = report(r);
  CHECK(j["operation"] == "dist");
  CHECK(std::abs(j["values"]["distance"].get<double>() - 5.0) < 1e-8);
  CHECK(j["config"]["seed"] == "0");
  CHECK(j["config"]["metric"] == "flat");
  CHECK(j.contains("duration_s"));
}

TEST_CASE("witness detects the bump") {
  const auto r = cli::run("witness --metric bump:0.5,0.5,0.5,0.4 --net lattice:1 --window 2");
  CHECK(r.exit_code == 1);
  const auto j = report(r);
  CHECK(j["values"]["max_deviation"].get<double>() > 1e-3);
  CHECK(j["verdict"] == "fail");
}

TEST_CASE("qn1 on collinear points fails") {
  const auto dir = cli::scratch_dir("qn1");
  std::string csv = "x,y\n";
  for (int i = -20; i <= 20; ++i) csv += std::to_string(i) + ",0\n";
  cli::write_file(dir / "line.csv", csv);
  const auto r = cli::run("qn1 --net custom:" + (dir / "line.csv").string() + " --phi const:1 --tubes 200");
  CHECK(r.exit_code == 1);
  CHECK(report(r)["values"]["hit_fraction"].get<double>() < 1.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reports are reproducible") {
  for (const char* args : {"net-sample --net poisson:1 --window 10 --seed 7",
                           "crofton --N 20000 --seed 3",
                           "qn2 --net poisson:1 --window 60 --seed 2"}) {
    const auto a = cli::run(args), b = cli::run(args);
    CHECK(a.exit_code == b.exit_code);
    CHECK(cli::without_duration(a.out) == cli::without_duration(b.out));
  }
  const auto s1 = cli::run("net-sample --net poisson:1 --window 10 --seed 7");
  const auto s2 = cli::run("net-sample --net poisson:1 --window 10 --seed 8");
  CHECK(cli::without_duration(s1.out) != cli::without_duration(s2.out));
}

TEST_CASE("help names the statement") {
  const auto r = cli::run("gram --help", true);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("rank at most two") != std::string::npos);
  CHECK(r.out.find("--seed") != std::string::npos);
  CHECK(r.out.find("--config") != std::string::npos);
  CHECK(cli::run("witness --help").out.find("isometrically") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli::run("").exit_code == 2);
  CHECK(cli::run("frobnicate").exit_code == 2);
  CHECK(cli::run("dist --bogus 1").exit_code == 2);
  CHECK(cli::run("dist --from 0,0 --to 0,0").exit_code == 2);
  CHECK(cli::run("dist --metric bump:1,2").exit_code == 2);
  CHECK(cli::run("dist --format xml").exit_code == 2);
  const auto r = cli::run("dist --seed -4", true);
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("--seed") != std::string::npos);
}

TEST_CASE("config files") {
  const auto dir = cli::scratch_dir("config");
  cli::write_file(dir / "ok.json", "{\n  \"metric\": \"flat\",\n  \"from\": [0, 0],\n  \"to\": [6, 8]\n}\n");
  const auto a = cli::run("dist --config " + (dir / "ok.json").string());
  REQUIRE(a.exit_code == 0);
  const auto ja = report(a);
  CHECK(ja["values"]["distance"].get<double>() == doctest::Approx(10.0));
  CHECK(ja["config"]["to"] == "6,8");

  // command-line values win over the file
  const auto b = cli::run("dist --to 3,4 --config " + (dir / "ok.json").string());
  CHECK(report(b)["values"]["distance"].get<double>() == doctest::Approx(5.0));
  CHECK(report(b)["config"]["to"] == "3,4");
  CHECK(report(b)["config"]["metric"] == "flat");

  cli::write_file(dir / "unknown.json", "{\n  \"metric\": \"flat\",\n  \"colour\": 3\n}\n");
  const auto c = cli::run("dist --config " + (dir / "unknown.json").string(), true);
  CHECK(c.exit_code == 2);
  CHECK(c.out.find("unknown.json:3") != std::string::npos);
  CHECK(c.out.find("colour") != std::string::npos);

  cli::write_file(dir / "broken.json", "{\n  \"metric\": \"flat\",\n  \"to\": [1, \n}\n");
  const auto d = cli::run("dist --config " + (dir / "broken.json").string(), true);
  CHECK(d.exit_code == 2);
  CHECK(d.out.find("broken.json:4") != std::string::npos);

  cli::write_file(dir / "bad_value.json", "{\n  \"metric\": \"flat\",\n  \"to\": \"north\"\n}\n");
  const auto e = cli::run("dist --config " + (dir / "bad_value.json").string(), true);
  CHECK(e.exit_code == 2);
  CHECK(e.out.find("bad_value.json:3") != std::string::npos);

  cli::write_file(dir / "other.json", "{\"command\": \"gram\"}\n");
  CHECK(cli::run("dist --config " + (dir / "other.json").string()).exit_code == 2);
  CHECK(cli::run("dist --config " + (dir / "missing.json").string()).exit_code == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv output and --out") {
  const auto dir = cli::scratch_dir("csv");
  const auto out = dir / "pts.csv";
  const auto r = cli::run("net-sample --net lattice:1 --window 1 --format csv --out " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());
  std::ifstream f(out);
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CHECK(text.rfind("x,y\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
  CHECK(text.find('\r') == std::string::npos);

  const auto m = cli::run("matrix --points \"0,0;3,4\" --format csv");
  CHECK(m.exit_code == 0);
  CHECK(m.out.rfind("0,1\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("planarity exit codes") {
  CHECK(cli::run("gram --points \"0,0;1,0;1,1;0,1\"").exit_code == 0);
  const auto r = cli::run("gram --points \"0,0,0;1,0,0;0,1,0;0,0,1\"");
  CHECK(r.exit_code == 1);
  CHECK(report(r)["values"]["ratio"].get<double>() == doctest::Approx(0.0717967697244908).epsilon(1e-9));
}

TEST_CASE("jobs do not change results") {
  const auto a = report(cli::run("matrix --metric bump:0.5,0.5,0.5,0.4 --points \"0,0;1,1;1,0;0.2,0.9\" --jobs 1"));
  const auto b = report(cli::run("matrix --metric bump:0.5,0.5,0.5,0.4 --points \"0,0;1,1;1,0;0.2,0.9\" --jobs 8"));
  CHECK(a["values"] == b["values"]);
}
