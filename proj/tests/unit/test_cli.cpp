#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "prewet/cli.hpp"
#include "prewet/error.hpp"

using namespace prewet;
using namespace prewet::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "prewet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("prewet-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

const fs::path fixtures = PREWET_FIXTURE_DIR;

}  // namespace

TEST_CASE("invalid parameters exit 3 and name the field") {
  const auto dir = scratch("neg");
  const auto cfg = write_config(dir, R"({"lambda": -0.5, "length": 4})");
  const auto r = invoke({"--config", cfg.string(), "--out", (dir / "o").string(), "exact"});
  CHECK(r.code == 3);
  CHECK(r.err.find("lambda") != std::string::npos);
}

TEST_CASE("unknown keys and malformed documents exit 3") {
  const auto dir = scratch("unknown");
  auto r = invoke({"--config", write_config(dir, R"({"lambdaa": 0.1})").string(), "--out", dir.string(), "exact"});
  CHECK(r.code == 3);
  CHECK(r.err.find("lambdaa") != std::string::npos);

  r = invoke({"--config", write_config(dir, "{\n  \"lambda\": 0.1,\n  oops\n}").string(), "--out", dir.string(),
              "exact"});
  CHECK(r.code == 3);
  CHECK(r.err.find(":3:") != std::string::npos);

  r = invoke({"--config", write_config(dir, R"({"replicas": "many"})").string(), "--out", dir.string(), "couple"});
  CHECK(r.code == 3);
  CHECK(r.err.find("replicas") != std::string::npos);

  r = invoke({"--config", write_config(dir, R"({"p": 3.0})").string(), "--out", dir.string(), "moments"});
  CHECK(r.code != 0);
}

TEST_CASE("usage errors and help") {
  CHECK(invoke({"frobnicate"}).code == 3);
  CHECK(invoke({}).code == 3);
  CHECK(invoke({"--jobs", "0", "exact"}).code == 3);
  const auto h = invoke({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("relaxation") != std::string::npos);
}

TEST_CASE("exact reproduces the enumeration fixture byte for byte") {
  const auto dir = scratch("exact");
  const auto r = invoke({"--config", (fixtures / "canonical_n6.config.json").string(), "--out", dir.string(),
                         "--quiet", "exact"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "marginals.csv") == slurp(fixtures / "canonical_n6_marginals.csv"));

  const auto fixture = json::parse(slurp(fixtures / "canonical_n6.json"));
  const auto summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["results"]["spec_hash"] == fixture["spec_hash"]);
  CHECK(summary["results"]["partition"].get<double>() ==
        doctest::Approx(fixture["partition"].get<double>()).epsilon(1e-12));

  // covariance rows anchored at 2 against the fixture triples
  std::istringstream cov(slurp(dir / "covariance.csv"));
  std::string line;
  std::getline(cov, line);
  std::getline(cov, line);
  CHECK(line == "i,j,cov");
  int rows = 0;
  while (std::getline(cov, line)) {
    int i = 0, j = 0;
    double v = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "%d,%d,%lf", &i, &j, &v) == 3);
    for (const auto& t : fixture["covariance"])
      if (t[0] == i && t[1] == j) CHECK(v == doctest::Approx(t[2].get<double>()).epsilon(1e-10));
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("outputs are deterministic and independent of the thread count") {
  const auto dir = scratch("det");
  const auto cfg = write_config(dir, R"({"lambdas": [1e-2], "length_grid": [0.5, 1.0], "replicas": 3000})");
  const auto a = invoke({"--config", cfg.string(), "--out", (dir / "a").string(), "--jobs", "1", "couple"});
  const auto b = invoke({"--config", cfg.string(), "--out", (dir / "b").string(), "--jobs", "3", "couple"});
  REQUIRE(a.code == b.code);
  for (const char* f : {"summary.json", "coupling.csv", "sweep.csv"}) {
    CAPTURE(f);
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(fs::exists(dir / "a" / "timing.json"));
  const auto c = invoke({"--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "7", "couple"});
  REQUIRE(c.code == a.code);
  CHECK(slurp(dir / "c" / "coupling.csv") != slurp(dir / "a" / "coupling.csv"));
  CHECK(json::parse(slurp(dir / "c" / "summary.json"))["seed"] == 7);
}

TEST_CASE("sample writes empirical marginals that pass their checks") {
  const auto dir = scratch("sample");
  const auto cfg = write_config(dir, R"({"lambda": 0.3, "length": 6, "end": 1, "truncation": 6, "samples": 20000})");
  const auto r = invoke({"--config", cfg.string(), "--out", dir.string(), "sample"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ok") != std::string::npos);
  const auto text = slurp(dir / "marginals.csv");
  CHECK(text.find("\nk,x,p\n") != std::string::npos);
}

TEST_CASE("CSV schemas") {
  const Provenance p{"1.2.3", "abc", 5};
  experiments::Report r;
  r.rows.push_back({0.1, 2.0, "q", 1.5, 0.25});
  r.coupling.push_back({0.1, 10, 0.5, 0.01});
  r.tv.push_back({0.1, {{0, 1.0}, {1, 0.5}}});
  std::ostringstream s1, s2, s3, s4, s5;
  write_sweep_csv(s1, p, r);
  write_coupling_csv(s2, p, r);
  write_tv_csv(s3, p, r);
  write_marginals_csv(s4, p, {{1.0}});
  write_covariance_csv(s5, p, {{{1, 2}, 0.5}});
  const std::string prov = "# prewet 1.2.3 config=abc seed=5\n";
  CHECK(s1.str() == prov + "lambda,H,quantity,value,stderr\n" + format_number(0.1) + "," + format_number(2.0) +
                        ",q," + format_number(1.5) + "," + format_number(0.25) + "\n");
  CHECK(s2.str().rfind(prov + "lambda,N,p_no_meet,stderr\n", 0) == 0);
  CHECK(s3.str().rfind(prov + "lambda,N,tv\n", 0) == 0);
  CHECK(s4.str() == prov + "k,x,p\n0,0," + format_number(1.0) + "\n");
  CHECK(s5.str() == prov + "i,j,cov\n1,2," + format_number(0.5) + "\n");
  CHECK(format_number(0.1) == "1.000000000000e-01");
}

TEST_CASE("config decoding") {
  auto c = decode_config("exact", parse_config_text(R"({"lambda": 0.2, "length": 10, "end": null})"), std::nullopt);
  REQUIRE(c.bridge.has_value());
  CHECK(c.bridge->free_end());
  CHECK(c.bridge->truncation > 0);

  c = decode_config("exact", parse_config_text(R"({"step": {"geometric": {"q": 0.3, "x_max": 12}}})"), std::nullopt);
  CHECK(c.bridge->step == StepDistribution::two_sided_geometric(0.3, 12));
  c = decode_config("exact", parse_config_text(R"({"potential": {"power": 2}})"), std::nullopt);
  CHECK(c.bridge->potential == Potential::power(2.0));
  CHECK_THROWS_AS(decode_config("exact", parse_config_text(R"({"step": "cauchy"})"), std::nullopt), Error);

  c = decode_config("couple", parse_config_text(R"({"seed": 3})"), 11u);
  CHECK(c.seed == 11);
  CHECK(c.sweep.seed == 11);
  CHECK(c.document["seed"] == 11);

  CHECK(config_hash(parse_config_text(R"({"a": 1, "b": 2})")) == config_hash(parse_config_text(R"({"b": 2, "a": 1})")));
  CHECK(config_hash(parse_config_text(R"({"a": 1})")) != config_hash(parse_config_text(R"({"a": 2})")));
  for (const auto& cmd : commands()) CHECK(!allowed_keys(cmd).empty());
}
