#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <thread>

#include "prewet/cli.hpp"
#include "prewet/error.hpp"
#include "prewet/rng.hpp"
#include "prewet/sampler.hpp"
#include "prewet/stats.hpp"
#include "prewet/transfer.hpp"

namespace prewet::cli {

namespace fs = std::filesystem;

namespace {

struct Outputs {
  fs::path dir;
  std::vector<std::string> files;

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::precondition, "cannot write " + (dir / name).string());
    body(f);
    files.push_back(name);
  }
};

const char* describe(const std::string& command) {
  if (command == "exact") return "partition function, marginals and covariances of one bridge";
  if (command == "sample") return "exact backward samples with per-index chi-square checks";
  if (command == "couple") return "non-meeting probability of two stationary chains";
  if (command == "scaling") return "mean mid-height against lambda";
  if (command == "tails") return "stretched-exponential tail exponent of the mid-height";
  if (command == "area") return "area law and maximum-height floor";
  if (command == "correlations") return "covariance decay against the spectral gap";
  if (command == "relaxation") return "total-variation relaxation of the free endpoint";
  if (command == "moments") return "moment bound E[X^2p] / H^(2p+1)";
  return "transfer engine against enumeration, small-walk identities and inequalities";
}

void merge(experiments::Report& into, experiments::Report&& from) {
  for (auto& r : from.rows) into.rows.push_back(std::move(r));
  for (auto& f : from.fits) into.fits.push_back(std::move(f));
  for (auto& c : from.checks) into.checks.push_back(std::move(c));
}

std::string lambda_tag(double lambda) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", lambda);
  return buf;
}

json run_exact(const CommandConfig& c, const Provenance& p, Outputs& out) {
  const auto& spec = *c.bridge;
  const auto t = build_tables(spec);
  std::vector<std::vector<double>> marg;
  json means = json::array();
  for (int k = 0; k <= spec.length; ++k) {
    marg.push_back(marginal(t, k).pmf);
    means.push_back(marginal(t, k).mean());
  }
  out.write("marginals.csv", [&](std::ostream& o) { write_marginals_csv(o, p, marg); });
  if (spec.length >= 2) {
    const int anchor = c.covariance_anchor.value_or(spec.length / 2);
    const auto row = covariance_row(t, anchor, spec.length - 1);
    std::vector<std::pair<std::pair<int, int>, double>> cov;
    for (int j = anchor; j < spec.length; ++j) cov.push_back({{anchor, j}, row[static_cast<std::size_t>(j - anchor)]});
    out.write("covariance.csv", [&](std::ostream& o) { write_covariance_csv(o, p, cov); });
  }
  return {{"spec_hash", spec.hash()},
          {"truncation", spec.truncation},
          {"log_partition", t.log_partition()},
          {"partition", t.partition()},
          {"means", means}};
}

json run_sample(const CommandConfig& c, int jobs, const Provenance& p, Outputs& out,
                experiments::Report& report) {
  const auto& spec = *c.bridge;
  const auto t = build_tables(spec);
  const int heights = t.heights();
  const int chunks = std::max(1, std::min(jobs, c.samples));
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(chunks));
  experiments::parallel_for(chunks, jobs, [&](int ch) {
    auto& counts = partial[static_cast<std::size_t>(ch)];
    counts.assign(static_cast<std::size_t>((spec.length + 1) * heights), 0.0);
    const long lo = static_cast<long>(c.samples) * ch / chunks;
    const long hi = static_cast<long>(c.samples) * (ch + 1) / chunks;
    for (long i = lo; i < hi; ++i) {
      Rng rng(c.seed, static_cast<std::uint64_t>(i));
      const auto path = exact_sample(t, rng);
      for (int k = 0; k <= spec.length; ++k)
        counts[static_cast<std::size_t>(k * heights + path.heights[static_cast<std::size_t>(k)])] += 1.0;
    }
  });
  std::vector<std::vector<double>> freq(static_cast<std::size_t>(spec.length + 1),
                                        std::vector<double>(static_cast<std::size_t>(heights), 0.0));
  for (const auto& part : partial)
    for (std::size_t i = 0; i < part.size(); ++i)
      freq[i / static_cast<std::size_t>(heights)][i % static_cast<std::size_t>(heights)] += part[i];

  json pvalues = json::array();
  const double level = 1e-3 / (spec.length + 1);
  double worst = 1.0;
  for (int k = 0; k <= spec.length; ++k) {
    const auto& counts = freq[static_cast<std::size_t>(k)];
    const auto exact = marginal(t, k).pmf;
    const auto chi = chi_square_test(counts, exact);
    pvalues.push_back(chi.p_value);
    worst = std::min(worst, chi.p_value);
    for (double& v : freq[static_cast<std::size_t>(k)]) v /= c.samples;
  }
  report.check("sample marginals chi-square", worst >= level,
               "smallest p-value " + std::to_string(worst) + ", level " + std::to_string(level));
  out.write("marginals.csv", [&](std::ostream& o) { write_marginals_csv(o, p, freq); });
  return {{"spec_hash", spec.hash()}, {"samples", c.samples}, {"p_values", pvalues}};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact transfer, sampling and scaling experiments for area-tilted random-walk bridges",
               "prewet"};
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  bool quiet = false;
  app.add_option("--config", config_path, "JSON config document");
  app.add_option("--out", out_dir, "output directory (default $PREWET_OUT or ./prewet-out)");
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "no progress output");
  app.require_subcommand(1, 1);
  for (const auto& name : commands()) app.add_subcommand(name, describe(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "usage error: " << e.what() << "\n";
    return bad_config;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  if (out_dir.empty()) {
    const char* env = std::getenv("PREWET_OUT");
    out_dir = env && *env ? env : "prewet-out";
  }

  const auto started = std::chrono::steady_clock::now();
  CommandConfig cfg;
  try {
    json doc = config_path.empty() ? json::object() : read_config_file(config_path);
    cfg = decode_config(command, std::move(doc), seed);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return bad_config;
  }
  cfg.sweep.jobs = jobs;
  const Provenance prov{PREWET_VERSION, config_hash(cfg.document), cfg.seed};

  Outputs outputs{out_dir, {}};
  experiments::Report report;
  report.experiment = command;
  json results = json::object();
  try {
    fs::create_directories(outputs.dir);
    if (command == "exact") {
      results = run_exact(cfg, prov, outputs);
    } else if (command == "sample") {
      results = run_sample(cfg, jobs, prov, outputs, report);
    } else if (command == "oracle-check") {
      report = experiments::oracle_suite(cfg.suite);
    } else if (command == "scaling") {
      report = experiments::height_scaling(cfg.sweep);
    } else if (command == "tails") {
      report = experiments::tail_exponent(cfg.sweep);
    } else if (command == "area") {
      report = experiments::area_law(cfg.sweep, cfg.delta);
      if (cfg.document.contains("floor_delta"))
        merge(report, experiments::max_height_floor(cfg.sweep, cfg.document["floor_delta"].get<double>()));
    } else if (command == "correlations") {
      report = experiments::correlation_length(cfg.sweep);
    } else if (command == "relaxation") {
      report = experiments::relaxation(cfg.sweep);
    } else if (command == "moments") {
      report = experiments::moment_scaling(cfg.sweep, cfg.moment_order);
    } else if (command == "couple") {
      report = experiments::coupling(cfg.sweep);
    }

    if (command != "exact" && command != "sample")
      outputs.write("sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, prov, report); });
    if (command == "couple")
      outputs.write("coupling.csv", [&](std::ostream& o) { write_coupling_csv(o, prov, report); });
    if (command == "relaxation") outputs.write("tv.csv", [&](std::ostream& o) { write_tv_csv(o, prov, report); });
    for (const auto& s : report.covariances)
      outputs.write("covariance_lambda_" + lambda_tag(s.lambda) + ".csv",
                    [&](std::ostream& o) { write_covariance_csv(o, prov, s.cov); });

    json summary = {{"tool", "prewet"},
                    {"version", prov.version},
                    {"command", command},
                    {"config_hash", prov.config_hash},
                    {"seed", prov.seed},
                    {"config", cfg.document},
                    {"results", results},
                    {"report", report_to_json(report)},
                    {"outputs", outputs.files}};
    outputs.write("summary.json", [&](std::ostream& o) { o << summary.dump(2) << "\n"; });
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    outputs.write("timing.json", [&](std::ostream& o) {
      o << json{{"version", prov.version},
                {"config_hash", prov.config_hash},
                {"seed", prov.seed},
                {"jobs", jobs},
                {"wall_clock_seconds", seconds}}
               .dump(2)
        << "\n";
    });
  } catch (const Error& e) {
    err << "error config=" << prov.config_hash
        << (cfg.bridge ? " spec=" + cfg.bridge->hash() : std::string()) << ": " << e.what() << "\n";
    return failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return failure;
  }

  if (!quiet) {
    for (const auto& c : report.checks)
      out << (c.passed ? "ok     " : "FAILED ") << c.name << ": " << c.detail << "\n";
    out << command << ": wrote " << outputs.files.size() << " files to " << outputs.dir.string() << "\n";
  }
  return report.passed() ? ok : assertion_failed;
}

}  // namespace prewet::cli
