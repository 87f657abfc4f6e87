#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prewet/experiments.hpp"
#include "prewet/model.hpp"

namespace prewet::cli {

using json = nlohmann::json;

enum ExitCode : int { ok = 0, failure = 1, assertion_failed = 2, bad_config = 3 };

/// Parses a JSON document; syntax errors become Error(config_error) carrying
/// origin:line:column.
json parse_config_text(std::string_view text, std::string_view origin = "<config>");
json read_config_file(const std::string& path);

/// Strict readers: unknown keys and ill-typed values raise
/// Error(config_error) naming the offending field.
StepDistribution step_from_json(const json& value, const std::string& field = "step");
Potential potential_from_json(const json& value, const std::string& field = "potential");
BridgeSpec bridge_from_json(const json& doc, const std::string& prefix = "");

/// Everything one subcommand needs, decoded from its config document.
struct CommandConfig {
  std::string command;
  json document;  // as read, with --seed applied
  std::uint64_t seed = 20240601;
  std::optional<BridgeSpec> bridge;
  experiments::SweepConfig sweep;
  experiments::OracleSuiteConfig suite;
  int samples = 100000;
  std::optional<int> covariance_anchor;
  double delta = 0.5;
  double moment_order = 2.0;
};

/// Subcommand names in help order.
const std::vector<std::string>& commands();

/// Keys accepted by `command` at the top level of its config.
std::vector<std::string> allowed_keys(const std::string& command);

CommandConfig decode_config(const std::string& command, json document,
                            std::optional<std::uint64_t> seed_override);

/// FNV-1a of the canonical (sorted-key, compact) dump.
std::string config_hash(const json& document);

/// Fixed-width scientific rendering shared by every CSV column.
std::string format_number(double value);

struct Provenance {
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// Writers. The first line is a '#' provenance comment, the second the header.
void write_marginals_csv(std::ostream& out, const Provenance& p,
                         const std::vector<std::vector<double>>& marginals);
void write_covariance_csv(std::ostream& out, const Provenance& p,
                          const std::vector<std::pair<std::pair<int, int>, double>>& cov);
void write_sweep_csv(std::ostream& out, const Provenance& p, const experiments::Report& report);
void write_coupling_csv(std::ostream& out, const Provenance& p, const experiments::Report& report);
void write_tv_csv(std::ostream& out, const Provenance& p, const experiments::Report& report);

json report_to_json(const experiments::Report& report);

/// Entry point behind the `prewet` binary.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prewet::cli
