#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "prewet/cli.hpp"
#include "prewet/error.hpp"

namespace prewet::cli {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(Errc::config_error, "field '" + field + "': " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void require_object(const json& v, const std::string& field) {
  if (!v.is_object()) fail(field.empty() ? "<root>" : field, "expected an object");
}

void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& prefix) {
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(join(prefix, key), "unknown key");
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(field, "must be finite");
  return x;
}

int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < -1000000000 || x > 1000000000) fail(field, "out of range");
  return static_cast<int>(x);
}

std::vector<double> numbers(const json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

const std::vector<std::string> kBridgeKeys{"step",   "potential", "lambda",     "length",
                                           "start",  "end",       "truncation", "tail_tolerance"};
const std::vector<std::string> kSweepKeys{
    "step",        "potential",  "lambdas",   "length_multiplier",     "min_length_multiplier",
    "tail_grid",   "length_grid", "area_grid", "replicas", "relaxation_multiplier", "coupling_offset",
    "seed",        "band"};
const std::vector<std::string> kSuiteKeys{"specs",          "steps",          "tolerance",
                                          "area_delta",     "identity_m_max", "identity_d_max",
                                          "inequality_m_max", "inequality_M_max"};

std::vector<std::string> plus(std::vector<std::string> base, std::initializer_list<const char*> extra) {
  for (const char* e : extra) base.emplace_back(e);
  return base;
}

experiments::SweepConfig sweep_from_json(const json& doc) {
  experiments::SweepConfig s;
  if (doc.contains("step")) s.step = step_from_json(doc["step"], "step");
  if (doc.contains("potential")) s.potential = potential_from_json(doc["potential"], "potential");
  if (doc.contains("lambdas")) {
    s.lambdas = numbers(doc["lambdas"], "lambdas");
    for (std::size_t i = 0; i < s.lambdas.size(); ++i) {
      const auto field = "lambdas[" + std::to_string(i) + "]";
      if (s.lambdas[i] < 0.0) fail(field, "lambda must be >= 0");
      if (i > 0 && !(s.lambdas[i] < s.lambdas[i - 1])) fail(field, "lambda grid must be strictly decreasing");
    }
    if (s.lambdas.empty()) fail("lambdas", "must not be empty");
  }
  auto positive = [&](const char* key, double& slot) {
    if (!doc.contains(key)) return;
    slot = number(doc[key], key);
    if (!(slot > 0.0)) fail(key, "must be positive");
  };
  positive("length_multiplier", s.length_multiplier);
  positive("min_length_multiplier", s.min_length_multiplier);
  positive("relaxation_multiplier", s.relaxation_multiplier);
  if (doc.contains("coupling_offset")) {
    s.coupling_offset = number(doc["coupling_offset"], "coupling_offset");
    if (s.coupling_offset < 0.0) fail("coupling_offset", "must be >= 0");
  }
  if (s.length_multiplier < s.min_length_multiplier)
    fail("length_multiplier", "below min_length_multiplier");
  for (const char* key : {"tail_grid", "length_grid", "area_grid"}) {
    if (!doc.contains(key)) continue;
    auto g = numbers(doc[key], key);
    if (g.empty()) fail(key, "must not be empty");
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!(g[i] > 0.0)) fail(std::string(key) + "[" + std::to_string(i) + "]", "must be positive");
    const std::string k = key;
    (k == "tail_grid" ? s.tail_grid : k == "area_grid" ? s.area_grid : s.length_grid) = std::move(g);
  }
  if (doc.contains("replicas")) {
    s.replicas = integer(doc["replicas"], "replicas");
    if (s.replicas < 1) fail("replicas", "must be >= 1");
  }
  if (doc.contains("band")) {
    const auto b = numbers(doc["band"], "band");
    if (b.size() != 2 || !(b[0] <= b[1])) fail("band", "expected [low, high] with low <= high");
    s.band = std::pair{b[0], b[1]};
  }
  return s;
}

experiments::OracleSuiteConfig suite_from_json(const json& doc) {
  experiments::OracleSuiteConfig s;
  if (doc.contains("specs")) {
    const auto& arr = doc["specs"];
    if (!arr.is_array()) fail("specs", "expected an array of bridge objects");
    s.specs.clear();
    for (std::size_t i = 0; i < arr.size(); ++i)
      s.specs.push_back(bridge_from_json(arr[i], "specs[" + std::to_string(i) + "]"));
  }
  if (doc.contains("steps")) {
    const auto& arr = doc["steps"];
    if (!arr.is_array()) fail("steps", "expected an array of step laws");
    s.steps.clear();
    for (std::size_t i = 0; i < arr.size(); ++i)
      s.steps.push_back(step_from_json(arr[i], "steps[" + std::to_string(i) + "]"));
  }
  if (doc.contains("tolerance")) {
    s.tolerance = number(doc["tolerance"], "tolerance");
    if (!(s.tolerance > 0.0)) fail("tolerance", "must be positive");
  }
  if (doc.contains("area_delta")) {
    s.area_delta = number(doc["area_delta"], "area_delta");
    if (!(s.area_delta > 0.0 && s.area_delta <= 1.0)) fail("area_delta", "must lie in (0, 1]");
  }
  auto bounded = [&](const char* key, int& slot, int lo, int hi) {
    if (!doc.contains(key)) return;
    slot = integer(doc[key], key);
    if (slot < lo || slot > hi)
      fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  };
  bounded("identity_m_max", s.identity_m_max, 1, 14);
  bounded("identity_d_max", s.identity_d_max, 0, 14);
  bounded("inequality_m_max", s.inequality_m_max, 4, 14);
  bounded("inequality_M_max", s.inequality_M_max, 1, 20);
  return s;
}

}  // namespace

json parse_config_text(std::string_view text, std::string_view origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(Errc::config_error, std::string(origin) + ":" + std::to_string(line) + ":" +
                                        std::to_string(column) + ": invalid JSON");
  }
}

json read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config_error, path + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

StepDistribution step_from_json(const json& v, const std::string& field) {
  try {
    if (v.is_string()) {
      const auto name = v.get<std::string>();
      for (auto& s : builtin_steps())
        if (s.key == name) return s.step;
      fail(field, "unknown step law '" + name + "' (lazy, geometric, gaussian)");
    }
    require_object(v, field);
    if (v.contains("geometric")) {
      check_keys(v, {"geometric"}, field);
      const auto& g = v["geometric"];
      require_object(g, join(field, "geometric"));
      check_keys(g, {"q", "x_max"}, join(field, "geometric"));
      if (!g.contains("q") || !g.contains("x_max")) fail(join(field, "geometric"), "needs q and x_max");
      return StepDistribution::two_sided_geometric(number(g["q"], join(field, "geometric.q")),
                                                   integer(g["x_max"], join(field, "geometric.x_max")));
    }
    if (v.contains("gaussian")) {
      check_keys(v, {"gaussian"}, field);
      const auto& g = v["gaussian"];
      require_object(g, join(field, "gaussian"));
      check_keys(g, {"s", "x_max"}, join(field, "gaussian"));
      if (!g.contains("s") || !g.contains("x_max")) fail(join(field, "gaussian"), "needs s and x_max");
      return StepDistribution::discrete_gaussian(number(g["s"], join(field, "gaussian.s")),
                                                 integer(g["x_max"], join(field, "gaussian.x_max")));
    }
    check_keys(v, {"support", "probs", "name"}, field);
    if (!v.contains("support") || !v.contains("probs")) fail(field, "needs support and probs");
    const auto& sup = v["support"];
    if (!sup.is_array()) fail(join(field, "support"), "expected an array of integers");
    std::vector<int> support;
    for (std::size_t i = 0; i < sup.size(); ++i)
      support.push_back(integer(sup[i], join(field, "support[" + std::to_string(i) + "]")));
    std::string name = "custom";
    if (v.contains("name")) {
      if (!v["name"].is_string()) fail(join(field, "name"), "expected a string");
      name = v["name"].get<std::string>();
    }
    return StepDistribution::from_pmf(support, numbers(v["probs"], join(field, "probs")), name);
  } catch (const Error& e) {
    if (e.code() == Errc::config_error) throw;
    fail(field, e.what());
  }
}

Potential potential_from_json(const json& v, const std::string& field) {
  try {
    if (v.is_string()) {
      if (v.get<std::string>() == "linear") return Potential::linear();
      fail(field, "unknown potential '" + v.get<std::string>() + "'");
    }
    require_object(v, field);
    if (v.contains("power")) {
      check_keys(v, {"power"}, field);
      return Potential::power(number(v["power"], join(field, "power")));
    }
    if (v.contains("table")) {
      check_keys(v, {"table"}, field);
      return Potential::table(numbers(v["table"], join(field, "table")));
    }
    fail(field, "expected \"linear\", {\"power\": beta} or {\"table\": [...]}");
  } catch (const Error& e) {
    if (e.code() == Errc::config_error) throw;
    fail(field, e.what());
  }
}

BridgeSpec bridge_from_json(const json& doc, const std::string& prefix) {
  require_object(doc, prefix);
  BridgeSpec s = experiments::canonical_spec();
  if (doc.contains("step")) s.step = step_from_json(doc["step"], join(prefix, "step"));
  if (doc.contains("potential")) s.potential = potential_from_json(doc["potential"], join(prefix, "potential"));
  if (doc.contains("lambda")) {
    s.lambda = number(doc["lambda"], join(prefix, "lambda"));
    if (s.lambda < 0.0) fail(join(prefix, "lambda"), "lambda must be >= 0");
  }
  if (doc.contains("length")) {
    s.length = integer(doc["length"], join(prefix, "length"));
    if (s.length < 1) fail(join(prefix, "length"), "must be >= 1");
  }
  if (doc.contains("start")) {
    s.start = integer(doc["start"], join(prefix, "start"));
    if (s.start < 0) fail(join(prefix, "start"), "must be >= 0");
  }
  if (doc.contains("end")) {
    if (doc["end"].is_null()) {
      s.end.reset();
    } else {
      s.end = integer(doc["end"], join(prefix, "end"));
      if (*s.end < 0) fail(join(prefix, "end"), "must be >= 0 or null");
    }
  }
  if (doc.contains("tail_tolerance")) s.tail_tolerance = number(doc["tail_tolerance"], join(prefix, "tail_tolerance"));
  if (doc.contains("truncation")) {
    s.truncation = integer(doc["truncation"], join(prefix, "truncation"));
  } else {
    try {
      s.truncation = default_truncation(s.step, s.potential, s.lambda, s.length, s.start, s.end);
    } catch (const Error& e) {
      fail(join(prefix, "truncation"), e.what());
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    fail(prefix.empty() ? "<bridge>" : prefix, e.what());
  }
  return s;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"exact",       "sample",     "couple",  "scaling",
                                              "tails",       "area",       "correlations",
                                              "relaxation",  "moments",    "oracle-check"};
  return names;
}

std::vector<std::string> allowed_keys(const std::string& command) {
  if (command == "exact") return plus(kBridgeKeys, {"covariance_anchor"});
  if (command == "sample") return plus(kBridgeKeys, {"samples", "seed"});
  if (command == "oracle-check") return kSuiteKeys;
  if (command == "area") return plus(kSweepKeys, {"delta", "floor_delta"});
  if (command == "moments") return plus(kSweepKeys, {"p"});
  return kSweepKeys;
}

CommandConfig decode_config(const std::string& command, json doc,
                            std::optional<std::uint64_t> seed_override) {
  if (std::find(commands().begin(), commands().end(), command) == commands().end())
    throw Error(Errc::config_error, "unknown subcommand '" + command + "'");
  if (doc.is_null()) doc = json::object();
  require_object(doc, "");
  check_keys(doc, allowed_keys(command), "");

  CommandConfig c;
  c.command = command;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("seed", "expected an unsigned 64-bit integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (seed_override) {
    c.seed = *seed_override;
    if (command != "exact" && command != "oracle-check") doc["seed"] = c.seed;
  }

  if (command == "exact" || command == "sample") {
    c.bridge = bridge_from_json(doc);
    if (doc.contains("covariance_anchor")) {
      c.covariance_anchor = integer(doc["covariance_anchor"], "covariance_anchor");
      if (*c.covariance_anchor < 1 || *c.covariance_anchor >= c.bridge->length)
        fail("covariance_anchor", "must satisfy 0 < anchor < length");
    }
    if (doc.contains("samples")) {
      c.samples = integer(doc["samples"], "samples");
      if (c.samples < 1) fail("samples", "must be >= 1");
    }
  } else if (command == "oracle-check") {
    c.suite = suite_from_json(doc);
  } else {
    c.sweep = sweep_from_json(doc);
    c.sweep.seed = c.seed;
    if (command == "area") {
      if (doc.contains("delta")) c.delta = number(doc["delta"], "delta");
      if (!(c.delta > 0.0 && c.delta <= 1.0)) fail("delta", "must lie in (0, 1]");
      if (doc.contains("floor_delta") && !(number(doc["floor_delta"], "floor_delta") > 0.0))
        fail("floor_delta", "must be positive");
    }
    if (command == "moments") {
      if (doc.contains("p")) c.moment_order = number(doc["p"], "p");
      if (!(c.moment_order > 1.0 && c.moment_order < 21.0 / 8.0)) fail("p", "must satisfy 1 < p < 21/8");
    }
    try {
      c.sweep.validate();
    } catch (const Error& e) {
      fail("<sweep>", e.what());
    }
  }
  c.document = std::move(doc);
  return c;
}

std::string config_hash(const json& document) { return hex64(fnv1a(document.dump())); }

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", value);
  return buf;
}

namespace {

void preamble(std::ostream& out, const Provenance& p, const char* header) {
  out << "# prewet " << p.version << " config=" << p.config_hash << " seed=" << p.seed << "\n"
      << header << "\n";
}

}  // namespace

void write_marginals_csv(std::ostream& out, const Provenance& p,
                         const std::vector<std::vector<double>>& marginals) {
  preamble(out, p, "k,x,p");
  for (std::size_t k = 0; k < marginals.size(); ++k)
    for (std::size_t x = 0; x < marginals[k].size(); ++x)
      out << k << ',' << x << ',' << format_number(marginals[k][x]) << '\n';
}

void write_covariance_csv(std::ostream& out, const Provenance& p,
                          const std::vector<std::pair<std::pair<int, int>, double>>& cov) {
  preamble(out, p, "i,j,cov");
  for (const auto& [ij, v] : cov) out << ij.first << ',' << ij.second << ',' << format_number(v) << '\n';
}

void write_sweep_csv(std::ostream& out, const Provenance& p, const experiments::Report& report) {
  preamble(out, p, "lambda,H,quantity,value,stderr");
  for (const auto& r : report.rows)
    out << format_number(r.lambda) << ',' << format_number(r.scale) << ',' << r.quantity << ','
        << format_number(r.value) << ',' << format_number(r.stderr_) << '\n';
}

void write_coupling_csv(std::ostream& out, const Provenance& p, const experiments::Report& report) {
  preamble(out, p, "lambda,N,p_no_meet,stderr");
  for (const auto& c : report.coupling)
    out << format_number(c.lambda) << ',' << c.length << ',' << format_number(c.p_no_meet) << ','
        << format_number(c.stderr_) << '\n';
}

void write_tv_csv(std::ostream& out, const Provenance& p, const experiments::Report& report) {
  preamble(out, p, "lambda,N,tv");
  for (const auto& s : report.tv)
    for (const auto& [n, d] : s.tv) out << format_number(s.lambda) << ',' << n << ',' << format_number(d) << '\n';
}

json report_to_json(const experiments::Report& report) {
  json fits = json::array();
  for (const auto& f : report.fits) {
    json pts = json::array();
    for (const auto& [x, y] : f.points) pts.push_back({x, y});
    fits.push_back({{"quantity", f.quantity},
                    {"lambda", f.lambda},
                    {"applicable", f.applicable},
                    {"note", f.note},
                    {"exponent", f.exponent},
                    {"stderr", f.stderr_},
                    {"intercept", f.intercept},
                    {"r2", f.r2},
                    {"points", pts},
                    {"seeds", f.seeds},
                    {"spec_hashes", f.spec_hashes}});
  }
  json checks = json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"experiment", report.experiment}, {"fits", fits}, {"checks", checks}, {"passed", report.passed()}};
}

}  // namespace prewet::cli
