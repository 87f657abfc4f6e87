// Writes the canonical N = 6 fixtures from brute-force path enumeration:
//   canonical_n6.json           partition, marginals, covariances, area law
//   canonical_n6_marginals.csv  what `prewet exact` must reproduce byte for byte
#include <cmath>
#include <fstream>
#include <iostream>

#include "prewet/cli.hpp"
#include "prewet/oracle.hpp"

using prewet::cli::json;

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_fixture CONFIG.json OUT_DIR\n";
    return 1;
  }
  const auto doc = prewet::cli::read_config_file(argv[1]);
  const auto cfg = prewet::cli::decode_config("exact", doc, std::nullopt);
  const auto& spec = *cfg.bridge;
  const auto law = prewet::oracle::enumerate_paths(spec);
  const int heights = spec.truncation + 1;

  std::vector<std::vector<double>> marg;
  for (int k = 0; k <= spec.length; ++k) marg.push_back(law.marginal(k, heights));
  const std::string dir = argv[2];
  const prewet::cli::Provenance prov{PREWET_VERSION, prewet::cli::config_hash(cfg.document), cfg.seed};
  std::ofstream csv(dir + "/canonical_n6_marginals.csv", std::ios::binary);
  prewet::cli::write_marginals_csv(csv, prov, marg);

  json cov = json::array();
  for (int i = 1; i < spec.length; ++i)
    for (int j = i; j < spec.length; ++j) cov.push_back({i, j, law.covariance(i, j)});
  const double h = prewet::canonical_scale(spec.potential, spec.lambda);
  const double hn = h * spec.length;
  json out = {{"spec_hash", spec.hash()},
              {"paths", law.size()},
              {"partition", static_cast<double>(law.partition)},
              {"log_partition", std::log(static_cast<double>(law.partition))},
              {"marginals", marg},
              {"covariance", cov},
              {"mean_area", law.mean_area()},
              {"area_delta", 0.5},
              {"area_upper", law.area_at_least(hn / 0.5)},
              {"area_lower", law.area_at_most(0.5 * hn)}};
  std::ofstream js(dir + "/canonical_n6.json", std::ios::binary);
  js << out.dump(2) << "\n";
  return 0;
}
