#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cbstrat/bidding.hpp"
#include "cbstrat/clustering.hpp"
#include "cbstrat/synthetic.hpp"

namespace cbstrat {

// Flat `section.key = value` configuration. Unknown keys, type mismatches and
// out-of-range values are ConfigErrors naming the offending key.
struct RunConfig {
  struct Paths {
    std::string prices;
    std::string bids;
    std::string registry;
    std::string out = "out";
  } paths;

  std::uint64_t seed = 1;

  SyntheticConfig synth;
  ClusteringConfig cluster;
  LabelThresholds thresholds;
  OptimizerConfig optimizer;
  BacktestConfig backtest;  // backtest.optimizer mirrors `optimizer` after load

  // Optional (epsilon, theta) sweep for the backtest stage; empty means a
  // single case from `optimizer`.
  std::vector<std::pair<double, double>> backtest_cases;

  int metrics_top_k = 10;
};

RunConfig load_config(const std::string& path);

// Parses the same schema from an in-memory string (used by load_config).
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// One line per key: name, type and default. Printed under --help.
std::string config_schema_help();

}  // namespace cbstrat
