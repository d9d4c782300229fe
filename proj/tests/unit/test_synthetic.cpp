#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "cbstrat/errors.hpp"
#include "cbstrat/synthetic.hpp"
#include "test_util.hpp"

using namespace cbstrat;

namespace {

SyntheticConfig small_config() {
  SyntheticConfig cfg;
  cfg.nodes = 12;
  cfg.major_nodes = 3;
  cfg.days = 30;
  cfg.participants = {{"PF1", Archetype::PriceForecasting},
                      {"SS1", Archetype::SelfScheduling},
                      {"OP1", Archetype::Opportunistic}};
  cfg.spike_prob = 0.05;
  return cfg;
}

}  // namespace

TEST_CASE("generator is deterministic for a fixed config and seed") {
  const SyntheticConfig cfg = small_config();
  const MarketDataset a = generate_synthetic_market(cfg, 7);
  const MarketDataset b = generate_synthetic_market(cfg, 7);
  REQUIRE(a.prices.size() == b.prices.size());
  for (std::size_t i = 0; i < a.prices.size(); ++i) {
    CHECK(a.prices[i].node_id == b.prices[i].node_id);
    CHECK(a.prices[i].timestamp == b.prices[i].timestamp);
    CHECK(a.prices[i].dlmp == b.prices[i].dlmp);
    CHECK(a.prices[i].rtlmp == b.prices[i].rtlmp);
  }
  REQUIRE(a.bids.size() == b.bids.size());
  for (std::size_t i = 0; i < a.bids.size(); ++i) {
    CHECK(a.bids[i].bid_id == b.bids[i].bid_id);
    CHECK(a.bids[i].steps.size() == b.bids[i].steps.size());
    CHECK(a.bids[i].steps[0].price == b.bids[i].steps[0].price);
  }

  const MarketDataset c = generate_synthetic_market(cfg, 8);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.prices.size() && !any_diff; ++i) {
    any_diff = a.prices[i].dlmp != c.prices[i].dlmp;
  }
  CHECK(any_diff);
}

TEST_CASE("zero spike frequency keeps prices inside the noise band") {
  SyntheticConfig cfg = small_config();
  cfg.participants.clear();
  cfg.spike_prob = 0.0;
  cfg.noise_scale = 4.0;
  const MarketDataset ds = generate_synthetic_market(cfg, 3);

  // Hourly mean over the run, then check every deviation from it.
  std::map<std::pair<std::string, int>, std::pair<double, long>> acc;
  for (const auto& r : ds.prices) {
    auto& [sum, count] = acc[{r.node_id, hour_of(r.timestamp)}];
    sum += r.dlmp;
    count += 1;
  }
  for (const auto& r : ds.prices) {
    const auto& [sum, count] = acc[{r.node_id, hour_of(r.timestamp)}];
    const double mean = sum / static_cast<double>(count);
    CHECK(std::abs(r.dlmp - mean) <= 2.0 * cfg.noise_scale + 1e-9);
  }
}

TEST_CASE("archetype schedules give deterministic bid counts") {
  const SyntheticConfig cfg = small_config();
  const MarketDataset ds = generate_synthetic_market(cfg, 5);
  REQUIRE(ds.ground_truth.size() == 3);

  std::map<std::string, long> counts;
  for (const auto& b : ds.bids) counts[b.participant_id] += 1;
  // price_forecasting: every major node (3), every hour, every day.
  CHECK(counts["PF1"] == 3L * 24 * cfg.days);
  // self_scheduling: 3 regular nodes.
  CHECK(counts["SS1"] == 3L * 24 * cfg.days);
  // opportunistic: 4 regular nodes.
  CHECK(counts["OP1"] == 4L * 24 * cfg.days);

  // Bids satisfy the structural invariants and reference registered nodes.
  for (const auto& b : ds.bids) {
    CHECK_NOTHROW(validate_bid(b));
    CHECK(ds.has_node(b.node_id));
  }

  // Opportunistic bids only at regular nodes; forecasting only at majors.
  for (const auto& b : ds.bids) {
    if (b.participant_id == "OP1") CHECK_FALSE(ds.is_major_node(b.node_id));
    if (b.participant_id == "PF1") CHECK(ds.is_major_node(b.node_id));
  }
}

TEST_CASE("generator rejects invalid configs") {
  SyntheticConfig cfg = small_config();
  cfg.nodes = 0;
  CHECK_THROWS_AS(generate_synthetic_market(cfg, 1), ConfigError);
  cfg = small_config();
  cfg.spike_prob = -0.1;
  CHECK_THROWS_AS(generate_synthetic_market(cfg, 1), ConfigError);
  cfg = small_config();
  cfg.major_nodes = 99;
  CHECK_THROWS_AS(generate_synthetic_market(cfg, 1), ConfigError);
  cfg = small_config();
  cfg.days = 0;
  CHECK_THROWS_AS(generate_synthetic_market(cfg, 1), ConfigError);
}

TEST_CASE("spikes appear when configured and clear the scale floor") {
  SyntheticConfig cfg = small_config();
  cfg.participants.clear();
  cfg.days = 120;
  cfg.spike_prob = 0.05;
  cfg.spike_scale = 300.0;
  cfg.noise_scale = 4.0;
  const MarketDataset ds = generate_synthetic_market(cfg, 11);

  std::map<std::pair<std::string, int>, std::pair<double, long>> acc;
  for (const auto& r : ds.prices) {
    auto& [sum, count] = acc[{r.node_id, hour_of(r.timestamp)}];
    sum += r.dlmp;
    count += 1;
  }
  long spikes = 0;
  for (const auto& r : ds.prices) {
    const auto& [sum, count] = acc[{r.node_id, hour_of(r.timestamp)}];
    const double mean = sum / static_cast<double>(count);
    if (std::abs(r.dlmp - mean) > 200.0) ++spikes;
    // No spikes at major aggregated nodes.
    if (ds.is_major_node(r.node_id)) CHECK(std::abs(r.dlmp - mean) < 50.0);
  }
  CHECK(spikes > 0);
}
