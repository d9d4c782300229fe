#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbstrat/errors.hpp"
#include "cbstrat/features.hpp"
#include "cbstrat/rng.hpp"
#include "test_util.hpp"

using namespace cbstrat;

namespace {

ConvergenceBid bid_with_prices(Side side, std::vector<double> prices, const std::string& node = "N1",
                               int hour = 14, const std::string& date = "2019-06-01") {
  if (side == Side::Supply) {
    std::sort(prices.begin(), prices.end());
  } else {
    std::sort(prices.begin(), prices.end(), std::greater<double>());
  }
  ConvergenceBid bid;
  bid.bid_id = "B1";
  bid.participant_id = "P1";
  bid.node_id = node;
  bid.date = parse_date(date);
  bid.hour = hour;
  bid.side = side;
  double qty = 0.0;
  for (const double p : prices) {
    qty += 10.0;
    bid.steps.push_back(PriceBidStep{qty, p});
  }
  return bid;
}

HourlyPriceStats stats_with(double avg, const std::string& node = "N1", int hour = 14) {
  return HourlyPriceStats{node, hour, avg, 100, DateRange{0, 1}};
}

}  // namespace

TEST_CASE("price distance: the three envelope cases, both sides") {
  CHECK(compute_price_distance(bid_with_prices(Side::Supply, {45.0, 55.0}), stats_with(40.0)) ==
        5.0);
  CHECK(compute_price_distance(bid_with_prices(Side::Supply, {25.0, 35.0}), stats_with(40.0)) ==
        -5.0);
  CHECK(compute_price_distance(bid_with_prices(Side::Supply, {35.0, 45.0}), stats_with(40.0)) ==
        0.0);
  // Demand mirrors the sign.
  CHECK(compute_price_distance(bid_with_prices(Side::Demand, {50.0, 60.0}), stats_with(70.0)) ==
        10.0);
  CHECK(compute_price_distance(bid_with_prices(Side::Demand, {50.0, 60.0}), stats_with(40.0)) ==
        -10.0);
  CHECK(compute_price_distance(bid_with_prices(Side::Demand, {35.0, 45.0}), stats_with(40.0)) ==
        0.0);
  // Boundary ties fall into the straddle case.
  CHECK(compute_price_distance(bid_with_prices(Side::Supply, {40.0, 50.0}), stats_with(40.0)) ==
        0.0);
  CHECK(compute_price_distance(bid_with_prices(Side::Supply, {30.0, 40.0}), stats_with(40.0)) ==
        0.0);
  CHECK_THROWS_AS(
      compute_price_distance(bid_with_prices(Side::Supply, {45.0}), stats_with(40.0, "N2")),
      InvariantError);
}

TEST_CASE("price distance is zero iff the average sits inside the envelope") {
  SplitMix64 rng(3);
  for (int it = 0; it < 300; ++it) {
    const Side side = rng.bernoulli(0.5) ? Side::Supply : Side::Demand;
    std::vector<double> prices;
    const int n = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n; ++i) prices.push_back(rng.uniform(0.0, 100.0));
    const auto bid = bid_with_prices(side, prices);
    const double avg = rng.uniform(0.0, 100.0);
    const double delta = compute_price_distance(bid, stats_with(avg));
    const bool inside = bid.min_price() <= avg && avg <= bid.max_price();
    CHECK((delta == 0.0) == inside);
  }
}

TEST_CASE("price distance sign symmetry under side flip and price reflection") {
  SplitMix64 rng(5);
  for (int it = 0; it < 300; ++it) {
    const Side side = rng.bernoulli(0.5) ? Side::Supply : Side::Demand;
    std::vector<double> prices;
    const int n = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n; ++i) prices.push_back(rng.uniform(0.0, 100.0));
    const double avg = rng.uniform(0.0, 100.0);
    const auto bid = bid_with_prices(side, prices);

    std::vector<double> reflected;
    for (const double p : prices) reflected.push_back(2.0 * avg - p);
    const auto flipped =
        bid_with_prices(side == Side::Supply ? Side::Demand : Side::Supply, reflected);

    const double d1 = compute_price_distance(bid, stats_with(avg));
    const double d2 = compute_price_distance(flipped, stats_with(avg));
    CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
  }
}

TEST_CASE("type consistency reproduces the worked example") {
  // Ten prior bids at the node: six supply, four demand.
  std::vector<ConvergenceBid> history;
  for (int i = 0; i < 10; ++i) {
    auto h = bid_with_prices(i < 6 ? Side::Supply : Side::Demand, {40.0});
    h.date = parse_date("2019-06-01") - 10 + i;
    history.push_back(h);
  }
  auto current = bid_with_prices(Side::Supply, {45.0});
  CHECK(compute_type_consistency(current, history) == 0.6);
  current.side = Side::Demand;
  CHECK(compute_type_consistency(current, history) == 0.4);
}

TEST_CASE("type consistency window and defaults") {
  auto current = bid_with_prices(Side::Supply, {45.0});
  CHECK(compute_type_consistency(current, {}) == 0.5);

  std::vector<ConvergenceBid> history;
  auto same_day = current;
  history.push_back(same_day);  // same date: excluded
  auto stale = current;
  stale.date = current.date - 366;  // beyond the one-year window
  history.push_back(stale);
  auto other_node = current;
  other_node.date = current.date - 5;
  other_node.node_id = "N9";
  history.push_back(other_node);
  auto other_participant = current;
  other_participant.date = current.date - 5;
  other_participant.participant_id = "P9";
  history.push_back(other_participant);
  CHECK(compute_type_consistency(current, history) == 0.5);

  auto in_window = current;
  in_window.date = current.date - 365;  // inclusive edge
  history.push_back(in_window);
  CHECK(compute_type_consistency(current, history) == 1.0);
}

TEST_CASE("consistency of a bid and its side-flipped twin sum to one") {
  SplitMix64 rng(9);
  std::vector<ConvergenceBid> history;
  for (int i = 0; i < 20; ++i) {
    auto h = bid_with_prices(rng.bernoulli(0.5) ? Side::Supply : Side::Demand, {40.0});
    h.date = parse_date("2019-06-01") - 1 - static_cast<int>(rng.below(300));
    history.push_back(h);
  }
  auto bid = bid_with_prices(Side::Supply, {45.0});
  auto flipped = bid;
  flipped.side = Side::Demand;
  const double a = compute_type_consistency(bid, history);
  const double b = compute_type_consistency(flipped, history);
  CHECK(a + b == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compute_feature_vector assembles all four features") {
  MarketDataset ds;
  ds.node_registry = {{"HUB1", true}, {"N1", false}};

  HourlyStatsTable stats({stats_with(40.0, "HUB1"), stats_with(40.0, "N1")});

  auto b1 = bid_with_prices(Side::Supply, {42.0}, "HUB1");
  FeatureContext ctx{&stats, {}, &ds};
  const FeatureVector f1 = compute_feature_vector(b1, ctx);
  CHECK(f1.n_steps == 1);
  CHECK(f1.is_major_node == 1);
  CHECK(f1.delta == 2.0);
  CHECK(f1.type_consistency == 0.5);

  auto b2 = bid_with_prices(Side::Demand, {38.0, 37.0, 36.0}, "N1");
  const FeatureVector f2 = compute_feature_vector(b2, ctx);
  CHECK(f2.n_steps == 3);
  CHECK(f2.is_major_node == 0);

  auto b3 = bid_with_prices(Side::Supply, {42.0}, "GHOST");
  CHECK_THROWS_AS(compute_feature_vector(b3, ctx), DataError);

  auto b4 = bid_with_prices(Side::Supply, {42.0}, "N1", 9);
  CHECK_THROWS_AS(compute_feature_vector(b4, ctx), DataError);  // no stats for hour 9
}

TEST_CASE("batch feature computation matches the scalar definition") {
  MarketDataset ds;
  ds.node_registry = {{"N1", false}, {"N2", false}};
  SplitMix64 rng(17);
  for (int i = 0; i < 120; ++i) {
    auto b = bid_with_prices(rng.bernoulli(0.5) ? Side::Supply : Side::Demand,
                             {rng.uniform(20.0, 60.0)}, rng.bernoulli(0.5) ? "N1" : "N2");
    b.bid_id = "B" + std::to_string(i);
    b.participant_id = rng.bernoulli(0.5) ? "P1" : "P2";
    b.date = parse_date("2019-01-01") + static_cast<int>(rng.below(500));
    ds.bids.push_back(b);
  }
  HourlyStatsTable stats({stats_with(40.0, "N1"), stats_with(40.0, "N2")});
  const auto batch = compute_feature_vectors(ds, stats);
  REQUIRE(batch.size() == ds.bids.size());
  for (std::size_t i = 0; i < ds.bids.size(); ++i) {
    FeatureContext ctx{&stats, ds.bids, &ds};
    const FeatureVector scalar = compute_feature_vector(ds.bids[i], ctx);
    CHECK(batch[i].delta == scalar.delta);
    CHECK(batch[i].type_consistency == doctest::Approx(scalar.type_consistency).epsilon(1e-12));
    CHECK(batch[i].n_steps == scalar.n_steps);
    CHECK(batch[i].is_major_node == scalar.is_major_node);
  }
}

TEST_CASE("normalize_features scaling rules") {
  const auto fv = [](double delta, double cons, int steps, int major) {
    FeatureVector v;
    v.delta = delta;
    v.type_consistency = cons;
    v.n_steps = steps;
    v.is_major_node = major;
    return v;
  };

  // Degenerate spread: all deltas identical scale to zero.
  {
    std::vector<FeatureVector> vs = {fv(7.0, 0.5, 1, 0), fv(7.0, 0.5, 10, 1)};
    const auto norm = normalize_features(vs);
    CHECK(norm.matrix[0][0] == 0.0);
    CHECK(norm.matrix[1][0] == 0.0);
    CHECK(norm.scaling.delta_scale == 1.0);
    // Step endpoints map to 0 and 1.
    CHECK(norm.matrix[0][2] == 0.0);
    CHECK(norm.matrix[1][2] == 1.0);
    CHECK(norm.matrix[1][3] == 1.0);
  }

  // Hand-scaled fixture: deltas {-100,-2,0,3,50}, median 0, MAD 3.
  {
    std::vector<FeatureVector> vs = {fv(-100.0, 0.1, 1, 0), fv(-2.0, 0.2, 2, 0),
                                     fv(0.0, 0.3, 3, 1), fv(3.0, 0.4, 4, 0),
                                     fv(50.0, 0.5, 5, 1)};
    const auto norm = normalize_features(vs);
    CHECK(norm.scaling.delta_median == 0.0);
    CHECK(norm.scaling.delta_scale == 3.0);
    CHECK(norm.matrix[0][0] == doctest::Approx(-100.0 / 3.0));
    CHECK(norm.matrix[1][0] == doctest::Approx(-2.0 / 3.0));
    CHECK(norm.matrix[3][0] == doctest::Approx(1.0));
    CHECK(norm.matrix[4][0] == doctest::Approx(50.0 / 3.0));
    // Consistency passes through untouched.
    CHECK(norm.matrix[2][1] == 0.3);
  }

  CHECK_THROWS_AS(normalize_features(std::vector<FeatureVector>{fv(1.0, 0.5, 1, 0)}), DataError);
}

TEST_CASE("normalization preserves the rank order of every column") {
  SplitMix64 rng(23);
  std::vector<FeatureVector> vs;
  for (int i = 0; i < 50; ++i) {
    FeatureVector v;
    v.delta = rng.uniform(-300.0, 300.0);
    v.type_consistency = rng.uniform01();
    v.n_steps = 1 + static_cast<int>(rng.below(10));
    v.is_major_node = rng.bernoulli(0.5) ? 1 : 0;
    vs.push_back(v);
  }
  const auto norm = normalize_features(vs);
  const auto argsort = [&](auto getter) {
    std::vector<std::size_t> idx(vs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return getter(a) < getter(b); });
    return idx;
  };
  const auto raw0 = argsort([&](std::size_t i) { return vs[i].delta; });
  const auto new0 = argsort([&](std::size_t i) { return norm.matrix[i][0]; });
  CHECK(raw0 == new0);
  const auto raw2 = argsort([&](std::size_t i) { return vs[i].n_steps; });
  const auto new2 = argsort([&](std::size_t i) { return norm.matrix[i][2]; });
  CHECK(raw2 == new2);
}

TEST_CASE("features csv round trip") {
  TempDir dir;
  std::vector<FeatureVector> vs;
  FeatureVector v;
  v.bid_id = "B1";
  v.delta = -12.5;
  v.type_consistency = 0.75;
  v.n_steps = 3;
  v.is_major_node = 1;
  vs.push_back(v);
  write_features_csv(dir.file("f.csv"), vs);
  const auto back = load_features_csv(dir.file("f.csv"));
  REQUIRE(back.size() == 1);
  CHECK(back[0].bid_id == "B1");
  CHECK(back[0].delta == -12.5);
  CHECK(back[0].type_consistency == 0.75);
  CHECK(back[0].n_steps == 3);
  CHECK(back[0].is_major_node == 1);
}
