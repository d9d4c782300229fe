#include <doctest.h>

#include <cmath>

#include "cbstrat/errors.hpp"
#include "cbstrat/market_data.hpp"
#include "cbstrat/rng.hpp"
#include "test_util.hpp"

using namespace cbstrat;

namespace {

ConvergenceBid make_bid(Side side, std::vector<PriceBidStep> steps, const std::string& node = "N1",
                        int hour = 14) {
  ConvergenceBid bid;
  bid.bid_id = "B1";
  bid.participant_id = "P1";
  bid.node_id = node;
  bid.date = parse_date("2019-06-01");
  bid.hour = hour;
  bid.side = side;
  bid.steps = std::move(steps);
  return bid;
}

PriceRecord make_record(double dlmp, double rtlmp, const std::string& node = "N1",
                        int hour = 14) {
  PriceRecord r;
  r.node_id = node;
  r.timestamp = hour_stamp(parse_date("2019-06-01"), hour);
  r.dlmp = dlmp;
  r.rtlmp = rtlmp;
  r.gap = dlmp - rtlmp;
  return r;
}

}  // namespace

TEST_CASE("load_price_csv parses rows and computes the gap") {
  TempDir dir;
  const std::string path = dir.write(
      "p.csv", "timestamp,node_id,dlmp,rtlmp\n2019-06-01T14:00Z,N1,42.5,38.0\n");
  const auto prices = load_price_csv(path);
  REQUIRE(prices.size() == 1);
  CHECK(prices[0].node_id == "N1");
  CHECK(prices[0].dlmp == 42.5);
  CHECK(prices[0].rtlmp == 38.0);
  CHECK(prices[0].gap == 4.5);
  CHECK(hour_of(prices[0].timestamp) == 14);
}

TEST_CASE("load_price_csv empty file with valid header") {
  TempDir dir;
  const auto prices = load_price_csv(dir.write("p.csv", "timestamp,node_id,dlmp,rtlmp\n"));
  CHECK(prices.empty());
}

TEST_CASE("load_price_csv rejects duplicates, bad rows, non-finite prices") {
  TempDir dir;
  CHECK_THROWS_AS(load_price_csv(dir.write("a.csv",
                                           "timestamp,node_id,dlmp,rtlmp\n"
                                           "2019-06-01T14:00Z,N1,42.5,38.0\n"
                                           "2019-06-01T14:00Z,N1,40.0,39.0\n")),
                  DataError);
  CHECK_THROWS_AS(load_price_csv(dir.write("b.csv", "timestamp,node_id,dlmp\n")), DataError);
  try {
    load_price_csv(dir.write("c.csv",
                             "timestamp,node_id,dlmp,rtlmp\n"
                             "2019-06-01T14:00Z,N1,42.5,38.0\n"
                             "2019-06-01T15:00Z,N1,oops,38.0\n"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(load_price_csv(dir.write("d.csv",
                                           "timestamp,node_id,dlmp,rtlmp\n"
                                           "2019-06-01T14:00Z,N1,nan,38.0\n")),
                  DataError);
}

TEST_CASE("load_bid_csv parses steps and enforces bid rules") {
  TempDir dir;
  const std::string header = "bid_id,participant_id,node_id,date,hour,side,steps\n";
  const auto bids = load_bid_csv(dir.write(
      "b.csv", header + "B1,P1,N1,2019-06-01,14,S,25@30;50@40\nB2,P1,N1,2019-06-01,15,D,10@55\n"));
  REQUIRE(bids.size() == 2);
  CHECK(bids[0].side == Side::Supply);
  CHECK(bids[0].steps.size() == 2);
  CHECK(bids[0].quantity() == 50.0);
  CHECK(bids[1].side == Side::Demand);
  CHECK(bids[1].steps.size() == 1);
  CHECK(bids[1].quantity() == 10.0);

  // Eleven steps is over the market limit.
  std::string eleven = "B3,P1,N1,2019-06-01,14,S,";
  for (int i = 1; i <= 11; ++i) {
    if (i > 1) eleven += ';';
    eleven += std::to_string(i * 10) + "@" + std::to_string(30 + i);
  }
  CHECK_THROWS_AS(load_bid_csv(dir.write("c.csv", header + eleven + "\n")), DataError);
  CHECK_THROWS_AS(
      load_bid_csv(dir.write("d.csv", header + "B4,P1,N1,2019-06-01,14,S,50@30;25@40\n")),
      DataError);
  CHECK_THROWS_AS(
      load_bid_csv(dir.write("e.csv", header + "B5,P1,N1,2019-06-01,14,X,25@30\n")), DataError);
}

TEST_CASE("validate_bid enforces side-specific price monotonicity") {
  CHECK_THROWS_AS(
      validate_bid(make_bid(Side::Supply, {{25.0, 40.0}, {50.0, 30.0}})), DataError);
  CHECK_THROWS_AS(
      validate_bid(make_bid(Side::Demand, {{25.0, 30.0}, {50.0, 40.0}})), DataError);
  CHECK_NOTHROW(validate_bid(make_bid(Side::Supply, {{25.0, 30.0}, {50.0, 40.0}})));
  CHECK_NOTHROW(validate_bid(make_bid(Side::Demand, {{25.0, 40.0}, {50.0, 30.0}})));
}

TEST_CASE("compute_hourly_stats means") {
  std::vector<PriceRecord> prices;
  PriceRecord a = make_record(30.0, 0.0);
  PriceRecord b = make_record(50.0, 0.0);
  b.timestamp += 24;  // next day, same hour
  prices = {a, b};
  const DateRange window{parse_date("2019-06-01"), parse_date("2019-06-30")};
  auto stats = compute_hourly_stats(prices, window);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].node_id == "N1");
  CHECK(stats[0].hour == 14);
  CHECK(stats[0].avg_dlmp == 40.0);
  CHECK(stats[0].sample_count == 2);

  auto single = compute_hourly_stats({&a, 1}, window);
  a.dlmp = 17.2;
  single = compute_hourly_stats({&a, 1}, window);
  REQUIRE(single.size() == 1);
  CHECK(single[0].avg_dlmp == 17.2);

  const DateRange excl{parse_date("2019-07-01"), parse_date("2019-07-31")};
  CHECK(compute_hourly_stats(prices, excl).empty());
}

TEST_CASE("settle_bid spec cases") {
  // Supply at 30, DA 35 / RT 20: clears and earns the gap.
  auto s1 = settle_bid(make_bid(Side::Supply, {{50.0, 30.0}}), make_record(35.0, 20.0));
  CHECK(s1.cleared_quantity == 50.0);
  CHECK(s1.net_profit == 750.0);
  CHECK(s1.profit_part == 750.0);
  CHECK(s1.loss_part == 0.0);

  // Demand priced below DA does not clear.
  auto s2 = settle_bid(make_bid(Side::Demand, {{10.0, 30.0}}), make_record(35.0, 20.0));
  CHECK(s2.cleared_quantity == 0.0);
  CHECK(s2.net_profit == 0.0);

  // Two supply steps, only the first in the money at DA 35.
  auto s3 =
      settle_bid(make_bid(Side::Supply, {{25.0, 30.0}, {50.0, 40.0}}), make_record(35.0, 30.0));
  CHECK(s3.cleared_quantity == 25.0);
  CHECK(s3.net_profit == 125.0);

  // Clearing is non-strict at price equality.
  auto s4 = settle_bid(make_bid(Side::Supply, {{50.0, 35.0}}), make_record(35.0, 20.0));
  CHECK(s4.cleared_quantity == 50.0);
  auto s5 = settle_bid(make_bid(Side::Demand, {{10.0, 35.0}}), make_record(35.0, 40.0));
  CHECK(s5.cleared_quantity == 10.0);

  CHECK_THROWS_AS(
      settle_bid(make_bid(Side::Supply, {{50.0, 30.0}}, "N2"), make_record(35.0, 20.0)),
      InvariantError);
}

TEST_CASE("settlement antisymmetry: mirrored bid against swapped prices") {
  // Mirror = flip side, reflect step prices through (dlmp+rtlmp)/2, swap
  // dlmp/rtlmp. Payoffs and cleared quantities must match exactly.
  SplitMix64 rng(42);
  for (int it = 0; it < 200; ++it) {
    const double dlmp = rng.uniform(-50.0, 120.0);
    const double rtlmp = rng.uniform(-50.0, 120.0);
    const Side side = rng.bernoulli(0.5) ? Side::Supply : Side::Demand;
    const int n_steps = 1 + static_cast<int>(rng.below(3));
    std::vector<PriceBidStep> steps;
    double qty = 0.0;
    double price = rng.uniform(-60.0, 130.0);
    for (int s = 0; s < n_steps; ++s) {
      qty += rng.uniform(1.0, 30.0);
      steps.push_back(PriceBidStep{qty, price});
      price += side == Side::Supply ? rng.uniform(0.0, 20.0) : -rng.uniform(0.0, 20.0);
    }
    const ConvergenceBid bid = make_bid(side, steps);

    ConvergenceBid mirrored = bid;
    mirrored.side = side == Side::Supply ? Side::Demand : Side::Supply;
    const double mid2 = dlmp + rtlmp;
    for (auto& s : mirrored.steps) s.price = mid2 - s.price;

    const auto a = settle_bid(bid, make_record(dlmp, rtlmp));
    const auto b = settle_bid(mirrored, make_record(rtlmp, dlmp));
    CHECK(a.cleared_quantity == b.cleared_quantity);
    CHECK(a.net_profit == doctest::Approx(b.net_profit).epsilon(1e-12));
  }
}

TEST_CASE("settlement profit equals signed cleared quantity times gap") {
  SplitMix64 rng(7);
  for (int it = 0; it < 100; ++it) {
    const double dlmp = rng.uniform(0.0, 100.0);
    const double rtlmp = rng.uniform(0.0, 100.0);
    const Side side = rng.bernoulli(0.5) ? Side::Supply : Side::Demand;
    const ConvergenceBid bid = make_bid(side, {{25.0, rng.uniform(0.0, 100.0)}});
    const PriceRecord rec = make_record(dlmp, rtlmp);
    const auto st = settle_bid(bid, rec);
    const double expect =
        side == Side::Supply ? st.cleared_quantity * rec.gap : -st.cleared_quantity * rec.gap;
    CHECK(st.net_profit == doctest::Approx(expect).epsilon(1e-12));
    CHECK(st.net_profit == st.profit_part + st.loss_part);
  }
}

TEST_CASE("monotone clearing in the single-step price") {
  SplitMix64 rng(11);
  for (int it = 0; it < 100; ++it) {
    const PriceRecord rec = make_record(rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0));
    const double p1 = rng.uniform(0.0, 100.0);
    const double p2 = p1 + rng.uniform(0.0, 50.0);
    const auto demand_lo = settle_bid(make_bid(Side::Demand, {{10.0, p1}}), rec);
    const auto demand_hi = settle_bid(make_bid(Side::Demand, {{10.0, p2}}), rec);
    CHECK(demand_hi.cleared_quantity >= demand_lo.cleared_quantity);
    const auto supply_lo = settle_bid(make_bid(Side::Supply, {{10.0, p1}}), rec);
    const auto supply_hi = settle_bid(make_bid(Side::Supply, {{10.0, p2}}), rec);
    CHECK(supply_hi.cleared_quantity <= supply_lo.cleared_quantity);
  }
}

TEST_CASE("csv round-trip is a fixed point") {
  TempDir dir;
  const std::string header = "bid_id,participant_id,node_id,date,hour,side,steps\n";
  const std::string prices_path = dir.write(
      "p.csv",
      "timestamp,node_id,dlmp,rtlmp\n2019-06-01T14:00Z,N1,42.5,38.0\n"
      "2019-06-01T15:00Z,N1,41.1234,38.5678\n");
  const std::string bids_path =
      dir.write("b.csv", header + "B1,P1,N1,2019-06-01,14,S,25@30;50@40\n");
  const std::string nodes_path = dir.write("n.csv", "node_id,is_major\nN1,0\nHUB1,1\n");

  const auto prices = load_price_csv(prices_path);
  const auto bids = load_bid_csv(bids_path);
  const auto nodes = load_node_registry_csv(nodes_path);

  write_price_csv(dir.file("p2.csv"), prices);
  write_bid_csv(dir.file("b2.csv"), bids);
  write_node_registry_csv(dir.file("n2.csv"), nodes);

  // Reload and re-emit: canonical form reproduces byte-identically.
  write_price_csv(dir.file("p3.csv"), load_price_csv(dir.file("p2.csv")));
  write_bid_csv(dir.file("b3.csv"), load_bid_csv(dir.file("b2.csv")));
  write_node_registry_csv(dir.file("n3.csv"), load_node_registry_csv(dir.file("n2.csv")));
  CHECK(slurp(dir.file("p2.csv")) == slurp(dir.file("p3.csv")));
  CHECK(slurp(dir.file("b2.csv")) == slurp(dir.file("b3.csv")));
  CHECK(slurp(dir.file("n2.csv")) == slurp(dir.file("n3.csv")));

  // Values survive the round trip exactly.
  const auto prices2 = load_price_csv(dir.file("p2.csv"));
  REQUIRE(prices2.size() == prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) {
    CHECK(prices2[i].dlmp == prices[i].dlmp);
    CHECK(prices2[i].rtlmp == prices[i].rtlmp);
    CHECK(prices2[i].gap == prices[i].gap);
  }
}

TEST_CASE("summarize_dataset monthly rows") {
  MarketDataset ds;
  ds.node_registry = {{"N1", false}};
  ds.prices = {make_record(35.0, 20.0)};
  ds.bids = {make_bid(Side::Supply, {{50.0, 30.0}})};

  const MarketSummary s = summarize_dataset(ds);
  REQUIRE(s.monthly.size() == 1);
  CHECK(s.monthly[0].month == "2019-06");
  CHECK(s.monthly[0].cleared_mwh == 50.0);
  CHECK(s.monthly[0].net_profit == 750.0);
  CHECK(s.participant_count == 1);
  CHECK(s.nodes_with_bids == 1);

  // No bids: zero rows for the months spanned by prices.
  MarketDataset empty = ds;
  empty.bids.clear();
  const MarketSummary e = summarize_dataset(empty);
  REQUIRE(e.monthly.size() == 1);
  CHECK(e.monthly[0].month == "2019-06");
  CHECK(e.monthly[0].cleared_mwh == 0.0);
  CHECK(e.monthly[0].net_profit == 0.0);
  CHECK(e.participant_count == 0);

  // Two participants with known settlements sum by hand.
  MarketDataset two = ds;
  ConvergenceBid second = make_bid(Side::Demand, {{10.0, 40.0}});
  second.bid_id = "B2";
  second.participant_id = "P2";
  two.bids.push_back(second);  // clears at DA 35 <= 40: eta = 10 * (20-35) = -150
  const MarketSummary t = summarize_dataset(two);
  REQUIRE(t.monthly.size() == 1);
  CHECK(t.monthly[0].cleared_mwh == 60.0);
  CHECK(t.monthly[0].net_profit == 600.0);
  CHECK(t.participant_count == 2);
}
