#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cbstrat/time.hpp"

namespace cbstrat {

enum class Side { Supply, Demand };

char side_tag(Side side);
Side side_from_tag(std::string_view tag);  // "S" or "D"

// One node-hour of two-settlement prices. gap is always dlmp - rtlmp.
struct PriceRecord {
  std::string node_id;
  HourStamp timestamp = 0;
  double dlmp = 0.0;
  double rtlmp = 0.0;
  double gap = 0.0;
};

struct PriceBidStep {
  double quantity = 0.0;  // cumulative MWh, strictly increasing across steps
  double price = 0.0;     // $/MWh
};

// A convergence bid: up to ten (quantity, price) steps on one side of one
// node-hour. The bid's headline quantity is the maximum step quantity.
struct ConvergenceBid {
  std::string bid_id;
  std::string participant_id;
  std::string node_id;
  DayStamp date = 0;
  int hour = 0;
  Side side = Side::Supply;
  std::vector<PriceBidStep> steps;

  double quantity() const { return steps.empty() ? 0.0 : steps.back().quantity; }
  HourStamp timestamp() const { return hour_stamp(date, hour); }
  double min_price() const;
  double max_price() const;
};

// Throws DataError if the bid violates the step-count or monotonicity rules.
void validate_bid(const ConvergenceBid& bid);

struct HourlyPriceStats {
  std::string node_id;
  int hour = 0;
  double avg_dlmp = 0.0;
  long sample_count = 0;
  DateRange window;
};

// (node, hour) -> stats lookup built from compute_hourly_stats output.
class HourlyStatsTable {
 public:
  HourlyStatsTable() = default;
  explicit HourlyStatsTable(std::vector<HourlyPriceStats> entries);

  const HourlyPriceStats* find(const std::string& node_id, int hour) const;
  const std::vector<HourlyPriceStats>& entries() const { return entries_; }

 private:
  std::vector<HourlyPriceStats> entries_;
  std::unordered_map<std::string, std::size_t> index_;  // node|hour -> entry
};

struct SettlementResult {
  std::string bid_id;
  double cleared_quantity = 0.0;
  double net_profit = 0.0;
  double profit_part = 0.0;  // >= 0
  double loss_part = 0.0;    // <= 0
  bool cleared() const { return cleared_quantity > 0.0; }
};

struct NodeInfo {
  std::string node_id;
  bool is_major = false;  // Hub / DLAP style aggregated node
};

struct MarketDataset {
  std::vector<PriceRecord> prices;
  std::vector<ConvergenceBid> bids;
  std::vector<NodeInfo> node_registry;
  // Synthetic datasets record the planted archetype per participant.
  std::vector<std::pair<std::string, std::string>> ground_truth;

  bool has_node(const std::string& node_id) const;
  bool is_major_node(const std::string& node_id) const;
};

// (node, timestamp) -> row lookup for settlement.
class PriceIndex {
 public:
  explicit PriceIndex(std::span<const PriceRecord> prices);
  const PriceRecord* find(const std::string& node_id, HourStamp ts) const;

 private:
  std::span<const PriceRecord> prices_;
  std::unordered_map<std::string, std::unordered_map<HourStamp, std::size_t>> index_;
};

// ---- CSV ingestion / emission ----------------------------------------------
// prices.csv        timestamp,node_id,dlmp,rtlmp
// bids.csv          bid_id,participant_id,node_id,date,hour,side,steps
//                   with side in {S,D} and steps "qty@price;qty@price;..."
// node_registry.csv node_id,is_major

std::vector<PriceRecord> load_price_csv(const std::string& path);
std::vector<ConvergenceBid> load_bid_csv(const std::string& path);
std::vector<NodeInfo> load_node_registry_csv(const std::string& path);

void write_price_csv(const std::string& path, std::span<const PriceRecord> prices);
void write_bid_csv(const std::string& path, std::span<const ConvergenceBid> bids);
void write_node_registry_csv(const std::string& path, std::span<const NodeInfo> nodes);

// ---- Statistics and settlement ---------------------------------------------

// One entry per (node, hour) with at least one sample inside the window;
// avg_dlmp is the exact arithmetic mean. Output sorted by (node_id, hour).
std::vector<HourlyPriceStats> compute_hourly_stats(std::span<const PriceRecord> prices,
                                                   DateRange window);

// Two-settlement payoff for one bid against the matching hour's prices.
// Supply clears every step priced <= dlmp, demand every step priced >= dlmp
// (non-strict on both sides); cleared quantity is the deepest in-the-money
// step's cumulative quantity.
SettlementResult settle_bid(const ConvergenceBid& bid, const PriceRecord& record);

// Settles every bid in the dataset. Bids without a matching price record
// settle as uncleared (quantity 0, zero profit).
std::vector<SettlementResult> settle_all(const MarketDataset& dataset);

struct MonthlySummaryRow {
  std::string month;  // YYYY-MM
  double cleared_mwh = 0.0;
  double net_profit = 0.0;
};

struct MarketSummary {
  std::vector<MonthlySummaryRow> monthly;
  int participant_count = 0;
  int nodes_with_bids = 0;
};

MarketSummary summarize_dataset(const MarketDataset& dataset);

}  // namespace cbstrat
