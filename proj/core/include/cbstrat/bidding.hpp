#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbstrat/market_data.hpp"
#include "cbstrat/spike_optimizer.hpp"

namespace cbstrat {

// Columnar per-node hourly price store; NaN marks missing node-hours.
class PricePanel {
 public:
  explicit PricePanel(const MarketDataset& dataset);

  int node_count() const { return static_cast<int>(ids_.size()); }
  const std::string& node_id(int node) const { return ids_[static_cast<std::size_t>(node)]; }
  int node_index(const std::string& node_id) const;  // -1 when unknown

  DayStamp first_day() const { return first_day_; }
  DayStamp last_day() const { return first_day_ + n_days_ - 1; }

  double dlmp(int node, DayStamp day, int hour) const;
  double rtlmp(int node, DayStamp day, int hour) const;
  bool has(int node, DayStamp day, int hour) const;
  bool has_day(int node, DayStamp day) const;
  int days_with_data(int node, DateRange window) const;

 private:
  std::size_t slot(DayStamp day, int hour) const {
    return static_cast<std::size_t>(day - first_day_) * 24 + static_cast<std::size_t>(hour);
  }
  std::vector<std::string> ids_;
  DayStamp first_day_ = 0;
  int n_days_ = 0;
  std::vector<std::vector<double>> dlmp_;   // [node][day*24+hour]
  std::vector<std::vector<double>> rtlmp_;
};

// Window slice of one node's prices plus its hour-of-day means.
struct WindowSeries {
  std::vector<double> dlmp;
  std::vector<double> rtlmp;
  std::vector<int> hour;  // hour-of-day per interval
  std::array<double, 24> hour_mean{};
  std::array<long, 24> hour_count{};
};

WindowSeries collect_window(const PricePanel& panel, int node, DateRange window);

// avg_dlmp[t] = hour-of-day mean of the interval's hour.
SpikeInstance make_spike_instance(const WindowSeries& series, Side side);

// Daily node label: which spike-capture sides beat the objective threshold,
// plus the resulting per-hour bid schedules x = mean -/+ m.
struct NodeLabel {
  std::string node_id;
  bool demand_cb = false;
  bool supply_cb = false;
  std::array<double, 24> demand_schedule{};
  std::array<double, 24> supply_schedule{};
  double demand_objective = 0.0;
  double supply_objective = 0.0;
  double demand_m = 0.0;
  double supply_m = 0.0;
  double demand_profit_sum = 0.0;  // in-sample, unit quantity
  double demand_loss_sum = 0.0;    // <= 0
  double supply_profit_sum = 0.0;
  double supply_loss_sum = 0.0;

  bool any() const { return demand_cb || supply_cb; }
};

// Solves both spike problems per node over the window and flags sides whose
// feasible objective exceeds config.theta. Nodes with fewer than the full
// window of days are skipped (absent from the result).
std::vector<NodeLabel> label_nodes(const PricePanel& panel, DateRange window,
                                   const OptimizerConfig& config);

struct ForecastAccuracy {
  double a_dlmp = 0.0;
  double a_rtlmp = 0.0;
  double a_sign = 0.0;
};

// Normalized-error accuracies in [0,1]: a = max(0, 1 - MAE/refMAD) where
// refMAD is the mean absolute deviation of the actuals; a_sign is the share
// of hours whose forecast gap sign matches the actual gap sign (a zero gap
// on either side counts as a match). Requires >= min_hours paired samples.
ForecastAccuracy assess_forecast_accuracy(std::span<const double> forecast_dlmp,
                                          std::span<const double> forecast_rtlmp,
                                          std::span<const double> actual_dlmp,
                                          std::span<const double> actual_rtlmp,
                                          std::size_t min_hours = 168);

enum class Choice {
  Strategy1PriceForecasting,
  Strategy2SelfScheduling,
  Strategy3Opportunistic,
  NoBid,
};

const char* choice_name(Choice choice);

struct BacktestConfig {
  double tau_dlmp = 0.8;
  double tau_rtlmp = 0.8;
  double tau_sign = 0.8;
  double strategy1_margin = 2.0;
  double strategy2_offset = 500.0;
  double quantity = 50.0;
  OptimizerConfig optimizer{};
  int history_window = 365;
  int accuracy_window = 7;  // days of paired forecasts behind each decision
  // Synthetic forecaster: truth plus bounded uniform noise, with an
  // independent probability of flipping the forecast gap sign.
  double forecast_noise = 0.0;
  double sign_error_prob = 0.0;
  int eval_days = 0;  // 0 = every day after the history window

  void validate() const;  // throws ConfigError
};

// Decision flow: accurate price forecasts -> Strategy 1; an accurate gap-sign
// forecast -> Strategy 2; a qualifying node label -> Strategy 3; else NoBid.
Choice select_strategy(const NodeLabel* label, const ForecastAccuracy& accuracy,
                       const BacktestConfig& config);

struct PlannedBid {
  std::string node_id;
  int hour = 0;
  Side side = Side::Supply;
  double price = 0.0;
  double quantity = 0.0;
  Choice strategy = Choice::NoBid;
};

// Next-day single-step bids for one node under the chosen strategy. Hours
// with missing inputs are skipped; Strategy 3 requires a labeled side.
std::vector<PlannedBid> generate_bids(Choice choice, const std::string& node_id,
                                      std::span<const double> forecast_dlmp,   // 24 entries
                                      std::span<const double> forecast_rtlmp,  // 24 entries
                                      std::span<const double> avg_dlmp,        // 24 entries
                                      const NodeLabel* label, const BacktestConfig& config);

struct TradeRecord {
  DayStamp date = 0;
  std::string node_id;
  int hour = 0;
  Side side = Side::Supply;
  Choice strategy = Choice::NoBid;
  double price = 0.0;
  double quantity = 0.0;
  double cleared_quantity = 0.0;
  double net_profit = 0.0;
};

struct LabelEvent {
  DayStamp date = 0;
  std::string node_id;
  Side side = Side::Demand;
  double m_star = 0.0;
  double objective = 0.0;
  double insample_profit = 0.0;
  double insample_loss = 0.0;  // <= 0
};

struct BacktestResult {
  std::vector<TradeRecord> trades;
  std::vector<LabelEvent> label_events;
  double net_profit = 0.0;
  double total_profit = 0.0;
  double total_loss = 0.0;  // magnitude
  double csr = 0.0;
  double lpr = 0.0;
  std::array<double, 3> net_by_strategy{};  // Strategy 1..3
  long submitted_count = 0;
  long cleared_count = 0;
  int labeled_node_count = 0;
  int cleared_node_count = 0;
  int cleared_day_count = 0;
  int eval_day_count = 0;
};

// Rolling-horizon backtest: each evaluation day relabels every node from the
// trailing window, scores forecast accuracy over the recent days, selects a
// strategy per node, generates bids, and settles them against that day's
// prices. Deterministic for fixed (dataset, config, seed).
BacktestResult run_backtest(const MarketDataset& dataset, const BacktestConfig& config,
                            std::uint64_t seed);

void write_trades_csv(const std::string& path, std::span<const TradeRecord> trades);
void write_labels_csv(const std::string& path, std::span<const LabelEvent> events);

}  // namespace cbstrat
