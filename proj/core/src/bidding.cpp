#include "cbstrat/bidding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"
#include "cbstrat/rng.hpp"
#include "parallel.hpp"

namespace cbstrat {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kForecastStream = 0xf0c4;

}  // namespace

PricePanel::PricePanel(const MarketDataset& dataset) {
  if (dataset.prices.empty()) throw DataError("PricePanel: dataset has no prices");
  HourStamp lo = dataset.prices.front().timestamp;
  HourStamp hi = lo;
  std::set<std::string> id_set;
  for (const auto& r : dataset.prices) {
    lo = std::min(lo, r.timestamp);
    hi = std::max(hi, r.timestamp);
    id_set.insert(r.node_id);
  }
  ids_.assign(id_set.begin(), id_set.end());
  first_day_ = day_of(lo);
  n_days_ = day_of(hi) - first_day_ + 1;

  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < ids_.size(); ++i) index[ids_[i]] = static_cast<int>(i);

  const std::size_t slots = static_cast<std::size_t>(n_days_) * 24;
  dlmp_.assign(ids_.size(), std::vector<double>(slots, kNan));
  rtlmp_.assign(ids_.size(), std::vector<double>(slots, kNan));
  for (const auto& r : dataset.prices) {
    const int ni = index[r.node_id];
    const std::size_t s = slot(day_of(r.timestamp), hour_of(r.timestamp));
    dlmp_[static_cast<std::size_t>(ni)][s] = r.dlmp;
    rtlmp_[static_cast<std::size_t>(ni)][s] = r.rtlmp;
  }
}

int PricePanel::node_index(const std::string& node_id) const {
  const auto it = std::lower_bound(ids_.begin(), ids_.end(), node_id);
  if (it == ids_.end() || *it != node_id) return -1;
  return static_cast<int>(it - ids_.begin());
}

double PricePanel::dlmp(int node, DayStamp day, int hour) const {
  return dlmp_[static_cast<std::size_t>(node)][slot(day, hour)];
}

double PricePanel::rtlmp(int node, DayStamp day, int hour) const {
  return rtlmp_[static_cast<std::size_t>(node)][slot(day, hour)];
}

bool PricePanel::has(int node, DayStamp day, int hour) const {
  if (day < first_day_ || day > last_day()) return false;
  return !std::isnan(dlmp_[static_cast<std::size_t>(node)][slot(day, hour)]);
}

bool PricePanel::has_day(int node, DayStamp day) const {
  if (day < first_day_ || day > last_day()) return false;
  for (int h = 0; h < 24; ++h) {
    if (!std::isnan(dlmp_[static_cast<std::size_t>(node)][slot(day, h)])) return true;
  }
  return false;
}

int PricePanel::days_with_data(int node, DateRange window) const {
  int n = 0;
  for (DayStamp d = window.first; d <= window.last; ++d) {
    if (has_day(node, d)) ++n;
  }
  return n;
}

WindowSeries collect_window(const PricePanel& panel, int node, DateRange window) {
  WindowSeries out;
  out.hour_mean.fill(0.0);
  out.hour_count.fill(0);
  const DayStamp lo = std::max(window.first, panel.first_day());
  const DayStamp hi = std::min(window.last, panel.last_day());
  std::array<double, 24> sums{};
  for (DayStamp d = lo; d <= hi; ++d) {
    for (int h = 0; h < 24; ++h) {
      if (!panel.has(node, d, h)) continue;
      out.dlmp.push_back(panel.dlmp(node, d, h));
      out.rtlmp.push_back(panel.rtlmp(node, d, h));
      out.hour.push_back(h);
      sums[static_cast<std::size_t>(h)] += out.dlmp.back();
      out.hour_count[static_cast<std::size_t>(h)] += 1;
    }
  }
  for (int h = 0; h < 24; ++h) {
    out.hour_mean[static_cast<std::size_t>(h)] =
        out.hour_count[static_cast<std::size_t>(h)] > 0
            ? sums[static_cast<std::size_t>(h)] /
                  static_cast<double>(out.hour_count[static_cast<std::size_t>(h)])
            : kNan;
  }
  return out;
}

SpikeInstance make_spike_instance(const WindowSeries& series, Side side) {
  SpikeInstance inst;
  inst.side = side;
  inst.dlmp = series.dlmp;
  inst.rtlmp = series.rtlmp;
  inst.avg_dlmp.resize(series.hour.size());
  for (std::size_t t = 0; t < series.hour.size(); ++t) {
    inst.avg_dlmp[t] = series.hour_mean[static_cast<std::size_t>(series.hour[t])];
  }
  return inst;
}

namespace {

NodeLabel label_from_series(const std::string& node_id, const WindowSeries& series,
                            const OptimizerConfig& config) {
  NodeLabel label;
  label.node_id = node_id;

  const SpikeSolution demand = solve_breakpoints(make_spike_instance(series, Side::Demand), config);
  const SpikeSolution supply = solve_breakpoints(make_spike_instance(series, Side::Supply), config);

  label.demand_objective = demand.objective;
  label.supply_objective = supply.objective;
  label.demand_m = demand.m_star;
  label.supply_m = supply.m_star;
  label.demand_cb = demand.feasible && demand.objective > config.theta;
  label.supply_cb = supply.feasible && supply.objective > config.theta;
  label.demand_profit_sum = demand.profit_sum;
  label.demand_loss_sum = demand.loss_sum;
  label.supply_profit_sum = supply.profit_sum;
  label.supply_loss_sum = supply.loss_sum;
  for (int h = 0; h < 24; ++h) {
    const double mean = series.hour_mean[static_cast<std::size_t>(h)];
    label.demand_schedule[static_cast<std::size_t>(h)] = mean - demand.m_star;
    label.supply_schedule[static_cast<std::size_t>(h)] = mean + supply.m_star;
  }
  return label;
}

}  // namespace

std::vector<NodeLabel> label_nodes(const PricePanel& panel, DateRange window,
                                   const OptimizerConfig& config) {
  config.validate();
  const int n = panel.node_count();
  std::vector<std::optional<NodeLabel>> slots(static_cast<std::size_t>(n));
  detail::parallel_for(static_cast<std::size_t>(n), [&](std::size_t ni) {
    const int node = static_cast<int>(ni);
    if (panel.days_with_data(node, window) < window.days()) return;
    const WindowSeries series = collect_window(panel, node, window);
    if (series.dlmp.empty()) return;
    slots[ni] = label_from_series(panel.node_id(node), series, config);
  });
  std::vector<NodeLabel> out;
  for (auto& s : slots) {
    if (s.has_value()) out.push_back(std::move(*s));
  }
  return out;
}

ForecastAccuracy assess_forecast_accuracy(std::span<const double> forecast_dlmp,
                                          std::span<const double> forecast_rtlmp,
                                          std::span<const double> actual_dlmp,
                                          std::span<const double> actual_rtlmp,
                                          std::size_t min_hours) {
  const std::size_t n = forecast_dlmp.size();
  if (forecast_rtlmp.size() != n || actual_dlmp.size() != n || actual_rtlmp.size() != n) {
    throw InvariantError("assess_forecast_accuracy: input lengths differ");
  }
  if (n < min_hours) {
    throw DataError("assess_forecast_accuracy: need at least " + std::to_string(min_hours) +
                    " paired hours, got " + std::to_string(n));
  }

  const auto accuracy = [n](std::span<const double> forecast, std::span<const double> actual) {
    double mean = 0.0;
    for (const double a : actual) mean += a;
    mean /= static_cast<double>(n);
    double mae = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mae += std::abs(forecast[i] - actual[i]);
      ref += std::abs(actual[i] - mean);
    }
    mae /= static_cast<double>(n);
    ref /= static_cast<double>(n);
    if (ref > 0.0) return std::max(0.0, 1.0 - mae / ref);
    return mae == 0.0 ? 1.0 : 0.0;
  };

  ForecastAccuracy acc;
  acc.a_dlmp = accuracy(forecast_dlmp, actual_dlmp);
  acc.a_rtlmp = accuracy(forecast_rtlmp, actual_rtlmp);

  long matches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fg = forecast_dlmp[i] - forecast_rtlmp[i];
    const double ag = actual_dlmp[i] - actual_rtlmp[i];
    if (fg == 0.0 || ag == 0.0 || (fg > 0.0) == (ag > 0.0)) ++matches;
  }
  acc.a_sign = static_cast<double>(matches) / static_cast<double>(n);
  return acc;
}

const char* choice_name(Choice choice) {
  switch (choice) {
    case Choice::Strategy1PriceForecasting: return "strategy1_price_forecasting";
    case Choice::Strategy2SelfScheduling: return "strategy2_self_scheduling";
    case Choice::Strategy3Opportunistic: return "strategy3_opportunistic";
    case Choice::NoBid: return "no_bid";
  }
  return "no_bid";
}

void BacktestConfig::validate() const {
  const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(tau_dlmp) || !in01(tau_rtlmp) || !in01(tau_sign)) {
    throw ConfigError("backtest.tau_* thresholds must be in [0,1]");
  }
  if (!(strategy1_margin > 0.0)) throw ConfigError("backtest.strategy1_margin must be > 0");
  if (!(strategy2_offset > 0.0)) throw ConfigError("backtest.strategy2_offset must be > 0");
  if (!(quantity > 0.0)) throw ConfigError("backtest.quantity must be > 0");
  if (history_window < 1) throw ConfigError("backtest.history_window must be >= 1");
  if (accuracy_window < 7) throw ConfigError("backtest.accuracy_window must be >= 7");
  if (forecast_noise < 0.0) throw ConfigError("backtest.forecast_noise must be >= 0");
  if (!in01(sign_error_prob)) throw ConfigError("backtest.sign_error_prob must be in [0,1]");
  if (eval_days < 0) throw ConfigError("backtest.eval_days must be >= 0");
  optimizer.validate();
}

Choice select_strategy(const NodeLabel* label, const ForecastAccuracy& accuracy,
                       const BacktestConfig& config) {
  if (accuracy.a_dlmp >= config.tau_dlmp && accuracy.a_rtlmp >= config.tau_rtlmp) {
    return Choice::Strategy1PriceForecasting;
  }
  if (accuracy.a_sign >= config.tau_sign) return Choice::Strategy2SelfScheduling;
  if (label != nullptr && label->any()) return Choice::Strategy3Opportunistic;
  return Choice::NoBid;
}

std::vector<PlannedBid> generate_bids(Choice choice, const std::string& node_id,
                                      std::span<const double> forecast_dlmp,
                                      std::span<const double> forecast_rtlmp,
                                      std::span<const double> avg_dlmp, const NodeLabel* label,
                                      const BacktestConfig& config) {
  std::vector<PlannedBid> out;
  if (choice == Choice::NoBid) return out;
  if (choice != Choice::Strategy3Opportunistic &&
      (forecast_dlmp.size() != 24 || forecast_rtlmp.size() != 24)) {
    throw InvariantError("generate_bids: forecasts must cover 24 hours");
  }

  switch (choice) {
    case Choice::Strategy1PriceForecasting: {
      for (int h = 0; h < 24; ++h) {
        const double fd = forecast_dlmp[static_cast<std::size_t>(h)];
        const double fp = forecast_rtlmp[static_cast<std::size_t>(h)];
        if (std::isnan(fd) || std::isnan(fp) || fd == fp) continue;
        PlannedBid bid;
        bid.node_id = node_id;
        bid.hour = h;
        bid.strategy = choice;
        bid.quantity = config.quantity;
        if (fd > fp) {
          bid.side = Side::Supply;
          bid.price = fd - config.strategy1_margin;
        } else {
          bid.side = Side::Demand;
          bid.price = fd + config.strategy1_margin;
        }
        out.push_back(std::move(bid));
      }
      break;
    }
    case Choice::Strategy2SelfScheduling: {
      if (avg_dlmp.size() != 24) {
        throw InvariantError("generate_bids: avg_dlmp must cover 24 hours");
      }
      for (int h = 0; h < 24; ++h) {
        const double fd = forecast_dlmp[static_cast<std::size_t>(h)];
        const double fp = forecast_rtlmp[static_cast<std::size_t>(h)];
        const double avg = avg_dlmp[static_cast<std::size_t>(h)];
        if (std::isnan(fd) || std::isnan(fp) || std::isnan(avg) || fd == fp) continue;
        PlannedBid bid;
        bid.node_id = node_id;
        bid.hour = h;
        bid.strategy = choice;
        bid.quantity = config.quantity;
        if (fd > fp) {
          bid.side = Side::Supply;
          bid.price = avg - config.strategy2_offset;
        } else {
          bid.side = Side::Demand;
          bid.price = avg + config.strategy2_offset;
        }
        out.push_back(std::move(bid));
      }
      break;
    }
    case Choice::Strategy3Opportunistic: {
      if (label == nullptr || !label->any()) {
        throw InvariantError("generate_bids: strategy 3 requires a labeled node schedule");
      }
      for (int h = 0; h < 24; ++h) {
        if (label->demand_cb) {
          const double price = label->demand_schedule[static_cast<std::size_t>(h)];
          if (!std::isnan(price)) {
            out.push_back(PlannedBid{node_id, h, Side::Demand, price, config.quantity, choice});
          }
        }
        if (label->supply_cb) {
          const double price = label->supply_schedule[static_cast<std::size_t>(h)];
          if (!std::isnan(price)) {
            out.push_back(PlannedBid{node_id, h, Side::Supply, price, config.quantity, choice});
          }
        }
      }
      break;
    }
    case Choice::NoBid:
      break;
  }
  return out;
}

namespace {

struct RollingStats {
  std::array<double, 24> sum{};
  std::array<long, 24> count{};
  int days_present = 0;

  void add_day(const PricePanel& panel, int node, DayStamp day, int sign) {
    bool present = false;
    for (int h = 0; h < 24; ++h) {
      if (!panel.has(node, day, h)) continue;
      present = true;
      sum[static_cast<std::size_t>(h)] += sign * panel.dlmp(node, day, h);
      count[static_cast<std::size_t>(h)] += sign;
    }
    if (present) days_present += sign;
  }
};

// Truth plus bounded noise; a sign error swaps the two forecasts so the
// forecast gap flips direction.
void forecast_hour(const PricePanel& panel, int node, DayStamp day, int hour,
                   const BacktestConfig& config, std::uint64_t seed, double* f_dlmp,
                   double* f_rtlmp) {
  if (!panel.has(node, day, hour)) {
    *f_dlmp = kNan;
    *f_rtlmp = kNan;
    return;
  }
  SplitMix64 g(mix_seed(seed, kForecastStream, static_cast<std::uint64_t>(node),
                        static_cast<std::uint64_t>(day) * 24 + static_cast<std::uint64_t>(hour)));
  double fd = panel.dlmp(node, day, hour);
  double fp = panel.rtlmp(node, day, hour);
  if (config.forecast_noise > 0.0) {
    fd += g.uniform(-config.forecast_noise, config.forecast_noise);
    fp += g.uniform(-config.forecast_noise, config.forecast_noise);
  }
  if (config.sign_error_prob > 0.0 && g.bernoulli(config.sign_error_prob)) std::swap(fd, fp);
  *f_dlmp = fd;
  *f_rtlmp = fp;
}

}  // namespace

BacktestResult run_backtest(const MarketDataset& dataset, const BacktestConfig& config,
                            std::uint64_t seed) {
  config.validate();
  PricePanel panel(dataset);

  const DayStamp eval_start = panel.first_day() + config.history_window;
  DayStamp eval_end = panel.last_day();
  if (eval_start > eval_end) {
    throw DataError("run_backtest: dataset shorter than history_window + 1 days");
  }
  if (config.eval_days > 0) {
    eval_end = std::min<DayStamp>(eval_end, eval_start + config.eval_days - 1);
  }

  const int n_nodes = panel.node_count();
  std::vector<RollingStats> rolling(static_cast<std::size_t>(n_nodes));
  for (int ni = 0; ni < n_nodes; ++ni) {
    for (DayStamp d = eval_start - config.history_window; d < eval_start; ++d) {
      rolling[static_cast<std::size_t>(ni)].add_day(panel, ni, d, +1);
    }
  }

  BacktestResult result;
  std::set<int> labeled_nodes;
  std::set<int> cleared_nodes;
  std::set<DayStamp> cleared_days;

  for (DayStamp day = eval_start; day <= eval_end; ++day) {
    const DateRange window{day - config.history_window, day - 1};

    // Relabel every node from its trailing window (parallel, slot per node).
    std::vector<std::optional<NodeLabel>> labels(static_cast<std::size_t>(n_nodes));
    detail::parallel_for(static_cast<std::size_t>(n_nodes), [&](std::size_t ni) {
      const RollingStats& rs = rolling[ni];
      if (rs.days_present < config.history_window) return;
      WindowSeries series = collect_window(panel, static_cast<int>(ni), window);
      if (series.dlmp.empty()) return;
      for (int h = 0; h < 24; ++h) {
        series.hour_mean[static_cast<std::size_t>(h)] =
            rs.count[static_cast<std::size_t>(h)] > 0
                ? rs.sum[static_cast<std::size_t>(h)] /
                      static_cast<double>(rs.count[static_cast<std::size_t>(h)])
                : kNan;
        series.hour_count[static_cast<std::size_t>(h)] = rs.count[static_cast<std::size_t>(h)];
      }
      labels[ni] = label_from_series(panel.node_id(static_cast<int>(ni)), series, config.optimizer);
    });

    for (int ni = 0; ni < n_nodes; ++ni) {
      const NodeLabel* label =
          labels[static_cast<std::size_t>(ni)].has_value() ? &*labels[static_cast<std::size_t>(ni)]
                                                           : nullptr;
      if (label != nullptr) {
        if (label->demand_cb) {
          labeled_nodes.insert(ni);
          result.label_events.push_back(LabelEvent{day, label->node_id, Side::Demand,
                                                   label->demand_m, label->demand_objective,
                                                   label->demand_profit_sum,
                                                   label->demand_loss_sum});
        }
        if (label->supply_cb) {
          labeled_nodes.insert(ni);
          result.label_events.push_back(LabelEvent{day, label->node_id, Side::Supply,
                                                   label->supply_m, label->supply_objective,
                                                   label->supply_profit_sum,
                                                   label->supply_loss_sum});
        }
      }

      // Forecast accuracy over the trailing accuracy window.
      std::vector<double> fd, fp, ad, ap;
      for (DayStamp d = day - config.accuracy_window; d < day; ++d) {
        for (int h = 0; h < 24; ++h) {
          if (!panel.has(ni, d, h)) continue;
          double f1, f2;
          forecast_hour(panel, ni, d, h, config, seed, &f1, &f2);
          fd.push_back(f1);
          fp.push_back(f2);
          ad.push_back(panel.dlmp(ni, d, h));
          ap.push_back(panel.rtlmp(ni, d, h));
        }
      }
      Choice choice = Choice::NoBid;
      if (fd.size() >= 168) {
        const ForecastAccuracy acc = assess_forecast_accuracy(fd, fp, ad, ap, 168);
        choice = select_strategy(label, acc, config);
      } else if (label != nullptr && label->any()) {
        choice = Choice::Strategy3Opportunistic;
      }
      if (choice == Choice::NoBid) continue;

      std::array<double, 24> day_fd{}, day_fp{}, day_avg{};
      for (int h = 0; h < 24; ++h) {
        forecast_hour(panel, ni, day, h, config, seed, &day_fd[static_cast<std::size_t>(h)],
                      &day_fp[static_cast<std::size_t>(h)]);
        const RollingStats& rs = rolling[static_cast<std::size_t>(ni)];
        day_avg[static_cast<std::size_t>(h)] =
            rs.count[static_cast<std::size_t>(h)] > 0
                ? rs.sum[static_cast<std::size_t>(h)] /
                      static_cast<double>(rs.count[static_cast<std::size_t>(h)])
                : kNan;
      }
      const std::vector<PlannedBid> bids = generate_bids(
          choice, panel.node_id(ni), day_fd, day_fp, day_avg, label, config);

      for (const PlannedBid& pb : bids) {
        if (!panel.has(ni, day, pb.hour)) continue;
        ConvergenceBid bid;
        bid.bid_id = "bt";
        bid.participant_id = "backtester";
        bid.node_id = pb.node_id;
        bid.date = day;
        bid.hour = pb.hour;
        bid.side = pb.side;
        bid.steps.push_back(PriceBidStep{pb.quantity, pb.price});
        PriceRecord rec;
        rec.node_id = pb.node_id;
        rec.timestamp = hour_stamp(day, pb.hour);
        rec.dlmp = panel.dlmp(ni, day, pb.hour);
        rec.rtlmp = panel.rtlmp(ni, day, pb.hour);
        rec.gap = rec.dlmp - rec.rtlmp;
        const SettlementResult st = settle_bid(bid, rec);

        TradeRecord trade;
        trade.date = day;
        trade.node_id = pb.node_id;
        trade.hour = pb.hour;
        trade.side = pb.side;
        trade.strategy = pb.strategy;
        trade.price = pb.price;
        trade.quantity = pb.quantity;
        trade.cleared_quantity = st.cleared_quantity;
        trade.net_profit = st.net_profit;
        result.trades.push_back(std::move(trade));

        result.submitted_count += 1;
        if (st.cleared()) {
          result.cleared_count += 1;
          cleared_nodes.insert(ni);
          cleared_days.insert(day);
        }
        result.total_profit += st.profit_part;
        result.total_loss += -st.loss_part;
        result.net_profit += st.net_profit;
        result.net_by_strategy[static_cast<std::size_t>(pb.strategy)] += st.net_profit;
      }
    }

    // Slide the window: day enters, day - history_window leaves.
    for (int ni = 0; ni < n_nodes; ++ni) {
      rolling[static_cast<std::size_t>(ni)].add_day(panel, ni, day, +1);
      rolling[static_cast<std::size_t>(ni)].add_day(panel, ni, day - config.history_window, -1);
    }
  }

  result.eval_day_count = static_cast<int>(eval_end - eval_start + 1);
  result.labeled_node_count = static_cast<int>(labeled_nodes.size());
  result.cleared_node_count = static_cast<int>(cleared_nodes.size());
  result.cleared_day_count = static_cast<int>(cleared_days.size());
  if (result.submitted_count > 0) {
    result.csr = 100.0 * static_cast<double>(result.cleared_count) /
                 static_cast<double>(result.submitted_count);
  }
  if (result.total_profit > 0.0) {
    result.lpr = 100.0 * result.total_loss / result.total_profit;
  } else {
    result.lpr = result.total_loss > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return result;
}

void write_trades_csv(const std::string& path, std::span<const TradeRecord> trades) {
  std::string out =
      "date,node_id,hour,side,strategy,price,quantity,cleared_quantity,net_profit\n";
  for (const auto& t : trades) {
    out += format_date(t.date);
    out += ',';
    out += t.node_id;
    out += ',';
    out += std::to_string(t.hour);
    out += ',';
    out += side_tag(t.side);
    out += ',';
    out += choice_name(t.strategy);
    out += ',';
    out += format_money(t.price);
    out += ',';
    out += format_money(t.quantity);
    out += ',';
    out += format_money(t.cleared_quantity);
    out += ',';
    out += format_money(t.net_profit);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_labels_csv(const std::string& path, std::span<const LabelEvent> events) {
  std::string out = "date,node_id,side,m_star,objective,insample_profit,insample_loss\n";
  for (const auto& e : events) {
    out += format_date(e.date);
    out += ',';
    out += e.node_id;
    out += ',';
    out += side_tag(e.side);
    out += ',';
    out += format_money(e.m_star);
    out += ',';
    out += format_money(e.objective);
    out += ',';
    out += format_money(e.insample_profit);
    out += ',';
    out += format_money(e.insample_loss);
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace cbstrat
