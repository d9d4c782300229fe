#include "cbstrat/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"

namespace cbstrat {

char side_tag(Side side) { return side == Side::Supply ? 'S' : 'D'; }

Side side_from_tag(std::string_view tag) {
  if (tag == "S") return Side::Supply;
  if (tag == "D") return Side::Demand;
  throw DataError("unknown bid side '" + std::string(tag) + "' (expected S or D)");
}

double ConvergenceBid::min_price() const {
  double v = steps.front().price;
  for (const auto& s : steps) v = std::min(v, s.price);
  return v;
}

double ConvergenceBid::max_price() const {
  double v = steps.front().price;
  for (const auto& s : steps) v = std::max(v, s.price);
  return v;
}

void validate_bid(const ConvergenceBid& bid) {
  if (bid.steps.empty() || bid.steps.size() > 10) {
    throw DataError("bid '" + bid.bid_id + "': step count " + std::to_string(bid.steps.size()) +
                    " outside 1..10");
  }
  if (bid.hour < 0 || bid.hour > 23) {
    throw DataError("bid '" + bid.bid_id + "': hour " + std::to_string(bid.hour) +
                    " outside 0..23");
  }
  for (std::size_t i = 0; i < bid.steps.size(); ++i) {
    if (!(bid.steps[i].quantity > 0.0) || !std::isfinite(bid.steps[i].quantity) ||
        !std::isfinite(bid.steps[i].price)) {
      throw DataError("bid '" + bid.bid_id + "': non-finite or non-positive step " +
                      std::to_string(i + 1));
    }
    if (i > 0 && !(bid.steps[i].quantity > bid.steps[i - 1].quantity)) {
      throw DataError("bid '" + bid.bid_id + "': step quantities must strictly increase");
    }
    if (i > 0) {
      const double prev = bid.steps[i - 1].price;
      const double cur = bid.steps[i].price;
      if (bid.side == Side::Supply && cur < prev) {
        throw DataError("bid '" + bid.bid_id + "': supply step prices must be non-decreasing");
      }
      if (bid.side == Side::Demand && cur > prev) {
        throw DataError("bid '" + bid.bid_id + "': demand step prices must be non-increasing");
      }
    }
  }
}

HourlyStatsTable::HourlyStatsTable(std::vector<HourlyPriceStats> entries)
    : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    index_.emplace(entries_[i].node_id + "|" + std::to_string(entries_[i].hour), i);
  }
}

const HourlyPriceStats* HourlyStatsTable::find(const std::string& node_id, int hour) const {
  const auto it = index_.find(node_id + "|" + std::to_string(hour));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

bool MarketDataset::has_node(const std::string& node_id) const {
  for (const auto& n : node_registry) {
    if (n.node_id == node_id) return true;
  }
  return false;
}

bool MarketDataset::is_major_node(const std::string& node_id) const {
  for (const auto& n : node_registry) {
    if (n.node_id == node_id) return n.is_major;
  }
  return false;
}

PriceIndex::PriceIndex(std::span<const PriceRecord> prices) : prices_(prices) {
  for (std::size_t i = 0; i < prices.size(); ++i) {
    index_[prices[i].node_id][prices[i].timestamp] = i;
  }
}

const PriceRecord* PriceIndex::find(const std::string& node_id, HourStamp ts) const {
  const auto it = index_.find(node_id);
  if (it == index_.end()) return nullptr;
  const auto jt = it->second.find(ts);
  return jt == it->second.end() ? nullptr : &prices_[jt->second];
}

// ---- CSV -------------------------------------------------------------------

std::vector<PriceRecord> load_price_csv(const std::string& path) {
  CsvReader reader(path, "timestamp,node_id,dlmp,rtlmp");
  std::vector<PriceRecord> out;
  std::set<std::pair<std::string, HourStamp>> seen;
  CsvRow row;
  while (reader.next(row)) {
    require_fields(row, 4, path);
    PriceRecord rec;
    try {
      rec.timestamp = parse_timestamp(row.fields[0]);
    } catch (const DataError& e) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) + ": " + e.what());
    }
    rec.node_id = std::string(row.fields[1]);
    if (rec.node_id.empty()) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) + ": empty node_id");
    }
    rec.dlmp = parse_double_field(row, 2, path, "dlmp");
    rec.rtlmp = parse_double_field(row, 3, path, "rtlmp");
    rec.gap = rec.dlmp - rec.rtlmp;
    if (!seen.emplace(rec.node_id, rec.timestamp).second) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) + ": duplicate (" +
                      rec.node_id + ", " + format_timestamp(rec.timestamp) + ")");
    }
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(), [](const PriceRecord& a, const PriceRecord& b) {
    return a.node_id != b.node_id ? a.node_id < b.node_id : a.timestamp < b.timestamp;
  });
  return out;
}

namespace {

std::vector<PriceBidStep> parse_steps(std::string_view text, const std::string& path,
                                      std::size_t line_no) {
  std::vector<PriceBidStep> steps;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t semi = text.find(';', start);
    const std::string_view part =
        semi == std::string_view::npos ? text.substr(start) : text.substr(start, semi - start);
    const std::size_t at = part.find('@');
    if (part.empty() || at == std::string_view::npos) {
      throw DataError("'" + path + "' line " + std::to_string(line_no) + ": bad step '" +
                      std::string(part) + "' (expected qty@price)");
    }
    PriceBidStep s;
    const auto qtxt = part.substr(0, at);
    const auto ptxt = part.substr(at + 1);
    auto r1 = std::from_chars(qtxt.data(), qtxt.data() + qtxt.size(), s.quantity);
    auto r2 = std::from_chars(ptxt.data(), ptxt.data() + ptxt.size(), s.price);
    if (r1.ec != std::errc{} || r1.ptr != qtxt.data() + qtxt.size() || r2.ec != std::errc{} ||
        r2.ptr != ptxt.data() + ptxt.size() || !std::isfinite(s.quantity) ||
        !std::isfinite(s.price)) {
      throw DataError("'" + path + "' line " + std::to_string(line_no) + ": bad step '" +
                      std::string(part) + "'");
    }
    steps.push_back(s);
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  return steps;
}

}  // namespace

std::vector<ConvergenceBid> load_bid_csv(const std::string& path) {
  CsvReader reader(path, "bid_id,participant_id,node_id,date,hour,side,steps");
  std::vector<ConvergenceBid> out;
  std::set<std::string> ids;
  CsvRow row;
  while (reader.next(row)) {
    require_fields(row, 7, path);
    ConvergenceBid bid;
    bid.bid_id = std::string(row.fields[0]);
    bid.participant_id = std::string(row.fields[1]);
    bid.node_id = std::string(row.fields[2]);
    try {
      bid.date = parse_date(row.fields[3]);
      bid.side = side_from_tag(row.fields[5]);
    } catch (const DataError& e) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) + ": " + e.what());
    }
    bid.hour = static_cast<int>(parse_long_field(row, 4, path, "hour"));
    bid.steps = parse_steps(row.fields[6], path, row.line_no);
    try {
      validate_bid(bid);
    } catch (const DataError& e) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) + ": " + e.what());
    }
    if (bid.bid_id.empty() || !ids.insert(bid.bid_id).second) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) +
                      ": empty or duplicate bid_id '" + bid.bid_id + "'");
    }
    out.push_back(std::move(bid));
  }
  return out;
}

std::vector<NodeInfo> load_node_registry_csv(const std::string& path) {
  CsvReader reader(path, "node_id,is_major");
  std::vector<NodeInfo> out;
  std::set<std::string> seen;
  CsvRow row;
  while (reader.next(row)) {
    require_fields(row, 2, path);
    NodeInfo n;
    n.node_id = std::string(row.fields[0]);
    const long flag = parse_long_field(row, 1, path, "is_major");
    if (flag != 0 && flag != 1) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) +
                      ": is_major must be 0 or 1");
    }
    n.is_major = flag == 1;
    if (n.node_id.empty() || !seen.insert(n.node_id).second) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) +
                      ": empty or duplicate node_id");
    }
    out.push_back(std::move(n));
  }
  return out;
}

void write_price_csv(const std::string& path, std::span<const PriceRecord> prices) {
  std::string out = "timestamp,node_id,dlmp,rtlmp\n";
  for (const auto& r : prices) {
    out += format_timestamp(r.timestamp);
    out += ',';
    out += r.node_id;
    out += ',';
    out += format_money(r.dlmp);
    out += ',';
    out += format_money(r.rtlmp);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_bid_csv(const std::string& path, std::span<const ConvergenceBid> bids) {
  std::string out = "bid_id,participant_id,node_id,date,hour,side,steps\n";
  for (const auto& b : bids) {
    out += b.bid_id;
    out += ',';
    out += b.participant_id;
    out += ',';
    out += b.node_id;
    out += ',';
    out += format_date(b.date);
    out += ',';
    out += std::to_string(b.hour);
    out += ',';
    out += side_tag(b.side);
    out += ',';
    for (std::size_t i = 0; i < b.steps.size(); ++i) {
      if (i) out += ';';
      out += format_money(b.steps[i].quantity);
      out += '@';
      out += format_money(b.steps[i].price);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void write_node_registry_csv(const std::string& path, std::span<const NodeInfo> nodes) {
  std::string out = "node_id,is_major\n";
  for (const auto& n : nodes) {
    out += n.node_id;
    out += ',';
    out += n.is_major ? '1' : '0';
    out += '\n';
  }
  write_text_file(path, out);
}

// ---- Statistics and settlement ---------------------------------------------

std::vector<HourlyPriceStats> compute_hourly_stats(std::span<const PriceRecord> prices,
                                                   DateRange window) {
  struct Acc {
    double sum = 0.0;
    long count = 0;
  };
  std::map<std::pair<std::string, int>, Acc> acc;
  for (const auto& r : prices) {
    if (!window.contains(day_of(r.timestamp))) continue;
    Acc& a = acc[{r.node_id, hour_of(r.timestamp)}];
    a.sum += r.dlmp;
    a.count += 1;
  }
  std::vector<HourlyPriceStats> out;
  out.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    out.push_back(HourlyPriceStats{key.first, key.second, a.sum / static_cast<double>(a.count),
                                   a.count, window});
  }
  return out;
}

SettlementResult settle_bid(const ConvergenceBid& bid, const PriceRecord& record) {
  if (record.node_id != bid.node_id || record.timestamp != bid.timestamp()) {
    throw InvariantError("settle_bid: record (" + record.node_id + ", " +
                         format_timestamp(record.timestamp) + ") does not match bid '" +
                         bid.bid_id + "'");
  }
  double cleared = 0.0;
  for (const auto& s : bid.steps) {
    const bool in_money =
        bid.side == Side::Supply ? s.price <= record.dlmp : s.price >= record.dlmp;
    if (in_money) cleared = std::max(cleared, s.quantity);
  }
  SettlementResult res;
  res.bid_id = bid.bid_id;
  res.cleared_quantity = cleared;
  const double unit = bid.side == Side::Supply ? record.dlmp - record.rtlmp
                                               : record.rtlmp - record.dlmp;
  res.net_profit = cleared * unit;
  res.profit_part = std::max(res.net_profit, 0.0);
  res.loss_part = std::min(res.net_profit, 0.0);
  return res;
}

std::vector<SettlementResult> settle_all(const MarketDataset& dataset) {
  PriceIndex index(dataset.prices);
  std::vector<SettlementResult> out;
  out.reserve(dataset.bids.size());
  for (const auto& bid : dataset.bids) {
    const PriceRecord* rec = index.find(bid.node_id, bid.timestamp());
    if (rec == nullptr) {
      out.push_back(SettlementResult{bid.bid_id, 0.0, 0.0, 0.0, 0.0});
    } else {
      out.push_back(settle_bid(bid, *rec));
    }
  }
  return out;
}

MarketSummary summarize_dataset(const MarketDataset& dataset) {
  MarketSummary summary;

  std::map<std::string, MonthlySummaryRow> months;
  // Month keys come from the price span so an empty bid set still yields rows.
  for (const auto& r : dataset.prices) {
    const std::string key = month_key(day_of(r.timestamp));
    months.try_emplace(key, MonthlySummaryRow{key, 0.0, 0.0});
  }

  const std::vector<SettlementResult> settlements = settle_all(dataset);
  std::set<std::string> participants;
  std::set<std::string> nodes;
  for (std::size_t i = 0; i < dataset.bids.size(); ++i) {
    const auto& bid = dataset.bids[i];
    participants.insert(bid.participant_id);
    nodes.insert(bid.node_id);
    const std::string key = month_key(bid.date);
    MonthlySummaryRow& row = months.try_emplace(key, MonthlySummaryRow{key, 0.0, 0.0}).first->second;
    row.cleared_mwh += settlements[i].cleared_quantity;
    row.net_profit += settlements[i].net_profit;
  }

  summary.monthly.reserve(months.size());
  for (auto& [key, row] : months) summary.monthly.push_back(row);
  summary.participant_count = static_cast<int>(participants.size());
  summary.nodes_with_bids = static_cast<int>(nodes.size());
  return summary;
}

}  // namespace cbstrat
