#include "cbstrat/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"

namespace cbstrat {

namespace {

constexpr int kHistoryWindowDays = 365;

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (n % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + (mid - 1), v.begin() + mid);
    return (v[mid - 1] + hi) / 2.0;
  }
  return hi;
}

}  // namespace

double compute_price_distance(const ConvergenceBid& bid, const HourlyPriceStats& stats) {
  if (stats.node_id != bid.node_id || stats.hour != bid.hour) {
    throw InvariantError("compute_price_distance: stats (" + stats.node_id + ", h" +
                         std::to_string(stats.hour) + ") do not match bid '" + bid.bid_id + "'");
  }
  const double lo = bid.min_price();
  const double hi = bid.max_price();
  const double avg = stats.avg_dlmp;
  double delta = 0.0;
  if (lo > avg) {
    delta = lo - avg;
  } else if (hi < avg) {
    delta = hi - avg;
  }
  // Demand bids mirror the sign so "waiting for a spike" is positive on both
  // sides; the straddle case stays exactly zero.
  return bid.side == Side::Demand ? -delta : delta;
}

double compute_type_consistency(const ConvergenceBid& bid,
                                std::span<const ConvergenceBid> history) {
  long total = 0;
  long same = 0;
  for (const auto& h : history) {
    if (h.participant_id != bid.participant_id || h.node_id != bid.node_id) continue;
    const int age = bid.date - h.date;
    if (age < 1 || age > kHistoryWindowDays) continue;
    ++total;
    if (h.side == bid.side) ++same;
  }
  if (total == 0) return 0.5;
  return static_cast<double>(same) / static_cast<double>(total);
}

FeatureVector compute_feature_vector(const ConvergenceBid& bid, const FeatureContext& context) {
  if (context.dataset == nullptr || !context.dataset->has_node(bid.node_id)) {
    throw DataError("bid '" + bid.bid_id + "': node '" + bid.node_id + "' not in registry");
  }
  if (context.stats == nullptr) throw InvariantError("feature context has no stats table");
  const HourlyPriceStats* stats = context.stats->find(bid.node_id, bid.hour);
  if (stats == nullptr) {
    throw DataError("bid '" + bid.bid_id + "': no hourly stats for (" + bid.node_id + ", h" +
                    std::to_string(bid.hour) + ")");
  }
  FeatureVector fv;
  fv.bid_id = bid.bid_id;
  fv.delta = compute_price_distance(bid, *stats);
  fv.type_consistency = compute_type_consistency(bid, context.history);
  fv.n_steps = static_cast<int>(bid.steps.size());
  fv.is_major_node = context.dataset->is_major_node(bid.node_id) ? 1 : 0;
  return fv;
}

std::vector<FeatureVector> compute_feature_vectors(const MarketDataset& dataset,
                                                   const HourlyStatsTable& stats) {
  std::unordered_map<std::string, bool> major;
  major.reserve(dataset.node_registry.size());
  for (const auto& n : dataset.node_registry) major[n.node_id] = n.is_major;

  // Group bid indices by (participant, node) and walk each group in date
  // order with a sliding window, tracking the supply count.
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.bids.size(); ++i) {
    const auto& b = dataset.bids[i];
    groups[{b.participant_id, b.node_id}].push_back(i);
  }

  std::vector<double> consistency(dataset.bids.size(), 0.5);
  for (auto& [key, idx] : groups) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return dataset.bids[a].date < dataset.bids[b].date;
    });
    std::size_t lo = 0, hi = 0;  // window [lo, hi) of strictly-earlier bids
    long supply = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& bid = dataset.bids[idx[k]];
      while (hi < k && dataset.bids[idx[hi]].date < bid.date) {
        if (dataset.bids[idx[hi]].side == Side::Supply) ++supply;
        ++hi;
      }
      while (lo < hi && bid.date - dataset.bids[idx[lo]].date > kHistoryWindowDays) {
        if (dataset.bids[idx[lo]].side == Side::Supply) --supply;
        ++lo;
      }
      const long total = static_cast<long>(hi - lo);
      if (total > 0) {
        const long same = bid.side == Side::Supply ? supply : total - supply;
        consistency[idx[k]] = static_cast<double>(same) / static_cast<double>(total);
      }
    }
  }

  std::vector<FeatureVector> out;
  out.reserve(dataset.bids.size());
  for (std::size_t i = 0; i < dataset.bids.size(); ++i) {
    const auto& bid = dataset.bids[i];
    const auto mj = major.find(bid.node_id);
    if (mj == major.end()) {
      throw DataError("bid '" + bid.bid_id + "': node '" + bid.node_id + "' not in registry");
    }
    const HourlyPriceStats* st = stats.find(bid.node_id, bid.hour);
    if (st == nullptr) {
      throw DataError("bid '" + bid.bid_id + "': no hourly stats for (" + bid.node_id + ", h" +
                      std::to_string(bid.hour) + ")");
    }
    FeatureVector fv;
    fv.bid_id = bid.bid_id;
    fv.delta = compute_price_distance(bid, *st);
    fv.type_consistency = consistency[i];
    fv.n_steps = static_cast<int>(bid.steps.size());
    fv.is_major_node = mj->second ? 1 : 0;
    out.push_back(std::move(fv));
  }
  return out;
}

NormalizedFeatures normalize_features(std::span<const FeatureVector> vectors) {
  if (vectors.size() < 2) throw DataError("normalize_features: need at least 2 vectors");

  std::vector<double> deltas(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) deltas[i] = vectors[i].delta;
  const double med = median_of(deltas);
  std::vector<double> abs_dev(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) abs_dev[i] = std::abs(deltas[i] - med);
  const double mad = median_of(abs_dev);

  NormalizedFeatures out;
  out.scaling.delta_median = med;
  out.scaling.delta_scale = mad > 0.0 ? mad : 1.0;
  out.matrix.reserve(vectors.size());
  for (const auto& v : vectors) {
    out.matrix.push_back({(v.delta - med) / out.scaling.delta_scale, v.type_consistency,
                          (static_cast<double>(v.n_steps) - 1.0) / 9.0,
                          static_cast<double>(v.is_major_node)});
  }
  return out;
}

void write_features_csv(const std::string& path, std::span<const FeatureVector> vectors) {
  std::string out = "bid_id,delta,type_consistency,n_steps,is_major_node\n";
  for (const auto& v : vectors) {
    out += v.bid_id;
    out += ',';
    out += format_money(v.delta);
    out += ',';
    out += format_fraction(v.type_consistency);
    out += ',';
    out += std::to_string(v.n_steps);
    out += ',';
    out += std::to_string(v.is_major_node);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<FeatureVector> load_features_csv(const std::string& path) {
  CsvReader reader(path, "bid_id,delta,type_consistency,n_steps,is_major_node");
  std::vector<FeatureVector> out;
  CsvRow row;
  while (reader.next(row)) {
    require_fields(row, 5, path);
    FeatureVector v;
    v.bid_id = std::string(row.fields[0]);
    v.delta = parse_double_field(row, 1, path, "delta");
    v.type_consistency = parse_double_field(row, 2, path, "type_consistency");
    v.n_steps = static_cast<int>(parse_long_field(row, 3, path, "n_steps"));
    v.is_major_node = static_cast<int>(parse_long_field(row, 4, path, "is_major_node"));
    if (v.type_consistency < 0.0 || v.type_consistency > 1.0 || v.n_steps < 1 || v.n_steps > 10 ||
        (v.is_major_node != 0 && v.is_major_node != 1)) {
      throw DataError("'" + path + "' line " + std::to_string(row.line_no) +
                      ": feature out of range");
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace cbstrat
