#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "cbstrat/market_data.hpp"

namespace cbstrat {

// The four per-bid strategy features: price distance from the hourly average
// day-ahead price, side consistency against the participant's own history at
// the node, step count, and the major-node flag.
struct FeatureVector {
  std::string bid_id;
  double delta = 0.0;             // $/MWh, signed
  double type_consistency = 0.5;  // [0, 1]
  int n_steps = 1;                // 1..10
  int is_major_node = 0;          // {0, 1}
};

// Signed distance of the bid's price envelope from avg_dlmp. Zero whenever
// avg_dlmp lies inside [min step price, max step price] (inclusive); the sign
// convention makes "waiting for a spike" positive on both sides.
double compute_price_distance(const ConvergenceBid& bid, const HourlyPriceStats& stats);

// Fraction of the participant's prior bids at the same node (strictly before
// bid.date, within the trailing 365 days) whose side matches this bid's side;
// 0.5 when there is no such history. Entries for other participants/nodes or
// outside the window are ignored.
double compute_type_consistency(const ConvergenceBid& bid,
                                std::span<const ConvergenceBid> history);

struct FeatureContext {
  const HourlyStatsTable* stats = nullptr;
  std::span<const ConvergenceBid> history;
  const MarketDataset* dataset = nullptr;  // node registry source
};

FeatureVector compute_feature_vector(const ConvergenceBid& bid, const FeatureContext& context);

// Batch path with indexed history (O(N log N) instead of per-bid scans).
std::vector<FeatureVector> compute_feature_vectors(const MarketDataset& dataset,
                                                   const HourlyStatsTable& stats);

struct FeatureScaling {
  double delta_median = 0.0;
  double delta_scale = 1.0;  // MAD, or 1 when the MAD is zero
};

struct NormalizedFeatures {
  std::vector<std::array<double, 4>> matrix;  // delta', consistency, steps', major
  FeatureScaling scaling;
};

// Columns: (delta - median)/MAD (MAD fallback 1), consistency unchanged,
// (n_steps - 1)/9, is_major unchanged.
NormalizedFeatures normalize_features(std::span<const FeatureVector> vectors);

void write_features_csv(const std::string& path, std::span<const FeatureVector> vectors);
std::vector<FeatureVector> load_features_csv(const std::string& path);

}  // namespace cbstrat
