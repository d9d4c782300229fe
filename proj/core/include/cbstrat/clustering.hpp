#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "cbstrat/features.hpp"

namespace cbstrat {

struct ClusteringConfig {
  int min_cluster_size = 50;
  int min_samples = 5;
  void validate() const;  // throws ConfigError
};

struct MstEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

// Minimum spanning tree over the mutual reachability graph
//   d_mr(a,b) = max(core_a, core_b, d(a,b))
// where core_x is the Euclidean distance from x to its min_samples-th nearest
// neighbour (excluding itself; clamped to N-1 neighbours). Deterministic:
// vertex ties resolve by lowest index.
std::vector<MstEdge> build_mutual_reachability_mst(std::span<const std::array<double, 4>> points,
                                                   int min_samples);

enum class StrategyLabel { PriceForecasting, SelfScheduling, Opportunistic, Other };

const char* strategy_label_name(StrategyLabel label);

struct ClusterInfo {
  int cluster_id = -1;
  int size = 0;
  double stability = 0.0;
  // Medians of the raw (un-normalized) features: delta, type_consistency,
  // n_steps, is_major_node. Filled by compute_cluster_signatures.
  std::array<double, 4> signature{};
  bool signature_valid = false;
};

// Condensed-tree record: child >= 0 is a point leaving cluster `parent` at
// `lambda_val`; child < 0 encodes child cluster ~child splitting off.
struct CondensedEdge {
  int parent = 0;
  int child = 0;
  double lambda_val = 0.0;
  int child_size = 1;
};

struct ClusterModel {
  std::vector<int> labels;  // per point; -1 = noise
  std::vector<ClusterInfo> clusters;
  std::vector<CondensedEdge> condensed_tree;

  int cluster_count() const { return static_cast<int>(clusters.size()); }
};

// Single-linkage hierarchy from the MST (edges ascending by weight with
// (weight, low index, high index) tie order), condensed by min_cluster_size,
// clusters selected by maximum stability (excess of mass; ties prefer the
// deeper cluster). Density lambda is 1/distance, capped at 1e12 for
// zero-distance merges.
ClusterModel extract_condensed_clusters(const std::vector<MstEdge>& mst,
                                        const ClusteringConfig& config);

void compute_cluster_signatures(ClusterModel& model, std::span<const FeatureVector> vectors);

struct LabelThresholds {
  double small_delta = 5.0;   // |median delta| at or under this: price forecasting
  double large_delta = 25.0;  // |median delta| at or over this: self-scheduling / opportunistic
  void validate() const;
};

// Signature rules per cluster (requires signatures):
//   |med delta| <= small_delta                           -> PriceForecasting
//   med delta <= -large_delta and med steps == 1         -> SelfScheduling
//   med delta >= +large_delta and med consistency >= 0.8 -> Opportunistic
//   otherwise                                            -> Other
std::vector<StrategyLabel> assign_strategy_labels(const ClusterModel& model,
                                                  const LabelThresholds& thresholds = {});

struct ParticipantStrategyShares {
  std::string participant_id;
  double price_forecasting = 0.0;
  double self_scheduling = 0.0;
  double opportunistic = 0.0;
  double other = 0.0;
};

struct ClusteringOutcome {
  ClusterModel model;
  std::vector<StrategyLabel> cluster_labels;  // indexed by cluster_id
  std::vector<StrategyLabel> point_labels;    // noise mapped to Other
  std::vector<ParticipantStrategyShares> shares;
};

// Full pipeline: normalize -> MST -> condensed extraction -> signature labels
// -> per-participant strategy shares (noise counted as Other).
// participant_ids[i] owns vectors[i].
ClusteringOutcome cluster_bids(std::span<const FeatureVector> vectors,
                               std::span<const std::string> participant_ids,
                               const ClusteringConfig& config,
                               const LabelThresholds& thresholds = {});

void write_clusters_csv(const std::string& path, std::span<const FeatureVector> vectors,
                        const ClusteringOutcome& outcome);
void write_shares_csv(const std::string& path,
                      std::span<const ParticipantStrategyShares> shares);

}  // namespace cbstrat
