#include "cbstrat/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"
#include "parallel.hpp"

namespace cbstrat {

namespace {

constexpr double kLambdaMax = 1e12;  // density level for zero-distance merges

double lambda_of(double distance) {
  if (!(distance > 1.0 / kLambdaMax)) return kLambdaMax;
  return 1.0 / distance;
}

double sq_dist(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double s = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (n % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + (mid - 1), v.begin() + mid);
    return (v[mid - 1] + hi) / 2.0;
  }
  return hi;
}

}  // namespace

void ClusteringConfig::validate() const {
  if (min_cluster_size < 2) throw ConfigError("cluster.min_cluster_size must be >= 2");
  if (min_samples < 1) throw ConfigError("cluster.min_samples must be >= 1");
  if (min_samples > min_cluster_size) {
    throw ConfigError("cluster.min_samples must be <= cluster.min_cluster_size");
  }
}

void LabelThresholds::validate() const {
  if (small_delta < 0.0) throw ConfigError("cluster.small_delta must be >= 0");
  if (large_delta <= small_delta) {
    throw ConfigError("cluster.large_delta must exceed cluster.small_delta");
  }
}

const char* strategy_label_name(StrategyLabel label) {
  switch (label) {
    case StrategyLabel::PriceForecasting: return "price_forecasting";
    case StrategyLabel::SelfScheduling: return "self_scheduling";
    case StrategyLabel::Opportunistic: return "opportunistic";
    case StrategyLabel::Other: return "other";
  }
  return "other";
}

std::vector<MstEdge> build_mutual_reachability_mst(std::span<const std::array<double, 4>> points,
                                                   int min_samples) {
  const std::size_t n = points.size();
  if (n < 2) throw DataError("build_mutual_reachability_mst: need at least 2 points");
  if (min_samples < 1) throw ConfigError("min_samples must be >= 1");
  for (const auto& p : points) {
    for (const double v : p) {
      if (!std::isfinite(v)) throw DataError("build_mutual_reachability_mst: non-finite input");
    }
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(min_samples), n - 1);

  // Core distance: k-th nearest neighbour (self excluded).
  std::vector<double> core(n);
  detail::parallel_for(n, [&](std::size_t i) {
    std::vector<double> row;
    row.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(sq_dist(points[i], points[j]));
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    core[i] = std::sqrt(row[k - 1]);
  });

  // Prim over the implicit complete graph; ties pick the lowest vertex index.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> key(n, inf);
  std::vector<int> parent(n, -1);
  std::vector<char> used(n, 0);
  key[0] = 0.0;
  std::vector<MstEdge> edges;
  edges.reserve(n - 1);
  for (std::size_t iter = 0; iter < n; ++iter) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!used[v] && (u == n || key[v] < key[u])) u = v;
    }
    used[u] = 1;
    if (parent[u] >= 0) {
      edges.push_back(MstEdge{parent[u], static_cast<int>(u), key[u]});
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (used[v]) continue;
      const double d = std::sqrt(sq_dist(points[u], points[v]));
      const double w = std::max({core[u], core[v], d});
      if (w < key[v]) {
        key[v] = w;
        parent[v] = static_cast<int>(u);
      }
    }
  }
  return edges;
}

namespace {

struct DendroNode {
  int left = -1;
  int right = -1;
  double distance = 0.0;
  int size = 1;
};

// Union-find with path compression.
struct UnionFind {
  std::vector<int> rep;
  explicit UnionFind(std::size_t n) : rep(n) { std::iota(rep.begin(), rep.end(), 0); }
  int find(int x) {
    while (rep[x] != x) {
      rep[x] = rep[rep[x]];
      x = rep[x];
    }
    return x;
  }
};

struct CondensedCluster {
  int parent = -1;  // condensed parent cluster, -1 for root
  double birth_lambda = 0.0;
  double stability = 0.0;
  int birth_size = 0;
  std::vector<int> child_clusters;
};

}  // namespace

ClusterModel extract_condensed_clusters(const std::vector<MstEdge>& mst,
                                        const ClusteringConfig& config) {
  config.validate();
  const std::size_t n = mst.size() + 1;
  if (mst.empty()) throw DataError("extract_condensed_clusters: empty tree");

  // ---- Single-linkage dendrogram from ascending edges ----
  std::vector<MstEdge> edges = mst;
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= static_cast<int>(n) || e.b >= static_cast<int>(n) ||
        !std::isfinite(e.weight) || e.a == e.b) {
      throw InvariantError("extract_condensed_clusters: malformed tree edge");
    }
  }
  std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    const int xl = std::min(x.a, x.b), yl = std::min(y.a, y.b);
    if (xl != yl) return xl < yl;
    return std::max(x.a, x.b) < std::max(y.a, y.b);
  });

  std::vector<DendroNode> nodes(2 * n - 1);
  UnionFind uf(2 * n - 1);
  std::vector<int> top(2 * n - 1);  // current dendrogram node of each set root
  std::iota(top.begin(), top.end(), 0);
  int next_node = static_cast<int>(n);
  for (const auto& e : edges) {
    const int ra = uf.find(e.a);
    const int rb = uf.find(e.b);
    if (ra == rb) throw InvariantError("extract_condensed_clusters: input is not a tree");
    DendroNode& m = nodes[static_cast<std::size_t>(next_node)];
    m.left = top[static_cast<std::size_t>(ra)];
    m.right = top[static_cast<std::size_t>(rb)];
    m.distance = e.weight;
    m.size = nodes[static_cast<std::size_t>(m.left)].size +
             nodes[static_cast<std::size_t>(m.right)].size;
    uf.rep[ra] = next_node;
    uf.rep[rb] = next_node;
    top[static_cast<std::size_t>(next_node)] = next_node;
    ++next_node;
  }
  const int root = next_node - 1;

  // ---- Condense: drop sub-min_cluster_size splits ----
  ClusterModel model;
  model.labels.assign(n, -1);

  std::vector<CondensedCluster> clusters;
  clusters.push_back(CondensedCluster{-1, 0.0, 0.0, static_cast<int>(n), {}});

  std::vector<int> fall_cluster(n, 0);      // condensed cluster each point left
  std::vector<double> fall_lambda(n, 0.0);  // lambda at which it left

  const int mcs = config.min_cluster_size;

  // Emit every leaf under `node` as a point leaving `cluster` at `lam`.
  auto spill_points = [&](int node, int cluster, double lam) {
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (v < static_cast<int>(n)) {
        fall_cluster[static_cast<std::size_t>(v)] = cluster;
        fall_lambda[static_cast<std::size_t>(v)] = lam;
        model.condensed_tree.push_back(CondensedEdge{cluster, v, lam, 1});
        clusters[static_cast<std::size_t>(cluster)].stability +=
            lam - clusters[static_cast<std::size_t>(cluster)].birth_lambda;
      } else {
        stack.push_back(nodes[static_cast<std::size_t>(v)].left);
        stack.push_back(nodes[static_cast<std::size_t>(v)].right);
      }
    }
  };

  struct WalkItem {
    int node;
    int cluster;
  };
  std::vector<WalkItem> walk{{root, 0}};
  while (!walk.empty()) {
    const WalkItem item = walk.back();
    walk.pop_back();
    if (item.node < static_cast<int>(n)) {
      // A bare point at the top of a cluster: it exits at the cluster's birth.
      spill_points(item.node, item.cluster, clusters[static_cast<std::size_t>(item.cluster)].birth_lambda);
      continue;
    }
    const DendroNode& d = nodes[static_cast<std::size_t>(item.node)];
    const double lam = lambda_of(d.distance);
    const int ls = nodes[static_cast<std::size_t>(d.left)].size;
    const int rs = nodes[static_cast<std::size_t>(d.right)].size;
    CondensedCluster& cur = clusters[static_cast<std::size_t>(item.cluster)];
    if (ls >= mcs && rs >= mcs) {
      // True split: the cluster dies here, two children are born.
      cur.stability += (lam - cur.birth_lambda) * (ls + rs);
      for (const auto& [child, size] : {std::pair{d.left, ls}, std::pair{d.right, rs}}) {
        const int id = static_cast<int>(clusters.size());
        clusters.push_back(CondensedCluster{item.cluster, lam, 0.0, size, {}});
        clusters[static_cast<std::size_t>(item.cluster)].child_clusters.push_back(id);
        model.condensed_tree.push_back(CondensedEdge{item.cluster, ~id, lam, size});
        walk.push_back(WalkItem{child, id});
      }
    } else {
      // The smaller side erodes out of the cluster at this level.
      if (ls < mcs) spill_points(d.left, item.cluster, lam);
      if (rs < mcs) spill_points(d.right, item.cluster, lam);
      if (ls >= mcs) walk.push_back(WalkItem{d.left, item.cluster});
      if (rs >= mcs) walk.push_back(WalkItem{d.right, item.cluster});
    }
  }

  // ---- Excess-of-mass selection, leaves up; ties prefer deeper clusters ----
  const std::size_t nc = clusters.size();
  std::vector<char> selected(nc, 0);
  std::vector<double> subtree(nc, 0.0);
  for (std::size_t c = nc; c-- > 0;) {
    const CondensedCluster& cl = clusters[c];
    if (cl.child_clusters.empty()) {
      selected[c] = 1;
      subtree[c] = cl.stability;
      continue;
    }
    double child_sum = 0.0;
    for (const int ch : cl.child_clusters) child_sum += subtree[static_cast<std::size_t>(ch)];
    if (cl.stability > child_sum) {
      selected[c] = 1;
      subtree[c] = cl.stability;
    } else {
      subtree[c] = child_sum;
    }
  }
  // Keep only the topmost selected cluster along each root path.
  std::vector<int> final_id(nc, -1);
  std::vector<int> order;  // condensed ids of final clusters, in creation order
  for (std::size_t c = 0; c < nc; ++c) {
    const int par = clusters[c].parent;
    const bool ancestor_taken = par >= 0 && final_id[static_cast<std::size_t>(par)] >= 0;
    if (ancestor_taken) {
      final_id[c] = final_id[static_cast<std::size_t>(par)];
    } else if (selected[c]) {
      final_id[c] = static_cast<int>(order.size());
      order.push_back(static_cast<int>(c));
    }
  }

  for (std::size_t p = 0; p < n; ++p) {
    model.labels[p] = final_id[static_cast<std::size_t>(fall_cluster[p])];
  }

  model.clusters.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    ClusterInfo& info = model.clusters[k];
    info.cluster_id = static_cast<int>(k);
    info.stability = clusters[static_cast<std::size_t>(order[k])].stability;
  }
  for (const int lbl : model.labels) {
    if (lbl >= 0) model.clusters[static_cast<std::size_t>(lbl)].size += 1;
  }
  return model;
}

void compute_cluster_signatures(ClusterModel& model, std::span<const FeatureVector> vectors) {
  if (vectors.size() != model.labels.size()) {
    throw InvariantError("compute_cluster_signatures: vector/label size mismatch");
  }
  for (auto& info : model.clusters) {
    std::vector<double> delta, cons, steps, major;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (model.labels[i] != info.cluster_id) continue;
      delta.push_back(vectors[i].delta);
      cons.push_back(vectors[i].type_consistency);
      steps.push_back(static_cast<double>(vectors[i].n_steps));
      major.push_back(static_cast<double>(vectors[i].is_major_node));
    }
    if (delta.empty()) continue;
    info.signature = {median_of(std::move(delta)), median_of(std::move(cons)),
                      median_of(std::move(steps)), median_of(std::move(major))};
    info.signature_valid = true;
  }
}

std::vector<StrategyLabel> assign_strategy_labels(const ClusterModel& model,
                                                  const LabelThresholds& thresholds) {
  thresholds.validate();
  std::vector<StrategyLabel> out;
  out.reserve(model.clusters.size());
  for (const auto& info : model.clusters) {
    if (!info.signature_valid) {
      throw InvariantError("assign_strategy_labels: cluster signatures not populated");
    }
    const double med_delta = info.signature[0];
    const double med_cons = info.signature[1];
    const double med_steps = info.signature[2];
    StrategyLabel label = StrategyLabel::Other;
    if (std::abs(med_delta) <= thresholds.small_delta) {
      label = StrategyLabel::PriceForecasting;
    } else if (med_delta <= -thresholds.large_delta && med_steps <= 1.0) {
      label = StrategyLabel::SelfScheduling;
    } else if (med_delta >= thresholds.large_delta && med_cons >= 0.8) {
      label = StrategyLabel::Opportunistic;
    }
    out.push_back(label);
  }
  return out;
}

ClusteringOutcome cluster_bids(std::span<const FeatureVector> vectors,
                               std::span<const std::string> participant_ids,
                               const ClusteringConfig& config,
                               const LabelThresholds& thresholds) {
  config.validate();
  if (vectors.size() != participant_ids.size()) {
    throw InvariantError("cluster_bids: vectors/participants size mismatch");
  }
  if (vectors.size() < static_cast<std::size_t>(config.min_cluster_size)) {
    throw DataError("cluster_bids: fewer vectors than min_cluster_size");
  }

  ClusteringOutcome outcome;
  const NormalizedFeatures norm = normalize_features(vectors);
  const auto mst = build_mutual_reachability_mst(norm.matrix, config.min_samples);
  outcome.model = extract_condensed_clusters(mst, config);
  compute_cluster_signatures(outcome.model, vectors);
  outcome.cluster_labels = assign_strategy_labels(outcome.model, thresholds);

  outcome.point_labels.resize(vectors.size(), StrategyLabel::Other);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const int c = outcome.model.labels[i];
    if (c >= 0) outcome.point_labels[i] = outcome.cluster_labels[static_cast<std::size_t>(c)];
  }

  std::map<std::string, std::array<long, 4>> counts;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    counts[participant_ids[i]][static_cast<std::size_t>(outcome.point_labels[i])] += 1;
  }
  for (const auto& [pid, c] : counts) {
    const double total = static_cast<double>(c[0] + c[1] + c[2] + c[3]);
    outcome.shares.push_back(ParticipantStrategyShares{
        pid, static_cast<double>(c[0]) / total, static_cast<double>(c[1]) / total,
        static_cast<double>(c[2]) / total, static_cast<double>(c[3]) / total});
  }
  return outcome;
}

void write_clusters_csv(const std::string& path, std::span<const FeatureVector> vectors,
                        const ClusteringOutcome& outcome) {
  std::string out = "bid_id,cluster_id,strategy_label\n";
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out += vectors[i].bid_id;
    out += ',';
    out += std::to_string(outcome.model.labels[i]);
    out += ',';
    out += strategy_label_name(outcome.point_labels[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_shares_csv(const std::string& path,
                      std::span<const ParticipantStrategyShares> shares) {
  std::string out = "participant_id,price_forecasting,self_scheduling,opportunistic,other\n";
  for (const auto& s : shares) {
    out += s.participant_id;
    out += ',';
    out += format_fraction(s.price_forecasting);
    out += ',';
    out += format_fraction(s.self_scheduling);
    out += ',';
    out += format_fraction(s.opportunistic);
    out += ',';
    out += format_fraction(s.other);
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace cbstrat
