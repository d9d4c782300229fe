#include "cbstrat/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <unordered_map>

#include <json.hpp>

#include "cbstrat/bidding.hpp"
#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"
#include "cbstrat/manifest.hpp"
#include "cbstrat/metrics.hpp"
#include "cbstrat/report.hpp"

namespace fs = std::filesystem;

namespace cbstrat {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.paths.out, ec);
  if (!fs::is_directory(config.paths.out)) {
    throw DataError("cannot create output directory '" + config.paths.out + "'");
  }
}

std::string require_input(const std::string& path, const char* key) {
  if (path.empty()) throw ConfigError(std::string(key) + " is required for this stage");
  if (!fs::exists(path)) {
    throw ConfigError(std::string(key) + ": file not found '" + path + "'");
  }
  return path;
}

std::string config_digest(const RunConfig& config) {
  // Digest of the semantically relevant state: seed plus every numeric knob,
  // via a canonical dump.
  nlohmann::json j;
  j["seed"] = config.seed;
  j["paths"] = {config.paths.prices, config.paths.bids, config.paths.registry};
  j["optimizer"] = {config.optimizer.epsilon, config.optimizer.m_min, config.optimizer.m_max,
                    config.optimizer.big_m, config.optimizer.theta};
  j["cluster"] = {config.cluster.min_cluster_size, config.cluster.min_samples,
                  config.thresholds.small_delta, config.thresholds.large_delta};
  j["backtest"] = {config.backtest.tau_dlmp,        config.backtest.tau_rtlmp,
                   config.backtest.tau_sign,        config.backtest.strategy1_margin,
                   config.backtest.strategy2_offset, config.backtest.quantity,
                   config.backtest.history_window,  config.backtest.accuracy_window,
                   config.backtest.forecast_noise,  config.backtest.sign_error_prob,
                   config.backtest.eval_days};
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& [e, t] : config.backtest_cases) cases.push_back({e, t});
  j["cases"] = cases;
  j["synth"] = {config.synth.nodes,          config.synth.major_nodes,
                config.synth.days,           config.synth.start_date,
                config.synth.noise_scale,    config.synth.gap_noise_scale,
                config.synth.spike_prob,     config.synth.spike_scale,
                config.synth.spike_tail,     config.synth.spike_cap,
                config.synth.intensity_floor, config.synth.false_spike_share,
                config.synth.false_spike_period, config.synth.false_loss_ratio};
  for (const auto& p : config.synth.participants) {
    j["synth"].push_back(p.participant_id + ":" + archetype_name(p.archetype));
  }
  return "fnv1a64:" + hex64(fnv1a64(j.dump()));
}

class StageRun {
 public:
  StageRun(std::string stage, const RunConfig& config)
      : config_(config), start_(std::chrono::steady_clock::now()) {
    outcome_.stage = std::move(stage);
    manifest_.stage = outcome_.stage;
    manifest_.config_digest = config_digest(config);
  }

  void input(const std::string& path) { manifest_.inputs.emplace_back(path, file_digest(path)); }

  void output(const std::string& path) { outcome_.outputs.push_back(path); }

  StageOutcome finish() {
    for (const auto& path : outcome_.outputs) {
      manifest_.outputs.emplace_back(path, file_digest(path));
    }
    manifest_.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
    const std::string path = join(config_.paths.out, "manifest_" + outcome_.stage + ".json");
    write_manifest_json(path, manifest_);
    outcome_.outputs.push_back(path);
    return std::move(outcome_);
  }

 private:
  const RunConfig& config_;
  std::chrono::steady_clock::time_point start_;
  StageOutcome outcome_;
  RunManifest manifest_;
};

MarketDataset load_dataset(const RunConfig& config, StageRun& run, bool need_bids = true) {
  MarketDataset ds;
  ds.prices = load_price_csv(require_input(config.paths.prices, "paths.prices"));
  run.input(config.paths.prices);
  if (need_bids) {
    ds.bids = load_bid_csv(require_input(config.paths.bids, "paths.bids"));
    run.input(config.paths.bids);
    ds.node_registry =
        load_node_registry_csv(require_input(config.paths.registry, "paths.registry"));
    run.input(config.paths.registry);
  }
  return ds;
}

DateRange full_span(const MarketDataset& ds) {
  if (ds.prices.empty()) throw DataError("dataset has no price records");
  DayStamp lo = day_of(ds.prices.front().timestamp);
  DayStamp hi = lo;
  for (const auto& r : ds.prices) {
    lo = std::min(lo, day_of(r.timestamp));
    hi = std::max(hi, day_of(r.timestamp));
  }
  return DateRange{lo, hi};
}

void write_ground_truth_csv(const std::string& path, const MarketDataset& ds) {
  std::string out = "participant_id,archetype\n";
  for (const auto& [pid, arch] : ds.ground_truth) out += pid + "," + arch + "\n";
  write_text_file(path, out);
}

void write_monthly_summary_csv(const std::string& path, const MarketSummary& summary) {
  std::string out = "month,cleared_mwh,net_profit\n";
  for (const auto& row : summary.monthly) {
    out += row.month + "," + format_money(row.cleared_mwh) + "," + format_money(row.net_profit) +
           "\n";
  }
  write_text_file(path, out);
}

}  // namespace

StageOutcome stage_synth(const RunConfig& config) {
  ensure_out_dir(config);
  StageRun run("synth", config);
  const MarketDataset ds = generate_synthetic_market(config.synth, config.seed);

  const std::string prices = join(config.paths.out, "prices.csv");
  const std::string bids = join(config.paths.out, "bids.csv");
  const std::string registry = join(config.paths.out, "node_registry.csv");
  const std::string truth = join(config.paths.out, "ground_truth.csv");
  write_price_csv(prices, ds.prices);
  write_bid_csv(bids, ds.bids);
  write_node_registry_csv(registry, ds.node_registry);
  write_ground_truth_csv(truth, ds);
  run.output(prices);
  run.output(bids);
  run.output(registry);
  run.output(truth);
  return run.finish();
}

StageOutcome stage_ingest(const RunConfig& config) {
  ensure_out_dir(config);
  StageRun run("ingest", config);
  const MarketDataset ds = load_dataset(config, run);

  for (const auto& bid : ds.bids) {
    if (!ds.has_node(bid.node_id)) {
      throw DataError("bid '" + bid.bid_id + "' references unregistered node '" + bid.node_id +
                      "'");
    }
  }

  const MarketSummary summary = summarize_dataset(ds);
  const std::string monthly = join(config.paths.out, "monthly_summary.csv");
  write_monthly_summary_csv(monthly, summary);
  run.output(monthly);

  nlohmann::json j;
  j["price_rows"] = ds.prices.size();
  j["bid_count"] = ds.bids.size();
  j["participant_count"] = summary.participant_count;
  j["nodes_with_bids"] = summary.nodes_with_bids;
  j["node_count"] = ds.node_registry.size();
  const std::string info = join(config.paths.out, "summary.json");
  write_text_file(info, j.dump(2) + "\n");
  run.output(info);
  return run.finish();
}

StageOutcome stage_features(const RunConfig& config) {
  ensure_out_dir(config);
  StageRun run("features", config);
  const MarketDataset ds = load_dataset(config, run);
  const HourlyStatsTable stats(compute_hourly_stats(ds.prices, full_span(ds)));
  const std::vector<FeatureVector> features = compute_feature_vectors(ds, stats);
  const std::string path = join(config.paths.out, "features.csv");
  write_features_csv(path, features);
  run.output(path);
  return run.finish();
}

StageOutcome stage_cluster(const RunConfig& config) {
  ensure_out_dir(config);
  StageRun run("cluster", config);

  const std::string features_path = join(config.paths.out, "features.csv");
  if (!fs::exists(features_path)) {
    throw ConfigError("cluster stage needs features.csv in paths.out (run `features` first)");
  }
  const std::vector<FeatureVector> features = load_features_csv(features_path);
  run.input(features_path);
  const std::vector<ConvergenceBid> bids =
      load_bid_csv(require_input(config.paths.bids, "paths.bids"));
  run.input(config.paths.bids);

  std::unordered_map<std::string, const std::string*> owner;
  owner.reserve(bids.size());
  for (const auto& b : bids) owner[b.bid_id] = &b.participant_id;
  std::vector<std::string> participants;
  participants.reserve(features.size());
  for (const auto& f : features) {
    const auto it = owner.find(f.bid_id);
    if (it == owner.end()) {
      throw DataError("features.csv bid '" + f.bid_id + "' not present in bids.csv");
    }
    participants.push_back(*it->second);
  }

  const ClusteringOutcome outcome =
      cluster_bids(features, participants, config.cluster, config.thresholds);

  const std::string clusters = join(config.paths.out, "clusters.csv");
  const std::string shares = join(config.paths.out, "shares.csv");
  write_clusters_csv(clusters, features, outcome);
  write_shares_csv(shares, outcome.shares);
  run.output(clusters);
  run.output(shares);
  return run.finish();
}

StageOutcome stage_metrics(const RunConfig& config) {
  ensure_out_dir(config);
  StageRun run("metrics", config);
  const MarketDataset ds = load_dataset(config, run);
  const std::vector<SettlementResult> settlements = settle_all(ds);

  const std::vector<ParticipantShare> shares = compute_shares(ds, settlements);
  const std::vector<AliasedParticipant> selected =
      select_most_present(shares, config.metrics_top_k);
  const std::vector<PerformanceReport> perf = performance_by_participant(ds, settlements);

  const std::string shares_path = join(config.paths.out, "participant_shares.csv");
  const std::string perf_path = join(config.paths.out, "performance.csv");
  const std::string most_path = join(config.paths.out, "most_present.csv");
  write_shares_table_csv(shares_path, shares);
  write_performance_csv(perf_path, perf);
  write_most_present_csv(most_path, selected, shares);
  run.output(shares_path);
  run.output(perf_path);
  run.output(most_path);
  return run.finish();
}

StageOutcome stage_label(const RunConfig& config) {
  ensure_out_dir(config);
  StageRun run("label", config);
  MarketDataset ds;
  ds.prices = load_price_csv(require_input(config.paths.prices, "paths.prices"));
  run.input(config.paths.prices);

  const PricePanel panel(ds);
  const DateRange span{panel.first_day(), panel.last_day()};
  DateRange window{span.last - config.backtest.history_window + 1, span.last};
  if (window.first < span.first) window.first = span.first;

  const std::vector<NodeLabel> labels = label_nodes(panel, window, config.optimizer);

  std::vector<NodeSolutionRow> rows;
  std::string labels_csv =
      "node_id,demand_cb,supply_cb,demand_m,supply_m,demand_objective,supply_objective\n";
  std::string sched_csv = "node_id,side,hour,price\n";
  for (const auto& l : labels) {
    SpikeSolution demand_sol;
    demand_sol.feasible = l.demand_cb;
    demand_sol.m_star = l.demand_m;
    demand_sol.objective = l.demand_objective;
    SpikeSolution supply_sol;
    supply_sol.feasible = l.supply_cb;
    supply_sol.m_star = l.supply_m;
    supply_sol.objective = l.supply_objective;

    labels_csv += l.node_id;
    labels_csv += l.demand_cb ? ",1," : ",0,";
    labels_csv += l.supply_cb ? "1," : "0,";
    labels_csv += format_money(l.demand_m) + "," + format_money(l.supply_m) + "," +
                  format_money(l.demand_objective) + "," + format_money(l.supply_objective) + "\n";
    for (int h = 0; h < 24; ++h) {
      if (l.demand_cb) {
        sched_csv += l.node_id + ",D," + std::to_string(h) + "," +
                     format_money(l.demand_schedule[static_cast<std::size_t>(h)]) + "\n";
      }
      if (l.supply_cb) {
        sched_csv += l.node_id + ",S," + std::to_string(h) + "," +
                     format_money(l.supply_schedule[static_cast<std::size_t>(h)]) + "\n";
      }
    }
  }

  // solutions.csv carries the per-node, per-side optimizer outcomes.
  {
    const PricePanel& p = panel;
    std::vector<NodeSolutionRow> solution_rows;
    for (int ni = 0; ni < p.node_count(); ++ni) {
      if (p.days_with_data(ni, window) < window.days()) continue;
      const WindowSeries series = collect_window(p, ni, window);
      if (series.dlmp.empty()) continue;
      for (const Side side : {Side::Demand, Side::Supply}) {
        NodeSolutionRow row;
        row.node_id = p.node_id(ni);
        row.side = side;
        row.solution = solve_breakpoints(make_spike_instance(series, side), config.optimizer);
        solution_rows.push_back(std::move(row));
      }
    }
    const std::string solutions = join(config.paths.out, "solutions.csv");
    write_solutions_csv(solutions, solution_rows);
    run.output(solutions);
  }

  const std::string labels_path = join(config.paths.out, "node_labels.csv");
  const std::string sched_path = join(config.paths.out, "schedules.csv");
  write_text_file(labels_path, labels_csv);
  write_text_file(sched_path, sched_csv);
  run.output(labels_path);
  run.output(sched_path);
  return run.finish();
}

StageOutcome stage_backtest(const RunConfig& config) {
  ensure_out_dir(config);
  StageRun run("backtest", config);
  MarketDataset ds;
  ds.prices = load_price_csv(require_input(config.paths.prices, "paths.prices"));
  run.input(config.paths.prices);

  std::vector<std::pair<double, double>> cases = config.backtest_cases;
  if (cases.empty()) cases.emplace_back(config.optimizer.epsilon, config.optimizer.theta);

  nlohmann::json report;
  report["tool_version"] = kToolVersion;
  report["seed"] = config.seed;
  nlohmann::json case_rows = nlohmann::json::array();

  std::string trades_csv =
      "case,date,node_id,hour,side,strategy,price,quantity,cleared_quantity,net_profit\n";
  std::string labels_csv = "case,date,node_id,side,m_star,objective,insample_profit,"
                           "insample_loss\n";

  for (std::size_t c = 0; c < cases.size(); ++c) {
    BacktestConfig bt = config.backtest;
    bt.optimizer.epsilon = cases[c].first;
    bt.optimizer.theta = cases[c].second;
    const BacktestResult result = run_backtest(ds, bt, config.seed);

    nlohmann::json row;
    row["case"] = c + 1;
    row["epsilon"] = cases[c].first;
    row["theta"] = cases[c].second;
    row["labeled_nodes"] = result.labeled_node_count;
    row["cleared_nodes"] = result.cleared_node_count;
    row["cleared_days"] = result.cleared_day_count;
    row["eval_days"] = result.eval_day_count;
    row["submitted"] = result.submitted_count;
    row["cleared"] = result.cleared_count;
    row["net_profit"] = result.net_profit;
    row["total_profit"] = result.total_profit;
    row["total_loss"] = result.total_loss;
    row["csr"] = result.csr;
    row["lpr"] = std::isinf(result.lpr) ? -1.0 : result.lpr;
    row["lpr_defined"] = !std::isinf(result.lpr);
    row["net_strategy1"] = result.net_by_strategy[0];
    row["net_strategy2"] = result.net_by_strategy[1];
    row["net_strategy3"] = result.net_by_strategy[2];
    case_rows.push_back(row);

    const std::string case_tag = std::to_string(c + 1);
    for (const auto& t : result.trades) {
      trades_csv += case_tag + "," + format_date(t.date) + "," + t.node_id + "," +
                    std::to_string(t.hour) + "," + side_tag(t.side) + "," +
                    choice_name(t.strategy) + "," + format_money(t.price) + "," +
                    format_money(t.quantity) + "," + format_money(t.cleared_quantity) + "," +
                    format_money(t.net_profit) + "\n";
    }
    for (const auto& e : result.label_events) {
      labels_csv += case_tag + "," + format_date(e.date) + "," + e.node_id + "," +
                    side_tag(e.side) + "," + format_money(e.m_star) + "," +
                    format_money(e.objective) + "," + format_money(e.insample_profit) + "," +
                    format_money(e.insample_loss) + "\n";
    }
  }
  report["cases"] = case_rows;

  const std::string report_path = join(config.paths.out, "backtest_report.json");
  const std::string trades_path = join(config.paths.out, "trades.csv");
  const std::string labels_path = join(config.paths.out, "labels.csv");
  write_text_file(report_path, report.dump(2) + "\n");
  write_text_file(trades_path, trades_csv);
  write_text_file(labels_path, labels_csv);
  run.output(report_path);
  run.output(trades_path);
  run.output(labels_path);
  return run.finish();
}

StageOutcome stage_report(const RunConfig& config) {
  ensure_out_dir(config);
  StageRun run("report", config);
  const std::vector<std::string> written = emit_reports(config.paths.out, config.paths.out);
  for (const auto& path : written) run.output(path);
  return run.finish();
}

StageOutcome run_stage(const std::string& stage, const RunConfig& config) {
  if (stage == "synth") return stage_synth(config);
  if (stage == "ingest") return stage_ingest(config);
  if (stage == "features") return stage_features(config);
  if (stage == "cluster") return stage_cluster(config);
  if (stage == "metrics") return stage_metrics(config);
  if (stage == "label") return stage_label(config);
  if (stage == "backtest") return stage_backtest(config);
  if (stage == "report") return stage_report(config);
  throw ConfigError("unknown stage '" + stage + "'");
}

}  // namespace cbstrat
