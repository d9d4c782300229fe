#include "cbstrat/report.hpp"

#include <filesystem>
#include <map>
#include <unordered_map>

#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"
#include "cbstrat/features.hpp"
#include "cbstrat/market_data.hpp"
#include "cbstrat/svg.hpp"

namespace fs = std::filesystem;

namespace cbstrat {

namespace {

bool exists(const std::string& path) { return fs::exists(path); }

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void monthly_figures(const std::string& in_dir, const std::string& out_dir,
                     std::vector<std::string>& written) {
  const std::string src = join(in_dir, "monthly_summary.csv");
  if (!exists(src)) return;
  CsvReader reader(src, "month,cleared_mwh,net_profit");
  std::vector<std::string> months;
  std::vector<double> energy, profit;
  CsvRow row;
  while (reader.next(row)) {
    require_fields(row, 3, src);
    months.emplace_back(row.fields[0]);
    energy.push_back(parse_double_field(row, 1, src, "cleared_mwh"));
    profit.push_back(parse_double_field(row, 2, src, "net_profit"));
  }

  std::string energy_csv = "month,cleared_mwh\n";
  std::string profit_csv = "month,net_profit\n";
  for (std::size_t i = 0; i < months.size(); ++i) {
    energy_csv += months[i] + "," + format_money(energy[i]) + "\n";
    profit_csv += months[i] + "," + format_money(profit[i]) + "\n";
  }
  const std::string e_csv = join(out_dir, "fig_monthly_energy.csv");
  const std::string p_csv = join(out_dir, "fig_monthly_profit.csv");
  write_text_file(e_csv, energy_csv);
  write_text_file(p_csv, profit_csv);
  written.push_back(e_csv);
  written.push_back(p_csv);

  const std::string e_svg = join(out_dir, "fig_monthly_energy.svg");
  write_text_file(e_svg, render_bar_chart("Monthly cleared energy (MWh)", months,
                                          {BarSeries{"cleared MWh", energy}}, false));
  written.push_back(e_svg);
  const std::string p_svg = join(out_dir, "fig_monthly_profit.svg");
  write_text_file(p_svg, render_bar_chart("Monthly net profit ($)", months,
                                          {BarSeries{"net profit", profit}}, false));
  written.push_back(p_svg);
}

void delta_figures(const std::string& in_dir, const std::string& out_dir,
                   std::vector<std::string>& written) {
  const std::string f_src = join(in_dir, "features.csv");
  const std::string b_src = join(in_dir, "bids.csv");
  if (!exists(f_src) || !exists(b_src)) return;

  const std::vector<FeatureVector> features = load_features_csv(f_src);
  const std::vector<ConvergenceBid> bids = load_bid_csv(b_src);
  std::unordered_map<std::string, const ConvergenceBid*> by_id;
  by_id.reserve(bids.size());
  for (const auto& b : bids) by_id[b.bid_id] = &b;

  std::map<std::string, ScatterGroup> groups;
  std::string csv = "participant_id,hour,delta\n";
  for (const auto& fv : features) {
    const auto it = by_id.find(fv.bid_id);
    if (it == by_id.end()) continue;
    const ConvergenceBid& bid = *it->second;
    groups[bid.participant_id].points.emplace_back(static_cast<double>(bid.hour), fv.delta);
    csv += bid.participant_id + "," + std::to_string(bid.hour) + "," + format_money(fv.delta) +
           "\n";
  }
  const std::string csv_path = join(out_dir, "fig_delta_hour.csv");
  write_text_file(csv_path, csv);
  written.push_back(csv_path);

  for (auto& [pid, group] : groups) {
    group.name = pid;
    const std::string svg_path = join(out_dir, "fig_delta_hour_" + pid + ".svg");
    write_text_file(svg_path, render_scatter("Price distance by hour: " + pid, "hour of day",
                                             "delta ($/MWh)", {group}));
    written.push_back(svg_path);
  }
}

void profit_figure(const std::string& in_dir, const std::string& out_dir,
                   std::vector<std::string>& written) {
  const std::string src = join(in_dir, "trades.csv");
  if (!exists(src)) return;
  CsvReader reader(src,
                   "case,date,node_id,hour,side,strategy,price,quantity,cleared_quantity,"
                   "net_profit");
  std::map<std::string, ScatterGroup> groups;
  std::string csv = "node_id,hour,net_profit\n";
  CsvRow row;
  while (reader.next(row)) {
    require_fields(row, 10, src);
    const double cleared = parse_double_field(row, 8, src, "cleared_quantity");
    if (cleared <= 0.0) continue;
    const std::string node{row.fields[2]};
    const double hour = parse_double_field(row, 3, src, "hour");
    const double profit = parse_double_field(row, 9, src, "net_profit");
    groups[node].points.emplace_back(hour, profit);
    csv += node + "," + std::to_string(static_cast<int>(hour)) + "," + format_money(profit) + "\n";
  }
  const std::string csv_path = join(out_dir, "fig_hourly_profit.csv");
  write_text_file(csv_path, csv);
  written.push_back(csv_path);
  if (groups.empty()) return;

  std::vector<ScatterGroup> gs;
  for (auto& [node, g] : groups) {
    g.name = node;
    gs.push_back(std::move(g));
  }
  const std::string svg_path = join(out_dir, "fig_hourly_profit.svg");
  write_text_file(svg_path, render_scatter("Hourly profit of cleared bids per node",
                                           "hour of day", "net profit ($)", gs));
  written.push_back(svg_path);
}

void shares_figure(const std::string& in_dir, const std::string& out_dir,
                   std::vector<std::string>& written) {
  const std::string src = join(in_dir, "shares.csv");
  if (!exists(src)) return;
  CsvReader reader(src, "participant_id,price_forecasting,self_scheduling,opportunistic,other");
  std::vector<std::string> participants;
  BarSeries pf{"price_forecasting", {}}, ss{"self_scheduling", {}}, op{"opportunistic", {}},
      ot{"other", {}};
  CsvRow row;
  while (reader.next(row)) {
    require_fields(row, 5, src);
    participants.emplace_back(row.fields[0]);
    pf.values.push_back(parse_double_field(row, 1, src, "price_forecasting"));
    ss.values.push_back(parse_double_field(row, 2, src, "self_scheduling"));
    op.values.push_back(parse_double_field(row, 3, src, "opportunistic"));
    ot.values.push_back(parse_double_field(row, 4, src, "other"));
  }

  std::string csv = "participant_id,price_forecasting,self_scheduling,opportunistic,other\n";
  for (std::size_t i = 0; i < participants.size(); ++i) {
    csv += participants[i] + "," + format_fraction(pf.values[i]) + "," +
           format_fraction(ss.values[i]) + "," + format_fraction(op.values[i]) + "," +
           format_fraction(ot.values[i]) + "\n";
  }
  const std::string csv_path = join(out_dir, "fig_strategy_shares.csv");
  write_text_file(csv_path, csv);
  written.push_back(csv_path);
  if (participants.empty()) return;  // empty table: CSV only, no figure

  const std::string svg_path = join(out_dir, "fig_strategy_shares.svg");
  write_text_file(svg_path, render_bar_chart("Strategy share per participant", participants,
                                             {pf, ss, op, ot}, true));
  written.push_back(svg_path);
}

}  // namespace

std::vector<std::string> emit_reports(const std::string& in_dir, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) {
    throw DataError("emit_reports: cannot create output directory '" + out_dir + "'");
  }
  std::vector<std::string> written;
  monthly_figures(in_dir, out_dir, written);
  delta_figures(in_dir, out_dir, written);
  profit_figure(in_dir, out_dir, written);
  shares_figure(in_dir, out_dir, written);
  return written;
}

}  // namespace cbstrat
