#include "cbstrat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"

namespace cbstrat {

std::vector<ParticipantShare> compute_shares(const MarketDataset& dataset,
                                             std::span<const SettlementResult> settlements) {
  if (settlements.size() != dataset.bids.size()) {
    throw InvariantError("compute_shares: settlements must cover all bids");
  }
  struct Tally {
    double submitted_count = 0.0;
    double cleared_count = 0.0;
    double submitted_mwh = 0.0;
    double cleared_mwh = 0.0;
  };
  std::map<std::string, Tally> tallies;
  Tally total;
  for (std::size_t i = 0; i < dataset.bids.size(); ++i) {
    const auto& bid = dataset.bids[i];
    const auto& st = settlements[i];
    Tally& t = tallies[bid.participant_id];
    t.submitted_count += 1.0;
    t.submitted_mwh += bid.quantity();
    total.submitted_count += 1.0;
    total.submitted_mwh += bid.quantity();
    if (st.cleared()) {
      t.cleared_count += 1.0;
      total.cleared_count += 1.0;
    }
    t.cleared_mwh += st.cleared_quantity;
    total.cleared_mwh += st.cleared_quantity;
  }
  const auto pct = [](double part, double whole) {
    return whole > 0.0 ? 100.0 * part / whole : 0.0;
  };
  std::vector<ParticipantShare> out;
  out.reserve(tallies.size());
  for (const auto& [pid, t] : tallies) {
    out.push_back(ParticipantShare{pid, pct(t.submitted_count, total.submitted_count),
                                   pct(t.cleared_count, total.cleared_count),
                                   pct(t.submitted_mwh, total.submitted_mwh),
                                   pct(t.cleared_mwh, total.cleared_mwh)});
  }
  return out;
}

std::vector<AliasedParticipant> select_most_present(std::span<const ParticipantShare> shares,
                                                    int top_k) {
  if (top_k < 1) throw ConfigError("select_most_present: top_k must be >= 1");

  using Getter = double (*)(const ParticipantShare&);
  static constexpr Getter metrics[4] = {
      [](const ParticipantShare& s) { return s.share_submitted_count; },
      [](const ParticipantShare& s) { return s.share_cleared_count; },
      [](const ParticipantShare& s) { return s.share_submitted_mwh; },
      [](const ParticipantShare& s) { return s.share_cleared_mwh; },
  };

  std::vector<std::size_t> order(shares.size());
  std::vector<char> picked(shares.size(), 0);
  for (const Getter metric : metrics) {
    order.resize(shares.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = metric(shares[a]), vb = metric(shares[b]);
      if (va != vb) return va > vb;
      return shares[a].participant_id < shares[b].participant_id;
    });
    for (std::size_t r = 0; r < order.size() && r < static_cast<std::size_t>(top_k); ++r) {
      picked[order[r]] = 1;
    }
  }

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (picked[i]) chosen.push_back(i);
  }
  // Alias order mirrors the submitted-count column, largest share first.
  std::sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
    if (shares[a].share_submitted_count != shares[b].share_submitted_count) {
      return shares[a].share_submitted_count > shares[b].share_submitted_count;
    }
    return shares[a].participant_id < shares[b].participant_id;
  });
  std::vector<AliasedParticipant> out;
  out.reserve(chosen.size());
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    out.push_back(AliasedParticipant{static_cast<int>(r + 1), shares[chosen[r]].participant_id});
  }
  return out;
}

double compute_csr(std::span<const ConvergenceBid> bids,
                   std::span<const SettlementResult> settlements) {
  if (bids.empty()) throw DataError("compute_csr: empty bid set");
  if (settlements.size() != bids.size()) {
    throw InvariantError("compute_csr: settlements must cover all bids");
  }
  long cleared = 0;
  for (const auto& st : settlements) {
    if (st.cleared()) ++cleared;
  }
  return 100.0 * static_cast<double>(cleared) / static_cast<double>(bids.size());
}

double compute_lpr(std::span<const SettlementResult> settlements) {
  double profit = 0.0;
  double loss = 0.0;
  for (const auto& st : settlements) {
    profit += st.profit_part;
    loss += -st.loss_part;
  }
  if (profit > 0.0) return 100.0 * loss / profit;
  if (loss > 0.0) return std::numeric_limits<double>::infinity();
  return 0.0;
}

std::vector<PerformanceReport> performance_by_participant(
    const MarketDataset& dataset, std::span<const SettlementResult> settlements) {
  if (settlements.size() != dataset.bids.size()) {
    throw InvariantError("performance_by_participant: settlements must cover all bids");
  }
  struct Acc {
    long submitted = 0;
    long cleared = 0;
    double profit = 0.0;
    double loss = 0.0;
  };
  std::map<std::string, Acc> accs;
  for (std::size_t i = 0; i < dataset.bids.size(); ++i) {
    Acc& a = accs[dataset.bids[i].participant_id];
    a.submitted += 1;
    if (settlements[i].cleared()) a.cleared += 1;
    a.profit += settlements[i].profit_part;
    a.loss += -settlements[i].loss_part;
  }
  std::vector<PerformanceReport> out;
  out.reserve(accs.size());
  for (const auto& [pid, a] : accs) {
    PerformanceReport r;
    r.participant_id = pid;
    r.csr = 100.0 * static_cast<double>(a.cleared) / static_cast<double>(a.submitted);
    r.total_profit = a.profit;
    r.total_loss = a.loss;
    r.net_profit = a.profit - a.loss;
    if (a.profit > 0.0) {
      r.lpr = 100.0 * a.loss / a.profit;
    } else {
      r.lpr = a.loss > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string format_pct(double v) {
  if (std::isinf(v)) return "inf";
  return format_money(v);
}

}  // namespace

void write_shares_table_csv(const std::string& path, std::span<const ParticipantShare> shares) {
  std::string out =
      "participant_id,share_submitted_count,share_cleared_count,share_submitted_mwh,"
      "share_cleared_mwh\n";
  for (const auto& s : shares) {
    out += s.participant_id;
    out += ',';
    out += format_money(s.share_submitted_count);
    out += ',';
    out += format_money(s.share_cleared_count);
    out += ',';
    out += format_money(s.share_submitted_mwh);
    out += ',';
    out += format_money(s.share_cleared_mwh);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_performance_csv(const std::string& path,
                           std::span<const PerformanceReport> reports) {
  std::string out = "participant_id,csr,lpr,net_profit,total_profit,total_loss\n";
  for (const auto& r : reports) {
    out += r.participant_id;
    out += ',';
    out += format_pct(r.csr);
    out += ',';
    out += format_pct(r.lpr);
    out += ',';
    out += format_money(r.net_profit);
    out += ',';
    out += format_money(r.total_profit);
    out += ',';
    out += format_money(r.total_loss);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_most_present_csv(const std::string& path,
                            std::span<const AliasedParticipant> selected,
                            std::span<const ParticipantShare> shares) {
  std::string out =
      "alias_id,participant_id,share_submitted_count,share_cleared_count,share_submitted_mwh,"
      "share_cleared_mwh\n";
  for (const auto& a : selected) {
    const ParticipantShare* row = nullptr;
    for (const auto& s : shares) {
      if (s.participant_id == a.participant_id) {
        row = &s;
        break;
      }
    }
    out += std::to_string(a.alias);
    out += ',';
    out += a.participant_id;
    if (row != nullptr) {
      out += ',';
      out += format_money(row->share_submitted_count);
      out += ',';
      out += format_money(row->share_cleared_count);
      out += ',';
      out += format_money(row->share_submitted_mwh);
      out += ',';
      out += format_money(row->share_cleared_mwh);
    } else {
      out += ",,,,";
    }
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace cbstrat
