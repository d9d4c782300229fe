#pragma once

#include <span>
#include <string>
#include <vector>

#include "cbstrat/market_data.hpp"

namespace cbstrat {

// Per-participant market shares under the four presence metrics, in percent.
// Each column sums to 100 over all participants.
struct ParticipantShare {
  std::string participant_id;
  double share_submitted_count = 0.0;
  double share_cleared_count = 0.0;
  double share_submitted_mwh = 0.0;
  double share_cleared_mwh = 0.0;
};

// A bid counts as cleared when any quantity cleared; MWh metrics use the
// bid's headline quantity (submitted) and the cleared quantity (cleared).
std::vector<ParticipantShare> compute_shares(const MarketDataset& dataset,
                                             std::span<const SettlementResult> settlements);

struct AliasedParticipant {
  int alias = 0;  // 1..n, descending share of submitted-count
  std::string participant_id;
};

// Union of the top_k participants under each of the four metrics (ties by
// participant_id); aliases assigned in descending submitted-count share.
std::vector<AliasedParticipant> select_most_present(std::span<const ParticipantShare> shares,
                                                    int top_k);

// 100 * cleared / submitted. Throws DataError on an empty bid set.
double compute_csr(std::span<const ConvergenceBid> bids,
                   std::span<const SettlementResult> settlements);

// 100 * total loss / total profit; 0 when both are zero, +infinity when
// profit is zero but losses exist.
double compute_lpr(std::span<const SettlementResult> settlements);

struct PerformanceReport {
  std::string participant_id;
  double csr = 0.0;
  double lpr = 0.0;
  double net_profit = 0.0;
  double total_profit = 0.0;  // >= 0
  double total_loss = 0.0;    // >= 0, reported as magnitude
};

std::vector<PerformanceReport> performance_by_participant(
    const MarketDataset& dataset, std::span<const SettlementResult> settlements);

void write_shares_table_csv(const std::string& path, std::span<const ParticipantShare> shares);
void write_performance_csv(const std::string& path, std::span<const PerformanceReport> reports);
void write_most_present_csv(const std::string& path, std::span<const AliasedParticipant> selected,
                            std::span<const ParticipantShare> shares);

}  // namespace cbstrat
