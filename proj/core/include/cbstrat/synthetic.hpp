#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbstrat/market_data.hpp"

namespace cbstrat {

enum class Archetype { PriceForecasting, SelfScheduling, Opportunistic };

const char* archetype_name(Archetype a);
Archetype archetype_from_name(std::string_view name);

struct ParticipantSpec {
  std::string participant_id;
  Archetype archetype = Archetype::PriceForecasting;
};

// Desk-scale stand-in for real two-settlement market data. Day-ahead prices
// are a per-node seasonal base plus bounded uniform noise; spikes are
// additive excursions with Pareto-distributed magnitudes injected at regular
// (non-major) nodes only. Participants are scripted from the three strategy
// archetypes and bid every hour at their fixed node set, so bid counts are
// a pure function of the config.
struct SyntheticConfig {
  int nodes = 12;
  int major_nodes = 3;
  int days = 90;
  DayStamp start_date = 17897;  // 2019-01-01

  std::vector<ParticipantSpec> participants;

  double base_price_low = 25.0;
  double base_price_high = 55.0;
  double seasonal_amplitude = 8.0;
  double noise_scale = 4.0;      // uniform bound on D-LMP noise
  double gap_noise_scale = 2.0;  // uniform bound on the DA/RT gap noise

  // Spike process (regular nodes only). Each node draws an intensity
  // multiplier log-uniform in [intensity_floor, 1]; a spike day picks one
  // hour and adds a Pareto(spike_tail) excursion of at least spike_scale,
  // capped at spike_cap. Negative excursions reward demand bids, positive
  // ones reward supply bids.
  double spike_prob = 0.01;  // per node-day probability at intensity 1
  double spike_scale = 300.0;
  double spike_tail = 2.5;
  double spike_cap = 1400.0;
  double intensity_floor = 1.0;
  bool negative_spikes = true;
  bool positive_spikes = true;

  // A share of nodes carries periodically lossy spikes: every
  // false_spike_period-th spike at such a node moves the real-time price past
  // the day-ahead excursion, locking in a loss of false_loss_ratio (or a tenth
  // of it, depending on the node's tier) times the spike magnitude.
  double false_spike_share = 0.0;
  int false_spike_period = 8;
  double false_loss_ratio = 0.1;

  void validate() const;  // throws ConfigError
};

MarketDataset generate_synthetic_market(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace cbstrat
