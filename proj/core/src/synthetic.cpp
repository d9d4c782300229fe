#include "cbstrat/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "cbstrat/errors.hpp"
#include "cbstrat/rng.hpp"

namespace cbstrat {

namespace {

constexpr double kPi = 3.14159265358979323846;

// RNG stream tags so draws stay independent of evaluation order.
enum Stream : std::uint64_t {
  kNodeParams = 1,
  kHourNoise = 2,
  kSpikeDay = 3,
  kForecast = 4,
  kBidShape = 5,
  kSideChoice = 6,
};

struct NodeModel {
  std::string id;
  bool is_major = false;
  double base = 0.0;
  double phase = 0.0;
  double intensity = 0.0;   // spike-day probability multiplier
  int loss_tier = 0;        // 0 clean, 1 = false_loss_ratio, 2 = ratio/10
  int spike_counter = 0;    // lifetime spike count, drives periodic losses
};

struct HourPrice {
  double dlmp;
  double rtlmp;
  double seasonal_mean;  // base + seasonal, the bidder-visible price level
};

}  // namespace

const char* archetype_name(Archetype a) {
  switch (a) {
    case Archetype::PriceForecasting: return "price_forecasting";
    case Archetype::SelfScheduling: return "self_scheduling";
    case Archetype::Opportunistic: return "opportunistic";
  }
  return "unknown";
}

Archetype archetype_from_name(std::string_view name) {
  if (name == "price_forecasting" || name == "forecasting") return Archetype::PriceForecasting;
  if (name == "self_scheduling" || name == "selfscheduling") return Archetype::SelfScheduling;
  if (name == "opportunistic") return Archetype::Opportunistic;
  throw ConfigError("unknown archetype '" + std::string(name) + "'");
}

void SyntheticConfig::validate() const {
  if (nodes < 1) throw ConfigError("synth.nodes must be >= 1");
  if (major_nodes < 0 || major_nodes > nodes) {
    throw ConfigError("synth.major_nodes must be in [0, nodes]");
  }
  if (days < 1) throw ConfigError("synth.days must be >= 1");
  if (spike_prob < 0.0 || spike_prob > 1.0) throw ConfigError("synth.spike_prob must be in [0,1]");
  if (noise_scale < 0.0) throw ConfigError("synth.noise_scale must be >= 0");
  if (gap_noise_scale < 0.0) throw ConfigError("synth.gap_noise_scale must be >= 0");
  if (seasonal_amplitude < 0.0) throw ConfigError("synth.seasonal_amplitude must be >= 0");
  if (spike_scale <= 0.0) throw ConfigError("synth.spike_scale must be > 0");
  if (spike_tail <= 1.0) throw ConfigError("synth.spike_tail must be > 1");
  if (spike_cap < spike_scale) throw ConfigError("synth.spike_cap must be >= synth.spike_scale");
  if (intensity_floor <= 0.0 || intensity_floor > 1.0) {
    throw ConfigError("synth.intensity_floor must be in (0, 1]");
  }
  if (false_spike_share < 0.0 || false_spike_share > 1.0) {
    throw ConfigError("synth.false_spike_share must be in [0,1]");
  }
  if (false_spike_period < 1) throw ConfigError("synth.false_spike_period must be >= 1");
  if (false_loss_ratio < 0.0 || false_loss_ratio >= 1.0) {
    throw ConfigError("synth.false_loss_ratio must be in [0,1)");
  }
  if (base_price_high < base_price_low) {
    throw ConfigError("synth.base_price_high must be >= synth.base_price_low");
  }
  for (const auto& p : participants) {
    if (p.participant_id.empty()) throw ConfigError("synth participant with empty id");
  }
}

namespace {

std::vector<NodeModel> build_nodes(const SyntheticConfig& cfg, std::uint64_t seed) {
  std::vector<NodeModel> nodes(static_cast<std::size_t>(cfg.nodes));
  for (int i = 0; i < cfg.nodes; ++i) {
    NodeModel& n = nodes[static_cast<std::size_t>(i)];
    char buf[16];
    if (i < cfg.major_nodes) {
      std::snprintf(buf, sizeof(buf), "HUB%02d", i + 1);
      n.is_major = true;
    } else {
      std::snprintf(buf, sizeof(buf), "N%04d", i - cfg.major_nodes + 1);
    }
    n.id = buf;
    SplitMix64 g(mix_seed(seed, kNodeParams, static_cast<std::uint64_t>(i)));
    n.base = g.uniform(cfg.base_price_low, cfg.base_price_high);
    n.phase = g.uniform(-2.0, 2.0);
    // Major aggregated nodes are the predictable ones: no spikes there.
    if (n.is_major) {
      n.intensity = 0.0;
    } else if (cfg.intensity_floor >= 1.0) {
      n.intensity = 1.0;
    } else {
      n.intensity = std::exp(g.uniform(std::log(cfg.intensity_floor), 0.0));
    }
    if (!n.is_major && g.uniform01() < cfg.false_spike_share) {
      n.loss_tier = g.bernoulli(0.5) ? 1 : 2;
    }
  }
  return nodes;
}

double draw_spike_magnitude(const SyntheticConfig& cfg, SplitMix64& g) {
  const double u = std::max(g.uniform01(), 1e-12);
  return std::min(cfg.spike_cap, cfg.spike_scale * std::pow(u, -1.0 / cfg.spike_tail));
}

HourPrice make_hour_price(const SyntheticConfig& cfg, const NodeModel& node, int day_idx,
                          int hour, std::uint64_t seed, std::uint64_t node_idx) {
  SplitMix64 g(mix_seed(seed, kHourNoise,
                        node_idx * 100000 + static_cast<std::uint64_t>(day_idx) * 24 +
                            static_cast<std::uint64_t>(hour)));
  const double seasonal =
      node.base + cfg.seasonal_amplitude * std::sin(2.0 * kPi * (hour - 6 + node.phase) / 24.0);
  const double dlmp = seasonal + g.uniform(-cfg.noise_scale, cfg.noise_scale);
  const double rtlmp = dlmp - g.uniform(-cfg.gap_noise_scale, cfg.gap_noise_scale);
  return HourPrice{dlmp, rtlmp, seasonal};
}

}  // namespace

MarketDataset generate_synthetic_market(const SyntheticConfig& cfg, std::uint64_t seed) {
  cfg.validate();

  std::vector<NodeModel> nodes = build_nodes(cfg, seed);

  MarketDataset ds;
  ds.node_registry.reserve(nodes.size());
  for (const auto& n : nodes) ds.node_registry.push_back(NodeInfo{n.id, n.is_major});

  // seasonal_means[node][hour] is the bidder-visible expected price level.
  std::vector<std::array<double, 24>> seasonal_means(nodes.size());

  ds.prices.reserve(nodes.size() * static_cast<std::size_t>(cfg.days) * 24);
  // actual[node_idx][day*24+hour], kept for the scripted forecasters.
  std::vector<std::vector<HourPrice>> panel(nodes.size());

  for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
    NodeModel& node = nodes[ni];
    auto& series = panel[ni];
    series.resize(static_cast<std::size_t>(cfg.days) * 24);
    for (int d = 0; d < cfg.days; ++d) {
      // At most one spike per node-day, at a random hour.
      int spike_hour = -1;
      bool spike_up = false;
      double spike_size = 0.0;
      bool spike_lossy = false;
      if (node.intensity > 0.0 && (cfg.negative_spikes || cfg.positive_spikes)) {
        SplitMix64 g(mix_seed(seed, kSpikeDay, ni, static_cast<std::uint64_t>(d)));
        if (g.uniform01() < cfg.spike_prob * node.intensity) {
          spike_hour = static_cast<int>(g.below(24));
          if (cfg.negative_spikes && cfg.positive_spikes) {
            spike_up = g.bernoulli(0.5);
          } else {
            spike_up = cfg.positive_spikes;
          }
          spike_size = draw_spike_magnitude(cfg, g);
          node.spike_counter += 1;
          spike_lossy =
              node.loss_tier != 0 && node.spike_counter % cfg.false_spike_period == 0;
        }
      }

      for (int h = 0; h < 24; ++h) {
        HourPrice p = make_hour_price(cfg, node, d, h, seed, ni);
        if (h == spike_hour) {
          const double loss_ratio =
              node.loss_tier == 1 ? cfg.false_loss_ratio : cfg.false_loss_ratio / 10.0;
          if (spike_up) {
            p.dlmp += spike_size;
            // Lossy spike: the real-time price overshoots past the day-ahead
            // excursion, so a supply bid captured here pays loss_ratio*size.
            if (spike_lossy) p.rtlmp = p.dlmp + loss_ratio * spike_size;
          } else {
            p.dlmp -= spike_size;
            if (spike_lossy) p.rtlmp = p.dlmp - loss_ratio * spike_size;
          }
        }
        series[static_cast<std::size_t>(d) * 24 + h] = p;
        ds.prices.push_back(PriceRecord{node.id, hour_stamp(cfg.start_date + d, h), p.dlmp,
                                        p.rtlmp, p.dlmp - p.rtlmp});
      }
    }
    for (int h = 0; h < 24; ++h) {
      seasonal_means[ni][h] =
          node.base + cfg.seasonal_amplitude * std::sin(2.0 * kPi * (h - 6 + node.phase) / 24.0);
    }
  }

  // ---- Scripted participants ------------------------------------------------
  // Every participant bids every hour of every day at a fixed node set
  // determined by its archetype, so bid counts are deterministic:
  //   price_forecasting: all major nodes
  //   self_scheduling:   up to 3 nodes (regular preferred)
  //   opportunistic:     up to 4 regular nodes
  std::vector<std::size_t> major_idx, regular_idx;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    (nodes[i].is_major ? major_idx : regular_idx).push_back(i);
  }

  long bid_counter = 0;
  for (std::size_t pi = 0; pi < cfg.participants.size(); ++pi) {
    const ParticipantSpec& spec = cfg.participants[pi];
    ds.ground_truth.emplace_back(spec.participant_id, archetype_name(spec.archetype));

    std::vector<std::size_t> home_nodes;
    switch (spec.archetype) {
      case Archetype::PriceForecasting:
        home_nodes = major_idx;
        if (home_nodes.empty() && !regular_idx.empty()) home_nodes.push_back(regular_idx[0]);
        break;
      case Archetype::SelfScheduling: {
        const auto& pool = regular_idx.empty() ? major_idx : regular_idx;
        for (std::size_t k = 0; k < pool.size() && k < 3; ++k) {
          home_nodes.push_back(pool[(pi + k) % pool.size()]);
        }
        break;
      }
      case Archetype::Opportunistic: {
        for (std::size_t k = 0; k < regular_idx.size() && k < 4; ++k) {
          home_nodes.push_back(regular_idx[(pi + k) % regular_idx.size()]);
        }
        break;
      }
    }
    std::sort(home_nodes.begin(), home_nodes.end());
    home_nodes.erase(std::unique(home_nodes.begin(), home_nodes.end()), home_nodes.end());

    for (int d = 0; d < cfg.days; ++d) {
      for (const std::size_t ni : home_nodes) {
        const NodeModel& node = nodes[ni];
        for (int h = 0; h < 24; ++h) {
          const HourPrice& actual = panel[ni][static_cast<std::size_t>(d) * 24 + h];
          SplitMix64 g(mix_seed(seed, kForecast,
                                (pi + 1) * 1000003ULL + ni * 1009ULL,
                                static_cast<std::uint64_t>(d) * 24 + h));
          ConvergenceBid bid;
          bid.participant_id = spec.participant_id;
          bid.node_id = node.id;
          bid.date = cfg.start_date + d;
          bid.hour = h;

          const double ref = seasonal_means[ni][static_cast<std::size_t>(h)];
          double qty = 5.0 + 5.0 * static_cast<double>(g.below(10));

          switch (spec.archetype) {
            case Archetype::PriceForecasting: {
              // Near-perfect forecaster: price hugs the actual D-LMP.
              const double f_dlmp = actual.dlmp + g.uniform(-2.0, 2.0);
              const double f_rtlmp = actual.rtlmp + g.uniform(-2.0, 2.0);
              bid.side = f_dlmp >= f_rtlmp ? Side::Supply : Side::Demand;
              const double price = bid.side == Side::Supply ? f_dlmp - 1.0 : f_dlmp + 1.0;
              bid.steps.push_back(PriceBidStep{qty, price});
              if (g.below(3) == 0) {
                const double step2 = bid.side == Side::Supply ? price + 2.0 : price - 2.0;
                bid.steps.push_back(PriceBidStep{qty * 2.0, step2});
              }
              break;
            }
            case Archetype::SelfScheduling: {
              // Rough sign forecast only; priced to always clear.
              bool gap_positive = actual.dlmp >= actual.rtlmp;
              if (g.uniform01() < 0.2) gap_positive = !gap_positive;
              bid.side = gap_positive ? Side::Supply : Side::Demand;
              const double price = bid.side == Side::Supply ? ref - 300.0 : ref + 300.0;
              bid.steps.push_back(PriceBidStep{qty, price});
              break;
            }
            case Archetype::Opportunistic: {
              // Fixed side per (participant, node); waits for spikes.
              SplitMix64 sg(mix_seed(seed, kSideChoice, (pi + 1) * 1000003ULL, ni));
              bid.side = sg.bernoulli(0.5) ? Side::Supply : Side::Demand;
              const double dist = 60.0 + g.uniform(0.0, 40.0);
              const double price = bid.side == Side::Supply ? ref + dist : ref - dist;
              bid.steps.push_back(PriceBidStep{qty, price});
              break;
            }
          }
          char idbuf[24];
          std::snprintf(idbuf, sizeof(idbuf), "B%08ld", ++bid_counter);
          bid.bid_id = idbuf;
          ds.bids.push_back(std::move(bid));
        }
      }
    }
  }

  return ds;
}

}  // namespace cbstrat
