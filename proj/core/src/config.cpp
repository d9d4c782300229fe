#include "cbstrat/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"

namespace cbstrat {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double to_double(const std::string& key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

long to_long(const std::string& key, std::string_view v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool to_bool(const std::string& key, std::string_view v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError(key + ": expected 0/1/true/false, got '" + std::string(v) + "'");
}

std::vector<std::string_view> split(std::string_view v, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t p = v.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(trim(v.substr(start)));
      break;
    }
    out.push_back(trim(v.substr(start, p - start)));
    start = p + 1;
  }
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

struct KeyDoc {
  const char* key;
  const char* doc;
};

constexpr KeyDoc kSchema[] = {
    {"paths.prices", "string; prices.csv input path"},
    {"paths.bids", "string; bids.csv input path"},
    {"paths.registry", "string; node_registry.csv input path"},
    {"paths.out", "string; output directory (default out)"},
    {"seed", "integer; RNG seed for synth/backtest (default 1)"},
    {"synth.nodes", "integer >= 1 (default 12)"},
    {"synth.major_nodes", "integer in [0, nodes] (default 3)"},
    {"synth.days", "integer >= 1 (default 90)"},
    {"synth.start_date", "YYYY-MM-DD (default 2019-01-01)"},
    {"synth.participants", "id:archetype;... archetypes: price_forecasting|self_scheduling|opportunistic"},
    {"synth.base_price_low", "number (default 25)"},
    {"synth.base_price_high", "number (default 55)"},
    {"synth.seasonal_amplitude", "number >= 0 (default 8)"},
    {"synth.noise_scale", "number >= 0; uniform D-LMP noise bound (default 4)"},
    {"synth.gap_noise_scale", "number >= 0; uniform DA/RT gap bound (default 2)"},
    {"synth.spike_prob", "number in [0,1]; per node-day (default 0.01)"},
    {"synth.spike_scale", "number > 0; minimum spike size (default 300)"},
    {"synth.spike_tail", "number > 1; Pareto tail index (default 2.5)"},
    {"synth.spike_cap", "number >= spike_scale (default 1400)"},
    {"synth.intensity_floor", "number in (0,1]; per-node intensity spread (default 1)"},
    {"synth.negative_spikes", "bool (default 1)"},
    {"synth.positive_spikes", "bool (default 1)"},
    {"synth.false_spike_share", "number in [0,1]; share of lossy-spike nodes (default 0)"},
    {"synth.false_spike_period", "integer >= 1; every k-th spike is lossy (default 8)"},
    {"synth.false_loss_ratio", "number in [0,1); loss size vs spike size (default 0.1)"},
    {"cluster.min_cluster_size", "integer >= 2 (default 50)"},
    {"cluster.min_samples", "integer >= 1, <= min_cluster_size (default 5)"},
    {"cluster.small_delta", "number >= 0; price-forecasting signature bound (default 5)"},
    {"cluster.large_delta", "number > small_delta; spike signature bound (default 25)"},
    {"optimizer.epsilon", "number >= 0; loss budget ratio (default 0.01)"},
    {"optimizer.m_min", "number (default 30)"},
    {"optimizer.m_max", "number >= m_min (default 200)"},
    {"optimizer.big_m", "number > 0 (default 3000)"},
    {"optimizer.theta", "number; labeling threshold (default 100)"},
    {"backtest.tau_dlmp", "number in [0,1] (default 0.8)"},
    {"backtest.tau_rtlmp", "number in [0,1] (default 0.8)"},
    {"backtest.tau_sign", "number in [0,1] (default 0.8)"},
    {"backtest.strategy1_margin", "number > 0 (default 2)"},
    {"backtest.strategy2_offset", "number > 0 (default 500)"},
    {"backtest.quantity", "number > 0; MWh per bid (default 50)"},
    {"backtest.history_window", "integer >= 1; trailing days (default 365)"},
    {"backtest.accuracy_window", "integer >= 7; forecast scoring days (default 7)"},
    {"backtest.forecast_noise", "number >= 0; synthetic forecaster noise (default 0)"},
    {"backtest.sign_error_prob", "number in [0,1] (default 0)"},
    {"backtest.eval_days", "integer >= 0; 0 = all days past the window (default 0)"},
    {"backtest.cases", "eps:theta;eps:theta;... optional sweep"},
    {"metrics.top_k", "integer >= 1; most-present selection depth (default 10)"},
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;

  std::map<std::string, std::function<void(const std::string&, std::string_view)>> setters;
  const auto set_str = [](std::string& field) {
    return [&field](const std::string&, std::string_view v) { field = std::string(v); };
  };
  const auto set_double = [](double& field) {
    return [&field](const std::string& k, std::string_view v) { field = to_double(k, v); };
  };
  const auto set_int = [](int& field) {
    return [&field](const std::string& k, std::string_view v) {
      field = static_cast<int>(to_long(k, v));
    };
  };
  const auto set_bool = [](bool& field) {
    return [&field](const std::string& k, std::string_view v) { field = to_bool(k, v); };
  };

  setters["paths.prices"] = set_str(cfg.paths.prices);
  setters["paths.bids"] = set_str(cfg.paths.bids);
  setters["paths.registry"] = set_str(cfg.paths.registry);
  setters["paths.out"] = set_str(cfg.paths.out);
  setters["seed"] = [&cfg](const std::string& k, std::string_view v) {
    cfg.seed = static_cast<std::uint64_t>(to_long(k, v));
  };
  setters["synth.nodes"] = set_int(cfg.synth.nodes);
  setters["synth.major_nodes"] = set_int(cfg.synth.major_nodes);
  setters["synth.days"] = set_int(cfg.synth.days);
  setters["synth.start_date"] = [&cfg](const std::string& k, std::string_view v) {
    try {
      cfg.synth.start_date = parse_date(v);
    } catch (const DataError& e) {
      throw ConfigError(k + ": " + e.what());
    }
  };
  setters["synth.participants"] = [&cfg](const std::string& k, std::string_view v) {
    cfg.synth.participants.clear();
    for (const auto part : split(v, ';')) {
      if (part.empty()) continue;
      const std::size_t colon = part.find(':');
      if (colon == std::string_view::npos) {
        throw ConfigError(k + ": expected id:archetype, got '" + std::string(part) + "'");
      }
      ParticipantSpec spec;
      spec.participant_id = std::string(trim(part.substr(0, colon)));
      try {
        spec.archetype = archetype_from_name(trim(part.substr(colon + 1)));
      } catch (const ConfigError& e) {
        throw ConfigError(k + ": " + e.what());
      }
      cfg.synth.participants.push_back(std::move(spec));
    }
  };
  setters["synth.base_price_low"] = set_double(cfg.synth.base_price_low);
  setters["synth.base_price_high"] = set_double(cfg.synth.base_price_high);
  setters["synth.seasonal_amplitude"] = set_double(cfg.synth.seasonal_amplitude);
  setters["synth.noise_scale"] = set_double(cfg.synth.noise_scale);
  setters["synth.gap_noise_scale"] = set_double(cfg.synth.gap_noise_scale);
  setters["synth.spike_prob"] = set_double(cfg.synth.spike_prob);
  setters["synth.spike_scale"] = set_double(cfg.synth.spike_scale);
  setters["synth.spike_tail"] = set_double(cfg.synth.spike_tail);
  setters["synth.spike_cap"] = set_double(cfg.synth.spike_cap);
  setters["synth.intensity_floor"] = set_double(cfg.synth.intensity_floor);
  setters["synth.negative_spikes"] = set_bool(cfg.synth.negative_spikes);
  setters["synth.positive_spikes"] = set_bool(cfg.synth.positive_spikes);
  setters["synth.false_spike_share"] = set_double(cfg.synth.false_spike_share);
  setters["synth.false_spike_period"] = set_int(cfg.synth.false_spike_period);
  setters["synth.false_loss_ratio"] = set_double(cfg.synth.false_loss_ratio);
  setters["cluster.min_cluster_size"] = set_int(cfg.cluster.min_cluster_size);
  setters["cluster.min_samples"] = set_int(cfg.cluster.min_samples);
  setters["cluster.small_delta"] = set_double(cfg.thresholds.small_delta);
  setters["cluster.large_delta"] = set_double(cfg.thresholds.large_delta);
  setters["optimizer.epsilon"] = set_double(cfg.optimizer.epsilon);
  setters["optimizer.m_min"] = set_double(cfg.optimizer.m_min);
  setters["optimizer.m_max"] = set_double(cfg.optimizer.m_max);
  setters["optimizer.big_m"] = set_double(cfg.optimizer.big_m);
  setters["optimizer.theta"] = set_double(cfg.optimizer.theta);
  setters["backtest.tau_dlmp"] = set_double(cfg.backtest.tau_dlmp);
  setters["backtest.tau_rtlmp"] = set_double(cfg.backtest.tau_rtlmp);
  setters["backtest.tau_sign"] = set_double(cfg.backtest.tau_sign);
  setters["backtest.strategy1_margin"] = set_double(cfg.backtest.strategy1_margin);
  setters["backtest.strategy2_offset"] = set_double(cfg.backtest.strategy2_offset);
  setters["backtest.quantity"] = set_double(cfg.backtest.quantity);
  setters["backtest.history_window"] = set_int(cfg.backtest.history_window);
  setters["backtest.accuracy_window"] = set_int(cfg.backtest.accuracy_window);
  setters["backtest.forecast_noise"] = set_double(cfg.backtest.forecast_noise);
  setters["backtest.sign_error_prob"] = set_double(cfg.backtest.sign_error_prob);
  setters["backtest.eval_days"] = set_int(cfg.backtest.eval_days);
  setters["backtest.cases"] = [&cfg](const std::string& k, std::string_view v) {
    cfg.backtest_cases.clear();
    for (const auto part : split(v, ';')) {
      if (part.empty()) continue;
      const std::size_t colon = part.find(':');
      if (colon == std::string_view::npos) {
        throw ConfigError(k + ": expected eps:theta, got '" + std::string(part) + "'");
      }
      const double eps = to_double(k, trim(part.substr(0, colon)));
      const double theta = to_double(k, trim(part.substr(colon + 1)));
      cfg.backtest_cases.emplace_back(eps, theta);
    }
  };
  setters["metrics.top_k"] = set_int(cfg.metrics_top_k);

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t eol = text.find('\n', start);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + start, eol - start);
    start = eol + 1;
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError(origin + " line " + std::to_string(line_no) + ": unknown key '" + key +
                        "'");
    }
    it->second(key, value);
  }

  // Range checks; validators name their keys.
  cfg.synth.validate();
  cfg.cluster.validate();
  cfg.thresholds.validate();
  cfg.optimizer.validate();
  cfg.backtest.optimizer = cfg.optimizer;
  cfg.backtest.validate();
  if (cfg.metrics_top_k < 1) throw ConfigError("metrics.top_k must be >= 1");
  for (const auto& [eps, theta] : cfg.backtest_cases) {
    if (eps < 0.0) throw ConfigError("backtest.cases: epsilon must be >= 0");
    if (!std::isfinite(theta)) throw ConfigError("backtest.cases: theta must be finite");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text, path);
}

std::string config_schema_help() {
  std::string out = "Config keys (flat 'key = value' lines, '#' comments):\n";
  for (const auto& [key, doc] : kSchema) {
    out += "  ";
    out += key;
    out += ": ";
    out += doc;
    out += '\n';
  }
  return out;
}

}  // namespace cbstrat
