#include "cbstrat/spike_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cbstrat/csv.hpp"
#include "cbstrat/errors.hpp"

namespace cbstrat {

namespace {

constexpr double kTol = 1e-9;

double raw_payoff(const SpikeInstance& inst, std::size_t t) {
  return inst.side == Side::Demand ? inst.rtlmp[t] - inst.dlmp[t]
                                   : inst.dlmp[t] - inst.rtlmp[t];
}

}  // namespace

void SpikeInstance::validate() const {
  const std::size_t n = dlmp.size();
  if (n == 0 || rtlmp.size() != n || avg_dlmp.size() != n) {
    throw DataError("SpikeInstance: arrays must be non-empty and equally sized");
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (!std::isfinite(dlmp[t]) || !std::isfinite(rtlmp[t]) || !std::isfinite(avg_dlmp[t])) {
      throw DataError("SpikeInstance: non-finite price at interval " + std::to_string(t));
    }
  }
}

void OptimizerConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("optimizer.epsilon must be >= 0");
  }
  if (!std::isfinite(m_min) || !std::isfinite(m_max) || m_min > m_max) {
    throw ConfigError("optimizer.m_min must be <= optimizer.m_max");
  }
  if (!(big_m > 0.0)) throw ConfigError("optimizer.big_m must be > 0");
  if (!std::isfinite(theta)) throw ConfigError("optimizer.theta must be finite");
}

std::vector<double> clearing_breakpoints(const SpikeInstance& instance) {
  std::vector<double> out(instance.horizon());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = instance.side == Side::Demand ? instance.avg_dlmp[t] - instance.dlmp[t]
                                           : instance.dlmp[t] - instance.avg_dlmp[t];
  }
  return out;
}

SpikeEvaluation evaluate_m(const SpikeInstance& instance, double m) {
  instance.validate();
  if (!std::isfinite(m)) throw DataError("evaluate_m: m must be finite");
  const std::size_t n = instance.horizon();
  SpikeEvaluation ev;
  ev.cleared.assign(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    const double beta = instance.side == Side::Demand
                            ? instance.avg_dlmp[t] - instance.dlmp[t]
                            : instance.dlmp[t] - instance.avg_dlmp[t];
    if (m <= beta) {
      ev.cleared[t] = 1;
      const double eta = raw_payoff(instance, t);
      if (eta >= 0.0) {
        ev.profit_sum += eta;
      } else {
        ev.loss_sum += eta;
      }
    }
  }
  ev.objective = ev.profit_sum + ev.loss_sum;
  return ev;
}

namespace {

SpikeSolution finalize_solution(const SpikeInstance& instance, const OptimizerConfig& config,
                                double m, bool any_feasible) {
  const SpikeEvaluation ev = evaluate_m(instance, m);
  SpikeSolution sol;
  sol.m_star = m;
  sol.objective = ev.objective;
  sol.profit_sum = ev.profit_sum;
  sol.loss_sum = ev.loss_sum;
  sol.cleared = ev.cleared;
  sol.feasible = any_feasible && (-ev.loss_sum <= config.epsilon * ev.profit_sum);
  const std::size_t n = instance.horizon();
  sol.profit.assign(n, 0.0);
  sol.loss.assign(n, 0.0);
  sol.bid_schedule.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    sol.bid_schedule[t] = instance.side == Side::Demand ? instance.avg_dlmp[t] - m
                                                        : instance.avg_dlmp[t] + m;
    if (!sol.cleared[t]) continue;
    sol.cleared_count += 1;
    const double eta = raw_payoff(instance, t);
    if (eta >= 0.0) {
      sol.profit[t] = eta;
    } else {
      sol.loss[t] = eta;
    }
  }
  return sol;
}

struct Candidate {
  double m = 0.0;
  double objective = 0.0;
  bool feasible = false;
};

}  // namespace

SpikeSolution solve_breakpoints(const SpikeInstance& instance, const OptimizerConfig& config) {
  instance.validate();
  config.validate();

  // (breakpoint, payoff) pairs sorted by breakpoint descending: sweeping m
  // downward only ever adds intervals to the cleared set.
  const std::size_t n = instance.horizon();
  std::vector<std::pair<double, double>> items(n);
  {
    const std::vector<double> beta = clearing_breakpoints(instance);
    for (std::size_t t = 0; t < n; ++t) items[t] = {beta[t], raw_payoff(instance, t)};
  }
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<double> candidates;
  candidates.reserve(n + 2);
  candidates.push_back(config.m_max);
  for (const auto& [beta, eta] : items) {
    if (beta >= config.m_min && beta <= config.m_max) candidates.push_back(beta);
  }
  candidates.push_back(config.m_min);
  std::sort(candidates.begin(), candidates.end(), std::greater<double>());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  double profit = 0.0;
  double loss = 0.0;  // <= 0
  std::size_t next = 0;
  bool have_best = false;
  Candidate best;
  for (const double m : candidates) {
    while (next < items.size() && items[next].first >= m) {
      const double eta = items[next].second;
      if (eta >= 0.0) {
        profit += eta;
      } else {
        loss += eta;
      }
      ++next;
    }
    const bool feasible = -loss <= config.epsilon * profit;
    const double objective = profit + loss;
    if (feasible && (!have_best || objective > best.objective)) {
      best = Candidate{m, objective, true};
      have_best = true;
    }
  }

  if (!have_best) {
    SpikeSolution sol = finalize_solution(instance, config, config.m_max, false);
    sol.feasible = false;
    return sol;
  }
  return finalize_solution(instance, config, best.m, true);
}

SpikeSolution solve_grid_oracle(const SpikeInstance& instance, const OptimizerConfig& config,
                                double step) {
  instance.validate();
  config.validate();
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ConfigError("solve_grid_oracle: step must be > 0");
  }
  const double span = config.m_max - config.m_min;
  const double count = span / step;
  if (count > 2e8) throw ConfigError("solve_grid_oracle: step too small for the m range");

  std::vector<double> candidates;
  candidates.reserve(static_cast<std::size_t>(count) + instance.horizon() + 2);
  for (std::size_t i = 0;; ++i) {
    const double m = config.m_min + static_cast<double>(i) * step;
    if (m >= config.m_max) break;
    candidates.push_back(m);
  }
  candidates.push_back(config.m_max);
  for (const double beta : clearing_breakpoints(instance)) {
    if (beta >= config.m_min && beta <= config.m_max) candidates.push_back(beta);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  bool have_best = false;
  Candidate best;
  for (const double m : candidates) {
    const SpikeEvaluation ev = evaluate_m(instance, m);
    const bool feasible = -ev.loss_sum <= config.epsilon * ev.profit_sum;
    if (!feasible) continue;
    if (!have_best || ev.objective > best.objective ||
        (ev.objective == best.objective && m > best.m)) {
      best = Candidate{m, ev.objective, true};
      have_best = true;
    }
  }
  if (!have_best) {
    SpikeSolution sol = finalize_solution(instance, config, config.m_max, false);
    sol.feasible = false;
    return sol;
  }
  return finalize_solution(instance, config, best.m, true);
}

MilpWitness encode_milp_witness(const SpikeInstance& instance, const SpikeSolution& solution) {
  instance.validate();
  const std::size_t n = instance.horizon();
  if (solution.cleared.size() != n) {
    throw InvariantError("encode_milp_witness: solution horizon mismatch");
  }
  const std::vector<double> beta = clearing_breakpoints(instance);
  MilpWitness w;
  w.b1.resize(n);
  w.b2.resize(n);
  w.z.resize(n);
  w.m = solution.m_star;
  w.objective = solution.objective;
  for (std::size_t t = 0; t < n; ++t) {
    const bool should_clear = solution.m_star <= beta[t];
    if (static_cast<bool>(solution.cleared[t]) != should_clear) {
      throw InvariantError("encode_milp_witness: cleared mask inconsistent with m at interval " +
                           std::to_string(t));
    }
    w.b1[t] = solution.cleared[t];
    const double eta = solution.cleared[t] ? raw_payoff(instance, t) : 0.0;
    w.b2[t] = eta >= 0.0 ? 1 : 0;
    w.z[t] = w.b1[t] && w.b2[t] ? 1.0 : 0.0;
  }
  return w;
}

MilpCheck verify_milp_constraints(const SpikeInstance& instance, const MilpWitness& witness,
                                  const OptimizerConfig& config) {
  instance.validate();
  config.validate();
  const std::size_t n = instance.horizon();
  if (witness.b1.size() != n || witness.b2.size() != n || witness.z.size() != n) {
    throw DataError("verify_milp_constraints: witness length mismatch");
  }

  MilpCheck check;
  const auto fail = [&check](int constraint, long t, double lhs, double rhs) {
    check.ok = false;
    check.violations.push_back(MilpViolation{constraint, t, lhs, rhs});
  };

  const double M = config.big_m;
  const bool demand = instance.side == Side::Demand;
  double obj = 0.0;
  double eps_lhs = 0.0;  // sum (z_t - b1_t) * eta_t
  double eps_rhs = 0.0;  // sum z_t * eta_t
  for (std::size_t t = 0; t < n; ++t) {
    const long tl = static_cast<long>(t);
    const double b1 = witness.b1[t] ? 1.0 : 0.0;
    const double b2 = witness.b2[t] ? 1.0 : 0.0;
    const double z = witness.z[t];
    const double x = demand ? instance.avg_dlmp[t] - witness.m : instance.avg_dlmp[t] + witness.m;
    const double lam = instance.dlmp[t];
    const double eta_raw = raw_payoff(instance, t);
    const double eta = b1 * eta_raw;

    // (20): cleared intervals must satisfy the clearing price condition.
    if (demand) {
      if (x < lam - M * (1.0 - b1) - kTol) fail(20, tl, x, lam - M * (1.0 - b1));
    } else {
      if (x > lam + M * (1.0 - b1) + kTol) fail(20, tl, x, lam + M * (1.0 - b1));
    }
    // (21): uncleared intervals must be out of the money.
    if (demand) {
      if (x > lam + M * b1 + kTol) fail(21, tl, x, lam + M * b1);
    } else {
      if (x < lam - M * b1 - kTol) fail(21, tl, x, lam - M * b1);
    }
    // (22)/(23): b2 splits the net payoff into profit and loss.
    if (eta < -M * (1.0 - b2) - kTol) fail(22, tl, eta, -M * (1.0 - b2));
    if (eta > M * b2 + kTol) fail(23, tl, eta, M * b2);
    // (26)-(29): z equals b1*b2.
    if (z > b1 + kTol) fail(26, tl, z, b1);
    if (z > b2 + kTol) fail(27, tl, z, b2);
    if (z < b1 + b2 - 1.0 - kTol) fail(28, tl, z, b1 + b2 - 1.0);
    if (z < -kTol || z > 1.0 + kTol) fail(29, tl, z, z < 0.0 ? 0.0 : 1.0);

    obj += eta;
    eps_lhs += (z - b1) * eta_raw;
    eps_rhs += z * eta_raw;
  }
  // (24): loss budget.
  if (eps_lhs > config.epsilon * eps_rhs + kTol) fail(24, -1, eps_lhs, config.epsilon * eps_rhs);
  // (25): m bounds.
  if (witness.m < config.m_min - kTol || witness.m > config.m_max + kTol) {
    fail(25, -1, witness.m, witness.m < config.m_min ? config.m_min : config.m_max);
  }
  // (19): claimed objective must match the witness.
  if (std::abs(obj - witness.objective) > kTol) fail(19, -1, obj, witness.objective);

  return check;
}

std::string format_milp_lp(const SpikeInstance& instance, const OptimizerConfig& config) {
  instance.validate();
  config.validate();
  const std::size_t n = instance.horizon();
  const bool demand = instance.side == Side::Demand;
  char buf[160];
  std::string out;
  out += "\\ spike-capture MILP (";
  out += demand ? "demand" : "supply";
  out += " side), unit quantity\n";
  out += "Maximize\n obj:";
  for (std::size_t t = 0; t < n; ++t) {
    const double eta = raw_payoff(instance, t);
    std::snprintf(buf, sizeof(buf), " %+.6f b1_%zu", eta, t);
    out += buf;
  }
  out += "\nSubject To\n";
  const double M = config.big_m;
  for (std::size_t t = 0; t < n; ++t) {
    const double lam = instance.dlmp[t];
    const double avg = instance.avg_dlmp[t];
    // x_t = avg -/+ m substituted directly into the clearing constraints.
    if (demand) {
      std::snprintf(buf, sizeof(buf), " c20_%zu: -m - %.6f b1_%zu >= %.6f\n", t, M, t,
                    lam - avg - M);
      out += buf;
      std::snprintf(buf, sizeof(buf), " c21_%zu: -m - %.6f b1_%zu <= %.6f\n", t, M, t, lam - avg);
      out += buf;
    } else {
      std::snprintf(buf, sizeof(buf), " c20_%zu: m + %.6f b1_%zu <= %.6f\n", t, M, t,
                    lam - avg + M);
      out += buf;
      std::snprintf(buf, sizeof(buf), " c21_%zu: m + %.6f b1_%zu >= %.6f\n", t, M, t, lam - avg);
      out += buf;
    }
    const double eta = raw_payoff(instance, t);
    std::snprintf(buf, sizeof(buf), " c22_%zu: %+.6f b1_%zu %+.6f b2_%zu >= %.6f\n", t, eta, t,
                  -M, t, -M);
    out += buf;
    std::snprintf(buf, sizeof(buf), " c23_%zu: %+.6f b1_%zu %+.6f b2_%zu <= 0\n", t, eta, t, -M,
                  t);
    out += buf;
    std::snprintf(buf, sizeof(buf), " c26_%zu: z_%zu - b1_%zu <= 0\n", t, t, t);
    out += buf;
    std::snprintf(buf, sizeof(buf), " c27_%zu: z_%zu - b2_%zu <= 0\n", t, t, t);
    out += buf;
    std::snprintf(buf, sizeof(buf), " c28_%zu: z_%zu - b1_%zu - b2_%zu >= -1\n", t, t, t, t);
    out += buf;
  }
  out += " c24:";
  for (std::size_t t = 0; t < n; ++t) {
    const double eta = raw_payoff(instance, t);
    std::snprintf(buf, sizeof(buf), " %+.6f z_%zu %+.6f b1_%zu", (1.0 - config.epsilon) * eta, t,
                  -eta, t);
    out += buf;
  }
  out += " <= 0\nBounds\n";
  std::snprintf(buf, sizeof(buf), " %.6f <= m <= %.6f\n", config.m_min, config.m_max);
  out += buf;
  for (std::size_t t = 0; t < n; ++t) {
    std::snprintf(buf, sizeof(buf), " 0 <= z_%zu <= 1\n", t);
    out += buf;
  }
  out += "Binary\n";
  for (std::size_t t = 0; t < n; ++t) {
    std::snprintf(buf, sizeof(buf), " b1_%zu b2_%zu", t, t);
    out += buf;
    if (t % 8 == 7) out += '\n';
  }
  out += "\nEnd\n";
  return out;
}

void write_solutions_csv(const std::string& path, const std::vector<NodeSolutionRow>& rows) {
  std::string out = "node_id,side,feasible,m_star,objective,n_cleared\n";
  for (const auto& r : rows) {
    out += r.node_id;
    out += ',';
    out += side_tag(r.side);
    out += ',';
    out += r.solution.feasible ? '1' : '0';
    out += ',';
    out += format_money(r.solution.m_star);
    out += ',';
    out += format_money(r.solution.objective);
    out += ',';
    out += std::to_string(r.solution.cleared_count);
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace cbstrat
