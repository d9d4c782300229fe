#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbstrat/market_data.hpp"

namespace cbstrat {

// One node's spike-capture problem over a historical horizon. For a demand
// instance the bid at interval t is x_t = avg_dlmp[t] - m and clears when
// dlmp[t] <= x_t, paying rtlmp[t] - dlmp[t] per MWh; a supply instance mirrors
// both (x_t = avg_dlmp[t] + m, clears when dlmp[t] >= x_t, pays
// dlmp[t] - rtlmp[t]). All payoffs are at unit quantity.
struct SpikeInstance {
  Side side = Side::Demand;
  std::vector<double> dlmp;      // lambda_t
  std::vector<double> rtlmp;     // pi_t
  std::vector<double> avg_dlmp;  // lambda*_t (hour-of-day mean)

  std::size_t horizon() const { return dlmp.size(); }
  void validate() const;  // throws DataError
};

struct OptimizerConfig {
  double epsilon = 0.01;  // loss budget: total loss <= epsilon * total profit
  double m_min = 30.0;
  double m_max = 200.0;
  double big_m = 3000.0;  // must dominate |prices| + m_max for the witness checks
  double theta = 100.0;   // node-labeling objective threshold
  void validate() const;  // throws ConfigError
};

// Clearing threshold of interval t in m: cleared iff m <= breakpoint(t).
std::vector<double> clearing_breakpoints(const SpikeInstance& instance);

struct SpikeEvaluation {
  double objective = 0.0;
  double profit_sum = 0.0;  // >= 0
  double loss_sum = 0.0;    // <= 0
  std::vector<std::uint8_t> cleared;
};

SpikeEvaluation evaluate_m(const SpikeInstance& instance, double m);

struct SpikeSolution {
  bool feasible = false;
  double m_star = 0.0;
  double objective = 0.0;
  double profit_sum = 0.0;
  double loss_sum = 0.0;
  std::vector<std::uint8_t> cleared;
  std::vector<double> profit;        // P_t >= 0
  std::vector<double> loss;          // L_t <= 0
  std::vector<double> bid_schedule;  // x_t
  long cleared_count = 0;
};

// Exact solver. The objective is piecewise constant in m with breakpoints at
// the clearing thresholds, so it enumerates the in-bound thresholds plus both
// bounds, evaluates each, and keeps the feasible candidate with the largest
// objective (ties: largest m, i.e. fewest clearings). When no candidate meets
// the loss budget the result carries feasible=false and the m_max evaluation.
SpikeSolution solve_breakpoints(const SpikeInstance& instance, const OptimizerConfig& config);

// Independent brute-force oracle: dense scan at `step` over [m_min, m_max]
// plus every in-bound breakpoint, same selection rule.
SpikeSolution solve_grid_oracle(const SpikeInstance& instance, const OptimizerConfig& config,
                                double step);

// Witness of the linearized (big-M) program: b1 = clearing indicators,
// b2 = nonnegative-profit indicators, z = b1*b2.
struct MilpWitness {
  std::vector<std::uint8_t> b1;
  std::vector<std::uint8_t> b2;
  std::vector<double> z;
  double m = 0.0;
  double objective = 0.0;  // claimed objective value
};

MilpWitness encode_milp_witness(const SpikeInstance& instance, const SpikeSolution& solution);

struct MilpViolation {
  int constraint = 0;  // 19 objective mismatch, 20..29 per the linearized form
  long t = -1;         // interval index, -1 for aggregate constraints
  double lhs = 0.0;
  double rhs = 0.0;
};

struct MilpCheck {
  bool ok = true;
  std::vector<MilpViolation> violations;
};

// Checks the witness against every constraint of the linearized program with
// tolerance 1e-9 and recomputes the objective from b1.
MilpCheck verify_milp_constraints(const SpikeInstance& instance, const MilpWitness& witness,
                                  const OptimizerConfig& config);

// LP-format dump of the full mixed-integer program for external solvers.
std::string format_milp_lp(const SpikeInstance& instance, const OptimizerConfig& config);

struct NodeSolutionRow {
  std::string node_id;
  Side side = Side::Demand;
  SpikeSolution solution;
};

void write_solutions_csv(const std::string& path, const std::vector<NodeSolutionRow>& rows);

}  // namespace cbstrat
