#pragma once

#include <string>
#include <vector>

#include "cbstrat/config.hpp"

namespace cbstrat {

struct StageOutcome {
  std::string stage;
  std::vector<std::string> outputs;  // files written, manifest last
};

// Stage names: synth, ingest, features, cluster, metrics, label, backtest,
// report. Each writes its outputs plus manifest_<stage>.json into
// config.paths.out. Unknown stage names are ConfigErrors.
StageOutcome run_stage(const std::string& stage, const RunConfig& config);

StageOutcome stage_synth(const RunConfig& config);
StageOutcome stage_ingest(const RunConfig& config);
StageOutcome stage_features(const RunConfig& config);
StageOutcome stage_cluster(const RunConfig& config);
StageOutcome stage_metrics(const RunConfig& config);
StageOutcome stage_label(const RunConfig& config);
StageOutcome stage_backtest(const RunConfig& config);
StageOutcome stage_report(const RunConfig& config);

}  // namespace cbstrat
