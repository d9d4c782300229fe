#pragma once

#include <string>
#include <vector>

namespace cbstrat {

// Renders the figure set from whatever stage outputs exist in in_dir:
// monthly cleared-energy and net-profit bars (monthly_summary.csv), per-hour
// price-distance scatter per participant (features.csv + bids.csv), hourly
// profit scatter per node (trades.csv) and per-participant strategy-share
// stacked bars (shares.csv). Every figure gets a backing CSV with the same
// numbers; an empty shares table yields only the header CSV. Returns the
// paths written.
std::vector<std::string> emit_reports(const std::string& in_dir, const std::string& out_dir);

}  // namespace cbstrat
