// cbstrat: two-settlement market toolkit. Subcommands run one pipeline stage
// each; `--config` points at the flat key-value file, `--seed`/`--out`
// override the corresponding config entries.
//
// Exit codes: 0 success, 2 usage error, 3 config error, 4 data error,
// 5 internal invariant failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "cbstrat/config.hpp"
#include "cbstrat/errors.hpp"
#include "cbstrat/manifest.hpp"
#include "cbstrat/pipeline.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitData = 4;
constexpr int kExitInternal = 5;

struct CliOptions {
  std::string stage;
  std::string config_path;
  std::string out_override;
  long long seed_override = -1;
  bool has_seed = false;
};

int run(const CliOptions& opts) {
  cbstrat::RunConfig config;
  if (!opts.config_path.empty()) {
    config = cbstrat::load_config(opts.config_path);
  } else if (opts.stage != "report") {
    throw cbstrat::ConfigError("--config is required for the " + opts.stage + " stage");
  }
  if (opts.has_seed) config.seed = static_cast<std::uint64_t>(opts.seed_override);
  if (!opts.out_override.empty()) config.paths.out = opts.out_override;

  const cbstrat::StageOutcome outcome = cbstrat::run_stage(opts.stage, config);
  for (const auto& path : outcome.outputs) std::printf("wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cbstrat: convergence-bidding strategy toolkit"};
  app.footer(cbstrat::config_schema_help());
  app.set_version_flag("--version", std::string(cbstrat::kToolVersion));
  app.require_subcommand(1);

  CliOptions opts;
  const struct {
    const char* name;
    const char* help;
    bool config_required;
  } stages[] = {
      {"synth", "generate a synthetic market dataset", true},
      {"ingest", "validate input CSVs and summarize the market", true},
      {"features", "compute per-bid strategy features", true},
      {"cluster", "cluster features and label strategies", true},
      {"metrics", "participant shares, CSR/LPR performance", true},
      {"label", "spike-capture node labeling over the trailing window", true},
      {"backtest", "rolling-horizon composite-strategy backtest", true},
      {"report", "render figures from stage outputs", false},
  };
  for (const auto& s : stages) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    auto* cfg = sub->add_option("--config", opts.config_path, "config file (key = value lines)");
    if (s.config_required) cfg->required();
    sub->add_option("--seed", opts.seed_override, "override config seed")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opts.out_override, "override output directory");
    sub->callback([&opts, sub]() {
      opts.stage = sub->get_name();
      opts.has_seed = sub->count("--seed") > 0;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    return run(opts);
  } catch (const cbstrat::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const cbstrat::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const cbstrat::InvariantError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
