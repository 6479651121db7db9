// s2sflow command-line driver.
//
// Exit codes: 0 success, 2 invalid input (files, config, arguments),
// 3 numerical failure, 1 anything else.

#include <cstdio>
#include <functional>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"
#include "config.hpp"
#include "s2sflow/errors.hpp"

namespace {

using namespace s2sflow;
using namespace s2sflow::cli;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out = "run";
  InputPaths overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Configuration file ([section] key = value)");
  cmd->add_option("--seed", f.seed, "Master random seed (overrides run.seed)");
  cmd->add_option("--threads", f.threads, "Worker thread cap (overrides run.threads)")->check(CLI::Range(1, 256));
  cmd->add_option("--out", f.out, "Run directory receiving every output")->capture_default_str();
}

void add_input(CLI::App* cmd, const std::string& flag, std::filesystem::path& target, const std::string& help) {
  cmd->add_option(flag, target, help);
}

Invocation make_invocation(const std::string& command, const CommonFlags& f) {
  Invocation inv;
  inv.command = command;
  inv.out = std::filesystem::absolute(f.out).lexically_normal();
  if (!f.config.empty()) inv.config = load_config(f.config);
  if (f.seed) inv.config.seed = *f.seed;
  if (f.threads) inv.config.threads = *f.threads;
  auto take = [](std::filesystem::path& dst, const std::filesystem::path& src) {
    if (!src.empty()) dst = std::filesystem::absolute(src).lexically_normal();
  };
  const auto& o = f.overrides;
  auto& in = inv.config.inputs;
  take(in.ensemble, o.ensemble);
  take(in.inflow, o.inflow);
  take(in.reanalysis, o.reanalysis);
  take(in.nao, o.nao);
  take(in.telemetry, o.telemetry);
  take(in.storage, o.storage);
  take(in.efficiency, o.efficiency);
  take(in.head, o.head);
  take(in.compensation, o.compensation);
  take(in.models, o.models);
  inv.config.validate();
  resolve_inputs(inv);
  return inv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sub-seasonal reservoir inflow forecasting: ingest, calibrate, verify and value forecasts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", S2SFLOW_VERSION);

  CommonFlags flags;
  std::function<void(const Invocation&)> action;
  std::string command;

  auto sub = [&](const std::string& name, const std::string& help, void (*fn)(const Invocation&)) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, flags);
    cmd->callback([&, name, fn] {
      command = name;
      action = fn;
    });
    return cmd;
  };

  auto& o = flags.overrides;
  sub("synth", "Generate a synthetic scenario (ensemble, reanalysis, inflow, NAO; optionally telemetry)", run_synth);

  auto* rec = sub("reconstruct-inflow", "Clean plant telemetry and reconstruct normalized net inflow",
                  run_reconstruct_inflow);
  add_input(rec, "--telemetry", o.telemetry, "Telemetry CSV (timestamp,water_level_m,power_w)");
  add_input(rec, "--storage", o.storage, "Storage curve CSV (level_m,volume_m3)");
  add_input(rec, "--efficiency", o.efficiency, "Efficiency grid CSV");
  add_input(rec, "--head", o.head, "Net head grid CSV");
  add_input(rec, "--compensation", o.compensation, "Compensation flow CSV");
  add_input(rec, "--reanalysis", o.reanalysis, "Reanalysis precipitation CSV for the lag check");

  auto* train = sub("train", "Fit the cross-validated benchmark regressions and EMOS models", run_train);
  add_input(train, "--ensemble", o.ensemble, "Ensemble precipitation CSV");
  add_input(train, "--inflow", o.inflow, "Daily normalized inflow CSV");

  auto* fc = sub("forecast", "Write out-of-sample calibrated and benchmark forecasts", run_forecast);
  add_input(fc, "--models", o.models, "Trained models JSON");
  add_input(fc, "--ensemble", o.ensemble, "Ensemble precipitation CSV");
  add_input(fc, "--inflow", o.inflow, "Daily normalized inflow CSV (optional; fills observations)");

  auto* ver = sub("verify", "Score forecasts: skill by horizon and stratum, reliability, PIT", run_verify);
  add_input(ver, "--models", o.models, "Trained models JSON");
  add_input(ver, "--ensemble", o.ensemble, "Ensemble precipitation CSV");
  add_input(ver, "--inflow", o.inflow, "Daily normalized inflow CSV");
  add_input(ver, "--nao", o.nao, "Monthly NAO index CSV (optional)");

  auto* cost = sub("cost-eval", "Optimal schedule adjustments and water value across price differentials",
                   run_cost_eval);
  add_input(cost, "--models", o.models, "Trained models JSON");
  add_input(cost, "--ensemble", o.ensemble, "Ensemble precipitation CSV");
  add_input(cost, "--inflow", o.inflow, "Daily normalized inflow CSV");

  sub("report", "Summarize skill and value outputs of the run directory as Markdown", run_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    action(make_invocation(command, flags));
    return 0;
  } catch (const InputError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return 1;
  }
}
