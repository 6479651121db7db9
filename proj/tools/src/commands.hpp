#pragma once

#include <filesystem>
#include <string>

#include "config.hpp"

namespace s2sflow::cli {

/// Everything a command needs: the resolved configuration and the run
/// directory that receives all outputs.
struct Invocation {
  std::string command;
  RunConfig config;
  fs::path out;
  /// Canonical config text captured before run-directory defaults are
  /// filled in, so manifests do not depend on where the run lives.
  std::string config_text;
};

/// Records the canonical config text, then fills empty input paths with
/// their run-directory defaults.
void resolve_inputs(Invocation& inv);

void run_synth(const Invocation& inv);
void run_reconstruct_inflow(const Invocation& inv);
void run_train(const Invocation& inv);
void run_forecast(const Invocation& inv);
void run_verify(const Invocation& inv);
void run_cost_eval(const Invocation& inv);
void run_report(const Invocation& inv);

}  // namespace s2sflow::cli
