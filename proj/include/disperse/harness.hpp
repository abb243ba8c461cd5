#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "disperse/geometry.hpp"
#include "disperse/metrics.hpp"
#include "disperse/optimizers.hpp"
#include "disperse/regularizers.hpp"

namespace disperse {

enum class Experiment { kTammes, kSynthetic, kAblationOpt, kSlicedConvergence };
enum class InitMode { kUniform, kClumped, kBoth };

Experiment ParseExperiment(const std::string& s);
std::string ExperimentName(Experiment e);

struct ExperimentConfig {
  Experiment experiment = Experiment::kTammes;
  long n = 0;          // 0 = experiment default
  long dim = 0;        // 0 = experiment default
  InitMode init = InitMode::kUniform;
  double kappa = 100.0;
  std::string regularizer = "mm:geodesic";
  std::string optimizer = "radam";
  double lr = 0.0;     // 0 = experiment default
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::string retraction = "exp";
  long steps = 0;      // 0 = experiment default
  long eval_every = 100;
  long minibatch = -1;  // -1 = experiment default, 0 = full batch
  std::vector<long> seeds = {0, 1, 2};
  std::string output_path;
  bool deterministic = false;
  int threads = 1;

  // Fills zeroed fields with the experiment defaults and checks every field,
  // throwing std::invalid_argument naming the offending one.
  void Resolve();

  nlohmann::json ToJson() const;
  static ExperimentConfig FromJson(const nlohmann::json& j);
};

struct TraceRow {
  long seed = 0;
  long step = 0;
  double loss = 0.0;
  double dmin_rad = 0.0;
  double dmin_deg = 0.0;
  double svar = 0.0;
  double wall_ms = 0.0;
};

// Writes `seed,step,loss,dmin_rad,dmin_deg,svar,wall_ms` with LF endings and
// rows ordered by (seed, step). Throws on unwritable paths.
void EmitCsv(const std::vector<TraceRow>& rows, const std::string& path);

std::vector<TraceRow> ParseCsv(const std::string& path);

struct RunResult {
  std::vector<TraceRow> trace;
  nlohmann::json summary;
};

// Single-seed optimization loop shared by the experiments. `method` overrides
// the configured optimizer (used by the ablation).
struct SeedRunOutput {
  std::vector<TraceRow> trace;
  Configuration final_config;
};
SeedRunOutput RunOneSeed(const ExperimentConfig& cfg, long seed, OptMethod method);

// The n=24 snub-cube configuration, the known Tammes optimum in m=3.
Configuration SnubCubeConfiguration();

RunResult RunTammes(const ExperimentConfig& cfg);
RunResult RunSynthetic(const ExperimentConfig& cfg);
RunResult RunAblationOpt(const ExperimentConfig& cfg);
RunResult RunSlicedConvergence(const ExperimentConfig& cfg);

// Dispatches on cfg.experiment, writes the CSV trace(s), the JSON config
// sidecar (`<out>.config.json`) and the summary (`<out>.summary.json`).
RunResult RunExperiment(const ExperimentConfig& cfg);

}  // namespace disperse
