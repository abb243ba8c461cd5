#include "disperse/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace disperse {

namespace {

constexpr double kDegPerRad = 180.0 / kPi;

struct ExperimentDefaults {
  long n;
  long dim;
  double lr;
  long steps;
  long minibatch;
};

ExperimentDefaults DefaultsFor(Experiment e) {
  switch (e) {
    case Experiment::kTammes:
      return {24, 3, 0.005, 10000, 0};
    case Experiment::kSynthetic:
      // Desk-scale default; the paper-scale n=20000 is available via --n.
      return {2000, 64, 0.001, 5000, 512};
    case Experiment::kAblationOpt:
      return {24, 3, 0.005, 10000, 0};
    case Experiment::kSlicedConvergence:
      return {10000, 128, 0.0, 10000, 0};
  }
  return {0, 0, 0.0, 0, 0};
}

InitMode ParseInit(const std::string& s) {
  if (s == "uniform") return InitMode::kUniform;
  if (s == "clumped") return InitMode::kClumped;
  if (s == "both") return InitMode::kBoth;
  throw std::invalid_argument("config field 'init': expected uniform|clumped|both, got '" + s + "'");
}

std::string InitName(InitMode m) {
  switch (m) {
    case InitMode::kUniform:
      return "uniform";
    case InitMode::kClumped:
      return "clumped";
    case InitMode::kBoth:
      return "both";
  }
  return "?";
}

Configuration InitialConfiguration(const ExperimentConfig& cfg, InitMode init, RngStream& stream) {
  if (init == InitMode::kClumped) {
    Vec mu = Vec::Zero(cfg.dim);
    mu(0) = 1.0;  // fixed clump mean direction e1, recorded in the sidecar
    return SamplePowerSpherical(cfg.n, cfg.dim, mu, cfg.kappa, stream);
  }
  return SampleUniform(cfg.n, cfg.dim, stream);
}

double NowMs(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void WriteTextFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void WriteSidecar(const ExperimentConfig& cfg, const std::string& out_path) {
  nlohmann::json j = cfg.ToJson();
  j["clump_mean_direction"] = "e1";
  j["trace_path"] = out_path;
  WriteTextFile(out_path + ".config.json", j.dump(2) + "\n");
}

}  // namespace

Experiment ParseExperiment(const std::string& s) {
  if (s == "tammes") return Experiment::kTammes;
  if (s == "synthetic") return Experiment::kSynthetic;
  if (s == "ablation-opt") return Experiment::kAblationOpt;
  if (s == "sliced-convergence") return Experiment::kSlicedConvergence;
  throw std::invalid_argument("config field 'experiment': unknown experiment '" + s + "'");
}

std::string ExperimentName(Experiment e) {
  switch (e) {
    case Experiment::kTammes:
      return "tammes";
    case Experiment::kSynthetic:
      return "synthetic";
    case Experiment::kAblationOpt:
      return "ablation-opt";
    case Experiment::kSlicedConvergence:
      return "sliced-convergence";
  }
  return "?";
}

void ExperimentConfig::Resolve() {
  const ExperimentDefaults d = DefaultsFor(experiment);
  if (n == 0) n = d.n;
  if (dim == 0) dim = d.dim;
  if (lr == 0.0) lr = d.lr;
  if (steps == 0) steps = d.steps;
  if (minibatch < 0) minibatch = d.minibatch;

  if (n < 1) throw std::invalid_argument("config field 'n': must be >= 1");
  if (dim < 2) throw std::invalid_argument("config field 'dim': must be >= 2");
  if (steps < 1) throw std::invalid_argument("config field 'steps': must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("config field 'eval_every': must be >= 1");
  if (minibatch > n) throw std::invalid_argument("config field 'minibatch': exceeds n");
  if (seeds.empty()) throw std::invalid_argument("config field 'seeds': must not be empty");
  if (kappa < 0.0) throw std::invalid_argument("config field 'kappa': must be >= 0");
  if (init == InitMode::kClumped && kappa <= 0.0) {
    throw std::invalid_argument("config field 'kappa': clumped init requires kappa > 0");
  }
  if (init == InitMode::kBoth && experiment != Experiment::kSynthetic) {
    throw std::invalid_argument("config field 'init': 'both' is only valid for synthetic");
  }
  if (lr <= 0.0 && experiment != Experiment::kSlicedConvergence) {
    throw std::invalid_argument("config field 'lr': must be > 0");
  }
  if (beta1 <= 0.0 || beta1 >= 1.0) throw std::invalid_argument("config field 'beta1': must be in (0,1)");
  if (beta2 <= 0.0 || beta2 >= 1.0) throw std::invalid_argument("config field 'beta2': must be in (0,1)");
  if (eps <= 0.0) throw std::invalid_argument("config field 'eps': must be > 0");
  if (retraction != "exp" && retraction != "proj") {
    throw std::invalid_argument("config field 'retraction': expected exp|proj");
  }
  if (threads < 1) throw std::invalid_argument("config field 'threads': must be >= 1");
  if (output_path.empty()) throw std::invalid_argument("config field 'out': output path required");
  // Fail fast on malformed specs before any compute.
  (void)RegularizerSpec::Parse(regularizer);
  (void)ParseOptMethod(optimizer);
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json j;
  j["experiment"] = ExperimentName(experiment);
  j["n"] = n;
  j["dim"] = dim;
  j["init"] = InitName(init);
  j["kappa"] = kappa;
  j["regularizer"] = regularizer;
  j["optimizer"] = optimizer;
  j["lr"] = lr;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["eps"] = eps;
  j["retraction"] = retraction;
  j["steps"] = steps;
  j["eval_every"] = eval_every;
  j["minibatch"] = minibatch;
  j["seeds"] = seeds;
  j["out"] = output_path;
  j["deterministic"] = deterministic;
  j["threads"] = threads;
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j) {
  ExperimentConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  if (j.contains("experiment")) cfg.experiment = ParseExperiment(j.at("experiment").get<std::string>());
  get("n", cfg.n);
  get("dim", cfg.dim);
  if (j.contains("init")) cfg.init = ParseInit(j.at("init").get<std::string>());
  get("kappa", cfg.kappa);
  get("regularizer", cfg.regularizer);
  get("optimizer", cfg.optimizer);
  get("lr", cfg.lr);
  get("beta1", cfg.beta1);
  get("beta2", cfg.beta2);
  get("eps", cfg.eps);
  get("retraction", cfg.retraction);
  get("steps", cfg.steps);
  get("eval_every", cfg.eval_every);
  get("minibatch", cfg.minibatch);
  get("seeds", cfg.seeds);
  get("out", cfg.output_path);
  get("deterministic", cfg.deterministic);
  get("threads", cfg.threads);
  return cfg;
}

void EmitCsv(const std::vector<TraceRow>& rows, const std::string& path) {
  std::string out = "seed,step,loss,dmin_rad,dmin_deg,svar,wall_ms\n";
  char buf[256];
  for (const TraceRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.3f\n", r.seed, r.step, r.loss,
                  r.dmin_rad, r.dmin_deg, r.svar, r.wall_ms);
    out += buf;
  }
  WriteTextFile(path, out);
}

std::vector<TraceRow> ParseCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRow r;
    std::istringstream ss(line);
    std::string field;
    auto next = [&]() {
      if (!std::getline(ss, field, ',')) throw std::runtime_error("bad csv row: " + line);
      return field;
    };
    r.seed = std::stol(next());
    r.step = std::stol(next());
    r.loss = std::stod(next());
    r.dmin_rad = std::stod(next());
    r.dmin_deg = std::stod(next());
    r.svar = std::stod(next());
    r.wall_ms = std::stod(next());
    rows.push_back(r);
  }
  return rows;
}

SeedRunOutput RunOneSeed(const ExperimentConfig& cfg, long seed, OptMethod method) {
  const RegularizerSpec spec = RegularizerSpec::Parse(cfg.regularizer);
  const auto start = std::chrono::steady_clock::now();

  const RngStream root(static_cast<std::uint64_t>(seed));
  RngStream init_stream = SplitStream(root, StreamTag::kInit);
  Configuration X = InitialConfiguration(cfg, cfg.init, init_stream);

  OptimizerOptions opts;
  opts.method = method;
  opts.lr = cfg.lr;
  opts.beta1 = cfg.beta1;
  opts.beta2 = cfg.beta2;
  opts.eps = cfg.eps;
  opts.retraction = cfg.retraction == "proj" ? Retraction::kProj : Retraction::kExp;
  OptimizerState opt(opts);

  const bool use_minibatch = cfg.minibatch > 0 && cfg.minibatch < cfg.n &&
                             (spec.kind == RegKind::kMm || spec.kind == RegKind::kKoleo ||
                              spec.kind == RegKind::kMhe || spec.kind == RegKind::kWi ||
                              spec.kind == RegKind::kLloyd);

  SeedRunOutput out{{}, X};
  auto record = [&](long step) {
    RngStream eval_stream = SplitStream(root, StreamTag::kEval, static_cast<std::uint64_t>(step));
    TraceRow r;
    r.seed = seed;
    r.step = step;
    r.loss = EvalLoss(X, spec, eval_stream);
    r.dmin_rad = cfg.n >= 2 ? MinGeodesicDistance(X) : 0.0;
    r.dmin_deg = r.dmin_rad * kDegPerRad;
    r.svar = SphericalVariance(X);
    r.wall_ms = cfg.deterministic ? 0.0 : NowMs(start);
    out.trace.push_back(r);
  };

  record(0);
  for (long step = 1; step <= cfg.steps; ++step) {
    std::vector<Index> batch;
    if (use_minibatch) {
      RngStream mb = SplitStream(root, StreamTag::kMinibatch, static_cast<std::uint64_t>(step));
      batch = SampleIndices(cfg.n, cfg.minibatch, mb);
    }
    RngStream draw = spec.kind == RegKind::kLloyd
                         ? SplitStream(root, StreamTag::kSamples, static_cast<std::uint64_t>(step))
                         : SplitStream(root, StreamTag::kCircles, static_cast<std::uint64_t>(step));
    Mat euclid;
    const GradientBatch grads = EvalGradient(X, spec, batch, draw, &euclid);
    X = opt.Step(X, grads, euclid);
    if (step % cfg.eval_every == 0 || step == cfg.steps) record(step);
  }
  out.final_config = X;
  return out;
}

Configuration SnubCubeConfiguration() {
  // Tribonacci constant, the real root of t^3 = t^2 + t + 1.
  double t = 1.8;
  for (int i = 0; i < 64; ++i) {
    const double f = t * t * t - t * t - t - 1.0;
    const double fp = 3.0 * t * t - 2.0 * t - 1.0;
    t -= f / fp;
  }
  const double base[3] = {1.0, 1.0 / t, t};
  Mat pts(3, 24);
  Index col = 0;
  for (int sa = -1; sa <= 1; sa += 2) {
    for (int sb = -1; sb <= 1; sb += 2) {
      for (int sc = -1; sc <= 1; sc += 2) {
        const double v[3] = {sa * base[0], sb * base[1], sc * base[2]};
        const int minus_count = (sa < 0) + (sb < 0) + (sc < 0);
        // Even permutations carry an even number of minus signs, odd
        // permutations an odd number (one chirality of the snub cube).
        if (minus_count % 2 == 0) {
          pts.col(col++) = Eigen::Vector3d(v[0], v[1], v[2]).normalized();
          pts.col(col++) = Eigen::Vector3d(v[1], v[2], v[0]).normalized();
          pts.col(col++) = Eigen::Vector3d(v[2], v[0], v[1]).normalized();
        } else {
          pts.col(col++) = Eigen::Vector3d(v[1], v[0], v[2]).normalized();
          pts.col(col++) = Eigen::Vector3d(v[0], v[2], v[1]).normalized();
          pts.col(col++) = Eigen::Vector3d(v[2], v[1], v[0]).normalized();
        }
      }
    }
  }
  return Configuration(std::move(pts));
}

namespace {

std::vector<SeedRunOutput> RunAllSeeds(const ExperimentConfig& cfg, OptMethod method) {
  std::vector<std::optional<SeedRunOutput>> slots(cfg.seeds.size());
  if (cfg.threads <= 1 || cfg.seeds.size() == 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) slots[i] = RunOneSeed(cfg, cfg.seeds[i], method);
  } else {
    std::vector<std::thread> workers;
    std::size_t next = 0;
    std::mutex mu;
    for (int w = 0; w < std::min<int>(cfg.threads, static_cast<int>(cfg.seeds.size())); ++w) {
      workers.emplace_back([&]() {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= cfg.seeds.size()) return;
            i = next++;
          }
          slots[i] = RunOneSeed(cfg, cfg.seeds[i], method);
        }
      });
    }
    for (auto& th : workers) th.join();
  }
  std::vector<SeedRunOutput> outs;
  outs.reserve(slots.size());
  for (auto& s : slots) outs.push_back(std::move(*s));
  return outs;
}

std::vector<TraceRow> Flatten(const std::vector<SeedRunOutput>& outs) {
  std::vector<TraceRow> rows;
  for (const auto& o : outs) rows.insert(rows.end(), o.trace.begin(), o.trace.end());
  return rows;
}

nlohmann::json PerSeedSummary(const ExperimentConfig& cfg, const std::vector<SeedRunOutput>& outs,
                              bool per_point_angles) {
  nlohmann::json seeds = nlohmann::json::array();
  for (std::size_t i = 0; i < outs.size(); ++i) {
    nlohmann::json s;
    s["seed"] = cfg.seeds[i];
    const Configuration& X = outs[i].final_config;
    s["final_svar"] = SphericalVariance(X);
    if (X.size() >= 2) {
      const double dmin = MinGeodesicDistance(X);
      s["final_dmin_rad"] = dmin;
      s["final_dmin_deg"] = dmin * kDegPerRad;
      if (per_point_angles) {
        const Vec angles = PerPointMinAngles(X);
        std::vector<double> deg(static_cast<std::size_t>(angles.size()));
        for (Index k = 0; k < angles.size(); ++k) deg[static_cast<std::size_t>(k)] = angles(k) * kDegPerRad;
        s["per_point_min_angles_deg"] = deg;
      }
    }
    seeds.push_back(std::move(s));
  }
  return seeds;
}

}  // namespace

RunResult RunTammes(const ExperimentConfig& cfg) {
  const std::vector<SeedRunOutput> outs = RunAllSeeds(cfg, ParseOptMethod(cfg.optimizer));
  RunResult res;
  res.trace = Flatten(outs);
  res.summary["experiment"] = "tammes";
  res.summary["regularizer"] = cfg.regularizer;
  res.summary["seeds"] = PerSeedSummary(cfg, outs, true);
  if (cfg.n == 24 && cfg.dim == 3) {
    const double opt_deg = MinGeodesicDistance(SnubCubeConfiguration()) * kDegPerRad;
    res.summary["reference_optimum_deg"] = opt_deg;
    for (auto& s : res.summary["seeds"]) {
      s["gap_to_optimum_deg"] = opt_deg - s["final_dmin_deg"].get<double>();
    }
  }
  return res;
}

RunResult RunSynthetic(const ExperimentConfig& cfg) {
  if (cfg.init == InitMode::kBoth) {
    throw std::invalid_argument("RunSynthetic: resolve init to uniform or clumped first");
  }
  const std::vector<SeedRunOutput> outs = RunAllSeeds(cfg, ParseOptMethod(cfg.optimizer));
  RunResult res;
  res.trace = Flatten(outs);
  res.summary["experiment"] = "synthetic";
  res.summary["regularizer"] = cfg.regularizer;
  res.summary["init"] = InitName(cfg.init);
  res.summary["seeds"] = PerSeedSummary(cfg, outs, false);
  return res;
}

RunResult RunAblationOpt(const ExperimentConfig& cfg) {
  RunResult res;
  res.summary["experiment"] = "ablation-opt";
  res.summary["regularizer"] = cfg.regularizer;
  for (OptMethod method : {OptMethod::kRadam, OptMethod::kProjectedAdam}) {
    const std::vector<SeedRunOutput> outs = RunAllSeeds(cfg, method);
    const std::string key = OptMethodName(method);
    res.summary["arms"][key] = PerSeedSummary(cfg, outs, true);
    std::vector<TraceRow> rows = Flatten(outs);
    res.trace.insert(res.trace.end(), rows.begin(), rows.end());
  }
  return res;
}

RunResult RunSlicedConvergence(const ExperimentConfig& cfg) {
  const RngStream root(static_cast<std::uint64_t>(cfg.seeds.front()));
  RngStream init_stream = SplitStream(root, StreamTag::kInit);
  const Configuration X = SampleUniform(cfg.n, cfg.dim, init_stream);
  const auto start = std::chrono::steady_clock::now();

  const double dmin = MinGeodesicDistance(X);
  const double svar = SphericalVariance(X);

  RunResult res;
  res.summary["experiment"] = "sliced-convergence";
  nlohmann::json checkpoints = nlohmann::json::array();

  RngStream circ = SplitStream(root, StreamTag::kCircles);
  double running_sum = 0.0;
  long next_checkpoint = 1;
  for (long k = 1; k <= cfg.steps; ++k) {
    const GreatCircle c = SampleGreatCircle(cfg.dim, CircleMode::kUniform, circ);
    running_sum += LossSliced(X, {c});
    if (k == next_checkpoint || k == cfg.steps) {
      TraceRow r;
      r.seed = cfg.seeds.front();
      r.step = k;
      r.loss = running_sum / static_cast<double>(k);
      r.dmin_rad = dmin;
      r.dmin_deg = dmin * kDegPerRad;
      r.svar = svar;
      r.wall_ms = cfg.deterministic ? 0.0 : NowMs(start);
      if (res.trace.empty() || res.trace.back().step != k) res.trace.push_back(r);
      checkpoints.push_back({{"circles", k}, {"estimate", r.loss}});
      next_checkpoint = next_checkpoint < 10 ? next_checkpoint + 1
                        : next_checkpoint < 100 ? next_checkpoint + 10
                        : next_checkpoint < 1000 ? next_checkpoint + 100
                                                 : next_checkpoint + 1000;
    }
  }
  res.summary["checkpoints"] = std::move(checkpoints);
  return res;
}

RunResult RunExperiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.Resolve();
  RunResult res;
  switch (cfg.experiment) {
    case Experiment::kTammes:
      res = RunTammes(cfg);
      EmitCsv(res.trace, cfg.output_path);
      WriteSidecar(cfg, cfg.output_path);
      break;
    case Experiment::kSynthetic: {
      if (cfg.init == InitMode::kBoth) {
        res.summary["experiment"] = "synthetic";
        res.summary["regularizer"] = cfg.regularizer;
        for (InitMode init : {InitMode::kClumped, InitMode::kUniform}) {
          ExperimentConfig sub = cfg;
          sub.init = init;
          RunResult arm = RunSynthetic(sub);
          const std::string path = cfg.output_path + "." + InitName(init) + ".csv";
          EmitCsv(arm.trace, path);
          WriteSidecar(sub, path);
          res.summary[InitName(init)] = arm.summary["seeds"];
        }
      } else {
        res = RunSynthetic(cfg);
        EmitCsv(res.trace, cfg.output_path);
        WriteSidecar(cfg, cfg.output_path);
      }
      break;
    }
    case Experiment::kAblationOpt: {
      // Paired traces, one file per optimizer arm with identical seeds.
      for (OptMethod method : {OptMethod::kRadam, OptMethod::kProjectedAdam}) {
        const std::vector<SeedRunOutput> outs = RunAllSeeds(cfg, method);
        const std::string path = cfg.output_path + "." + OptMethodName(method) + ".csv";
        EmitCsv(Flatten(outs), path);
        WriteSidecar(cfg, path);
        res.summary["arms"][OptMethodName(method)] = PerSeedSummary(cfg, outs, true);
      }
      res.summary["experiment"] = "ablation-opt";
      res.summary["regularizer"] = cfg.regularizer;
      break;
    }
    case Experiment::kSlicedConvergence:
      res = RunSlicedConvergence(cfg);
      EmitCsv(res.trace, cfg.output_path);
      WriteSidecar(cfg, cfg.output_path);
      break;
  }
  WriteTextFile(cfg.output_path + ".summary.json", res.summary.dump(2) + "\n");
  return res;
}

}  // namespace disperse
