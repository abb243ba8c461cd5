#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "disperse/harness.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"

using namespace disperse;

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string TmpPath(const std::string& name) { return "/tmp/disperse_test_" + name; }

ExperimentConfig TinyTammes() {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::kTammes;
  cfg.steps = 50;
  cfg.eval_every = 10;
  cfg.seeds = {0};
  cfg.deterministic = true;
  cfg.output_path = TmpPath("tammes.csv");
  return cfg;
}

}  // namespace

TEST_CASE("csv emission") {
  const std::string path = TmpPath("rows.csv");

  SUBCASE("empty trace writes a header-only file") {
    EmitCsv({}, path);
    CHECK(ReadFile(path) == "seed,step,loss,dmin_rad,dmin_deg,svar,wall_ms\n");
  }

  SUBCASE("round trip reproduces rows exactly") {
    std::vector<TraceRow> rows;
    RngStream rng(91);
    for (long seed = 0; seed < 2; ++seed) {
      for (long step = 0; step <= 30; step += 10) {
        TraceRow r;
        r.seed = seed;
        r.step = step;
        r.loss = rng.Gaussian();
        r.dmin_rad = rng.Uniform() * kPi;
        r.dmin_deg = r.dmin_rad * 180.0 / kPi;
        r.svar = rng.Uniform();
        r.wall_ms = 0.0;
        rows.push_back(r);
      }
    }
    EmitCsv(rows, path);
    const std::vector<TraceRow> back = ParseCsv(path);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].seed == rows[i].seed);
      CHECK(back[i].step == rows[i].step);
      CHECK(back[i].loss == rows[i].loss);  // bit-exact via %.17g
      CHECK(back[i].dmin_rad == rows[i].dmin_rad);
      CHECK(back[i].svar == rows[i].svar);
    }
    const std::string text = ReadFile(path);
    CHECK(text.find('\r') == std::string::npos);  // LF endings only
  }

  SUBCASE("unwritable path fails") {
    CHECK_THROWS_AS(EmitCsv({}, "/nonexistent-dir/x.csv"), std::runtime_error);
  }
}

TEST_CASE("config validation names the offending field") {
  ExperimentConfig cfg = TinyTammes();
  cfg.eval_every = 0;
  CHECK_THROWS_WITH_AS(cfg.Resolve(), doctest::Contains("eval_every"), std::invalid_argument);

  cfg = TinyTammes();
  cfg.init = InitMode::kClumped;
  cfg.kappa = 0.0;
  CHECK_THROWS_WITH_AS(cfg.Resolve(), doctest::Contains("kappa"), std::invalid_argument);

  cfg = TinyTammes();
  cfg.output_path = "";
  CHECK_THROWS_WITH_AS(cfg.Resolve(), doctest::Contains("out"), std::invalid_argument);

  cfg = TinyTammes();
  cfg.regularizer = "bogus";
  CHECK_THROWS_AS(cfg.Resolve(), std::invalid_argument);

  cfg = TinyTammes();
  cfg.minibatch = 100000;
  CHECK_THROWS_WITH_AS(cfg.Resolve(), doctest::Contains("minibatch"), std::invalid_argument);

  cfg = TinyTammes();
  cfg.retraction = "flat";
  CHECK_THROWS_WITH_AS(cfg.Resolve(), doctest::Contains("retraction"), std::invalid_argument);
}

TEST_CASE("config json round trip") {
  ExperimentConfig cfg = TinyTammes();
  cfg.regularizer = "mhe:laplace-geodesic:2";
  cfg.seeds = {3, 4};
  cfg.minibatch = 8;
  const nlohmann::json j = cfg.ToJson();
  const ExperimentConfig back = ExperimentConfig::FromJson(j);
  CHECK(back.experiment == cfg.experiment);
  CHECK(back.regularizer == cfg.regularizer);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.minibatch == cfg.minibatch);
  CHECK(back.deterministic == cfg.deterministic);
}

TEST_CASE("snub cube reference configuration") {
  const Configuration X = SnubCubeConfiguration();
  REQUIRE(X.size() == 24);
  const double ours = MinGeodesicDistance(X);

  // independent construction (opposite chirality), naive pairwise scan
  const Mat other = oracle::SnubCubeVertices();
  const double ref = oracle::MinPairwiseAngle(other);
  CHECK(ours == doctest::Approx(ref).epsilon(1e-12));

  // an optimal code: every point's nearest-neighbor angle is the same
  const Vec pp = PerPointMinAngles(X);
  CHECK(pp.maxCoeff() - pp.minCoeff() < 1e-9);
}

TEST_CASE("tammes run produces trace, summary and sidecar") {
  ExperimentConfig cfg = TinyTammes();
  const RunResult res = RunExperiment(cfg);

  // trace rows strictly increasing in step per seed, starting at 0
  REQUIRE(!res.trace.empty());
  CHECK(res.trace.front().step == 0);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    if (res.trace[i].seed == res.trace[i - 1].seed) CHECK(res.trace[i].step > res.trace[i - 1].step);
  }

  // summary: 24 per-point angles and the reference gap
  const auto& seed0 = res.summary.at("seeds").at(0);
  CHECK(seed0.at("per_point_min_angles_deg").size() == 24);
  CHECK(res.summary.contains("reference_optimum_deg"));
  CHECK(seed0.contains("gap_to_optimum_deg"));

  // sidecar records the resolved config and the clump mean convention
  const std::string sidecar = ReadFile(cfg.output_path + ".config.json");
  const nlohmann::json j = nlohmann::json::parse(sidecar);
  CHECK(j.at("clump_mean_direction") == "e1");
  CHECK(j.at("steps") == 50);
  CHECK(j.at("n") == 24);  // default resolved
  CHECK(ReadFile(cfg.output_path).substr(0, 4) == "seed");
  CHECK(!ReadFile(cfg.output_path + ".summary.json").empty());
}

TEST_CASE("deterministic mode reruns are byte-identical") {
  ExperimentConfig cfg = TinyTammes();
  cfg.output_path = TmpPath("det_a.csv");
  RunExperiment(cfg);
  const std::string a = ReadFile(cfg.output_path);
  cfg.output_path = TmpPath("det_b.csv");
  RunExperiment(cfg);
  const std::string b = ReadFile(cfg.output_path);
  CHECK(a == b);
}

TEST_CASE("seed-parallel runs match sequential ones") {
  ExperimentConfig cfg = TinyTammes();
  cfg.seeds = {0, 1, 2};
  cfg.output_path = TmpPath("seq.csv");
  RunExperiment(cfg);
  const std::string seq = ReadFile(cfg.output_path);
  cfg.threads = 3;
  cfg.output_path = TmpPath("par.csv");
  RunExperiment(cfg);
  CHECK(ReadFile(cfg.output_path) == seq);
}

TEST_CASE("synthetic run at desk scale") {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::kSynthetic;
  cfg.n = 96;
  cfg.dim = 16;
  cfg.steps = 60;
  cfg.eval_every = 20;
  cfg.minibatch = 32;
  cfg.seeds = {0};
  cfg.init = InitMode::kClumped;
  cfg.regularizer = "mhe:rbf-chordal:1";
  cfg.deterministic = true;
  cfg.output_path = TmpPath("synth.csv");
  const RunResult res = RunExperiment(cfg);

  // clumped init starts concentrated and disperses
  CHECK(res.trace.front().svar < 0.2);
  CHECK(res.trace.back().svar > res.trace.front().svar);

  SUBCASE("init=both writes one trace per arm") {
    cfg.init = InitMode::kBoth;
    cfg.output_path = TmpPath("synth_both.csv");
    RunExperiment(cfg);
    const auto clumped = ParseCsv(cfg.output_path + ".clumped.csv");
    const auto uniform = ParseCsv(cfg.output_path + ".uniform.csv");
    CHECK(!clumped.empty());
    CHECK(!uniform.empty());
    CHECK(clumped.front().svar < 0.2);
    CHECK(uniform.front().svar > 0.8);
  }
}

TEST_CASE("ablation arms share the initial configuration per seed") {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::kAblationOpt;
  cfg.steps = 30;
  cfg.eval_every = 10;
  cfg.seeds = {0, 1};
  cfg.deterministic = true;
  cfg.output_path = TmpPath("ablation.csv");
  const RunResult res = RunExperiment(cfg);

  const auto radam_rows = ParseCsv(cfg.output_path + ".radam.csv");
  const auto proj_rows = ParseCsv(cfg.output_path + ".projected-adam.csv");
  REQUIRE(!radam_rows.empty());
  REQUIRE(radam_rows.size() == proj_rows.size());
  // identical seed: identical initial configuration, hence identical step-0 rows
  for (std::size_t i = 0; i < radam_rows.size(); ++i) {
    if (radam_rows[i].step == 0) {
      CHECK(radam_rows[i].dmin_rad == proj_rows[i].dmin_rad);
      CHECK(radam_rows[i].svar == proj_rows[i].svar);
    }
  }
  CHECK(res.summary.at("arms").contains("radam"));
  CHECK(res.summary.at("arms").contains("projected-adam"));
}

TEST_CASE("sliced convergence experiment") {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::kSlicedConvergence;
  cfg.n = 400;
  cfg.dim = 24;
  cfg.steps = 600;
  cfg.seeds = {0};
  cfg.deterministic = true;
  cfg.output_path = TmpPath("slconv.csv");
  const RunResult res = RunExperiment(cfg);

  // the estimate at one circle equals the loss on that circle
  const RngStream root(0);
  RngStream init = SplitStream(root, StreamTag::kInit);
  const Configuration X = SampleUniform(cfg.n, cfg.dim, init);
  RngStream circ = SplitStream(root, StreamTag::kCircles);
  const GreatCircle first = SampleGreatCircle(cfg.dim, CircleMode::kUniform, circ);
  REQUIRE(res.trace.front().step == 1);
  CHECK(res.trace.front().loss == doctest::Approx(LossSliced(X, {first})).epsilon(1e-12));

  // running mean settles: last two decades differ by a few percent
  const double at_end = res.trace.back().loss;
  double at_tenth = 0.0;
  for (const TraceRow& r : res.trace) {
    if (r.step == 60) at_tenth = r.loss;
  }
  CHECK(std::abs(at_tenth - at_end) / at_end < 0.25);
}

TEST_CASE("per-circle standard error shrinks like k^{-1/2}") {
  RngStream rng(92);
  const Configuration X = SampleUniform(1000, 32, rng);
  const int total = 3000;
  std::vector<double> losses(total);
  for (int k = 0; k < total; ++k) {
    const GreatCircle c = SampleGreatCircle(32, CircleMode::kUniform, rng);
    losses[static_cast<std::size_t>(k)] = LossSliced(X, {c});
  }
  std::vector<double> log_k, log_se;
  for (int k = 200; k <= total; k += 400) {
    std::vector<double> head(losses.begin(), losses.begin() + k);
    const auto [mean, se] = teststat::MeanWithStandardError(head);
    (void)mean;
    log_k.push_back(std::log(static_cast<double>(k)));
    log_se.push_back(std::log(se));
  }
  const double slope = teststat::FitSlope(log_k, log_se);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));  // -0.5 +/- 0.1
}
