#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "disperse/harness.hpp"

namespace {

using disperse::ExperimentConfig;

void AddCommonOptions(CLI::App* cmd, ExperimentConfig* cfg, std::string* config_path,
                      std::string* init, std::string* seeds_csv) {
  cmd->add_option("--config", *config_path, "JSON config file; CLI flags override its values");
  cmd->add_option("--n", cfg->n, "number of points (0 = experiment default)");
  cmd->add_option("--dim", cfg->dim, "ambient dimension m (0 = experiment default)");
  cmd->add_option("--init", *init, "initial configuration: uniform|clumped|both");
  cmd->add_option("--kappa", cfg->kappa, "power spherical scale for clumped init");
  cmd->add_option("--reg", cfg->regularizer,
                  "regularizer spec, e.g. mm:geodesic, koleo:chordal, mhe:rbf-chordal:1.0, "
                  "wi:rbf-chordal:1.0, lloyd:300, sliced:axis:13, ssw:uniform:50");
  cmd->add_option("--optimizer", cfg->optimizer, "rsgd|radam|projected-adam");
  cmd->add_option("--lr", cfg->lr, "learning rate (0 = experiment default)");
  cmd->add_option("--beta1", cfg->beta1, "Adam beta1");
  cmd->add_option("--beta2", cfg->beta2, "Adam beta2");
  cmd->add_option("--betas", [cfg](const std::vector<std::string>& vals) {
    if (vals.size() != 2) return false;
    cfg->beta1 = std::stod(vals[0]);
    cfg->beta2 = std::stod(vals[1]);
    return true;
  }, "Adam betas as two values")->expected(2);
  cmd->add_option("--eps", cfg->eps, "Adam epsilon");
  cmd->add_option("--retraction", cfg->retraction, "exp|proj");
  cmd->add_option("--steps", cfg->steps, "optimization steps (0 = experiment default)");
  cmd->add_option("--eval-every", cfg->eval_every, "trace cadence in steps");
  cmd->add_option("--minibatch", cfg->minibatch, "minibatch size, 0 = full batch (-1 = default)");
  cmd->add_option("--seeds", *seeds_csv, "comma-separated seeds, default 0,1,2");
  cmd->add_option("--out", cfg->output_path, "output CSV path (sidecars <out>.config.json, <out>.summary.json)");
  cmd->add_flag("--deterministic", cfg->deterministic, "zero out wall_ms so reruns are byte-identical");
  cmd->add_option("--threads", cfg->threads, "parallel seed workers");
}

std::vector<long> ParseSeeds(const std::string& csv) {
  std::vector<long> seeds;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) seeds.push_back(std::stol(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (seeds.empty()) throw std::invalid_argument("config field 'seeds': empty list");
  return seeds;
}

void PrintKernelTable() {
  std::cout << "kernel              expression (t = <x,y>)            positive definite\n";
  std::cout << "rbf-chordal:g       exp(g t)                          yes\n";
  std::cout << "rbf-geodesic:g      exp(-g arccos(t)^2)               no (warning attached)\n";
  std::cout << "laplace-chordal:g   exp(-g sqrt(2-t))                 yes\n";
  std::cout << "laplace-geodesic:g  exp(-g arccos(t))                 yes\n";
  std::cout << "riesz-geodesic:s    arccos(t)^-s  (s=0: -log arccos)  conditionally, s < m-1\n";
  std::cout << "riesz-chordal:s     (2-t)^(-s/2)  (s=0: -log(2-t)/2)  conditionally, s < m-1\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disperse: hyperspherical dispersion benchmark harness"};
  app.require_subcommand(0, 1);

  bool list_kernels = false;
  app.add_flag("--list-kernels", list_kernels, "print the kernel family table and exit");

  struct SubState {
    ExperimentConfig cfg;
    std::string config_path;
    std::string init;
    std::string seeds_csv;
  };
  std::map<std::string, SubState> states;
  for (const char* name : {"tammes", "synthetic", "ablation-opt", "sliced-convergence"}) {
    SubState& st = states[name];
    st.cfg.experiment = disperse::ParseExperiment(name);
    CLI::App* cmd = app.add_subcommand(name, "run the " + std::string(name) + " experiment");
    AddCommonOptions(cmd, &st.cfg, &st.config_path, &st.init, &st.seeds_csv);
  }

  CLI11_PARSE(app, argc, argv);

  if (list_kernels) {
    PrintKernelTable();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help() << std::endl;
    return 1;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    SubState& st = states[name];
    ExperimentConfig cfg = st.cfg;

    if (!st.config_path.empty()) {
      std::ifstream in(st.config_path);
      if (!in) throw std::runtime_error("cannot open config file: " + st.config_path);
      nlohmann::json j;
      in >> j;
      ExperimentConfig from_file = ExperimentConfig::FromJson(j);
      from_file.experiment = cfg.experiment;
      // CLI flags override file values.
      CLI::App* cmd = app.get_subcommands().front();
      auto overridden = [&](const std::string& flag) { return cmd->count(flag) > 0; };
      if (!overridden("--n")) cfg.n = from_file.n;
      if (!overridden("--dim")) cfg.dim = from_file.dim;
      if (!overridden("--init") && !overridden("--kappa")) cfg.init = from_file.init;
      if (!overridden("--kappa")) cfg.kappa = from_file.kappa;
      if (!overridden("--reg")) cfg.regularizer = from_file.regularizer;
      if (!overridden("--optimizer")) cfg.optimizer = from_file.optimizer;
      if (!overridden("--lr")) cfg.lr = from_file.lr;
      if (!overridden("--beta1") && !overridden("--betas")) cfg.beta1 = from_file.beta1;
      if (!overridden("--beta2") && !overridden("--betas")) cfg.beta2 = from_file.beta2;
      if (!overridden("--eps")) cfg.eps = from_file.eps;
      if (!overridden("--retraction")) cfg.retraction = from_file.retraction;
      if (!overridden("--steps")) cfg.steps = from_file.steps;
      if (!overridden("--eval-every")) cfg.eval_every = from_file.eval_every;
      if (!overridden("--minibatch")) cfg.minibatch = from_file.minibatch;
      if (!overridden("--seeds")) cfg.seeds = from_file.seeds;
      if (!overridden("--out")) cfg.output_path = from_file.output_path;
      if (!overridden("--deterministic")) cfg.deterministic = from_file.deterministic;
      if (!overridden("--threads")) cfg.threads = from_file.threads;
    }

    if (!st.init.empty()) {
      if (st.init == "uniform") cfg.init = disperse::InitMode::kUniform;
      else if (st.init == "clumped") cfg.init = disperse::InitMode::kClumped;
      else if (st.init == "both") cfg.init = disperse::InitMode::kBoth;
      else throw std::invalid_argument("config field 'init': expected uniform|clumped|both");
    }
    if (!st.seeds_csv.empty()) cfg.seeds = ParseSeeds(st.seeds_csv);

    const disperse::RegularizerSpec reg = disperse::RegularizerSpec::Parse(cfg.regularizer);
    if (reg.kernel.has_value() && reg.kernel->family == disperse::KernelFamily::kRbf &&
        reg.kernel->metric == disperse::SphereMetric::kGeodesic) {
      std::cerr << "warning: rbf-geodesic is not positive definite on the sphere; "
                   "MMD interpretation does not apply\n";
    }

    disperse::RunResult res = disperse::RunExperiment(cfg);
    std::cout << res.summary.dump(2) << std::endl;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
