// Command-line front end: run experiments from a JSON config, run the
// verification suite, list problems and acquisitions.

#include "owsample/io.hpp"
#include "owsample/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>

#ifndef OWSAMPLE_VERSION
#define OWSAMPLE_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace owsample;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("OWSAMPLE_OUT"); env && *env) return env;
  return "owsample-out";
}

std::string replicate_file(int r) {
  std::ostringstream os;
  os << "replicate_" << std::setw(3) << std::setfill('0') << r << ".csv";
  return os.str();
}

struct RunOptions {
  std::string config;
  std::string out;
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::optional<std::string> baseline;
  std::optional<int> k;
  std::optional<double> alpha;
  std::optional<int> q;
};

int cmd_run(const RunOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opt.config);
    nlohmann::json j = config_to_json(cfg);
    if (opt.replicates) j["replicates"] = *opt.replicates;
    if (opt.seed) j["seed"] = *opt.seed;
    if (opt.baseline) j["baseline"] = *opt.baseline;
    if (opt.k) j["active_subspace"]["k"] = *opt.k;
    if (opt.alpha) j["active_subspace"]["alpha"] = *opt.alpha;
    if (opt.q) j["active_subspace"]["q"] = *opt.q;
    cfg = config_from_json(j);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const fs::path out_dir = opt.out.empty() ? default_out_dir() : fs::path(opt.out);
  nlohmann::json manifest;
  manifest["software"] = {{"name", "owsample"}, {"version", OWSAMPLE_VERSION}};
  manifest["config"] = config_to_json(cfg);
  manifest["started"] = utc_timestamp();
  manifest["jobs"] = opt.jobs;
  manifest["truth_seed"] = truth_seed(cfg);
  nlohmann::json reps = nlohmann::json::array();
  for (int r = 0; r < cfg.replicates; ++r)
    reps.push_back({{"replicate", r}, {"seed", replicate_seed(cfg, r)}, {"csv", replicate_file(r)}});
  manifest["replicates"] = reps;

  try {
    fs::create_directories(out_dir);
    std::cerr << "preparing " << cfg.problem << " (" << cfg.mc_samples << " Monte-Carlo samples)\n";
    const auto setup = prepare_experiment(cfg);
    const Eigen::Index dim = setup.problem.dim();
    const auto results = run_replicates(cfg, setup, opt.jobs, [&](const ExperimentRecord& rec) {
      write_record_csv(out_dir / replicate_file(rec.replicate), rec, dim);
      std::cerr << "replicate " << rec.replicate << " done: final error "
                << rec.cumulative_min.back() << ", " << rec.evaluations << " evaluations\n";
    });

    std::vector<ExperimentRecord> done;
    for (std::size_t r = 0; r < results.records.size(); ++r) {
      if (!results.records[r]) continue;
      const auto& rec = *results.records[r];
      auto& entry = manifest["replicates"][r];
      entry["evaluations"] = rec.evaluations;
      entry["optimizer_warnings"] = rec.optimizer_warnings;
      double wall = 0.0;
      for (double t : rec.wall_time) wall += t;
      entry["wall_time"] = wall;
      done.push_back(rec);
    }
    if (!done.empty()) {
      write_aggregate_csv(out_dir / "aggregate.csv", aggregate(done), done.front().first_iteration);
      manifest["aggregate"] = "aggregate.csv";
    }
    manifest["failures"] = results.failures;
    manifest["finished"] = utc_timestamp();
    write_json(out_dir / "manifest.json", manifest);
    for (const auto& f : results.failures) std::cerr << "error: " << f << '\n';
    std::cout << "wrote " << done.size() << " replicate(s) to " << out_dir.string() << '\n';
    return results.failures.empty() ? kExitOk : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    manifest["failures"] = {e.what()};
    manifest["finished"] = utc_timestamp();
    try {
      write_json(out_dir / "manifest.json", manifest);
    } catch (const std::exception&) {
    }
    return kExitFailure;
  }
}

int cmd_verify(std::uint64_t seed) {
  bool all = true;
  std::cout << std::left << std::setw(4) << "#" << std::setw(52) << "check" << std::setw(6) << "ok"
            << std::setw(14) << "max error" << std::setw(12) << "tolerance"
            << "cases\n";
  for (const auto& group : verify::run_all(seed)) {
    for (const auto& c : group.checks) {
      std::cout << std::setw(4) << group.criterion << std::setw(52) << c.name << std::setw(6)
                << (c.passed ? "PASS" : "FAIL") << std::setw(14) << std::setprecision(4) << c.max_error
                << std::setw(12) << c.tolerance << c.cases << '\n';
      if (!c.passed) {
        all = false;
        std::cout << "    failing case: " << c.failing_case << '\n';
      }
    }
  }
  std::cout << (all ? "all checks passed" : "some checks FAILED") << '\n';
  return all ? kExitOk : kExitFailure;
}

int cmd_list() {
  std::cout << "problems:\n";
  for (const auto& name : problem_names()) {
    const auto p = make_problem(name);
    std::cout << "  " << name << " d=" << p.dim() << " bounds=";
    for (Eigen::Index j = 0; j < p.dim(); ++j)
      std::cout << (j ? "x" : "") << '[' << p.bounds.lo[j] << ',' << p.bounds.hi[j] << ']';
    std::cout << '\n';
  }
  std::cout << "acquisitions:\n";
  for (auto k : kAllAcquisitions) std::cout << "  " << to_string(k) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Output-weighted sequential sampling experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", OWSAMPLE_VERSION);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run the replicates described by a JSON config");
  run_cmd->add_option("config", run.config, "Config or manifest file")->required();
  run_cmd->add_option("--out", run.out, "Output directory (default $OWSAMPLE_OUT or ./owsample-out)");
  run_cmd->add_option("--replicates", run.replicates, "Override the replicate count");
  run_cmd->add_option("--seed", run.seed, "Override the base seed");
  run_cmd->add_option("--jobs", run.jobs, "Worker threads for replicates")->check(CLI::PositiveNumber);
  run_cmd->add_option("--baseline", run.baseline, "none, lhs or active_subspace");
  run_cmd->add_option("--k", run.k, "Active-subspace oversampling factor");
  run_cmd->add_option("--alpha", run.alpha, "Active-subspace sample multiplier");
  run_cmd->add_option("--q", run.q, "Active-subspace dimension");

  std::uint64_t verify_seed = 20240601;
  auto* verify_cmd = app.add_subcommand("verify", "Run the analytic and property checks");
  verify_cmd->add_option("--seed", verify_seed, "Seed for the random check cases");

  auto* list_cmd = app.add_subcommand("list", "List problems and acquisition functions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*verify_cmd) return cmd_verify(verify_seed);
    if (*list_cmd) return cmd_list();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
