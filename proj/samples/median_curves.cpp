// Compare median error curves of two acquisitions on one problem.
//   median_curves [problem] [iterations] [replicates]
#include "owsample/experiment.hpp"

#include <iomanip>
#include <iostream>

using namespace owsample;

int main(int argc, char** argv) {
  ExperimentConfig cfg;
  cfg.problem = argc > 1 ? argv[1] : "oscillator-m2";
  cfg.n_iter = argc > 2 ? std::stoi(argv[2]) : 20;
  cfg.replicates = argc > 3 ? std::stoi(argv[3]) : 3;
  cfg.noise_variance = 1e-3;
  cfg.mc_samples = 20000;

  try {
    const auto setup = prepare_experiment(cfg);
    std::vector<std::pair<AcquisitionKind, AggregateSeries>> curves;
    for (auto kind : {AcquisitionKind::US, AcquisitionKind::IVR_LW}) {
      cfg.acquisition = kind;
      const auto res = run_replicates(cfg, setup);
      std::vector<ExperimentRecord> records;
      for (const auto& r : res.records)
        if (r) records.push_back(*r);
      curves.emplace_back(kind, aggregate(records));
    }
    std::cout << "iteration";
    for (const auto& [kind, _] : curves) std::cout << ',' << to_string(kind);
    std::cout << '\n' << std::setprecision(6);
    for (std::size_t i = 0; i < curves.front().second.median.size(); ++i) {
      std::cout << i;
      for (const auto& [_, agg] : curves) std::cout << ',' << agg.median[i];
      std::cout << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
