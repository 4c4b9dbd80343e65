// Ten rounds of likelihood-weighted IVR on the Oakley function, wired by hand.
#include "owsample/acquisition.hpp"
#include "owsample/benchmarks/registry.hpp"
#include "owsample/experiment.hpp"
#include "owsample/gmm.hpp"
#include "owsample/optimizer.hpp"

#include <iomanip>
#include <iostream>

using namespace owsample;

int main() {
  const auto problem = make_problem("oakley");
  Rng rng = make_rng(7);
  Rng truth_rng = make_rng(8);
  const auto truth = ground_truth_pdf(problem, 20000, truth_rng);

  Dataset data;
  const Matrix X0 = lhs_design(4, problem.bounds, rng);
  for (Eigen::Index i = 0; i < X0.rows(); ++i) data.append(X0.row(i).transpose(), problem.evaluate(X0.row(i).transpose()));

  std::cout << std::setprecision(4);
  for (int it = 1; it <= 10; ++it) {
    auto model = std::make_shared<const GPModel>(fit_gp(data));
    const Vector mu = model->posterior_mean_batch(truth.inputs);
    const auto density = std::make_shared<const OutputDensity>(kde_density(mu));

    // Fit the weight mixture to 1/p_mu at prior draws (w/p_x importance weights).
    Vector iw(mu.size());
    for (Eigen::Index k = 0; k < mu.size(); ++k) iw[k] = 1.0 / std::max(density->value(mu[k]), 1e-9 * density->max());
    GmmFitOptions gopt;
    gopt.n_components = 2;

    AcquisitionContext ctx;
    ctx.model = model;
    ctx.prior = problem.prior;
    ctx.output_density = density;
    ctx.weight_mixture = fit_gmm_weight(truth.inputs, iw, rng, gopt).mixture;
    const Acquisition acq(AcquisitionKind::IVR_LW, std::move(ctx));
    const auto best = maximize_acquisition(acq, problem.bounds, rng);

    std::cout << "iter " << std::setw(2) << it << "  log-pdf error " << log_pdf_error(mu, truth) << "  next x = ("
              << best.x[0] << ", " << best.x[1] << ")\n";
    data.append(best.x, problem.evaluate(best.x));
  }
}
