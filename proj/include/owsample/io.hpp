#pragma once

// Experiment configuration as JSON, per-replicate and aggregated CSV series,
// and the run manifest.

#include "owsample/experiment.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>

namespace owsample {

inline std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::none: return "none";
    case Baseline::lhs: return "lhs";
    case Baseline::active_subspace: return "active_subspace";
  }
  return "?";
}

inline std::string_view to_string(SamplingMeasure m) {
  return m == SamplingMeasure::prior ? "prior" : "uniform";
}

namespace detail {

template <class T>
T get_field(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

inline std::string get_string(const nlohmann::json& j, const std::string& key, std::string fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(key, "expected a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{
      "problem",    "acquisition",  "n_iter",          "n_init",           "noise_variance",
      "train_noise", "n_gmm",       "gmm_bic",         "gmm_max_samples",  "density_sampling",
      "seed",       "mc_samples",   "replicates",      "gp_restarts",      "acq_restarts",
      "acq_probes", "baseline",     "active_subspace", "surrogate_points"};
  return keys;
}

// Accepts a bare config object or a manifest holding one under "config".
inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
  const nlohmann::json& j = doc.contains("config") && doc.at("config").is_object() ? doc.at("config") : doc;
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (!config_keys().contains(key)) throw ConfigError(key, "unknown field");

  ExperimentConfig c;
  c.problem = detail::get_string(j, "problem", "");
  if (c.problem.empty()) throw ConfigError("problem", "required");
  const auto names = problem_names();
  if (std::find(names.begin(), names.end(), c.problem) == names.end())
    throw ConfigError("problem", detail::concat("unknown problem '", c.problem, "'"));

  const std::string baseline = detail::get_string(j, "baseline", "none");
  if (baseline == "none") c.baseline = Baseline::none;
  else if (baseline == "lhs") c.baseline = Baseline::lhs;
  else if (baseline == "active_subspace") c.baseline = Baseline::active_subspace;
  else throw ConfigError("baseline", detail::concat("unknown baseline '", baseline, "'"));

  if (j.contains("acquisition")) {
    const auto name = detail::get_string(j, "acquisition", "");
    const auto kind = parse_acquisition(name);
    if (!kind) throw ConfigError("acquisition", detail::concat("unknown acquisition '", name, "'"));
    c.acquisition = *kind;
  } else if (c.baseline == Baseline::none) {
    throw ConfigError("acquisition", "required unless a baseline is selected");
  }

  const std::string sampling = detail::get_string(j, "density_sampling", "prior");
  if (sampling == "prior") c.density_sampling = SamplingMeasure::prior;
  else if (sampling == "uniform") c.density_sampling = SamplingMeasure::uniform;
  else throw ConfigError("density_sampling", "expected 'prior' or 'uniform'");

  c.n_iter = detail::get_field(j, "n_iter", c.n_iter);
  c.n_init = detail::get_field(j, "n_init", c.n_init);
  c.noise_variance = detail::get_field(j, "noise_variance", c.noise_variance);
  c.train_noise = detail::get_field(j, "train_noise", c.train_noise);
  c.n_gmm = detail::get_field(j, "n_gmm", c.n_gmm);
  c.gmm_bic = detail::get_field(j, "gmm_bic", c.gmm_bic);
  c.gmm_max_samples = detail::get_field(j, "gmm_max_samples", c.gmm_max_samples);
  c.seed = detail::get_field(j, "seed", c.seed);
  c.mc_samples = detail::get_field(j, "mc_samples", c.mc_samples);
  c.replicates = detail::get_field(j, "replicates", c.replicates);
  c.gp_restarts = detail::get_field(j, "gp_restarts", c.gp_restarts);
  c.acq_restarts = detail::get_field(j, "acq_restarts", c.acq_restarts);
  c.acq_probes = detail::get_field(j, "acq_probes", c.acq_probes);
  c.surrogate_points = detail::get_field(j, "surrogate_points", c.surrogate_points);
  if (j.contains("active_subspace")) {
    const auto& a = j.at("active_subspace");
    if (!a.is_object()) throw ConfigError("active_subspace", "expected an object");
    for (const auto& [key, _] : a.items())
      if (key != "k" && key != "alpha" && key != "q" && key != "fd_step")
        throw ConfigError("active_subspace." + key, "unknown field");
    c.active_subspace.k = detail::get_field(a, "k", c.active_subspace.k);
    c.active_subspace.alpha = detail::get_field(a, "alpha", c.active_subspace.alpha);
    c.active_subspace.q = detail::get_field(a, "q", c.active_subspace.q);
    c.active_subspace.fd_step = detail::get_field(a, "fd_step", c.active_subspace.fd_step);
  }
  c.validate();
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"problem", c.problem},
          {"acquisition", std::string(to_string(c.acquisition))},
          {"n_iter", c.n_iter},
          {"n_init", c.n_init},
          {"noise_variance", c.noise_variance},
          {"train_noise", c.train_noise},
          {"n_gmm", c.n_gmm},
          {"gmm_bic", c.gmm_bic},
          {"gmm_max_samples", c.gmm_max_samples},
          {"density_sampling", std::string(to_string(c.density_sampling))},
          {"seed", c.seed},
          {"mc_samples", c.mc_samples},
          {"replicates", c.replicates},
          {"gp_restarts", c.gp_restarts},
          {"acq_restarts", c.acq_restarts},
          {"acq_probes", c.acq_probes},
          {"baseline", std::string(to_string(c.baseline))},
          {"active_subspace",
           {{"k", c.active_subspace.k},
            {"alpha", c.active_subspace.alpha},
            {"q", c.active_subspace.q},
            {"fd_step", c.active_subspace.fd_step}}},
          {"surrogate_points", c.surrogate_points}};
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", detail::concat("cannot open ", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", e.what());
  }
  return config_from_json(j);
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(concat("cannot write ", path.string()));
  out << std::setprecision(17);
  return out;
}

}  // namespace detail

// iteration,error,cumulative_min,x0..x{d-1},y
// Sequential runs list the initial design under iteration 0, then one row per
// acquired point. Baselines redraw their design each time, so x and y stay
// empty and there is one row per iteration.
inline void write_record_csv(const std::filesystem::path& path, const ExperimentRecord& rec,
                             Eigen::Index dim) {
  auto out = detail::open_for_write(path);
  out << "iteration,error,cumulative_min";
  for (Eigen::Index j = 0; j < dim; ++j) out << ",x" << j;
  out << ",y\n";
  auto row = [&](std::size_t i, Eigen::Index point) {
    out << rec.first_iteration + static_cast<int>(i) << ',' << rec.errors[i] << ','
        << rec.cumulative_min[i];
    for (Eigen::Index j = 0; j < dim; ++j) {
      out << ',';
      if (point >= 0) out << rec.visited(point, j);
    }
    out << ',';
    if (point >= 0) out << rec.outputs[point];
    out << '\n';
  };
  const bool sequential = rec.first_iteration == 0 && rec.visited.rows() == rec.n_init +
                              static_cast<Eigen::Index>(rec.errors.size()) - 1 &&
                          rec.visited.cols() == dim;
  if (!sequential) {
    for (std::size_t i = 0; i < rec.errors.size(); ++i) row(i, -1);
    return;
  }
  for (Eigen::Index p = 0; p < rec.n_init; ++p) row(0, p);
  for (std::size_t i = 1; i < rec.errors.size(); ++i)
    row(i, rec.n_init + static_cast<Eigen::Index>(i) - 1);
}

// iteration,median,mad
inline void write_aggregate_csv(const std::filesystem::path& path, const AggregateSeries& agg,
                                int first_iteration) {
  auto out = detail::open_for_write(path);
  out << "iteration,median,mad\n";
  for (std::size_t i = 0; i < agg.median.size(); ++i)
    out << first_iteration + static_cast<int>(i) << ',' << agg.median[i] << ',' << agg.mad[i] << '\n';
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = detail::open_for_write(path);
  out << j.dump(2) << '\n';
}

}  // namespace owsample
