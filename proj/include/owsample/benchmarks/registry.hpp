#pragma once

// Problems addressable by name.

#include "owsample/benchmarks/fs3d.hpp"
#include "owsample/benchmarks/oscillator.hpp"
#include "owsample/benchmarks/problem.hpp"

#include <string_view>
#include <vector>

namespace owsample {

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{
      "oakley", "michalewicz2", "oscillator-m2", "oscillator-m10", "borehole",
      "fs3d",   "fs3d-dummy-10", "fs3d-dummy-20", "fs3d-dummy-30"};
  return names;
}

// Throws std::invalid_argument for unknown names.
inline BlackBoxProblem make_problem(std::string_view name) {
  if (name == "oakley") return make_oakley();
  if (name == "michalewicz2") return make_michalewicz2();
  if (name == "oscillator-m2") return make_oscillator(2);
  if (name == "oscillator-m10") return make_oscillator(10);
  if (name == "borehole") return make_borehole();
  if (name == "fs3d") return make_burst_problem(3);
  if (name == "fs3d-dummy-10") return make_burst_problem(10);
  if (name == "fs3d-dummy-20") return make_burst_problem(20);
  if (name == "fs3d-dummy-30") return make_burst_problem(30);
  throw std::invalid_argument(detail::concat("unknown problem '", name, "'"));
}

}  // namespace owsample
