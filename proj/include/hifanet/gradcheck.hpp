#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hifanet/autodiff.hpp"

namespace hifanet::num {

/// Builds the scalar loss on a fresh tape from the parameters in the store.
using LossBuilder = std::function<Var(Tape&, ParamStore&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

/// Compares backward() against central differences.
///
/// Tensors with more than `coords_per_param` elements are checked on a seeded
/// random subset of that many coordinates; smaller tensors are checked fully.
inline GradCheckReport finite_difference_check(const LossBuilder& build, ParamStore& params,
                                               double eps = 1e-5, std::uint64_t seed = 0,
                                               std::size_t coords_per_param = 64) {
  params.ensure_grads();
  params.zero_grads();
  {
    Tape tape;
    tape.backward(build(tape, params));
  }

  auto evaluate = [&] {
    Tape tape;
    return build(tape, params).value().item();
  };

  GradCheckReport report;
  std::mt19937_64 rng(seed);
  for (const std::string& name : params.names()) {
    Tensor& p = params.at(name);
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    for (std::size_t i : coords) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double plus = evaluate();
      p[i] = saved - eps;
      const double minus = evaluate();
      p[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double err = relative_error(analytic[i], numeric);
      ++report.coordinates_checked;
      if (err > report.max_relative_error || report.worst_param.empty()) {
        report.max_relative_error = std::max(err, report.max_relative_error);
        if (err >= report.max_relative_error) {
          report.worst_param = name;
          report.worst_index = i;
          report.worst_analytic = analytic[i];
          report.worst_numeric = numeric;
        }
      }
    }
  }
  params.zero_grads();
  return report;
}

}  // namespace hifanet::num
