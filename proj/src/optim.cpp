#include "optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "errors.hpp"

namespace p2g::nn {

void adam_step(ParamStore& params, AdamState& state, double lr) {
  const AdamHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    auto [it, inserted] = state.moments.try_emplace(name, Tensor(p.value.shape), Tensor(p.value.shape));
    auto& [m, v] = it->second;
    if (m.shape != p.value.shape || p.grad.shape != p.value.shape) {
      fail(ErrorKind::ShapeMismatch, "adam_step: state for " + name + " does not match its parameter");
    }
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double g = p.grad.data[i];
      m.data[i] = h.beta1 * m.data[i] + (1.0 - h.beta1) * g;
      v.data[i] = h.beta2 * v.data[i] + (1.0 - h.beta2) * g * g;
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      double& theta = p.value.data[i];
      theta -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
      theta -= lr * h.weight_decay * theta;
    }
  }
}

GradCheckReport grad_check(ParamStore& params, const Objective& objective, const GradCheckOptions& opts) {
  params.zero_grad();
  const double base = objective(params, true);
  if (!std::isfinite(base)) fail(ErrorKind::NonFiniteValue, "objective is not finite at the check point");

  GradCheckReport report;
  std::mt19937_64 gen(mix64(opts.seed));
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    const Tensor analytic = p.grad;
    std::vector<std::size_t> coords(p.value.numel());
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.max_coords_per_param > 0 && coords.size() > opts.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), gen);
      coords.resize(opts.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t idx : coords) {
      double& theta = p.value.data[idx];
      const double saved = theta;
      theta = saved + opts.step;
      const double plus = objective(params, false);
      theta = saved - opts.step;
      const double minus = objective(params, false);
      theta = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        fail(ErrorKind::NonFiniteValue, "objective not finite while perturbing " + name);
      }
      const double numeric = (plus - minus) / (2.0 * opts.step);
      const double a = analytic.data[idx];
      if (!std::isfinite(a)) fail(ErrorKind::NonFiniteValue, "analytic gradient not finite for " + name);
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++report.coords_checked;
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (rel >= report.max_rel_error) {
          report.worst_param = name;
          report.worst_index = idx;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  return report;
}

}  // namespace p2g::nn
