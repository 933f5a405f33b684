#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "tensor.hpp"

namespace p2g::nn {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.937;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.005;  // decoupled
  bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
  AdamHyper hyper;
  std::int64_t step = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments;  // name -> (m, v)
};

/// One Adam update of every trainable parameter from its accumulated grad.
/// `lr` overrides hyper.lr for this step (warm-up schedules).
void adam_step(ParamStore& params, AdamState& state, double lr);
inline void adam_step(ParamStore& params, AdamState& state) { adam_step(params, state, state.hyper.lr); }

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates checked per parameter tensor; 0 checks all.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// Evaluates the objective. When `backward` is true it must also have
/// accumulated d(objective)/d(param) into the store's grads.
using Objective = std::function<double(ParamStore&, bool backward)>;

/// max |analytic - central difference| / max(1, |analytic|) over sampled coordinates.
GradCheckReport grad_check(ParamStore& params, const Objective& objective, const GradCheckOptions& opts = {});

}  // namespace p2g::nn
