#pragma once

// Reverse-mode differentiation over row-major float64 matrices. A Graph
// records one forward computation; backward() replays it in reverse and
// accumulates gradients into the Parameters it touched.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace p2g::nn {

struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Untracked input.
  Var constant(Matrix value);
  /// Tracked leaf bound to `p`; backward adds into p.grad.
  Var param(Parameter& p);

  /// x [n,in] * W [in,out] + b [out]
  Var linear(Var x, Var w, Var b);
  Var relu(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var sum(Var a);
  Var concat_cols(std::span<const Var> xs);
  /// Elementwise max across operands; ties go to the earliest operand.
  Var rowwise_max(std::span<const Var> xs);
  Var gather_rows(Var x, std::vector<std::int32_t> rows);
  /// out[s] = max over rows r with segment[r] == s; empty segments give 0.
  Var segment_max(Var x, std::vector<std::int32_t> segment, std::int32_t n_segments);
  /// Weighted mean of per-row cross entropy; weights indexed by class (empty = uniform).
  Var softmax_cross_entropy(Var logits, std::span<const std::int32_t> targets, std::span<const double> class_weights = {});

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the last backward() target with respect to `v` (zeros if untouched).
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  void backward(Var loss);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    std::function<void()> backward;
  };

  Var push(Matrix value, bool requires_grad, std::function<void()> backward = {});
  Matrix& grad_ref(std::int32_t id);
  Node& node(Var v) { return nodes_.at(v.id); }

  std::vector<Node> nodes_;
};

}  // namespace p2g::nn
