#include "autodiff.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace p2g::nn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::ShapeMismatch, std::string(op) + ": operand shapes [" + std::to_string(a.rows()) + "," +
                                       std::to_string(a.cols()) + "] and [" + std::to_string(b.rows()) + "," +
                                       std::to_string(b.cols()) + "] differ");
  }
}

}  // namespace

Var Graph::push(Matrix value, bool requires_grad, std::function<void()> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Matrix& Graph::grad_ref(std::int32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Matrix Graph::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::constant(Matrix value) { return push(std::move(value), false); }

Var Graph::param(Parameter& p) {
  Var v = push(p.value.matrix(), true);
  nodes_[v.id].param = &p;
  return v;
}

Var Graph::linear(Var x, Var w, Var b) {
  const Matrix& X = value(x);
  const Matrix& W = value(w);
  const Matrix& B = value(b);
  if (X.cols() != W.rows() || B.size() != W.cols()) {
    fail(ErrorKind::ShapeMismatch, "linear: input width " + std::to_string(X.cols()) + " vs weight [" +
                                       std::to_string(W.rows()) + "," + std::to_string(W.cols()) + "], bias " +
                                       std::to_string(B.size()));
  }
  Matrix y(X.rows(), W.cols());
  y.noalias() = X * W;
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(B.data(), B.size());
  const bool rg = requires_grad(x) || requires_grad(w) || requires_grad(b);
  Var out = push(std::move(y), rg);
  if (rg) {
    const auto xi = x.id, wi = w.id, bi = b.id, oi = out.id;
    nodes_[oi].backward = [this, xi, wi, bi, oi] {
      const Matrix& gy = nodes_[oi].grad;
      if (nodes_[xi].requires_grad) grad_ref(xi).noalias() += gy * nodes_[wi].value.transpose();
      if (nodes_[wi].requires_grad) grad_ref(wi).noalias() += nodes_[xi].value.transpose() * gy;
      if (nodes_[bi].requires_grad) {
        Matrix& gb = grad_ref(bi);
        Eigen::Map<Eigen::RowVectorXd>(gb.data(), gb.size()) += gy.colwise().sum();
      }
    };
  }
  return out;
}

Var Graph::relu(Var x) {
  Matrix y = value(x).cwiseMax(0.0);
  const bool rg = requires_grad(x);
  Var out = push(std::move(y), rg);
  if (rg) {
    const auto xi = x.id, oi = out.id;
    nodes_[oi].backward = [this, xi, oi] {
      const Matrix& gy = nodes_[oi].grad;
      grad_ref(xi).array() += (nodes_[xi].value.array() > 0.0).select(gy.array(), 0.0);
    };
  }
  return out;
}

Var Graph::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(value(a) + value(b), rg);
  if (rg) {
    const auto ai = a.id, bi = b.id, oi = out.id;
    nodes_[oi].backward = [this, ai, bi, oi] {
      if (nodes_[ai].requires_grad) grad_ref(ai) += nodes_[oi].grad;
      if (nodes_[bi].requires_grad) grad_ref(bi) += nodes_[oi].grad;
    };
  }
  return out;
}

Var Graph::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(value(a) - value(b), rg);
  if (rg) {
    const auto ai = a.id, bi = b.id, oi = out.id;
    nodes_[oi].backward = [this, ai, bi, oi] {
      if (nodes_[ai].requires_grad) grad_ref(ai) += nodes_[oi].grad;
      if (nodes_[bi].requires_grad) grad_ref(bi) -= nodes_[oi].grad;
    };
  }
  return out;
}

Var Graph::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  const bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(value(a).cwiseProduct(value(b)), rg);
  if (rg) {
    const auto ai = a.id, bi = b.id, oi = out.id;
    nodes_[oi].backward = [this, ai, bi, oi] {
      const Matrix& gy = nodes_[oi].grad;
      if (nodes_[ai].requires_grad) grad_ref(ai) += gy.cwiseProduct(nodes_[bi].value);
      if (nodes_[bi].requires_grad) grad_ref(bi) += gy.cwiseProduct(nodes_[ai].value);
    };
  }
  return out;
}

Var Graph::scale(Var a, double s) {
  const bool rg = requires_grad(a);
  Var out = push(value(a) * s, rg);
  if (rg) {
    const auto ai = a.id, oi = out.id;
    nodes_[oi].backward = [this, ai, oi, s] { grad_ref(ai) += nodes_[oi].grad * s; };
  }
  return out;
}

Var Graph::sum(Var a) {
  Matrix y(1, 1);
  y(0, 0) = value(a).sum();
  const bool rg = requires_grad(a);
  Var out = push(std::move(y), rg);
  if (rg) {
    const auto ai = a.id, oi = out.id;
    nodes_[oi].backward = [this, ai, oi] { grad_ref(ai).array() += nodes_[oi].grad(0, 0); };
  }
  return out;
}

Var Graph::concat_cols(std::span<const Var> xs) {
  if (xs.empty()) fail(ErrorKind::ShapeMismatch, "concat_cols needs at least one operand");
  const Eigen::Index rows = value(xs[0]).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var v : xs) {
    if (value(v).rows() != rows) fail(ErrorKind::ShapeMismatch, "concat_cols: row counts differ");
    cols += value(v).cols();
    rg = rg || requires_grad(v);
  }
  Matrix y(rows, cols);
  Eigen::Index offset = 0;
  for (Var v : xs) {
    const Matrix& m = value(v);
    y.middleCols(offset, m.cols()) = m;
    offset += m.cols();
  }
  Var out = push(std::move(y), rg);
  if (rg) {
    std::vector<std::int32_t> ids;
    for (Var v : xs) ids.push_back(v.id);
    const auto oi = out.id;
    nodes_[oi].backward = [this, ids = std::move(ids), oi] {
      Eigen::Index off = 0;
      for (auto id : ids) {
        const Eigen::Index c = nodes_[id].value.cols();
        if (nodes_[id].requires_grad) grad_ref(id) += nodes_[oi].grad.middleCols(off, c);
        off += c;
      }
    };
  }
  return out;
}

Var Graph::rowwise_max(std::span<const Var> xs) {
  if (xs.empty()) fail(ErrorKind::ShapeMismatch, "rowwise_max needs at least one operand");
  Matrix y = value(xs[0]);
  Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arg =
      decltype(arg)::Zero(y.rows(), y.cols());
  bool rg = requires_grad(xs[0]);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const Matrix& m = value(xs[k]);
    require_same_shape(y, m, "rowwise_max");
    rg = rg || requires_grad(xs[k]);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (m.data()[i] > y.data()[i]) {
        y.data()[i] = m.data()[i];
        arg.data()[i] = static_cast<std::int32_t>(k);
      }
    }
  }
  Var out = push(std::move(y), rg);
  if (rg) {
    std::vector<std::int32_t> ids;
    for (Var v : xs) ids.push_back(v.id);
    const auto oi = out.id;
    nodes_[oi].backward = [this, ids = std::move(ids), arg = std::move(arg), oi] {
      const Matrix& gy = nodes_[oi].grad;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (!nodes_[ids[k]].requires_grad) continue;
        Matrix& g = grad_ref(ids[k]);
        for (Eigen::Index i = 0; i < gy.size(); ++i) {
          if (arg.data()[i] == static_cast<std::int32_t>(k)) g.data()[i] += gy.data()[i];
        }
      }
    };
  }
  return out;
}

Var Graph::gather_rows(Var x, std::vector<std::int32_t> rows) {
  const Matrix& X = value(x);
  Matrix y(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= X.rows()) fail(ErrorKind::ShapeMismatch, "gather_rows: index out of range");
    y.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
  }
  const bool rg = requires_grad(x);
  Var out = push(std::move(y), rg);
  if (rg) {
    const auto xi = x.id, oi = out.id;
    nodes_[oi].backward = [this, xi, oi, rows = std::move(rows)] {
      Matrix& g = grad_ref(xi);
      const Matrix& gy = nodes_[oi].grad;
      for (std::size_t r = 0; r < rows.size(); ++r) g.row(rows[r]) += gy.row(static_cast<Eigen::Index>(r));
    };
  }
  return out;
}

Var Graph::segment_max(Var x, std::vector<std::int32_t> segment, std::int32_t n_segments) {
  const Matrix& X = value(x);
  if (static_cast<Eigen::Index>(segment.size()) != X.rows()) {
    fail(ErrorKind::ShapeMismatch, "segment_max: one segment id per row required");
  }
  const Eigen::Index cols = X.cols();
  Matrix y = Matrix::Constant(n_segments, cols, -std::numeric_limits<double>::infinity());
  std::vector<std::int32_t> arg(static_cast<std::size_t>(n_segments) * cols, -1);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const auto s = segment[r];
    if (s < 0 || s >= n_segments) fail(ErrorKind::ShapeMismatch, "segment_max: segment id out of range");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (X(r, c) > y(s, c)) {
        y(s, c) = X(r, c);
        arg[s * cols + c] = static_cast<std::int32_t>(r);
      }
    }
  }
  for (std::size_t i = 0; i < arg.size(); ++i) {
    if (arg[i] < 0) y.data()[i] = 0.0;
  }
  const bool rg = requires_grad(x);
  Var out = push(std::move(y), rg);
  if (rg) {
    const auto xi = x.id, oi = out.id;
    nodes_[oi].backward = [this, xi, oi, arg = std::move(arg), cols] {
      Matrix& g = grad_ref(xi);
      const Matrix& gy = nodes_[oi].grad;
      for (std::size_t i = 0; i < arg.size(); ++i) {
        if (arg[i] >= 0) g(arg[i], static_cast<Eigen::Index>(i % cols)) += gy.data()[i];
      }
    };
  }
  return out;
}

Var Graph::softmax_cross_entropy(Var logits, std::span<const std::int32_t> targets,
                                 std::span<const double> class_weights) {
  const Matrix& Z = value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != Z.rows()) {
    fail(ErrorKind::ShapeMismatch, "softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                                       std::to_string(Z.rows()) + " rows");
  }
  if (!class_weights.empty() && static_cast<Eigen::Index>(class_weights.size()) != Z.cols()) {
    fail(ErrorKind::ShapeMismatch, "softmax_cross_entropy: one weight per class required");
  }
  Matrix probs(Z.rows(), Z.cols());
  std::vector<double> w(targets.size());
  double loss = 0.0, total_w = 0.0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    const auto t = targets[i];
    if (t < 0 || t >= Z.cols()) fail(ErrorKind::InvalidTarget, "target " + std::to_string(t) + " outside [0," + std::to_string(Z.cols()) + ")");
    const double m = Z.row(i).maxCoeff();
    const double lse = m + std::log((Z.row(i).array() - m).exp().sum());
    probs.row(i) = (Z.row(i).array() - lse).exp();
    w[i] = class_weights.empty() ? 1.0 : class_weights[t];
    loss += w[i] * (lse - Z(i, t));
    total_w += w[i];
  }
  Matrix y(1, 1);
  y(0, 0) = total_w > 0.0 ? loss / total_w : 0.0;
  const bool rg = requires_grad(logits);
  Var out = push(std::move(y), rg);
  if (rg && total_w > 0.0) {
    const auto zi = logits.id, oi = out.id;
    std::vector<std::int32_t> tg(targets.begin(), targets.end());
    nodes_[oi].backward = [this, zi, oi, probs = std::move(probs), w = std::move(w), tg = std::move(tg), total_w] {
      const double g = nodes_[oi].grad(0, 0) / total_w;
      Matrix& gz = grad_ref(zi);
      for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        gz.row(i) += (g * w[i]) * probs.row(i);
        gz(i, tg[i]) -= g * w[i];
      }
    };
  }
  return out;
}

void Graph::backward(Var loss) {
  const Matrix& L = value(loss);
  if (L.rows() != 1 || L.cols() != 1) fail(ErrorKind::ShapeMismatch, "backward needs a scalar loss");
  if (!std::isfinite(L(0, 0))) fail(ErrorKind::NonFiniteValue, "loss is not finite");
  for (auto& n : nodes_) n.has_grad = false;
  grad_ref(loss.id)(0, 0) = 1.0;
  for (std::int32_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward();
    if (n.param) n.param->grad.matrix() += n.grad;
  }
}

}  // namespace p2g::nn
