#ifndef HISTRED_MODEL_AUTODIFF_HPP
#define HISTRED_MODEL_AUTODIFF_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace histred::ad {

using Matrix = Eigen::MatrixXd;

class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument("ShapeError: " + what) {}
};

struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape over dense matrices. Nodes are appended in topological order, so backward() is a
/// single reverse sweep. A tape is single-use and not thread-safe; build one per forward pass.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad)>;

  Var leaf(Matrix value, bool requires_grad = true) { return push(std::move(value), requires_grad, nullptr); }
  Var constant(Matrix value) { return push(std::move(value), false, nullptr); }

  /// Appends an op result. `backward` receives this node's gradient and must call accumulate() on parents.
  Var push(Matrix value, bool requires_grad, Backward backward) {
    nodes_.push_back({std::move(value), Matrix(), std::move(backward), requires_grad});
    return {nodes_.size() - 1};
  }

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool requires_grad(std::initializer_list<Var> vs) const {
    for (auto v : vs)
      if (requires_grad(v)) return true;
    return false;
  }

  /// Gradient of the last backward() target w.r.t. v; zeros if v did not influence it.
  Matrix grad(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void accumulate(Var v, const Matrix& g) {
    auto& n = nodes_.at(v.id);
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  void backward(Var target) {
    const auto& t = nodes_.at(target.id).value;
    if (t.rows() != 1 || t.cols() != 1) throw ShapeError("backward target must be 1x1");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[target.id].grad = Matrix::Ones(1, 1);
    for (std::size_t i = target.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.backward || n.grad.size() == 0) continue;
      const Matrix g = n.grad;  // backward may touch other nodes' storage
      n.backward(*this, g);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

inline std::string shape_str(const Matrix& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

// ---------------------------------------------------------------------------
// Ops. Row convention: a sequence of n vectors of width d is an n x d matrix.

inline Var matmul(Tape& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.cols() != B.rows()) throw ShapeError("matmul " + shape_str(A) + " * " + shape_str(B));
  return t.push(A * B, t.requires_grad({a, b}), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

/// a * b^T
inline Var matmul_nt(Tape& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.cols() != B.cols()) throw ShapeError("matmul_nt " + shape_str(A) + " * " + shape_str(B) + "^T");
  return t.push(A * B.transpose(), t.requires_grad({a, b}), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b));
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * t.value(a));
  });
}

inline Var add(Tape& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw ShapeError("add " + shape_str(A) + " + " + shape_str(B));
  return t.push(A + B, t.requires_grad({a, b}), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

/// Adds a 1 x d row to every row of a.
inline Var add_row(Tape& t, Var a, Var row) {
  const auto& A = t.value(a);
  const auto& R = t.value(row);
  if (R.rows() != 1 || R.cols() != A.cols()) throw ShapeError("add_row " + shape_str(A) + " + " + shape_str(R));
  Matrix out = A.rowwise() + R.row(0);
  return t.push(std::move(out), t.requires_grad({a, row}), [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

inline Var scale(Tape& t, Var a, double s) {
  return t.push(t.value(a) * s, t.requires_grad(a), [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

/// Row-wise softmax. Each output row is a probability vector.
inline Var softmax_rows(Tape& t, Var a) {
  const auto& A = t.value(a);
  Matrix P(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double mx = A.row(i).maxCoeff();
    P.row(i) = (A.row(i).array() - mx).exp().matrix();
    P.row(i) /= P.row(i).sum();
  }
  const bool rg = t.requires_grad(a);
  return t.push(P, rg, [a, P](Tape& t, const Matrix& g) {
    Matrix d(P.rows(), P.cols());
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      const double dot = g.row(i).dot(P.row(i));
      d.row(i) = P.row(i).array() * (g.row(i).array() - dot);
    }
    t.accumulate(a, d);
  });
}

/// Row-wise layer normalisation with learnable 1 x d gain and bias.
inline Var layer_norm_rows(Tape& t, Var x, Var gamma, Var beta, double eps = 1e-5) {
  const auto& X = t.value(x);
  const auto& G = t.value(gamma);
  const auto& B = t.value(beta);
  const auto d = X.cols();
  if (G.rows() != 1 || G.cols() != d || B.rows() != 1 || B.cols() != d) throw ShapeError("layer_norm parameters");
  Matrix xhat(X.rows(), d);
  Eigen::VectorXd inv_std(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double mu = X.row(i).mean();
    const double var = (X.row(i).array() - mu).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (X.row(i).array() - mu) * inv_std(i);
  }
  Matrix out = (xhat.array().rowwise() * G.row(0).array()).matrix();
  out.rowwise() += B.row(0);
  return t.push(std::move(out), t.requires_grad({x, gamma, beta}), [x, gamma, beta, xhat, inv_std](Tape& t, const Matrix& g) {
    const auto& G = t.value(gamma);
    if (t.requires_grad(gamma)) t.accumulate(gamma, (g.array() * xhat.array()).colwise().sum().matrix());
    if (t.requires_grad(beta)) t.accumulate(beta, g.colwise().sum());
    if (t.requires_grad(x)) {
      const double d = static_cast<double>(xhat.cols());
      Matrix dx(xhat.rows(), xhat.cols());
      for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
        const Eigen::ArrayXXd gh = g.row(i).array() * G.row(0).array();
        const double s1 = gh.sum();
        const double s2 = (gh * xhat.row(i).array()).sum();
        dx.row(i) = (inv_std(i) / d) * (d * gh - s1 - xhat.row(i).array() * s2).matrix();
      }
      t.accumulate(x, dx);
    }
  });
}

/// tanh-approximated GELU, elementwise.
inline Var gelu(Tape& t, Var a) {
  static constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  const auto& A = t.value(a);
  const Eigen::ArrayXXd x = A.array();
  const Eigen::ArrayXXd u = c * (x + 0.044715 * x.cube());
  const Eigen::ArrayXXd th = u.tanh();
  Matrix out = (0.5 * x * (1.0 + th)).matrix();
  return t.push(std::move(out), t.requires_grad(a), [a, x, th](Tape& t, const Matrix& g) {
    const Eigen::ArrayXXd du = c * (1.0 + 3.0 * 0.044715 * x.square());
    const Eigen::ArrayXXd d = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th.square()) * du;
    t.accumulate(a, (g.array() * d).matrix());
  });
}

inline Var slice_cols(Tape& t, Var a, Eigen::Index start, Eigen::Index count) {
  const auto& A = t.value(a);
  if (start < 0 || count < 0 || start + count > A.cols()) throw ShapeError("slice_cols out of range");
  Matrix out = A.middleCols(start, count);
  const auto rows = A.rows(), cols = A.cols();
  return t.push(std::move(out), t.requires_grad(a), [a, start, count, rows, cols](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(rows, cols);
    full.middleCols(start, count) = g;
    t.accumulate(a, full);
  });
}

inline Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const auto rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (auto p : parts) {
    if (t.value(p).rows() != rows) throw ShapeError("concat_cols row mismatch");
    cols += t.value(p).cols();
    rg = rg || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (auto p : parts) {
    out.middleCols(off, t.value(p).cols()) = t.value(p);
    off += t.value(p).cols();
  }
  return t.push(std::move(out), rg, [parts](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (auto p : parts) {
      const auto c = t.value(p).cols();
      if (t.requires_grad(p)) t.accumulate(p, g.middleCols(off, c));
      off += c;
    }
  });
}

/// out[i] = table[idx[i]]; embedding lookup and pair expansion.
inline Var gather_rows(Tape& t, Var table, std::vector<Eigen::Index> idx) {
  const auto& T = t.value(table);
  Matrix out(static_cast<Eigen::Index>(idx.size()), T.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= T.rows()) throw ShapeError("gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = T.row(idx[i]);
  }
  const auto rows = T.rows(), cols = T.cols();
  return t.push(std::move(out), t.requires_grad(table), [table, idx = std::move(idx), rows, cols](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(rows, cols);
    for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(table, full);
  });
}

/// 1 x d mean of the selected rows.
inline Var mean_rows(Tape& t, Var a, std::vector<Eigen::Index> idx) {
  const auto& A = t.value(a);
  if (idx.empty()) throw ShapeError("mean_rows over no rows");
  Matrix out = Matrix::Zero(1, A.cols());
  for (auto i : idx) {
    if (i < 0 || i >= A.rows()) throw ShapeError("mean_rows index out of range");
    out += A.row(i);
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  out *= inv;
  const auto rows = A.rows(), cols = A.cols();
  return t.push(std::move(out), t.requires_grad(a), [a, idx = std::move(idx), inv, rows, cols](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(rows, cols);
    for (auto i : idx) full.row(i) += inv * g.row(0);
    t.accumulate(a, full);
  });
}

/// 1 x d column-wise log-sum-exp of the selected rows.
inline Var logsumexp_rows(Tape& t, Var a, std::vector<Eigen::Index> idx) {
  const auto& A = t.value(a);
  if (idx.empty()) throw ShapeError("logsumexp_rows over no rows");
  Matrix sel(static_cast<Eigen::Index>(idx.size()), A.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= A.rows()) throw ShapeError("logsumexp_rows index out of range");
    sel.row(static_cast<Eigen::Index>(k)) = A.row(idx[k]);
  }
  const Eigen::RowVectorXd mx = sel.colwise().maxCoeff();
  const Matrix ex = (sel.rowwise() - mx).array().exp().matrix();
  const Eigen::RowVectorXd sum = ex.colwise().sum();
  Matrix out = (sum.array().log() + mx.array()).matrix();
  Matrix w = ex.array().rowwise() / sum.array();  // softmax weights per column
  const auto rows = A.rows(), cols = A.cols();
  return t.push(std::move(out), t.requires_grad(a), [a, idx = std::move(idx), w, rows, cols](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(rows, cols);
    for (std::size_t k = 0; k < idx.size(); ++k)
      full.row(idx[k]) += (w.row(static_cast<Eigen::Index>(k)).array() * g.row(0).array()).matrix();
    t.accumulate(a, full);
  });
}

/// Stacks 1 x d rows into a k x d matrix.
inline Var stack_rows(Tape& t, const std::vector<Var>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows of nothing");
  const auto d = t.value(rows[0]).cols();
  Matrix out(static_cast<Eigen::Index>(rows.size()), d);
  bool rg = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = t.value(rows[i]);
    if (r.rows() != 1 || r.cols() != d) throw ShapeError("stack_rows expects 1 x d rows");
    out.row(static_cast<Eigen::Index>(i)) = r;
    rg = rg || t.requires_grad(rows[i]);
  }
  return t.push(std::move(out), rg, [rows](Tape& t, const Matrix& g) {
    for (std::size_t i = 0; i < rows.size(); ++i) t.accumulate(rows[i], g.row(static_cast<Eigen::Index>(i)));
  });
}

/// Bilinear pair scores: out(p, r) = head.row(p) * W_r * tail.row(p)^T + b(r).
/// W stacks the c relation matrices vertically: (c*d) x d. b is 1 x c.
inline Var bilinear(Tape& t, Var head, Var tail, Var weights, Var bias) {
  const auto& H = t.value(head);
  const auto& T = t.value(tail);
  const auto& W = t.value(weights);
  const auto& B = t.value(bias);
  const auto d = H.cols();
  if (T.rows() != H.rows() || T.cols() != d || W.cols() != d || W.rows() % d != 0)
    throw ShapeError("bilinear " + shape_str(H) + " " + shape_str(T) + " " + shape_str(W));
  const auto c = W.rows() / d;
  if (B.rows() != 1 || B.cols() != c) throw ShapeError("bilinear bias " + shape_str(B));
  Matrix out(H.rows(), c);
  for (Eigen::Index r = 0; r < c; ++r) {
    const Matrix HW = H * W.middleRows(r * d, d);
    out.col(r) = (HW.array() * T.array()).rowwise().sum().matrix();
  }
  out.rowwise() += B.row(0);
  return t.push(std::move(out), t.requires_grad({head, tail, weights, bias}),
                [head, tail, weights, bias, d, c](Tape& t, const Matrix& g) {
                  const auto& H = t.value(head);
                  const auto& T = t.value(tail);
                  const auto& W = t.value(weights);
                  Matrix dH = Matrix::Zero(H.rows(), d), dT = Matrix::Zero(T.rows(), d);
                  Matrix dW = Matrix::Zero(W.rows(), d);
                  for (Eigen::Index r = 0; r < c; ++r) {
                    const auto Wr = W.middleRows(r * d, d);
                    const Eigen::VectorXd gr = g.col(r);
                    dH += gr.asDiagonal() * (T * Wr.transpose());
                    dT += gr.asDiagonal() * (H * Wr);
                    dW.middleRows(r * d, d) = H.transpose() * gr.asDiagonal() * T;
                  }
                  if (t.requires_grad(head)) t.accumulate(head, dH);
                  if (t.requires_grad(tail)) t.accumulate(tail, dT);
                  if (t.requires_grad(weights)) t.accumulate(weights, dW);
                  if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
                });
}

/// out.row(i) = alpha[i] * a.row(i) + (1 - alpha[i]) * b.row(i)
inline Var mix_rows(Tape& t, Var a, Var b, Eigen::VectorXd alpha) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols() || alpha.size() != A.rows()) throw ShapeError("mix_rows shapes");
  Matrix out(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) out.row(i) = alpha(i) * A.row(i) + (1.0 - alpha(i)) * B.row(i);
  return t.push(std::move(out), t.requires_grad({a, b}), [a, b, alpha](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, alpha.asDiagonal() * g);
    if (t.requires_grad(b)) t.accumulate(b, (1.0 - alpha.array()).matrix().asDiagonal() * g);
  });
}

/// Elementwise product.
inline Var mul(Tape& t, Var a, Var b) {
  const auto& A = t.value(a);
  const auto& B = t.value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw ShapeError("mul " + shape_str(A) + " .* " + shape_str(B));
  return t.push((A.array() * B.array()).matrix(), t.requires_grad({a, b}), [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, (g.array() * t.value(b).array()).matrix());
    if (t.requires_grad(b)) t.accumulate(b, (g.array() * t.value(a).array()).matrix());
  });
}

/// Sums consecutive groups of `group` columns: n x (c*group) -> n x c.
inline Var sum_col_groups(Tape& t, Var a, Eigen::Index group) {
  const auto& A = t.value(a);
  if (group <= 0 || A.cols() % group != 0) throw ShapeError("sum_col_groups width");
  const auto c = A.cols() / group;
  Matrix out(A.rows(), c);
  for (Eigen::Index r = 0; r < c; ++r) out.col(r) = A.middleCols(r * group, group).rowwise().sum();
  return t.push(std::move(out), t.requires_grad(a), [a, group, c](Tape& t, const Matrix& g) {
    Matrix d(g.rows(), c * group);
    for (Eigen::Index r = 0; r < c; ++r) d.middleCols(r * group, group) = g.col(r).replicate(1, group);
    t.accumulate(a, d);
  });
}

/// Mean softmax cross-entropy over rows; targets[i] is the class of row i. Returns 1 x 1.
inline Var cross_entropy(Tape& t, Var logits, const std::vector<int>& targets) {
  const auto& L = t.value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != L.rows() || L.rows() == 0) throw ShapeError("cross_entropy targets");
  Matrix P(L.rows(), L.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const int y = targets[static_cast<std::size_t>(i)];
    if (y < 0 || y >= L.cols()) throw ShapeError("cross_entropy target out of range");
    const double mx = L.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (L.row(i).array() - mx).exp().matrix();
    const double z = e.sum();
    P.row(i) = e / z;
    loss += -(L(i, y) - mx - std::log(z));
  }
  const double n = static_cast<double>(L.rows());
  Matrix out(1, 1);
  out(0, 0) = loss / n;
  return t.push(std::move(out), t.requires_grad(logits), [logits, P, targets, n](Tape& t, const Matrix& g) {
    Matrix d = P;
    for (std::size_t i = 0; i < targets.size(); ++i) d(static_cast<Eigen::Index>(i), targets[i]) -= 1.0;
    t.accumulate(logits, d * (g(0, 0) / n));
  });
}

/// sum(a .* w) as 1 x 1; a convenient scalar probe for gradient checks.
inline Var weighted_sum(Tape& t, Var a, const Matrix& w) {
  const auto& A = t.value(a);
  if (A.rows() != w.rows() || A.cols() != w.cols()) throw ShapeError("weighted_sum shapes");
  Matrix out(1, 1);
  out(0, 0) = (A.array() * w.array()).sum();
  return t.push(std::move(out), t.requires_grad(a), [a, w](Tape& t, const Matrix& g) { t.accumulate(a, w * g(0, 0)); });
}

}  // namespace histred::ad

#endif  // HISTRED_MODEL_AUTODIFF_HPP
