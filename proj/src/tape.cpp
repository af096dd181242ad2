#include "tropa/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace trop {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Broadcast semantics for elementwise ops: equal shapes, 1x1 against
// anything, a column against each column, or a row against each row.
bool bcast_ok(const Mat& a, const Mat& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return true;
  if (b.rows() == 1 && b.cols() == 1) return true;
  if (a.rows() == 1 && a.cols() == 1) return true;
  if (b.cols() == 1 && b.rows() == a.rows()) return true;
  if (b.rows() == 1 && b.cols() == a.cols()) return true;
  if (a.cols() == 1 && a.rows() == b.rows()) return true;
  if (a.rows() == 1 && a.cols() == b.cols()) return true;
  return false;
}

Mat expand_to(const Mat& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == 1) return Mat::Constant(rows, cols, m(0, 0));
  if (m.cols() == 1 && m.rows() == rows) return m * Mat::Ones(1, cols);
  if (m.rows() == 1 && m.cols() == cols) return Mat::Ones(rows, 1) * m;
  throw ShapeError("tape: cannot broadcast " + shape_str(m));
}

// Adjoint of expand_to: sum the incoming gradient over broadcast axes.
Mat reduce_to(const Mat& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Mat::Constant(1, 1, g.sum());
  if (cols == 1 && rows == g.rows()) return g.rowwise().sum();
  if (rows == 1 && cols == g.cols()) return g.colwise().sum();
  throw ShapeError("tape: cannot reduce gradient " + shape_str(g));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.tape != this || v.id >= size())
    throw ContractError("tape: variable does not belong to this tape");
  return nodes_[static_cast<size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.tape != this || v.id >= size())
    throw ContractError("tape: variable does not belong to this tape");
  return nodes_[static_cast<size_t>(v.id)];
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1, this};
}

Var Tape::input(const Mat& value) {
  Node n;
  n.val = value;
  return push(std::move(n));
}

Var Tape::param(const Mat& value) {
  Node n;
  n.val = value;
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (!bcast_ok(na.val, nb.val))
    throw ShapeError("add: incompatible shapes " + shape_str(na.val) + " vs " + shape_str(nb.val));
  const Eigen::Index r = std::max(na.val.rows(), nb.val.rows());
  const Eigen::Index c = std::max(na.val.cols(), nb.val.cols());
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.val = expand_to(na.val, r, c) + expand_to(nb.val, r, c);
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (!bcast_ok(na.val, nb.val))
    throw ShapeError("sub: incompatible shapes " + shape_str(na.val) + " vs " + shape_str(nb.val));
  const Eigen::Index r = std::max(na.val.rows(), nb.val.rows());
  const Eigen::Index c = std::max(na.val.cols(), nb.val.cols());
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.val = expand_to(na.val, r, c) - expand_to(nb.val, r, c);
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (!bcast_ok(na.val, nb.val))
    throw ShapeError("mul: incompatible shapes " + shape_str(na.val) + " vs " + shape_str(nb.val));
  const Eigen::Index r = std::max(na.val.rows(), nb.val.rows());
  const Eigen::Index c = std::max(na.val.cols(), nb.val.cols());
  Node n;
  n.op = Op::kMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.val = expand_to(na.val, r, c).cwiseProduct(expand_to(nb.val, r, c));
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.val.cols() != nb.val.rows())
    throw ShapeError("matmul: " + shape_str(na.val) + " vs " + shape_str(nb.val));
  Node n;
  n.op = Op::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.val = na.val * nb.val;
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kTranspose;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.val = na.val.transpose();
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kRelu;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.val = na.val.cwiseMax(0.0);
  return push(std::move(n));
}

Var Tape::log(Var a) {
  const Node& na = node(a);
  if ((na.val.array() <= 0.0).any())
    throw DomainError("log: non-positive entry");
  Node n;
  n.op = Op::kLog;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.val = na.val.array().log();
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kExp;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.val = na.val.array().exp();
  return push(std::move(n));
}

Var Tape::reduce_max(Var a, int axis) {
  const Node& na = node(a);
  if (axis != 0 && axis != 1) throw ContractError("reduce_max: axis must be 0 or 1");
  Node n;
  n.op = Op::kReduceMax;
  n.a = a.id;
  n.iarg = axis;
  n.needs_grad = na.needs_grad;
  if (axis == 1) {
    n.val.resize(na.val.rows(), 1);
    n.winners.resize(static_cast<size_t>(na.val.rows()));
    for (Eigen::Index i = 0; i < na.val.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < na.val.cols(); ++j)
        if (na.val(i, j) > na.val(i, best)) best = j;
      n.val(i, 0) = na.val(i, best);
      n.winners[static_cast<size_t>(i)] = static_cast<int>(best);
    }
  } else {
    n.val.resize(1, na.val.cols());
    n.winners.resize(static_cast<size_t>(na.val.cols()));
    for (Eigen::Index j = 0; j < na.val.cols(); ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < na.val.rows(); ++i)
        if (na.val(i, j) > na.val(best, j)) best = i;
      n.val(0, j) = na.val(best, j);
      n.winners[static_cast<size_t>(j)] = static_cast<int>(best);
    }
  }
  return push(std::move(n));
}

Var Tape::reduce_min(Var a, int axis) {
  const Node& na = node(a);
  if (axis != 0 && axis != 1) throw ContractError("reduce_min: axis must be 0 or 1");
  Node n;
  n.op = Op::kReduceMin;
  n.a = a.id;
  n.iarg = axis;
  n.needs_grad = na.needs_grad;
  if (axis == 1) {
    n.val.resize(na.val.rows(), 1);
    n.winners.resize(static_cast<size_t>(na.val.rows()));
    for (Eigen::Index i = 0; i < na.val.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < na.val.cols(); ++j)
        if (na.val(i, j) < na.val(i, best)) best = j;
      n.val(i, 0) = na.val(i, best);
      n.winners[static_cast<size_t>(i)] = static_cast<int>(best);
    }
  } else {
    n.val.resize(1, na.val.cols());
    n.winners.resize(static_cast<size_t>(na.val.cols()));
    for (Eigen::Index j = 0; j < na.val.cols(); ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < na.val.rows(); ++i)
        if (na.val(i, j) < na.val(best, j)) best = i;
      n.val(0, j) = na.val(best, j);
      n.winners[static_cast<size_t>(j)] = static_cast<int>(best);
    }
  }
  return push(std::move(n));
}

Var Tape::reduce_sum(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kReduceSum;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.val = Mat::Constant(1, 1, na.val.sum());
  return push(std::move(n));
}

Var Tape::reduce_mean(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kReduceMean;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.val = Mat::Constant(1, 1, na.val.mean());
  return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kSoftmaxRows;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.val.resize(na.val.rows(), na.val.cols());
  for (Eigen::Index i = 0; i < na.val.rows(); ++i) {
    const double m = na.val.row(i).maxCoeff();
    Eigen::ArrayXd e = (na.val.row(i).array() - m).exp();
    n.val.row(i) = (e / e.sum()).matrix();
  }
  return push(std::move(n));
}

Var Tape::maxplus_matmul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.val.cols() != nb.val.rows())
    throw ShapeError("maxplus_matmul: " + shape_str(na.val) + " vs " + shape_str(nb.val));
  if (na.val.cols() == 0) throw ShapeError("maxplus_matmul: empty inner dimension");
  Node n;
  n.op = Op::kMaxPlusMatMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  const Eigen::Index rows = na.val.rows(), cols = nb.val.cols(), inner = na.val.cols();
  n.val.resize(rows, cols);
  n.winners.resize(static_cast<size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      Eigen::Index best = 0;
      double bv = na.val(i, 0) + nb.val(0, j);
      for (Eigen::Index t = 1; t < inner; ++t) {
        const double v = na.val(i, t) + nb.val(t, j);
        if (v > bv) {
          bv = v;
          best = t;
        }
      }
      n.val(i, j) = bv;
      n.winners[static_cast<size_t>(i * cols + j)] = static_cast<int>(best);
    }
  }
  return push(std::move(n));
}

Var Tape::hilbert_pairwise(Var q, Var k) {
  const Node& nq = node(q);
  const Node& nk = node(k);
  if (nq.val.cols() != nk.val.cols())
    throw ShapeError("hilbert_pairwise: feature dims " + shape_str(nq.val) + " vs " + shape_str(nk.val));
  if (nq.val.cols() == 0) throw ShapeError("hilbert_pairwise: empty feature dimension");
  Node n;
  n.op = Op::kHilbertPairwise;
  n.a = q.id;
  n.b = k.id;
  n.needs_grad = nq.needs_grad || nk.needs_grad;
  const Eigen::Index rows = nq.val.rows(), cols = nk.val.rows(), dim = nq.val.cols();
  n.val.resize(rows, cols);
  n.winners.resize(static_cast<size_t>(rows * cols));
  n.winners2.resize(static_cast<size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      Eigen::Index amax = 0, amin = 0;
      double hi = nq.val(i, 0) - nk.val(j, 0);
      double lo = hi;
      for (Eigen::Index d = 1; d < dim; ++d) {
        const double diff = nq.val(i, d) - nk.val(j, d);
        if (diff > hi) {
          hi = diff;
          amax = d;
        }
        if (diff < lo) {
          lo = diff;
          amin = d;
        }
      }
      n.val(i, j) = hi - lo;
      n.winners[static_cast<size_t>(i * cols + j)] = static_cast<int>(amax);
      n.winners2[static_cast<size_t>(i * cols + j)] = static_cast<int>(amin);
    }
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<int> rows) {
  const Node& na = node(a);
  for (int r : rows) {
    if (r < 0 || r >= na.val.rows())
      throw ShapeError("gather_rows: index " + std::to_string(r) + " out of range");
  }
  Node n;
  n.op = Op::kGatherRows;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.val.resize(static_cast<Eigen::Index>(rows.size()), na.val.cols());
  for (size_t i = 0; i < rows.size(); ++i) n.val.row(static_cast<Eigen::Index>(i)) = na.val.row(rows[i]);
  n.gather = std::move(rows);
  return push(std::move(n));
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  Eigen::Index rows = node(parts[0]).val.rows();
  Eigen::Index cols = 0;
  bool needs = false;
  for (Var p : parts) {
    const Node& np = node(p);
    if (np.val.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += np.val.cols();
    needs = needs || np.needs_grad;
  }
  Node n;
  n.op = Op::kConcatCols;
  n.needs_grad = needs;
  n.val.resize(rows, cols);
  Eigen::Index off = 0;
  for (Var p : parts) {
    const Node& np = node(p);
    n.val.middleCols(off, np.val.cols()) = np.val;
    off += np.val.cols();
    n.gather.push_back(p.id);
  }
  return push(std::move(n));
}

Var Tape::add_const(Var a, double c) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kAddConst;
  n.a = a.id;
  n.carg = c;
  n.needs_grad = na.needs_grad;
  n.val = na.val.array() + c;
  return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
  const Node& na = node(a);
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.carg = c;
  n.needs_grad = na.needs_grad;
  n.val = na.val * c;
  return push(std::move(n));
}

Var Tape::bce_with_logits(Var logits, const Mat& targets) {
  const Node& nl = node(logits);
  if (nl.val.rows() != targets.rows() || nl.val.cols() != targets.cols())
    throw ShapeError("bce_with_logits: " + shape_str(nl.val) + " vs targets " + shape_str(targets));
  if (nl.val.size() == 0) throw ShapeError("bce_with_logits: empty input");
  Node n;
  n.op = Op::kBceLogits;
  n.a = logits.id;
  n.needs_grad = nl.needs_grad;
  n.aux = targets;
  double total = 0.0;
  for (Eigen::Index i = 0; i < nl.val.rows(); ++i) {
    for (Eigen::Index j = 0; j < nl.val.cols(); ++j) {
      const double z = nl.val(i, j);
      const double y = targets(i, j);
      total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
  }
  n.val = Mat::Constant(1, 1, total / static_cast<double>(nl.val.size()));
  return push(std::move(n));
}

Var Tape::mse(Var pred, const Mat& targets) {
  const Node& np = node(pred);
  if (np.val.rows() != targets.rows() || np.val.cols() != targets.cols())
    throw ShapeError("mse: " + shape_str(np.val) + " vs targets " + shape_str(targets));
  if (np.val.size() == 0) throw ShapeError("mse: empty input");
  Node n;
  n.op = Op::kMse;
  n.a = pred.id;
  n.needs_grad = np.needs_grad;
  n.aux = targets;
  n.val = Mat::Constant(1, 1, (np.val - targets).squaredNorm() / static_cast<double>(np.val.size()));
  return push(std::move(n));
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
  n.grad += g;
}

void Tape::backward(Var root) {
  Node& r = node(root);
  if (r.val.rows() != 1 || r.val.cols() != 1)
    throw ContractError("backward: root must be 1x1, got " + shape_str(r.val));
  if (!r.needs_grad) return;
  if (r.grad.size() == 0) r.grad = Mat::Zero(1, 1);
  r.grad(0, 0) += 1.0;
  for (int id = root.id; id >= 0; --id) backprop_node(id);
}

void Tape::backprop_node(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.size() == 0 || n.op == Op::kLeaf) return;
  const Mat& g = n.grad;
  switch (n.op) {
    case Op::kAdd: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      const Node& nb = nodes_[static_cast<size_t>(n.b)];
      accumulate(n.a, reduce_to(g, na.val.rows(), na.val.cols()));
      accumulate(n.b, reduce_to(g, nb.val.rows(), nb.val.cols()));
      break;
    }
    case Op::kSub: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      const Node& nb = nodes_[static_cast<size_t>(n.b)];
      accumulate(n.a, reduce_to(g, na.val.rows(), na.val.cols()));
      accumulate(n.b, reduce_to(-g, nb.val.rows(), nb.val.cols()));
      break;
    }
    case Op::kMul: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      const Node& nb = nodes_[static_cast<size_t>(n.b)];
      const Mat ae = expand_to(na.val, g.rows(), g.cols());
      const Mat be = expand_to(nb.val, g.rows(), g.cols());
      accumulate(n.a, reduce_to(Mat(g.cwiseProduct(be)), na.val.rows(), na.val.cols()));
      accumulate(n.b, reduce_to(Mat(g.cwiseProduct(ae)), nb.val.rows(), nb.val.cols()));
      break;
    }
    case Op::kMatMul: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      const Node& nb = nodes_[static_cast<size_t>(n.b)];
      accumulate(n.a, g * nb.val.transpose());
      accumulate(n.b, na.val.transpose() * g);
      break;
    }
    case Op::kTranspose:
      accumulate(n.a, g.transpose());
      break;
    case Op::kRelu: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      accumulate(n.a, Mat(g.cwiseProduct((na.val.array() > 0.0).cast<double>().matrix())));
      break;
    }
    case Op::kLog: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      accumulate(n.a, Mat(g.cwiseQuotient(na.val)));
      break;
    }
    case Op::kExp:
      accumulate(n.a, Mat(g.cwiseProduct(n.val)));
      break;
    case Op::kReduceMax:
    case Op::kReduceMin: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      Mat ga = Mat::Zero(na.val.rows(), na.val.cols());
      if (n.iarg == 1) {
        for (Eigen::Index i = 0; i < na.val.rows(); ++i)
          ga(i, n.winners[static_cast<size_t>(i)]) += g(i, 0);
      } else {
        for (Eigen::Index j = 0; j < na.val.cols(); ++j)
          ga(n.winners[static_cast<size_t>(j)], j) += g(0, j);
      }
      accumulate(n.a, ga);
      break;
    }
    case Op::kReduceSum: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      accumulate(n.a, Mat(Mat::Constant(na.val.rows(), na.val.cols(), g(0, 0))));
      break;
    }
    case Op::kReduceMean: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      accumulate(n.a, Mat(Mat::Constant(na.val.rows(), na.val.cols(),
                                        g(0, 0) / static_cast<double>(na.val.size()))));
      break;
    }
    case Op::kSoftmaxRows: {
      Mat ga(n.val.rows(), n.val.cols());
      for (Eigen::Index i = 0; i < n.val.rows(); ++i) {
        const double dot = g.row(i).dot(n.val.row(i));
        ga.row(i) = n.val.row(i).cwiseProduct(g.row(i) - Eigen::RowVectorXd::Constant(n.val.cols(), dot));
      }
      accumulate(n.a, ga);
      break;
    }
    case Op::kMaxPlusMatMul: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      const Node& nb = nodes_[static_cast<size_t>(n.b)];
      Mat ga = Mat::Zero(na.val.rows(), na.val.cols());
      Mat gb = Mat::Zero(nb.val.rows(), nb.val.cols());
      const Eigen::Index cols = n.val.cols();
      for (Eigen::Index i = 0; i < n.val.rows(); ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          const int t = n.winners[static_cast<size_t>(i * cols + j)];
          ga(i, t) += g(i, j);
          gb(t, j) += g(i, j);
        }
      }
      accumulate(n.a, ga);
      accumulate(n.b, gb);
      break;
    }
    case Op::kHilbertPairwise: {
      const Node& nq = nodes_[static_cast<size_t>(n.a)];
      const Node& nk = nodes_[static_cast<size_t>(n.b)];
      Mat gq = Mat::Zero(nq.val.rows(), nq.val.cols());
      Mat gk = Mat::Zero(nk.val.rows(), nk.val.cols());
      const Eigen::Index cols = n.val.cols();
      for (Eigen::Index i = 0; i < n.val.rows(); ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          const double gij = g(i, j);
          const int dmax = n.winners[static_cast<size_t>(i * cols + j)];
          const int dmin = n.winners2[static_cast<size_t>(i * cols + j)];
          gq(i, dmax) += gij;
          gk(j, dmax) -= gij;
          gq(i, dmin) -= gij;
          gk(j, dmin) += gij;
        }
      }
      accumulate(n.a, gq);
      accumulate(n.b, gk);
      break;
    }
    case Op::kGatherRows: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      Mat ga = Mat::Zero(na.val.rows(), na.val.cols());
      for (size_t i = 0; i < n.gather.size(); ++i)
        ga.row(n.gather[i]) += g.row(static_cast<Eigen::Index>(i));
      accumulate(n.a, ga);
      break;
    }
    case Op::kConcatCols: {
      Eigen::Index off = 0;
      for (int pid : n.gather) {
        const Node& np = nodes_[static_cast<size_t>(pid)];
        accumulate(pid, g.middleCols(off, np.val.cols()));
        off += np.val.cols();
      }
      break;
    }
    case Op::kAddConst:
      accumulate(n.a, g);
      break;
    case Op::kScale:
      accumulate(n.a, Mat(g * n.carg));
      break;
    case Op::kBceLogits: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      const double s = g(0, 0) / static_cast<double>(na.val.size());
      Mat ga(na.val.rows(), na.val.cols());
      for (Eigen::Index i = 0; i < na.val.rows(); ++i)
        for (Eigen::Index j = 0; j < na.val.cols(); ++j)
          ga(i, j) = s * (sigmoid(na.val(i, j)) - n.aux(i, j));
      accumulate(n.a, ga);
      break;
    }
    case Op::kMse: {
      const Node& na = nodes_[static_cast<size_t>(n.a)];
      const double s = 2.0 * g(0, 0) / static_cast<double>(na.val.size());
      accumulate(n.a, Mat((na.val - n.aux) * s));
      break;
    }
    case Op::kLeaf:
      break;
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.resize(0, 0);
}

Mat Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Mat::Zero(n.val.rows(), n.val.cols());
  return n.grad;
}

double finite_diff_check(const std::function<Var(Tape&, Var)>& fn, const Mat& x, double h) {
  Tape t;
  Var leaf = t.param(x);
  Var root = fn(t, leaf);
  t.backward(root);
  const Mat analytic = t.grad(leaf);

  auto eval = [&fn](const Mat& pt) {
    Tape s;
    Var l = s.param(pt);
    return s.value(fn(s, l))(0, 0);
  };

  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Mat hi = x, lo = x;
      hi(i, j) += h;
      lo(i, j) -= h;
      const double central = (eval(hi) - eval(lo)) / (2.0 * h);
      const double err = std::abs(analytic(i, j) - central) / (std::abs(central) + 1e-8);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace trop
