#pragma once

// Define-by-run reverse-mode autodiff over dense double matrices.
//
// Values are computed eagerly as the graph is built; backward() walks the
// node list in reverse. Piecewise ops (relu, max/min reductions, max-plus
// products, pairwise Hilbert distances) cache their winning indices on the
// forward pass and route the subgradient there; ties break to the lowest
// index.

#include "tropa/tropical.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace trop {

class Tape;

struct Var {
  int id = -1;
  Tape* tape = nullptr;
  bool valid() const { return id >= 0 && tape != nullptr; }
};

class Tape {
 public:
  enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kMatMul,
    kTranspose,
    kRelu,
    kLog,
    kExp,
    kReduceMax,
    kReduceMin,
    kReduceSum,
    kReduceMean,
    kSoftmaxRows,
    kMaxPlusMatMul,
    kHilbertPairwise,
    kGatherRows,
    kConcatCols,
    kAddConst,
    kScale,
    kBceLogits,
    kMse,
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Constant leaf; gradients are not tracked through it.
  Var input(const Mat& value);
  /// Trainable leaf; grad() is populated by backward().
  Var param(const Mat& value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var relu(Var a);
  Var log(Var a);  // requires strictly positive entries
  Var exp(Var a);
  Var reduce_max(Var a, int axis);  // axis 0: over rows -> 1 x m; axis 1: over cols -> n x 1
  Var reduce_min(Var a, int axis);
  Var reduce_sum(Var a);   // all entries -> 1 x 1
  Var reduce_mean(Var a);  // all entries -> 1 x 1
  Var softmax_rows(Var a);
  /// out(i,j) = max_t (a(i,t) + b(t,j)); subgradient flows to the winner.
  Var maxplus_matmul(Var a, Var b);
  /// Rows of q against rows of k: out(i,j) = max_d(q(i,d) - k(j,d)) - min_d(q(i,d) - k(j,d)).
  Var hilbert_pairwise(Var q, Var k);
  Var gather_rows(Var a, std::vector<int> rows);
  Var concat_cols(const std::vector<Var>& parts);
  Var add_const(Var a, double c);
  Var scale(Var a, double c);
  /// Mean binary cross-entropy on logits against constant targets in {0,1}.
  Var bce_with_logits(Var logits, const Mat& targets);
  /// Mean squared error against constant targets.
  Var mse(Var pred, const Mat& targets);

  /// Seeds d(root)/d(root) = 1 and accumulates grads; root must be 1 x 1.
  void backward(Var root);
  void zero_grad();

  const Mat& value(Var v) const { return node(v).val; }
  /// Accumulated gradient; zero matrix if backward never reached the node.
  Mat grad(Var v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Op op = Op::kLeaf;
    int a = -1;
    int b = -1;
    int iarg = 0;    // reduction axis
    double carg = 0;  // scalar constant
    bool needs_grad = false;
    Mat val;
    Mat grad;                    // empty until first contribution
    Mat aux;                     // loss targets
    std::vector<int> winners;    // argmax caches
    std::vector<int> winners2;   // argmin cache (hilbert)
    std::vector<int> gather;     // row indices / concat part ids
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Node n);
  void accumulate(int id, const Mat& g);
  void backprop_node(int id);

  std::vector<Node> nodes_;
};

/// Compares the tape gradient of fn (a scalar-valued graph over one leaf)
/// against central finite differences with step h. Returns the maximum over
/// coordinates of |analytic - central| / (|central| + 1e-8).
double finite_diff_check(const std::function<Var(Tape&, Var)>& fn, const Mat& x, double h);

}  // namespace trop
