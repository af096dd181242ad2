#pragma once

// Constructive compilers from tropical circuits / DP recursions to stacks of
// exact attention heads, plus the randomized exact verifier.
//
// A compiled head is one attention row: a score row that is 0 on its index
// set and masked elsewhere (true bottom in exact mode, -Gamma in big-M mode),
// and one value per input token. Aggregation is the attention module's exact
// max-plus contraction, so every stack evaluates through the same primitive
// as the kernel's exact path.

#include "tropa/circuit.hpp"
#include "tropa/tropical.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace trop {

/// Head-local value of one input token, as a tropical monomial of the layer
/// inputs: coeff + sum_k exponent_k * x_{slot_k}, or bottom for tokens the
/// head must never surface.
struct ValueExpr {
  bool bottom = true;
  double coeff = 0.0;
  std::vector<std::pair<int, int>> terms;  // (input slot, exponent >= 1)

  static ValueExpr make_bottom() { return ValueExpr{}; }
  static ValueExpr constant(double c) { return ValueExpr{false, c, {}}; }
  static ValueExpr affine(double c, int slot) { return ValueExpr{false, c, {{slot, 1}}}; }
  static ValueExpr identity(int slot) { return affine(0.0, slot); }

  TropValue eval(const std::vector<TropValue>& x) const;
};

struct CompiledHead {
  std::vector<int> select;        // index set J: score 0 there, masked elsewhere
  std::vector<ValueExpr> values;  // one per layer input token
  int out_token = 0;              // output slot this head writes
  int query_token = 0;            // query-row binding (documentation of which row fires)
};

/// Layer inputs are the previous layer's tokens plus one trailing bias token
/// pinned to 0; in_count includes that bias slot (index in_count - 1).
struct CompiledLayer {
  int in_count = 0;
  int out_count = 0;
  std::vector<CompiledHead> heads;
};

struct CompiledStack {
  int num_inputs = 0;
  std::vector<CompiledLayer> layers;
  std::vector<int> outputs;  // token indices in the final token space
  double big_m = 0.0;        // Gamma for big-M evaluation; verify_stack sizes it per trial
};

/// Bias slot index of a layer.
inline int bias_slot(const CompiledLayer& l) { return l.in_count - 1; }

enum class StackMode { kExactBottom, kBigM };

/// Structural validation: one head per output slot, selects in range and
/// duplicate-free, value vectors sized to in_count, layer widths chained.
/// Throws StructureError / LayoutError.
void validate_stack(const CompiledStack& s);

/// Token values after every layer; index 0 is the input vector itself
/// (without the implicit bias token). Big-M mode uses score -big_m for
/// masked tokens instead of bottom.
std::vector<std::vector<TropValue>> eval_stack_trace(const CompiledStack& s,
                                                     const std::vector<TropValue>& inputs,
                                                     StackMode mode);

/// Output tokens only.
std::vector<TropValue> eval_stack(const CompiledStack& s, const std::vector<TropValue>& inputs,
                                  StackMode mode);

/// Gamma = 1 + range * (depth + 1), where the range spans every finite value
/// involved on this instance: inputs, value-expression coefficients, and all
/// intermediate token values. Guarantees -Gamma + (max value entry) stays
/// strictly below the smallest legitimate context value.
double auto_big_m(const CompiledStack& s, const std::vector<TropValue>& inputs);

/// One head computing max over j of (x_{slots[j]} + weights[j]) into
/// out_token. slots must be distinct (LayoutError) and nonempty with
/// matching weight count (ContractError).
CompiledHead compile_max_gate(const std::vector<int>& slots, const std::vector<TropValue>& weights,
                              int token_count, int out_token);

/// One layer of m heads over n data tokens plus the bias token: head i
/// computes max_j (a(i,j) + x_j) max b(i). All-bottom rows with bottom bias
/// yield bottom.
CompiledLayer compile_affine_layer(const TropMatrix& a, const TropVector& b);

/// Tropical polynomial: max over terms of (coeff + sum_j exponents[j]*z_j).
struct TropPolynomial {
  struct Term {
    double coeff = 0.0;
    std::vector<int> exponents;  // length num_vars, entries >= 0
  };
  std::vector<Term> terms;
};

TropValue eval_polynomial(const TropPolynomial& p, const std::vector<TropValue>& z);

/// Two sublayers: term heads materialize each monomial, aggregation heads
/// max the terms of each polynomial. Head budget (total terms + outputs)
/// above kMaxCompiledHeads throws ContractError.
CompiledStack compile_polynomial(const std::vector<TropPolynomial>& ps, int num_vars);

inline constexpr int kMaxCompiledHeads = 4096;

/// Layered compilation: one layer per circuit level, pass-through identity
/// heads keep earlier wires alive, constants ride the bias token. The stack
/// has exactly max-output-depth layers and reproduces eval_circuit exactly.
CompiledStack compile_circuit(const TropCircuit& c);

/// Exactly dag.horizon layers with dag.n heads each; token v after layer t
/// equals the Bellman value d_v(t). Inputs are the length-n delta vector.
CompiledStack compile_dp(const WeightedDag& dag);

struct VerifyReport {
  std::string suite;
  int trials = 0;
  int failures = 0;
  double max_abs_error = 0.0;
};

using StackReference = std::function<std::vector<TropValue>(const std::vector<TropValue>&)>;

/// Randomized exact check of a fixed stack against a reference on integer
/// inputs in [-10, 10]: both exact-bottom and big-M (auto Gamma) evaluations
/// must match the reference exactly, and the Gamma invariant must hold.
VerifyReport verify_stack(const CompiledStack& s, const StackReference& ref, int trials,
                          std::uint64_t seed);

/// Named randomized suites over freshly sampled structures per trial:
/// "max_gate", "affine", "poly", "circuit", "dp". Unknown name throws
/// ConfigError.
VerifyReport run_verify_suite(const std::string& suite, int trials, std::uint64_t seed);

std::vector<std::string> verify_suite_names();

/// Structured text:
///   suite <name>
///   trials <K>
///   failures <F>
///   max_abs_error <E>
std::string format_report(const VerifyReport& r);

/// Random structure generators used by the verify suites (exposed for tests).
TropCircuit random_circuit(std::uint64_t seed, int max_gates);
WeightedDag random_dag(std::uint64_t seed, int max_n, int max_horizon);

}  // namespace trop
