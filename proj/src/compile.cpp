#include "tropa/compile.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <utility>

namespace trop {

TropValue ValueExpr::eval(const std::vector<TropValue>& x) const {
  if (bottom) return TropValue::bottom();
  double acc = coeff;
  for (const auto& [slot, e] : terms) {
    if (slot < 0 || slot >= static_cast<int>(x.size()))
      throw StructureError("value expression slot out of range");
    if (x[slot].is_bottom()) return TropValue::bottom();
    acc += static_cast<double>(e) * x[slot].raw();
  }
  return TropValue(acc);
}

void validate_stack(const CompiledStack& s) {
  if (s.num_inputs <= 0) throw StructureError("stack needs at least one input token");
  int prev = s.num_inputs;
  for (size_t li = 0; li < s.layers.size(); ++li) {
    const auto& l = s.layers[li];
    if (l.in_count != prev + 1)
      throw StructureError("layer " + std::to_string(li) + ": in_count must be previous width + bias");
    if (l.out_count <= 0) throw StructureError("layer " + std::to_string(li) + ": empty output space");
    if (static_cast<int>(l.heads.size()) != l.out_count)
      throw StructureError("layer " + std::to_string(li) + ": one head per output token required");
    std::vector<char> written(l.out_count, 0);
    for (const auto& h : l.heads) {
      if (h.out_token < 0 || h.out_token >= l.out_count)
        throw StructureError("head output token out of range");
      if (written[h.out_token]) throw StructureError("two heads write one output token");
      written[h.out_token] = 1;
      if (static_cast<int>(h.values.size()) != l.in_count)
        throw StructureError("head value list must cover every input token");
      std::vector<char> seen(l.in_count, 0);
      for (int j : h.select) {
        if (j < 0 || j >= l.in_count) throw LayoutError("head selects a token outside the layer");
        if (seen[j]) throw LayoutError("head selects one token twice");
        seen[j] = 1;
      }
      for (const auto& v : h.values) {
        if (v.bottom) continue;
        if (!std::isfinite(v.coeff)) throw DomainError("value expression coefficient not finite");
        for (const auto& [slot, e] : v.terms) {
          if (slot < 0 || slot >= l.in_count) throw StructureError("value expression slot out of range");
          if (e < 1) throw StructureError("value expression exponent must be >= 1");
        }
      }
    }
    prev = l.out_count;
  }
  for (int o : s.outputs)
    if (o < 0 || o >= prev) throw StructureError("stack output token out of range");
  if (s.outputs.empty()) throw StructureError("stack has no outputs");
}

namespace {

// One attention row through the core exact contraction: scores are 0 on the
// select set and masked elsewhere, the context is maxplus_matmul(S, V).
TropValue eval_head(const CompiledHead& h, const std::vector<TropValue>& xb, StackMode mode,
                    double gamma) {
  const int n = static_cast<int>(xb.size());
  const TropValue masked = mode == StackMode::kExactBottom ? TropValue::bottom() : TropValue(-gamma);
  TropMatrix s_row(1, n);
  for (int j = 0; j < n; ++j) s_row(0, j) = masked;
  for (int j : h.select) s_row(0, j) = TropValue::zero();
  TropMatrix v_col(n, 1);
  for (int j = 0; j < n; ++j) v_col(j, 0) = h.values[j].eval(xb);
  return maxplus_matmul(s_row, v_col)(0, 0);
}

std::vector<TropValue> with_bias(const std::vector<TropValue>& x) {
  std::vector<TropValue> xb = x;
  xb.push_back(TropValue::zero());
  return xb;
}

}  // namespace

std::vector<std::vector<TropValue>> eval_stack_trace(const CompiledStack& s,
                                                     const std::vector<TropValue>& inputs,
                                                     StackMode mode) {
  validate_stack(s);
  if (static_cast<int>(inputs.size()) != s.num_inputs)
    throw ShapeError("eval_stack: expected " + std::to_string(s.num_inputs) + " inputs, got " +
                     std::to_string(inputs.size()));
  if (mode == StackMode::kBigM && !(s.big_m > 0.0))
    throw ConfigError("big-M evaluation needs a positive big_m (see auto_big_m)");
  std::vector<std::vector<TropValue>> trace;
  trace.push_back(inputs);
  for (const auto& l : s.layers) {
    const std::vector<TropValue> xb = with_bias(trace.back());
    std::vector<TropValue> out(l.out_count, TropValue::bottom());
    for (const auto& h : l.heads) out[h.out_token] = eval_head(h, xb, mode, s.big_m);
    trace.push_back(std::move(out));
  }
  return trace;
}

std::vector<TropValue> eval_stack(const CompiledStack& s, const std::vector<TropValue>& inputs,
                                  StackMode mode) {
  const auto trace = eval_stack_trace(s, inputs, mode);
  std::vector<TropValue> out;
  out.reserve(s.outputs.size());
  for (int o : s.outputs) out.push_back(trace.back()[o]);
  return out;
}

double auto_big_m(const CompiledStack& s, const std::vector<TropValue>& inputs) {
  const auto trace = eval_stack_trace(s, inputs, StackMode::kExactBottom);
  double lo = 0.0, hi = 0.0;
  bool any = false;
  auto feed = [&](double v) {
    if (!any) {
      lo = hi = v;
      any = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  for (const auto& row : trace)
    for (const auto& v : row)
      if (!v.is_bottom()) feed(v.raw());
  for (size_t li = 0; li < s.layers.size(); ++li) {
    const auto& l = s.layers[li];
    const std::vector<TropValue> xb = with_bias(trace[li]);
    for (const auto& h : l.heads) {
      for (const auto& ve : h.values) {
        if (ve.bottom) continue;
        feed(ve.coeff);
        const TropValue got = ve.eval(xb);
        if (!got.is_bottom()) feed(got.raw());
      }
    }
  }
  const double range = any ? hi - lo : 0.0;
  return 1.0 + range * (static_cast<double>(s.layers.size()) + 1.0);
}

CompiledHead compile_max_gate(const std::vector<int>& slots, const std::vector<TropValue>& weights,
                              int token_count, int out_token) {
  if (slots.empty()) throw ContractError("compile_max_gate: empty index set");
  if (slots.size() != weights.size())
    throw ShapeError("compile_max_gate: one weight per selected token required");
  if (token_count <= 0 || out_token < 0) throw ContractError("compile_max_gate: bad token layout");
  CompiledHead h;
  h.out_token = out_token;
  h.query_token = out_token;
  h.values.assign(token_count + 1, ValueExpr::make_bottom());
  std::vector<char> seen(token_count, 0);
  for (size_t i = 0; i < slots.size(); ++i) {
    const int j = slots[i];
    if (j < 0 || j >= token_count) throw LayoutError("compile_max_gate: token slot out of range");
    if (seen[j]) throw LayoutError("compile_max_gate: token slot used twice");
    seen[j] = 1;
    if (weights[i].is_bottom()) continue;  // a bottom weight can never win the max
    h.select.push_back(j);
    h.values[j] = ValueExpr::affine(weights[i].raw(), j);
  }
  return h;
}

CompiledLayer compile_affine_layer(const TropMatrix& a, const TropVector& b) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (m == 0 || n == 0) throw ShapeError("compile_affine_layer: empty matrix");
  if (static_cast<int>(b.size()) != m)
    throw ShapeError("compile_affine_layer: bias length must match rows");
  CompiledLayer l;
  l.in_count = n + 1;
  l.out_count = m;
  const int bias = n;
  for (int i = 0; i < m; ++i) {
    CompiledHead h;
    h.out_token = i;
    h.query_token = i;
    h.values.assign(l.in_count, ValueExpr::make_bottom());
    for (int j = 0; j < n; ++j) {
      if (a(i, j).is_bottom()) continue;
      h.select.push_back(j);
      h.values[j] = ValueExpr::affine(a(i, j).raw(), j);
    }
    if (!b(i).is_bottom()) {
      h.select.push_back(bias);
      h.values[bias] = ValueExpr::affine(b(i).raw(), bias);
    }
    l.heads.push_back(std::move(h));
  }
  return l;
}

TropValue eval_polynomial(const TropPolynomial& p, const std::vector<TropValue>& z) {
  if (p.terms.empty()) throw ContractError("polynomial needs at least one term");
  TropValue best = TropValue::bottom();
  for (const auto& t : p.terms) {
    if (t.exponents.size() != z.size())
      throw ShapeError("polynomial arity does not match input length");
    double acc = t.coeff;
    bool bot = false;
    for (size_t j = 0; j < z.size(); ++j) {
      if (t.exponents[j] < 0) throw StructureError("polynomial exponent must be >= 0");
      if (t.exponents[j] == 0) continue;
      if (z[j].is_bottom()) {
        bot = true;
        break;
      }
      acc += static_cast<double>(t.exponents[j]) * z[j].raw();
    }
    if (!bot) best = trop_add(best, TropValue(acc));
  }
  return best;
}

CompiledStack compile_polynomial(const std::vector<TropPolynomial>& ps, int num_vars) {
  if (ps.empty()) throw ContractError("compile_polynomial: no polynomials");
  if (num_vars <= 0) throw ContractError("compile_polynomial: need at least one variable");
  int total_terms = 0;
  for (const auto& p : ps) {
    if (p.terms.empty()) throw ContractError("compile_polynomial: polynomial without terms");
    for (const auto& t : p.terms) {
      if (static_cast<int>(t.exponents.size()) != num_vars)
        throw ShapeError("compile_polynomial: exponent vector length must equal num_vars");
      for (int e : t.exponents)
        if (e < 0) throw StructureError("compile_polynomial: negative exponent");
      if (!std::isfinite(t.coeff)) throw DomainError("compile_polynomial: coefficient not finite");
      ++total_terms;
    }
  }
  if (total_terms + static_cast<int>(ps.size()) > kMaxCompiledHeads)
    throw ContractError("compile_polynomial: head budget exceeded");

  CompiledStack s;
  s.num_inputs = num_vars;

  // Sublayer 1: one head per monomial, fired from the bias token.
  CompiledLayer terms_layer;
  terms_layer.in_count = num_vars + 1;
  terms_layer.out_count = total_terms;
  const int bias1 = num_vars;
  int tok = 0;
  for (const auto& p : ps) {
    for (const auto& t : p.terms) {
      CompiledHead h;
      h.out_token = tok;
      h.query_token = tok;
      h.values.assign(terms_layer.in_count, ValueExpr::make_bottom());
      ValueExpr expr = ValueExpr::constant(t.coeff);
      for (int j = 0; j < num_vars; ++j)
        if (t.exponents[j] > 0) expr.terms.push_back({j, t.exponents[j]});
      h.select.push_back(bias1);
      h.values[bias1] = expr;
      terms_layer.heads.push_back(std::move(h));
      ++tok;
    }
  }

  // Sublayer 2: one aggregation head per polynomial maxing its terms.
  CompiledLayer agg_layer;
  agg_layer.in_count = total_terms + 1;
  agg_layer.out_count = static_cast<int>(ps.size());
  tok = 0;
  for (size_t i = 0; i < ps.size(); ++i) {
    CompiledHead h;
    h.out_token = static_cast<int>(i);
    h.query_token = static_cast<int>(i);
    h.values.assign(agg_layer.in_count, ValueExpr::make_bottom());
    for (size_t k = 0; k < ps[i].terms.size(); ++k) {
      h.select.push_back(tok);
      h.values[tok] = ValueExpr::identity(tok);
      ++tok;
    }
    agg_layer.heads.push_back(std::move(h));
  }

  s.layers.push_back(std::move(terms_layer));
  s.layers.push_back(std::move(agg_layer));
  for (size_t i = 0; i < ps.size(); ++i) s.outputs.push_back(static_cast<int>(i));
  validate_stack(s);
  return s;
}

namespace {

using GateKind = TropCircuit::GateKind;

// Operand address inside a layer input space: either a token slot or an
// inlined constant (depth-0 const feeding layer 1).
struct Operand {
  bool is_const = false;
  int slot = -1;
  TropValue value;
};

CompiledHead head_for_gate(const TropCircuit::Gate& g, const Operand& oa, const Operand& ob,
                           int in_count, int out_token) {
  const int bias = in_count - 1;
  CompiledHead h;
  h.out_token = out_token;
  h.query_token = out_token;
  h.values.assign(in_count, ValueExpr::make_bottom());
  if (g.kind == GateKind::kOplus) {
    TropValue cmax = TropValue::bottom();
    for (const Operand* op : {&oa, &ob}) {
      if (op->is_const) {
        cmax = trop_add(cmax, op->value);
      } else if (h.values[op->slot].bottom) {  // max(x, x) = x: select once
        h.select.push_back(op->slot);
        h.values[op->slot] = ValueExpr::identity(op->slot);
      }
    }
    if (!cmax.is_bottom()) {
      h.select.push_back(bias);
      h.values[bias] = ValueExpr::affine(cmax.raw(), bias);
    }
  } else {  // kOdot: a single monomial value surfaced from the bias token
    ValueExpr expr = ValueExpr::constant(0.0);
    bool bot = false;
    for (const Operand* op : {&oa, &ob}) {
      if (op->is_const) {
        if (op->value.is_bottom()) bot = true;
        else expr.coeff += op->value.raw();
      } else {
        bool merged = false;
        for (auto& [slot, e] : expr.terms)
          if (slot == op->slot) {
            ++e;  // x odot x doubles the slot
            merged = true;
          }
        if (!merged) expr.terms.push_back({op->slot, 1});
      }
    }
    if (!bot) {
      h.select.push_back(bias);
      h.values[bias] = expr;
    }
  }
  return h;
}

}  // namespace

CompiledStack compile_circuit(const TropCircuit& c) {
  const std::vector<int> depth = circuit_depths(c);  // validates wiring and acyclicity

  // Needed set: outputs plus transitive operands.
  std::vector<char> needed(c.gates.size(), 0);
  std::vector<int> stack_ids(c.outputs.begin(), c.outputs.end());
  while (!stack_ids.empty()) {
    const int g = stack_ids.back();
    stack_ids.pop_back();
    if (needed[g]) continue;
    needed[g] = 1;
    const auto& gate = c.gates[g];
    if (gate.kind == GateKind::kOplus || gate.kind == GateKind::kOdot) {
      stack_ids.push_back(gate.a);
      stack_ids.push_back(gate.b);
    }
  }
  std::vector<int> slot_of(c.gates.size(), -1);
  std::vector<int> gate_at;
  for (size_t g = 0; g < c.gates.size(); ++g)
    if (needed[g]) {
      slot_of[g] = static_cast<int>(gate_at.size());
      gate_at.push_back(static_cast<int>(g));
    }

  int levels = 0;
  for (int o : c.outputs) levels = std::max(levels, depth[o]);

  CompiledStack s;
  s.num_inputs = std::max(c.num_vars, 1);
  if (levels == 0) {
    // Pure wire circuit: outputs are input tokens.
    for (int o : c.outputs) {
      if (c.gates[o].kind != GateKind::kVar)
        throw ContractError("compile_circuit: constant-only outputs need an internal gate");
      s.outputs.push_back(c.gates[o].var_index);
    }
    validate_stack(s);
    return s;
  }

  const int width = static_cast<int>(gate_at.size());
  for (int t = 1; t <= levels; ++t) {
    CompiledLayer l;
    l.in_count = (t == 1 ? s.num_inputs : width) + 1;
    l.out_count = width;
    // Address of a gate already materialized in this layer's input space.
    auto addr = [&](int gid) {
      Operand op;
      const auto& gate = c.gates[gid];
      if (t == 1) {
        if (gate.kind == GateKind::kVar) {
          op.slot = gate.var_index;
        } else {
          op.is_const = true;
          op.value = gate.value;
        }
      } else {
        op.slot = slot_of[gid];
      }
      return op;
    };
    for (int slot = 0; slot < width; ++slot) {
      const int gid = gate_at[slot];
      const auto& gate = c.gates[gid];
      CompiledHead h;
      if (depth[gid] > t) {
        // Not computed yet: placeholder token pinned to bottom.
        h.out_token = slot;
        h.query_token = slot;
        h.values.assign(l.in_count, ValueExpr::make_bottom());
      } else if (depth[gid] == t) {
        h = head_for_gate(gate, addr(gate.a), addr(gate.b), l.in_count, slot);
      } else if (t == 1) {
        // Materialize a leaf into the gate token space.
        h.out_token = slot;
        h.query_token = slot;
        h.values.assign(l.in_count, ValueExpr::make_bottom());
        if (gate.kind == GateKind::kVar) {
          h.select.push_back(gate.var_index);
          h.values[gate.var_index] = ValueExpr::identity(gate.var_index);
        } else if (!gate.value.is_bottom()) {
          const int bias = l.in_count - 1;
          h.select.push_back(bias);
          h.values[bias] = ValueExpr::affine(gate.value.raw(), bias);
        }
      } else {
        // Pass-through identity head keeps the wire alive.
        h.out_token = slot;
        h.query_token = slot;
        h.values.assign(l.in_count, ValueExpr::make_bottom());
        h.select.push_back(slot);
        h.values[slot] = ValueExpr::identity(slot);
      }
      l.heads.push_back(std::move(h));
    }
    s.layers.push_back(std::move(l));
  }
  for (int o : c.outputs) s.outputs.push_back(slot_of[o]);
  validate_stack(s);
  return s;
}

CompiledStack compile_dp(const WeightedDag& dag) {
  bellman(WeightedDag{dag.n, dag.edges, dag.source, 0});  // reuse its structural checks
  if (dag.horizon < 0) throw StructureError("compile_dp: negative horizon");
  // Merge parallel edges: max(w1 + x, w2 + x) = max(w1, w2) + x.
  std::map<std::pair<int, int>, TropValue> best_w;
  for (const auto& e : dag.edges) {
    auto [it, fresh] = best_w.try_emplace({e.v, e.u}, e.w);
    if (!fresh) it->second = trop_add(it->second, e.w);
  }
  CompiledStack s;
  s.num_inputs = dag.n;
  for (int t = 1; t <= dag.horizon; ++t) {
    CompiledLayer l;
    l.in_count = dag.n + 1;
    l.out_count = dag.n;
    for (int v = 0; v < dag.n; ++v) {
      CompiledHead h;
      h.out_token = v;
      h.query_token = v;
      h.values.assign(l.in_count, ValueExpr::make_bottom());
      for (auto it = best_w.lower_bound({v, 0}); it != best_w.end() && it->first.first == v; ++it) {
        if (it->second.is_bottom()) continue;
        const int u = it->first.second;
        h.select.push_back(u);
        h.values[u] = ValueExpr::affine(it->second.raw(), u);
      }
      l.heads.push_back(std::move(h));
    }
    s.layers.push_back(std::move(l));
  }
  for (int v = 0; v < dag.n; ++v) s.outputs.push_back(v);
  validate_stack(s);
  return s;
}

namespace {

bool same_value(const TropValue& a, const TropValue& b) {
  if (a.is_bottom() || b.is_bottom()) return a.is_bottom() && b.is_bottom();
  return a.raw() == b.raw();
}

struct InstanceResult {
  bool ok = true;
  double max_err = 0.0;
};

void note_mismatch(InstanceResult& r, const TropValue& got, const TropValue& want) {
  if (same_value(got, want)) return;
  r.ok = false;
  if (!got.is_bottom() && !want.is_bottom())
    r.max_err = std::max(r.max_err, std::abs(got.raw() - want.raw()));
}

// Exact-bottom and big-M evaluations against a reference trajectory (or final
// outputs when want_trace is empty), plus the Gamma margin invariant.
InstanceResult check_instance(CompiledStack s, const std::vector<TropValue>& inputs,
                              const std::vector<std::vector<TropValue>>& want_trace,
                              const std::vector<TropValue>& want_outputs) {
  InstanceResult r;
  const auto exact = eval_stack_trace(s, inputs, StackMode::kExactBottom);
  s.big_m = auto_big_m(s, inputs);
  const auto bigm = eval_stack_trace(s, inputs, StackMode::kBigM);
  for (size_t t = 0; t < exact.size(); ++t)
    for (size_t j = 0; j < exact[t].size(); ++j) note_mismatch(r, bigm[t][j], exact[t][j]);
  if (!want_trace.empty()) {
    if (want_trace.size() != exact.size()) {
      r.ok = false;
    } else {
      for (size_t t = 0; t < exact.size(); ++t)
        for (size_t j = 0; j < exact[t].size(); ++j) note_mismatch(r, exact[t][j], want_trace[t][j]);
    }
  } else {
    for (size_t i = 0; i < s.outputs.size(); ++i)
      note_mismatch(r, exact.back()[s.outputs[i]], want_outputs[i]);
  }
  // Gamma margin: -Gamma plus the largest value entry must stay strictly
  // below the smallest legitimate context, so masked tokens cannot win.
  bool have_val = false, have_ctx = false;
  double max_val = 0.0, min_ctx = 0.0;
  for (size_t li = 0; li < s.layers.size(); ++li) {
    std::vector<TropValue> xb = exact[li];
    xb.push_back(TropValue::zero());
    for (const auto& h : s.layers[li].heads) {
      for (const auto& ve : h.values) {
        const TropValue v = ve.eval(xb);
        if (v.is_bottom()) continue;
        max_val = have_val ? std::max(max_val, v.raw()) : v.raw();
        have_val = true;
      }
      if (!h.select.empty()) {
        const TropValue ctx = exact[li + 1][h.out_token];
        if (!ctx.is_bottom()) {
          min_ctx = have_ctx ? std::min(min_ctx, ctx.raw()) : ctx.raw();
          have_ctx = true;
        }
      }
    }
  }
  if (have_val && have_ctx && !(-s.big_m + max_val < min_ctx)) r.ok = false;
  return r;
}

}  // namespace

VerifyReport verify_stack(const CompiledStack& s, const StackReference& ref, int trials,
                          std::uint64_t seed) {
  if (trials < 1) throw ContractError("verify_stack: trials must be >= 1");
  validate_stack(s);
  VerifyReport rep;
  rep.suite = "stack";
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> val(-10, 10);
  for (int t = 0; t < trials; ++t) {
    std::vector<TropValue> inputs(s.num_inputs);
    for (auto& x : inputs) x = TropValue(static_cast<double>(val(rng)));
    const auto want = ref(inputs);
    if (want.size() != s.outputs.size())
      throw ShapeError("verify_stack: reference output arity mismatch");
    const auto res = check_instance(s, inputs, {}, want);
    ++rep.trials;
    if (!res.ok) ++rep.failures;
    rep.max_abs_error = std::max(rep.max_abs_error, res.max_err);
  }
  return rep;
}

TropCircuit random_circuit(std::uint64_t seed, int max_gates) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nv(1, 3);
  std::uniform_int_distribution<int> cval(-10, 10);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  TropCircuit c;
  c.num_vars = nv(rng);
  for (int i = 0; i < c.num_vars; ++i) {
    TropCircuit::Gate g;
    g.kind = GateKind::kVar;
    g.var_index = i;
    c.gates.push_back(g);
  }
  std::uniform_int_distribution<int> nconst(0, 2);
  const int consts = nconst(rng);
  for (int i = 0; i < consts; ++i) {
    TropCircuit::Gate g;
    g.kind = GateKind::kConst;
    g.value = coin(rng) < 0.1 ? TropValue::bottom() : TropValue(static_cast<double>(cval(rng)));
    c.gates.push_back(g);
  }
  const int leaves = static_cast<int>(c.gates.size());
  std::uniform_int_distribution<int> ninner(1, std::max(1, max_gates - leaves));
  const int inner = ninner(rng);
  for (int i = 0; i < inner; ++i) {
    TropCircuit::Gate g;
    g.kind = coin(rng) < 0.5 ? GateKind::kOplus : GateKind::kOdot;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(c.gates.size()) - 1);
    g.a = pick(rng);
    g.b = pick(rng);
    c.gates.push_back(g);
  }
  // Outputs from inner gates and vars only, biased toward the deepest gate.
  c.outputs.push_back(static_cast<int>(c.gates.size()) - 1);
  if (coin(rng) < 0.5) {
    std::uniform_int_distribution<int> pick_var(0, c.num_vars - 1);
    c.outputs.push_back(pick_var(rng));
  }
  return c;
}

WeightedDag random_dag(std::uint64_t seed, int max_n, int max_horizon) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nn(2, max_n);
  std::uniform_int_distribution<int> hh(1, max_horizon);
  std::uniform_int_distribution<int> ww(0, 10);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  WeightedDag d;
  d.n = nn(rng);
  d.source = 0;
  d.horizon = hh(rng);
  for (int u = 0; u < d.n; ++u)
    for (int v = u + 1; v < d.n; ++v)
      if (coin(rng) < 0.4)
        d.edges.push_back({u, v, TropValue(static_cast<double>(ww(rng)))});
  return d;
}

namespace {

VerifyReport merge(VerifyReport acc, const VerifyReport& one) {
  acc.trials += one.trials;
  acc.failures += one.failures;
  acc.max_abs_error = std::max(acc.max_abs_error, one.max_abs_error);
  return acc;
}

VerifyReport suite_max_gate(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VerifyReport rep;
  rep.suite = "max_gate";
  for (int t = 0; t < trials; ++t) {
    const int tokens = 8;
    std::uniform_int_distribution<int> jsize(1, 6);
    std::uniform_int_distribution<int> wv(-10, 10);
    std::vector<int> all(tokens);
    for (int i = 0; i < tokens; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    const int k = jsize(rng);
    std::vector<int> slots(all.begin(), all.begin() + k);
    std::vector<TropValue> weights;
    for (int i = 0; i < k; ++i) weights.push_back(TropValue(static_cast<double>(wv(rng))));
    CompiledStack s;
    s.num_inputs = tokens;
    CompiledLayer l;
    l.in_count = tokens + 1;
    l.out_count = 1;
    l.heads.push_back(compile_max_gate(slots, weights, tokens, 0));
    s.layers.push_back(std::move(l));
    s.outputs = {0};
    auto ref = [&](const std::vector<TropValue>& x) {
      TropValue best = TropValue::bottom();
      for (int i = 0; i < k; ++i) best = trop_add(best, trop_mul(x[slots[i]], weights[i]));
      return std::vector<TropValue>{best};
    };
    rep = merge(std::move(rep), verify_stack(s, ref, 1, rng()));
  }
  rep.suite = "max_gate";
  return rep;
}

VerifyReport suite_affine(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VerifyReport rep;
  rep.suite = "affine";
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_int_distribution<int> wv(-10, 10);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    const int m = dim(rng), n = dim(rng);
    TropMatrix a(m, n);
    TropVector b(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j)
        a(i, j) = coin(rng) < 0.2 ? TropValue::bottom() : TropValue(static_cast<double>(wv(rng)));
      b(i) = coin(rng) < 0.2 ? TropValue::bottom() : TropValue(static_cast<double>(wv(rng)));
    }
    CompiledStack s;
    s.num_inputs = n;
    s.layers.push_back(compile_affine_layer(a, b));
    for (int i = 0; i < m; ++i) s.outputs.push_back(i);
    auto ref = [&](const std::vector<TropValue>& x) {
      TropMatrix xc(n, 1);
      for (int j = 0; j < n; ++j) xc(j, 0) = x[j];
      const TropMatrix prod = maxplus_matmul(a, xc);
      std::vector<TropValue> out;
      for (int i = 0; i < m; ++i) out.push_back(trop_add(prod(i, 0), b(i)));
      return out;
    };
    rep = merge(std::move(rep), verify_stack(s, ref, 1, rng()));
  }
  rep.suite = "affine";
  return rep;
}

VerifyReport suite_polynomial(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VerifyReport rep;
  rep.suite = "poly";
  std::uniform_int_distribution<int> nv(1, 3);
  std::uniform_int_distribution<int> np(1, 2);
  std::uniform_int_distribution<int> nt(1, 4);
  std::uniform_int_distribution<int> cv(-10, 10);
  std::uniform_int_distribution<int> ev(0, 3);
  for (int t = 0; t < trials; ++t) {
    const int vars = nv(rng);
    std::vector<TropPolynomial> ps(np(rng));
    for (auto& p : ps) {
      const int terms = nt(rng);
      for (int k = 0; k < terms; ++k) {
        TropPolynomial::Term term;
        term.coeff = static_cast<double>(cv(rng));
        for (int j = 0; j < vars; ++j) term.exponents.push_back(ev(rng));
        p.terms.push_back(std::move(term));
      }
    }
    const CompiledStack s = compile_polynomial(ps, vars);
    auto ref = [&](const std::vector<TropValue>& z) {
      std::vector<TropValue> out;
      for (const auto& p : ps) out.push_back(eval_polynomial(p, z));
      return out;
    };
    rep = merge(std::move(rep), verify_stack(s, ref, 1, rng()));
  }
  rep.suite = "poly";
  return rep;
}

VerifyReport suite_circuit(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VerifyReport rep;
  rep.suite = "circuit";
  for (int t = 0; t < trials; ++t) {
    const TropCircuit c = random_circuit(rng(), 12);
    const CompiledStack s = compile_circuit(c);
    auto ref = [&](const std::vector<TropValue>& x) { return eval_circuit(c, x); };
    rep = merge(std::move(rep), verify_stack(s, ref, 1, rng()));
  }
  rep.suite = "circuit";
  return rep;
}

VerifyReport suite_dp(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VerifyReport rep;
  rep.suite = "dp";
  for (int t = 0; t < trials; ++t) {
    const WeightedDag d = random_dag(rng(), 8, 5);
    const CompiledStack s = compile_dp(d);
    const auto want = bellman(d);
    std::vector<TropValue> delta(d.n, TropValue::bottom());
    delta[d.source] = TropValue::zero();
    const auto res = check_instance(s, delta, want, {});
    ++rep.trials;
    if (!res.ok) ++rep.failures;
    rep.max_abs_error = std::max(rep.max_abs_error, res.max_err);
  }
  return rep;
}

}  // namespace

VerifyReport run_verify_suite(const std::string& suite, int trials, std::uint64_t seed) {
  if (trials < 1) throw ContractError("run_verify_suite: trials must be >= 1");
  if (suite == "max_gate") return suite_max_gate(trials, seed);
  if (suite == "affine") return suite_affine(trials, seed);
  if (suite == "poly") return suite_polynomial(trials, seed);
  if (suite == "circuit") return suite_circuit(trials, seed);
  if (suite == "dp") return suite_dp(trials, seed);
  throw ConfigError("unknown verify suite '" + suite + "'");
}

std::vector<std::string> verify_suite_names() {
  return {"max_gate", "affine", "poly", "circuit", "dp"};
}

std::string format_report(const VerifyReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "suite " << r.suite << "\n"
     << "trials " << r.trials << "\n"
     << "failures " << r.failures << "\n"
     << "max_abs_error " << r.max_abs_error << "\n";
  return os.str();
}

}  // namespace trop
