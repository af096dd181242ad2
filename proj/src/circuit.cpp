#include "tropa/circuit.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <sstream>
#include <vector>

namespace trop {
namespace {

using GateKind = TropCircuit::GateKind;

bool gate_is_leaf(const TropCircuit::Gate& g) {
  return g.kind == GateKind::kVar || g.kind == GateKind::kConst;
}

void check_wiring(const TropCircuit& c) {
  const int n = static_cast<int>(c.gates.size());
  for (int i = 0; i < n; ++i) {
    const auto& g = c.gates[i];
    if (gate_is_leaf(g)) {
      if (g.kind == GateKind::kVar && (g.var_index < 0 || g.var_index >= c.num_vars))
        throw StructureError("gate " + std::to_string(i) + ": variable index out of range");
      continue;
    }
    if (g.a < 0 || g.a >= n || g.b < 0 || g.b >= n)
      throw StructureError("gate " + std::to_string(i) + ": operand id out of range");
  }
  for (int o : c.outputs)
    if (o < 0 || o >= n) throw StructureError("output id out of range");
  if (c.outputs.empty()) throw StructureError("circuit has no outputs");
}

// Topological order of all gates; cycles are a structure error.
std::vector<int> topo_order(const TropCircuit& c) {
  const int n = static_cast<int>(c.gates.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    const auto& g = c.gates[i];
    if (gate_is_leaf(g)) continue;
    out[g.a].push_back(i);
    out[g.b].push_back(i);
    indeg[i] = 2;
  }
  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) order.push_back(i);
  for (size_t head = 0; head < order.size(); ++head) {
    for (int succ : out[order[head]])
      if (--indeg[succ] == 0) order.push_back(succ);
  }
  if (static_cast<int>(order.size()) != n) throw StructureError("circuit graph is cyclic");
  return order;
}

}  // namespace

std::vector<TropValue> eval_circuit(const TropCircuit& c, const std::vector<TropValue>& inputs) {
  check_wiring(c);
  if (static_cast<int>(inputs.size()) != c.num_vars)
    throw ShapeError("eval_circuit: expected " + std::to_string(c.num_vars) + " inputs, got " +
                     std::to_string(inputs.size()));
  std::vector<TropValue> val(c.gates.size(), TropValue::bottom());
  for (int i : topo_order(c)) {
    const auto& g = c.gates[i];
    switch (g.kind) {
      case GateKind::kVar: val[i] = inputs[g.var_index]; break;
      case GateKind::kConst: val[i] = g.value; break;
      case GateKind::kOplus: val[i] = trop_add(val[g.a], val[g.b]); break;
      case GateKind::kOdot: val[i] = trop_mul(val[g.a], val[g.b]); break;
    }
  }
  std::vector<TropValue> out;
  out.reserve(c.outputs.size());
  for (int o : c.outputs) out.push_back(val[o]);
  return out;
}

std::vector<int> circuit_depths(const TropCircuit& c) {
  check_wiring(c);
  std::vector<int> depth(c.gates.size(), 0);
  for (int i : topo_order(c)) {
    const auto& g = c.gates[i];
    if (!gate_is_leaf(g)) depth[i] = 1 + std::max(depth[g.a], depth[g.b]);
  }
  return depth;
}

std::vector<std::vector<TropValue>> bellman(const WeightedDag& dag) {
  if (dag.n <= 0) throw StructureError("bellman: dag has no vertices");
  if (dag.source < 0 || dag.source >= dag.n) throw StructureError("bellman: source out of range");
  if (dag.horizon < 0) throw StructureError("bellman: negative horizon");
  for (const auto& e : dag.edges) {
    if (e.u < 0 || e.u >= dag.n || e.v < 0 || e.v >= dag.n)
      throw StructureError("bellman: edge endpoint out of range");
  }
  std::vector<std::vector<TropValue>> d(dag.horizon + 1,
                                        std::vector<TropValue>(dag.n, TropValue::bottom()));
  d[0][dag.source] = TropValue::zero();
  for (int t = 1; t <= dag.horizon; ++t) {
    for (const auto& e : dag.edges)
      d[t][e.v] = trop_add(d[t][e.v], trop_mul(e.w, d[t - 1][e.u]));
  }
  return d;
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw StructureError("line " + std::to_string(line) + ": " + msg);
}

TropValue parse_weight(const std::string& tok, int line) {
  if (tok == "-inf") return TropValue::bottom();
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) parse_fail(line, "bad number '" + tok + "'");
    return TropValue(v);
  } catch (const StructureError&) {
    throw;
  } catch (const std::exception&) {
    parse_fail(line, "bad number '" + tok + "'");
  }
}

std::string weight_str(const TropValue& v) {
  if (v.is_bottom()) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v.raw();
  return os.str();
}

}  // namespace

TropCircuit parse_circuit(std::istream& in) {
  TropCircuit c;
  bool saw_header = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw) || kw[0] == '#') continue;
    if (kw == "circuit") {
      if (saw_header) parse_fail(lineno, "duplicate circuit header");
      if (!(ls >> c.num_vars) || c.num_vars < 0) parse_fail(lineno, "bad variable count");
      saw_header = true;
    } else if (kw == "gate") {
      if (!saw_header) parse_fail(lineno, "gate before circuit header");
      int id;
      std::string kind;
      if (!(ls >> id >> kind)) parse_fail(lineno, "malformed gate line");
      if (id != static_cast<int>(c.gates.size()))
        parse_fail(lineno, "gate ids must be consecutive from 0");
      TropCircuit::Gate g;
      if (kind == "var") {
        g.kind = GateKind::kVar;
        if (!(ls >> g.var_index)) parse_fail(lineno, "var gate needs an index");
      } else if (kind == "const") {
        g.kind = GateKind::kConst;
        std::string tok;
        if (!(ls >> tok)) parse_fail(lineno, "const gate needs a value");
        g.value = parse_weight(tok, lineno);
      } else if (kind == "oplus" || kind == "odot") {
        g.kind = kind == "oplus" ? GateKind::kOplus : GateKind::kOdot;
        if (!(ls >> g.a >> g.b)) parse_fail(lineno, kind + " gate needs two operands");
      } else {
        parse_fail(lineno, "unknown gate kind '" + kind + "'");
      }
      std::string extra;
      if (ls >> extra) parse_fail(lineno, "trailing tokens");
      c.gates.push_back(g);
    } else if (kw == "output") {
      if (!saw_header) parse_fail(lineno, "output before circuit header");
      int id;
      while (ls >> id) c.outputs.push_back(id);
    } else {
      parse_fail(lineno, "unknown keyword '" + kw + "'");
    }
  }
  if (!saw_header) throw StructureError("line 1: missing circuit header");
  check_wiring(c);
  topo_order(c);
  return c;
}

std::string format_circuit(const TropCircuit& c) {
  std::ostringstream os;
  os << "circuit " << c.num_vars << "\n";
  for (size_t i = 0; i < c.gates.size(); ++i) {
    const auto& g = c.gates[i];
    os << "gate " << i << " ";
    switch (g.kind) {
      case GateKind::kVar: os << "var " << g.var_index; break;
      case GateKind::kConst: os << "const " << weight_str(g.value); break;
      case GateKind::kOplus: os << "oplus " << g.a << " " << g.b; break;
      case GateKind::kOdot: os << "odot " << g.a << " " << g.b; break;
    }
    os << "\n";
  }
  os << "output";
  for (int o : c.outputs) os << " " << o;
  os << "\n";
  return os.str();
}

WeightedDag parse_dag(std::istream& in) {
  WeightedDag d;
  bool saw_header = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw) || kw[0] == '#') continue;
    if (kw == "dag") {
      if (saw_header) parse_fail(lineno, "duplicate dag header");
      std::string src_kw, hz_kw;
      if (!(ls >> d.n >> src_kw >> d.source >> hz_kw >> d.horizon) || src_kw != "source" ||
          hz_kw != "horizon")
        parse_fail(lineno, "expected: dag <n> source <v0> horizon <T>");
      if (d.n <= 0) parse_fail(lineno, "dag needs at least one vertex");
      saw_header = true;
    } else if (kw == "edge") {
      if (!saw_header) parse_fail(lineno, "edge before dag header");
      WeightedDag::Edge e;
      std::string tok;
      if (!(ls >> e.u >> e.v >> tok)) parse_fail(lineno, "expected: edge <u> <v> <w>");
      e.w = parse_weight(tok, lineno);
      if (e.u < 0 || e.u >= d.n || e.v < 0 || e.v >= d.n)
        parse_fail(lineno, "edge endpoint out of range");
      d.edges.push_back(e);
    } else {
      parse_fail(lineno, "unknown keyword '" + kw + "'");
    }
  }
  if (!saw_header) throw StructureError("line 1: missing dag header");
  return d;
}

std::string format_dag(const WeightedDag& d) {
  std::ostringstream os;
  os << "dag " << d.n << " source " << d.source << " horizon " << d.horizon << "\n";
  for (const auto& e : d.edges) os << "edge " << e.u << " " << e.v << " " << weight_str(e.w) << "\n";
  return os.str();
}

}  // namespace trop
