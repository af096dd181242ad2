#pragma once

// Tropical circuits (fan-in-2 max/plus gates over the max-plus semiring),
// weighted DAGs with the max-plus Bellman recursion, and their
// structured-text formats.

#include "tropa/tropical.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace trop {

struct TropCircuit {
  enum class GateKind { kVar, kConst, kOplus, kOdot };
  struct Gate {
    GateKind kind = GateKind::kVar;
    int a = -1;         // left operand gate id
    int b = -1;         // right operand gate id
    int var_index = -1; // kVar
    TropValue value;    // kConst
  };
  int num_vars = 0;
  std::vector<Gate> gates;
  std::vector<int> outputs;  // sink gate ids, in output order
};

/// Topological evaluation; outputs in sink order.
std::vector<TropValue> eval_circuit(const TropCircuit& c, const std::vector<TropValue>& inputs);

/// Longest dependency chain (vars/consts at depth 0) per gate.
std::vector<int> circuit_depths(const TropCircuit& c);

struct WeightedDag {
  struct Edge {
    int u = 0, v = 0;
    TropValue w;
  };
  int n = 0;
  std::vector<Edge> edges;
  int source = 0;
  int horizon = 0;  // T
};

/// d[t][v] for t = 0..T: d[0] is the tropical Kronecker delta at the source,
/// d[t+1][v] = max over in-edges (u,v) of (w_uv + d[t][u]).
std::vector<std::vector<TropValue>> bellman(const WeightedDag& dag);

// Structured-text round trip. Circuits:
//   circuit <num_vars>
//   gate <id> var <index> | gate <id> const <value|-inf> | gate <id> oplus <a> <b> | gate <id> odot <a> <b>
//   output <id> [<id>...]
// DAGs:
//   dag <n> source <v0> horizon <T>
//   edge <u> <v> <weight|-inf>
TropCircuit parse_circuit(std::istream& in);
std::string format_circuit(const TropCircuit& c);
WeightedDag parse_dag(std::istream& in);
std::string format_dag(const WeightedDag& d);

}  // namespace trop
