#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "tropa/circuit.hpp"
#include "tropa/compile.hpp"  // random_circuit / random_dag generators

using trop::TropCircuit;
using trop::TropValue;
using trop::WeightedDag;
using GateKind = TropCircuit::GateKind;

namespace {

TropCircuit::Gate var_gate(int idx) {
  TropCircuit::Gate g;
  g.kind = GateKind::kVar;
  g.var_index = idx;
  return g;
}

TropCircuit::Gate const_gate(TropValue v) {
  TropCircuit::Gate g;
  g.kind = GateKind::kConst;
  g.value = v;
  return g;
}

TropCircuit::Gate bin_gate(GateKind k, int a, int b) {
  TropCircuit::Gate g;
  g.kind = k;
  g.a = a;
  g.b = b;
  return g;
}

// Independent oracle: plain memoized recursion instead of the library's
// Kahn-queue evaluation.
TropValue interp_gate(const TropCircuit& c, const std::vector<TropValue>& x, int g,
                      std::vector<int>& state, std::vector<TropValue>& memo) {
  if (state[g] == 1) throw trop::StructureError("interpreter found a cycle");
  if (state[g] == 2) return memo[g];
  state[g] = 1;
  const auto& gate = c.gates[g];
  TropValue v;
  switch (gate.kind) {
    case GateKind::kVar: v = x[gate.var_index]; break;
    case GateKind::kConst: v = gate.value; break;
    case GateKind::kOplus:
      v = trop::trop_add(interp_gate(c, x, gate.a, state, memo),
                         interp_gate(c, x, gate.b, state, memo));
      break;
    case GateKind::kOdot:
      v = trop::trop_mul(interp_gate(c, x, gate.a, state, memo),
                         interp_gate(c, x, gate.b, state, memo));
      break;
  }
  state[g] = 2;
  memo[g] = v;
  return v;
}

std::vector<TropValue> interp_circuit(const TropCircuit& c, const std::vector<TropValue>& x) {
  std::vector<int> state(c.gates.size(), 0);
  std::vector<TropValue> memo(c.gates.size(), TropValue::bottom());
  std::vector<TropValue> out;
  for (int o : c.outputs) out.push_back(interp_gate(c, x, o, state, memo));
  return out;
}

bool same(const TropValue& a, const TropValue& b) {
  if (a.is_bottom() || b.is_bottom()) return a.is_bottom() && b.is_bottom();
  return a.raw() == b.raw();
}

// Brute force: best total weight over walks of exactly t edges from the source.
void enumerate_walks(const WeightedDag& d, int u, int steps, double acc,
                     std::vector<std::vector<TropValue>>& best) {
  best[steps][u] = trop::trop_add(best[steps][u], TropValue(acc));
  if (steps == d.horizon) return;
  for (const auto& e : d.edges) {
    if (e.u != u || e.w.is_bottom()) continue;
    enumerate_walks(d, e.v, steps + 1, acc + e.w.raw(), best);
  }
}

}  // namespace

TEST_CASE("eval_circuit single variable is the identity") {
  TropCircuit c;
  c.num_vars = 1;
  c.gates.push_back(var_gate(0));
  c.outputs = {0};
  auto out = trop::eval_circuit(c, {TropValue(7.5)});
  REQUIRE(out.size() == 1);
  CHECK(out[0].raw() == 7.5);
  CHECK(trop::eval_circuit(c, {TropValue::bottom()})[0].is_bottom());
}

TEST_CASE("eval_circuit hand example: max(x + 2, 5) at x = 1") {
  TropCircuit c;
  c.num_vars = 1;
  c.gates.push_back(var_gate(0));                       // 0: x
  c.gates.push_back(const_gate(TropValue(2.0)));        // 1
  c.gates.push_back(bin_gate(GateKind::kOdot, 0, 1));   // 2: x + 2
  c.gates.push_back(const_gate(TropValue(5.0)));        // 3
  c.gates.push_back(bin_gate(GateKind::kOplus, 2, 3));  // 4: max(x + 2, 5)
  c.outputs = {4};
  CHECK(trop::eval_circuit(c, {TropValue(1.0)})[0].raw() == 5.0);
  CHECK(trop::eval_circuit(c, {TropValue(9.0)})[0].raw() == 11.0);
}

TEST_CASE("eval_circuit rejects cycles and bad wiring") {
  TropCircuit c;
  c.num_vars = 1;
  c.gates.push_back(var_gate(0));
  c.gates.push_back(bin_gate(GateKind::kOplus, 2, 0));  // refers forward to 2
  c.gates.push_back(bin_gate(GateKind::kOplus, 1, 0));  // cycle 1 <-> 2
  c.outputs = {2};
  CHECK_THROWS_AS(trop::eval_circuit(c, {TropValue(0.0)}), trop::StructureError);

  TropCircuit good;
  good.num_vars = 1;
  good.gates.push_back(var_gate(0));
  good.outputs = {0};
  CHECK_THROWS_AS(trop::eval_circuit(good, {}), trop::ShapeError);

  TropCircuit bad_var;
  bad_var.num_vars = 1;
  bad_var.gates.push_back(var_gate(3));
  bad_var.outputs = {0};
  CHECK_THROWS_AS(trop::eval_circuit(bad_var, {TropValue(0.0)}), trop::StructureError);

  TropCircuit no_out;
  no_out.num_vars = 1;
  no_out.gates.push_back(var_gate(0));
  CHECK_THROWS_AS(trop::eval_circuit(no_out, {TropValue(0.0)}), trop::StructureError);
}

TEST_CASE("eval_circuit matches an independent recursive interpreter") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> val(-10, 10);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const TropCircuit c = trop::random_circuit(rng(), 10);
    std::vector<TropValue> x(c.num_vars);
    for (auto& xi : x)
      xi = coin(rng) < 0.1 ? TropValue::bottom() : TropValue(static_cast<double>(val(rng)));
    const auto got = trop::eval_circuit(c, x);
    const auto want = interp_circuit(c, x);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(same(got[i], want[i]));
  }
}

TEST_CASE("circuit_depths counts the longest chain") {
  TropCircuit c;
  c.num_vars = 2;
  c.gates.push_back(var_gate(0));
  c.gates.push_back(var_gate(1));
  c.gates.push_back(bin_gate(GateKind::kOplus, 0, 1));  // depth 1
  c.gates.push_back(bin_gate(GateKind::kOdot, 2, 1));   // depth 2
  c.outputs = {3};
  const auto d = trop::circuit_depths(c);
  CHECK(d[0] == 0);
  CHECK(d[1] == 0);
  CHECK(d[2] == 1);
  CHECK(d[3] == 2);
}

TEST_CASE("bellman base case is the tropical Kronecker delta") {
  WeightedDag d;
  d.n = 3;
  d.source = 1;
  d.horizon = 0;
  const auto traj = trop::bellman(d);
  REQUIRE(traj.size() == 1);
  CHECK(traj[0][0].is_bottom());
  CHECK(traj[0][1].raw() == 0.0);
  CHECK(traj[0][2].is_bottom());
}

TEST_CASE("bellman chain v0->v1->v2 with weights 2, 3") {
  WeightedDag d;
  d.n = 3;
  d.source = 0;
  d.horizon = 2;
  d.edges.push_back({0, 1, TropValue(2.0)});
  d.edges.push_back({1, 2, TropValue(3.0)});
  const auto traj = trop::bellman(d);
  REQUIRE(traj.size() == 3);
  CHECK(traj[1][1].raw() == 2.0);
  CHECK(traj[1][0].is_bottom());  // strict recursion: no self-retention
  CHECK(traj[1][2].is_bottom());
  CHECK(traj[2][2].raw() == 5.0);
  CHECK(traj[2][0].is_bottom());
  CHECK(traj[2][1].is_bottom());
}

TEST_CASE("bellman matches exhaustive walk enumeration") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 100; ++t) {
    const WeightedDag d = trop::random_dag(rng(), 8, 5);
    const auto got = trop::bellman(d);
    std::vector<std::vector<TropValue>> want(d.horizon + 1,
                                             std::vector<TropValue>(d.n, TropValue::bottom()));
    enumerate_walks(d, d.source, 0, 0.0, want);
    for (int s = 0; s <= d.horizon; ++s)
      for (int v = 0; v < d.n; ++v) CHECK(same(got[s][v], want[s][v]));
  }
}

TEST_CASE("bellman structural errors") {
  WeightedDag d;
  d.n = 0;
  CHECK_THROWS_AS(trop::bellman(d), trop::StructureError);
  d.n = 2;
  d.source = 5;
  CHECK_THROWS_AS(trop::bellman(d), trop::StructureError);
  d.source = 0;
  d.horizon = -1;
  CHECK_THROWS_AS(trop::bellman(d), trop::StructureError);
  d.horizon = 1;
  d.edges.push_back({0, 9, TropValue(1.0)});
  CHECK_THROWS_AS(trop::bellman(d), trop::StructureError);
}

TEST_CASE("circuit text format round trips") {
  TropCircuit c;
  c.num_vars = 2;
  c.gates.push_back(var_gate(0));
  c.gates.push_back(var_gate(1));
  c.gates.push_back(const_gate(TropValue::bottom()));
  c.gates.push_back(const_gate(TropValue(2.5)));
  c.gates.push_back(bin_gate(GateKind::kOplus, 0, 2));
  c.gates.push_back(bin_gate(GateKind::kOdot, 4, 3));
  c.outputs = {5, 1};
  const std::string text = trop::format_circuit(c);
  std::istringstream in(text);
  const TropCircuit back = trop::parse_circuit(in);
  REQUIRE(back.gates.size() == c.gates.size());
  REQUIRE(back.outputs == c.outputs);
  CHECK(back.num_vars == 2);
  const std::vector<TropValue> x = {TropValue(1.0), TropValue(-4.0)};
  const auto a = trop::eval_circuit(c, x);
  const auto b = trop::eval_circuit(back, x);
  for (size_t i = 0; i < a.size(); ++i) CHECK(same(a[i], b[i]));
  CHECK(trop::format_circuit(back) == text);
}

TEST_CASE("circuit parser anchors errors to lines") {
  auto expect_line = [](const std::string& text, const std::string& fragment) {
    std::istringstream in(text);
    try {
      trop::parse_circuit(in);
      FAIL("expected a parse error");
    } catch (const trop::StructureError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("line ") == 0);
      CHECK(msg.find(fragment) != std::string::npos);
    }
  };
  expect_line("gate 0 var 0\n", "before circuit header");
  expect_line("circuit 1\ngate 0 frob 1 2\noutput 0\n", "unknown gate kind");
  expect_line("circuit 1\ngate 1 var 0\noutput 1\n", "consecutive");
  expect_line("circuit 1\ngate 0 const banana\noutput 0\n", "bad number");
  expect_line("circuit 1\ngate 0 var 0 9\noutput 0\n", "trailing");
  std::istringstream empty("");
  CHECK_THROWS_AS(trop::parse_circuit(empty), trop::StructureError);
}

TEST_CASE("dag text format round trips") {
  WeightedDag d;
  d.n = 4;
  d.source = 0;
  d.horizon = 3;
  d.edges.push_back({0, 1, TropValue(2.0)});
  d.edges.push_back({1, 3, TropValue::bottom()});
  d.edges.push_back({0, 2, TropValue(-1.5)});
  const std::string text = trop::format_dag(d);
  std::istringstream in(text);
  const WeightedDag back = trop::parse_dag(in);
  CHECK(back.n == 4);
  CHECK(back.source == 0);
  CHECK(back.horizon == 3);
  REQUIRE(back.edges.size() == 3);
  CHECK(back.edges[1].w.is_bottom());
  CHECK(back.edges[2].w.raw() == -1.5);
  CHECK(trop::format_dag(back) == text);

  std::istringstream bad("dag 2 source 0 horizon 1\nedge 0 7 1\n");
  try {
    trop::parse_dag(bad);
    FAIL("expected a parse error");
  } catch (const trop::StructureError& e) {
    CHECK(std::string(e.what()).find("line 2") == 0);
  }
}
