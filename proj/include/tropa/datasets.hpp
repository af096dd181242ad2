#pragma once

// Instance generators, exact oracles, token encodings, and adversarial
// perturbation for the eleven combinatorial tasks, plus the JSONL dataset
// format.

#include "tropa/tropical.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace trop {

enum class Task {
  kFloydWarshall,
  kQuickSelect,
  kThreeSum,
  kSubsetSum,
  kBalancedPartition,
  kConvexHull,
  kKnapsack,
  kFracKnapsack,
  kMinCoinChange,
  kBinPacking,
  kScc,
};

std::string task_name(Task t);
Task task_from(const std::string& name);  // ConfigError on unknown names
std::vector<Task> all_tasks();

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool present = false;
};

inline Range make_range(double lo, double hi) { return Range{lo, hi, true}; }

struct TaskConfig {
  Task task = Task::kQuickSelect;
  int n = 8;
  Range value_range;        // SCC: lo = hi = edge-inclusion probability
  Range target_range;       // targets / capacities, when the task has one
  Range weight_range;       // knapsack weights
  Range ood_value_range;    // value-OOD protocol swaps this in
  Range adversarial_range;  // absent for SCC (edge toggles instead)
  double perturb_prob = 0.0;
  std::uint64_t seed = 0;
};

/// Per-task defaults: n = 8 and the published training table ranges.
TaskConfig default_config(Task t);

/// ConfigError on invalid ranges, probabilities, or lengths.
void validate_config(const TaskConfig& cfg);

struct RawInstance {
  Task task = Task::kQuickSelect;
  std::vector<double> values;                 // list payload (or knapsack item values)
  std::vector<double> weights;                // knapsack item weights
  std::vector<std::array<double, 2>> points;  // convex hull
  Mat graph;  // n x n; FloydWarshall weights with -1 = no edge, SCC 0/1 adjacency
  double target = 0.0;  // T / capacity / QuickSelect k
  bool has_target = false;
};

struct Label {
  enum class Kind { kScalar, kBit, kTokenMask, kPairMask, kPairReals };
  Kind kind = Kind::kScalar;
  double scalar = 0.0;         // kScalar / kBit
  std::vector<double> values;  // masks as 0/1, pair reals as doubles, row-major
};

struct Instance {
  RawInstance raw;
  Mat tokens;
  Label label;
};

/// Deterministic per-instance seed stream for a dataset seed.
std::uint64_t instance_seed(std::uint64_t dataset_seed, std::uint64_t index);

/// Clean raw structure for one instance.
RawInstance generate_raw(const TaskConfig& cfg, std::uint64_t seed);

/// Exact reference label for a raw structure (see per-task oracles in the
/// implementation; all integer-valued tasks are exact).
Label oracle_label(const RawInstance& raw);

/// Fixed-width token matrix. Scalar side information (targets, capacities,
/// k) is broadcast onto every token.
Mat encode_tokens(const RawInstance& raw);
int token_width(Task t);

/// Number of supervised outputs per instance (1, n, or n^2).
int label_arity(Task t, int n);

/// Additive integer perturbation of each numeric input entry with
/// probability cfg.perturb_prob; SCC toggles each undirected edge instead.
/// Canonical sort order is restored afterwards; the caller relabels via
/// oracle_label. ConfigError when a non-SCC task has no adversarial range.
RawInstance apply_adversarial(const RawInstance& raw, const TaskConfig& cfg, std::uint64_t seed);

/// count instances; labels always recomputed on the final (possibly
/// perturbed) raw structure.
std::vector<Instance> generate(const TaskConfig& cfg, int count);

/// One JSON object per line: task id, raw payload, token matrix, label.
std::string format_instance(const Instance& inst);
Instance parse_instance(const std::string& line);
void write_dataset(std::ostream& out, const std::vector<Instance>& data);
std::vector<Instance> read_dataset(std::istream& in);

/// Unreachable-pair sentinel: n * (largest edge weight present) + 1.
double fw_sentinel(const RawInstance& raw);

}  // namespace trop
