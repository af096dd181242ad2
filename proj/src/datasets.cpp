#include "tropa/datasets.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace trop {
namespace {

using nlohmann::json;

constexpr double kFwEdgeProb = 0.5;  // edge-inclusion probability for Floyd-Warshall graphs

long long as_int(double v) { return std::llround(v); }

struct TaskInfo {
  Task task;
  const char* name;
};

constexpr TaskInfo kTasks[] = {
    {Task::kFloydWarshall, "floyd_warshall"},
    {Task::kQuickSelect, "quickselect"},
    {Task::kThreeSum, "three_sum"},
    {Task::kSubsetSum, "subset_sum"},
    {Task::kBalancedPartition, "balanced_partition"},
    {Task::kConvexHull, "convex_hull"},
    {Task::kKnapsack, "knapsack"},
    {Task::kFracKnapsack, "frac_knapsack"},
    {Task::kMinCoinChange, "min_coin_change"},
    {Task::kBinPacking, "bin_packing"},
    {Task::kScc, "scc"},
};

bool is_graph_task(Task t) { return t == Task::kFloydWarshall || t == Task::kScc; }

bool sorts_values(Task t) {
  switch (t) {
    case Task::kThreeSum:
    case Task::kSubsetSum:
    case Task::kBalancedPartition:
    case Task::kMinCoinChange:
    case Task::kBinPacking: return true;
    default: return false;
  }
}

bool is_item_pair_task(Task t) { return t == Task::kKnapsack || t == Task::kFracKnapsack; }

void sort_item_pairs(RawInstance& raw) {
  const size_t n = raw.values.size();
  std::vector<std::pair<double, double>> items(n);
  for (size_t i = 0; i < n; ++i) items[i] = {raw.values[i], raw.weights[i]};
  std::sort(items.begin(), items.end());
  for (size_t i = 0; i < n; ++i) {
    raw.values[i] = items[i].first;
    raw.weights[i] = items[i].second;
  }
}

void canonicalize(RawInstance& raw) {
  if (sorts_values(raw.task)) std::sort(raw.values.begin(), raw.values.end());
  if (is_item_pair_task(raw.task)) sort_item_pairs(raw);
}

int raw_length(const RawInstance& raw) {
  if (is_graph_task(raw.task)) return static_cast<int>(raw.graph.rows());
  if (raw.task == Task::kConvexHull) return static_cast<int>(raw.points.size());
  return static_cast<int>(raw.values.size());
}

int int_lo(const Range& r) { return static_cast<int>(as_int(r.lo)); }
int int_hi(const Range& r) { return static_cast<int>(as_int(r.hi)); }

}  // namespace

std::string task_name(Task t) {
  for (const auto& info : kTasks)
    if (info.task == t) return info.name;
  throw ConfigError("unknown task id");
}

Task task_from(const std::string& name) {
  for (const auto& info : kTasks)
    if (name == info.name) return info.task;
  throw ConfigError("unknown task '" + name + "'");
}

std::vector<Task> all_tasks() {
  std::vector<Task> out;
  for (const auto& info : kTasks) out.push_back(info.task);
  return out;
}

TaskConfig default_config(Task t) {
  TaskConfig cfg;
  cfg.task = t;
  cfg.n = 8;
  switch (t) {
    case Task::kSubsetSum:
      cfg.target_range = make_range(1, 10);
      cfg.value_range = make_range(-5, 5);
      cfg.ood_value_range = make_range(-20, 20);
      cfg.adversarial_range = make_range(10, 30);
      break;
    case Task::kKnapsack:
      cfg.target_range = make_range(10, 20);
      cfg.weight_range = make_range(1, 10);
      cfg.value_range = make_range(1, 10);
      cfg.ood_value_range = make_range(11, 21);
      cfg.adversarial_range = make_range(10, 30);
      break;
    case Task::kFracKnapsack:
      cfg.target_range = make_range(10, 20);
      cfg.weight_range = make_range(1, 10);
      cfg.value_range = make_range(1, 10);
      cfg.ood_value_range = make_range(11, 21);
      cfg.adversarial_range = make_range(1, 5);
      break;
    case Task::kMinCoinChange:
      cfg.target_range = make_range(10, 20);
      cfg.value_range = make_range(1, 10);
      cfg.ood_value_range = make_range(11, 21);
      cfg.adversarial_range = make_range(1, 5);
      break;
    case Task::kQuickSelect:
      cfg.value_range = make_range(1, 10);
      cfg.ood_value_range = make_range(11, 21);
      cfg.adversarial_range = make_range(1, 5);
      break;
    case Task::kBalancedPartition:
      cfg.value_range = make_range(1, 10);
      cfg.ood_value_range = make_range(11, 100);
      cfg.adversarial_range = make_range(10, 30);
      break;
    case Task::kBinPacking:
      cfg.target_range = make_range(10, 30);
      cfg.value_range = make_range(1, 10);
      cfg.ood_value_range = make_range(11, 100);
      cfg.adversarial_range = make_range(10, 30);
      break;
    case Task::kConvexHull:
      cfg.value_range = make_range(0, 10);
      cfg.ood_value_range = make_range(11, 21);
      cfg.adversarial_range = make_range(1, 5);
      break;
    case Task::kThreeSum:
      cfg.target_range = make_range(-75, 75);
      cfg.value_range = make_range(-20, 20);
      cfg.ood_value_range = make_range(-375, 375);
      cfg.adversarial_range = make_range(40, 60);
      break;
    case Task::kFloydWarshall:
      cfg.value_range = make_range(1, 15);
      cfg.ood_value_range = make_range(16, 30);
      cfg.adversarial_range = make_range(1, 10);
      break;
    case Task::kScc:
      cfg.value_range = make_range(0.001, 0.001);
      cfg.ood_value_range = make_range(0.1, 0.1);
      break;  // perturbation toggles edges; no additive range
  }
  return cfg;
}

void validate_config(const TaskConfig& cfg) {
  auto check_range = [](const Range& r, const char* what) {
    if (r.present && !(r.lo <= r.hi)) throw ConfigError(std::string(what) + ": lo must be <= hi");
  };
  if (cfg.n < 1) throw ConfigError("n must be >= 1");
  if (!(cfg.perturb_prob >= 0.0 && cfg.perturb_prob <= 1.0))
    throw ConfigError("perturbation probability must lie in [0, 1]");
  check_range(cfg.value_range, "value range");
  check_range(cfg.target_range, "target range");
  check_range(cfg.weight_range, "weight range");
  check_range(cfg.ood_value_range, "ood value range");
  check_range(cfg.adversarial_range, "adversarial range");
  if (!cfg.value_range.present) throw ConfigError("value range is required");
  const bool needs_target = cfg.task == Task::kSubsetSum || cfg.task == Task::kKnapsack ||
                            cfg.task == Task::kFracKnapsack || cfg.task == Task::kMinCoinChange ||
                            cfg.task == Task::kBinPacking || cfg.task == Task::kThreeSum;
  if (needs_target && !cfg.target_range.present)
    throw ConfigError(task_name(cfg.task) + " needs a target range");
  if (is_item_pair_task(cfg.task) && !cfg.weight_range.present)
    throw ConfigError(task_name(cfg.task) + " needs a weight range");
  if (cfg.task == Task::kScc &&
      !(cfg.value_range.lo >= 0.0 && cfg.value_range.hi <= 1.0))
    throw ConfigError("scc connectivity probability must lie in [0, 1]");
  if (cfg.task == Task::kFloydWarshall && cfg.value_range.lo < 0.0)
    throw ConfigError("floyd_warshall edge weights must be nonnegative");
  if (cfg.task == Task::kMinCoinChange && cfg.value_range.lo < 1.0)
    throw ConfigError("min_coin_change denominations must be >= 1");
}

std::uint64_t instance_seed(std::uint64_t dataset_seed, std::uint64_t index) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(dataset_seed ^ mix(index + 1));
}

RawInstance generate_raw(const TaskConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> value(int_lo(cfg.value_range), int_hi(cfg.value_range));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  RawInstance raw;
  raw.task = cfg.task;
  const int n = cfg.n;
  switch (cfg.task) {
    case Task::kQuickSelect: {
      for (int i = 0; i < n; ++i) raw.values.push_back(value(rng));
      std::uniform_int_distribution<int> kdist(1, n);
      raw.target = kdist(rng);
      raw.has_target = true;
      break;
    }
    case Task::kThreeSum:
    case Task::kSubsetSum: {
      for (int i = 0; i < n; ++i) raw.values.push_back(value(rng));
      std::uniform_int_distribution<int> tdist(int_lo(cfg.target_range), int_hi(cfg.target_range));
      raw.target = tdist(rng);
      raw.has_target = true;
      break;
    }
    case Task::kBalancedPartition: {
      for (int i = 0; i < n; ++i) raw.values.push_back(value(rng));
      break;
    }
    case Task::kConvexHull: {
      for (int i = 0; i < n; ++i) {
        const double x = value(rng);
        const double y = value(rng);
        raw.points.push_back({x, y});
      }
      break;
    }
    case Task::kKnapsack:
    case Task::kFracKnapsack: {
      std::uniform_int_distribution<int> wdist(int_lo(cfg.weight_range), int_hi(cfg.weight_range));
      for (int i = 0; i < n; ++i) {
        raw.values.push_back(value(rng));
        raw.weights.push_back(wdist(rng));
      }
      std::uniform_int_distribution<int> cdist(int_lo(cfg.target_range), int_hi(cfg.target_range));
      raw.target = cdist(rng);
      raw.has_target = true;
      break;
    }
    case Task::kMinCoinChange:
    case Task::kBinPacking: {
      for (int i = 0; i < n; ++i) raw.values.push_back(value(rng));
      std::uniform_int_distribution<int> tdist(int_lo(cfg.target_range), int_hi(cfg.target_range));
      raw.target = tdist(rng);
      raw.has_target = true;
      break;
    }
    case Task::kFloydWarshall: {
      raw.graph = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          raw.graph(i, j) = coin(rng) < kFwEdgeProb ? static_cast<double>(value(rng)) : -1.0;
        }
      break;
    }
    case Task::kScc: {
      const double p = cfg.value_range.lo;
      raw.graph = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          if (coin(rng) < p) raw.graph(i, j) = 1.0;
        }
      // Symmetrize the directed draw to an undirected adjacency.
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double a = std::max(raw.graph(i, j), raw.graph(j, i));
          raw.graph(i, j) = raw.graph(j, i) = a;
        }
      break;
    }
  }
  canonicalize(raw);
  return raw;
}

double fw_sentinel(const RawInstance& raw) {
  const int n = static_cast<int>(raw.graph.rows());
  double maxw = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && raw.graph(i, j) >= 0.0) maxw = std::max(maxw, raw.graph(i, j));
  return static_cast<double>(n) * maxw + 1.0;
}

namespace {

Label fw_label(const RawInstance& raw) {
  const int n = static_cast<int>(raw.graph.rows());
  const double inf = std::numeric_limits<double>::infinity();
  Mat d = Mat::Constant(n, n, inf);
  for (int i = 0; i < n; ++i) d(i, i) = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && raw.graph(i, j) >= 0.0) d(i, j) = raw.graph(i, j);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  const double big = fw_sentinel(raw);
  Label lab;
  lab.kind = Label::Kind::kPairReals;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) lab.values.push_back(std::isinf(d(i, j)) ? big : d(i, j));
  return lab;
}

Label quickselect_label(const RawInstance& raw) {
  const int k = static_cast<int>(as_int(raw.target));
  std::vector<double> sorted = raw.values;
  std::sort(sorted.begin(), sorted.end());
  const double kth = sorted[k - 1];
  Label lab;
  lab.kind = Label::Kind::kTokenMask;
  for (double v : raw.values) lab.values.push_back(v == kth ? 1.0 : 0.0);
  return lab;
}

Label three_sum_label(const RawInstance& raw) {
  const long long t = as_int(raw.target);
  const int n = static_cast<int>(raw.values.size());
  int hit = 0;
  for (int i = 0; i < n && !hit; ++i)
    for (int j = i + 1; j < n && !hit; ++j)
      for (int k = j + 1; k < n; ++k)
        if (as_int(raw.values[i]) + as_int(raw.values[j]) + as_int(raw.values[k]) == t) {
          hit = 1;
          break;
        }
  Label lab;
  lab.kind = Label::Kind::kBit;
  lab.scalar = hit;
  return lab;
}

// Achievable 0/1 subset sums (the empty subset included) over possibly
// negative integers, as a flag table offset by the most negative total.
std::vector<char> subset_sums(const std::vector<long long>& xs, long long& neg_out) {
  long long neg = 0, pos = 0;
  for (long long v : xs) (v < 0 ? neg += v : pos += v);
  std::vector<char> dp(static_cast<size_t>(pos - neg + 1), 0);
  dp[static_cast<size_t>(-neg)] = 1;
  for (long long v : xs) {
    std::vector<char> next = dp;
    for (size_t s = 0; s < dp.size(); ++s) {
      if (!dp[s]) continue;
      const long long to = static_cast<long long>(s) + v;
      if (to >= 0 && to < static_cast<long long>(next.size())) next[static_cast<size_t>(to)] = 1;
    }
    dp.swap(next);
  }
  neg_out = neg;
  return dp;
}

Label subset_sum_label(const RawInstance& raw) {
  std::vector<long long> xs;
  for (double v : raw.values) xs.push_back(as_int(v));
  long long neg = 0;
  const auto dp = subset_sums(xs, neg);
  const long long t = as_int(raw.target) - neg;
  Label lab;
  lab.kind = Label::Kind::kBit;
  lab.scalar = (t >= 0 && t < static_cast<long long>(dp.size()) && dp[static_cast<size_t>(t)]) ? 1.0 : 0.0;
  return lab;
}

Label partition_label(const RawInstance& raw) {
  std::vector<long long> xs;
  long long total = 0;
  for (double v : raw.values) {
    xs.push_back(as_int(v));
    total += as_int(v);
  }
  long long neg = 0;
  const auto dp = subset_sums(xs, neg);
  long long best = std::numeric_limits<long long>::max();
  for (size_t s = 0; s < dp.size(); ++s)
    if (dp[s]) best = std::min(best, std::llabs(total - 2 * (static_cast<long long>(s) + neg)));
  Label lab;
  lab.kind = Label::Kind::kScalar;
  lab.scalar = static_cast<double>(best);
  return lab;
}

Label hull_label(const RawInstance& raw) {
  const int n = static_cast<int>(raw.points.size());
  std::vector<std::pair<long long, long long>> pts;
  for (const auto& p : raw.points) pts.push_back({as_int(p[0]), as_int(p[1])});
  auto cross = [](const std::pair<long long, long long>& o, const std::pair<long long, long long>& a,
                  const std::pair<long long, long long>& b) {
    return (a.first - o.first) * (b.second - o.second) -
           (a.second - o.second) * (b.first - o.first);
  };
  // Monotone chain over distinct points; strict turns so the polygon has no
  // collinear vertices.
  std::vector<std::pair<long long, long long>> uniq = pts;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<std::pair<long long, long long>> hull;
  if (uniq.size() >= 3) {
    std::vector<std::pair<long long, long long>> lower, upper;
    for (const auto& p : uniq) {
      while (lower.size() >= 2 && cross(lower[lower.size() - 2], lower.back(), p) <= 0)
        lower.pop_back();
      lower.push_back(p);
    }
    for (auto it = uniq.rbegin(); it != uniq.rend(); ++it) {
      while (upper.size() >= 2 && cross(upper[upper.size() - 2], upper.back(), *it) <= 0)
        upper.pop_back();
      upper.push_back(*it);
    }
    lower.pop_back();
    upper.pop_back();
    hull = lower;
    hull.insert(hull.end(), upper.begin(), upper.end());
  }
  auto on_segment = [&](const std::pair<long long, long long>& a,
                        const std::pair<long long, long long>& b,
                        const std::pair<long long, long long>& p) {
    if (cross(a, b, p) != 0) return false;
    return std::min(a.first, b.first) <= p.first && p.first <= std::max(a.first, b.first) &&
           std::min(a.second, b.second) <= p.second && p.second <= std::max(a.second, b.second);
  };
  Label lab;
  lab.kind = Label::Kind::kTokenMask;
  for (int i = 0; i < n; ++i) {
    bool on = false;
    if (hull.size() >= 3) {
      for (size_t e = 0; e < hull.size() && !on; ++e)
        on = on_segment(hull[e], hull[(e + 1) % hull.size()], pts[i]);
    } else if (uniq.size() == 2) {
      on = on_segment(uniq[0], uniq[1], pts[i]);  // degenerate: all collinear
    } else {
      on = true;  // a single distinct point is its own hull
    }
    lab.values.push_back(on ? 1.0 : 0.0);
  }
  return lab;
}

Label knapsack_label(const RawInstance& raw) {
  const long long cap = as_int(raw.target);
  std::vector<long long> dp(static_cast<size_t>(cap + 1), 0);
  for (size_t i = 0; i < raw.values.size(); ++i) {
    const long long v = as_int(raw.values[i]);
    const long long w = as_int(raw.weights[i]);
    for (long long c = cap; c >= w; --c)
      dp[static_cast<size_t>(c)] =
          std::max(dp[static_cast<size_t>(c)], dp[static_cast<size_t>(c - w)] + v);
  }
  Label lab;
  lab.kind = Label::Kind::kScalar;
  lab.scalar = static_cast<double>(dp[static_cast<size_t>(cap)]);
  return lab;
}

Label frac_knapsack_label(const RawInstance& raw) {
  const int n = static_cast<int>(raw.values.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Density sort via exact cross-multiplication; stable for equal densities
  // (the greedy value does not depend on the tie order).
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return as_int(raw.values[a]) * as_int(raw.weights[b]) >
           as_int(raw.values[b]) * as_int(raw.weights[a]);
  });
  double cap = raw.target;
  double acc = 0.0;
  for (int i : order) {
    if (cap <= 0.0) break;
    const double w = raw.weights[i];
    if (w <= cap) {
      acc += raw.values[i];
      cap -= w;
    } else {
      acc += (cap * raw.values[i]) / w;
      cap = 0.0;
    }
  }
  Label lab;
  lab.kind = Label::Kind::kScalar;
  lab.scalar = acc;
  return lab;
}

Label coin_label(const RawInstance& raw) {
  const long long t = as_int(raw.target);
  const long long kInf = std::numeric_limits<long long>::max() / 2;
  std::vector<long long> dp(static_cast<size_t>(t + 1), kInf);
  dp[0] = 0;
  for (long long a = 1; a <= t; ++a)
    for (double cd : raw.values) {
      const long long c = as_int(cd);
      if (c >= 1 && c <= a) dp[static_cast<size_t>(a)] =
          std::min(dp[static_cast<size_t>(a)], dp[static_cast<size_t>(a - c)] + 1);
    }
  Label lab;
  lab.kind = Label::Kind::kScalar;
  lab.scalar = dp[static_cast<size_t>(t)] >= kInf ? 0.0 : static_cast<double>(dp[static_cast<size_t>(t)]);
  return lab;
}

Label bin_packing_label(const RawInstance& raw) {
  const long long cap = as_int(raw.target);
  std::vector<long long> sizes;
  for (double v : raw.values) sizes.push_back(as_int(v));
  std::sort(sizes.rbegin(), sizes.rend());  // first-fit decreasing
  std::vector<long long> bins;
  for (long long s : sizes) {
    bool placed = false;
    for (auto& b : bins)
      if (b + s <= cap) {
        b += s;
        placed = true;
        break;
      }
    if (!placed) bins.push_back(s);
  }
  Label lab;
  lab.kind = Label::Kind::kScalar;
  lab.scalar = static_cast<double>(bins.size());
  return lab;
}

Label scc_label(const RawInstance& raw) {
  const int n = static_cast<int>(raw.graph.rows());
  std::vector<int> comp(n, -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack = {s};
    comp[s] = next;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v)
        if (raw.graph(u, v) > 0.0 && comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  Label lab;
  lab.kind = Label::Kind::kPairMask;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) lab.values.push_back(comp[i] == comp[j] ? 1.0 : 0.0);
  return lab;
}

}  // namespace

Label oracle_label(const RawInstance& raw) {
  switch (raw.task) {
    case Task::kFloydWarshall: return fw_label(raw);
    case Task::kQuickSelect: return quickselect_label(raw);
    case Task::kThreeSum: return three_sum_label(raw);
    case Task::kSubsetSum: return subset_sum_label(raw);
    case Task::kBalancedPartition: return partition_label(raw);
    case Task::kConvexHull: return hull_label(raw);
    case Task::kKnapsack: return knapsack_label(raw);
    case Task::kFracKnapsack: return frac_knapsack_label(raw);
    case Task::kMinCoinChange: return coin_label(raw);
    case Task::kBinPacking: return bin_packing_label(raw);
    case Task::kScc: return scc_label(raw);
  }
  throw ConfigError("unknown task id");
}

int token_width(Task t) {
  switch (t) {
    case Task::kBalancedPartition: return 1;
    case Task::kFloydWarshall:
    case Task::kScc:
    case Task::kKnapsack:
    case Task::kFracKnapsack: return 3;
    default: return 2;
  }
}

int label_arity(Task t, int n) {
  switch (t) {
    case Task::kFloydWarshall:
    case Task::kScc: return n * n;
    case Task::kQuickSelect:
    case Task::kConvexHull: return n;
    default: return 1;
  }
}

Mat encode_tokens(const RawInstance& raw) {
  const int w = token_width(raw.task);
  switch (raw.task) {
    case Task::kFloydWarshall: {
      const int n = static_cast<int>(raw.graph.rows());
      const double big = fw_sentinel(raw);
      Mat m(n * n, w);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double wij = i == j ? 0.0 : raw.graph(i, j);
          m.row(i * n + j) << static_cast<double>(i), static_cast<double>(j),
              (wij < 0.0 ? big : wij);
        }
      return m;
    }
    case Task::kScc: {
      const int n = static_cast<int>(raw.graph.rows());
      Mat m(n * n, w);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          m.row(i * n + j) << static_cast<double>(i), static_cast<double>(j), raw.graph(i, j);
      return m;
    }
    case Task::kConvexHull: {
      const int n = static_cast<int>(raw.points.size());
      Mat m(n, w);
      for (int i = 0; i < n; ++i) m.row(i) << raw.points[i][0], raw.points[i][1];
      return m;
    }
    case Task::kKnapsack:
    case Task::kFracKnapsack: {
      const int n = static_cast<int>(raw.values.size());
      Mat m(n, w);
      for (int i = 0; i < n; ++i) m.row(i) << raw.values[i], raw.weights[i], raw.target;
      return m;
    }
    case Task::kBalancedPartition: {
      const int n = static_cast<int>(raw.values.size());
      Mat m(n, w);
      for (int i = 0; i < n; ++i) m(i, 0) = raw.values[i];
      return m;
    }
    default: {  // [x_i, side-information] tasks
      const int n = static_cast<int>(raw.values.size());
      Mat m(n, w);
      for (int i = 0; i < n; ++i) m.row(i) << raw.values[i], raw.target;
      return m;
    }
  }
}

RawInstance apply_adversarial(const RawInstance& raw, const TaskConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  RawInstance out = raw;
  const double p = cfg.perturb_prob;
  if (raw.task == Task::kScc) {
    const int n = static_cast<int>(out.graph.rows());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (coin(rng) < p) {
          const double a = out.graph(i, j) > 0.0 ? 0.0 : 1.0;
          out.graph(i, j) = out.graph(j, i) = a;
        }
    return out;
  }
  if (!cfg.adversarial_range.present)
    throw ConfigError(task_name(raw.task) + " has no adversarial range");
  std::uniform_int_distribution<int> bump(int_lo(cfg.adversarial_range),
                                          int_hi(cfg.adversarial_range));
  auto maybe_bump = [&](double& v) {
    if (coin(rng) < p) v += bump(rng);
  };
  switch (raw.task) {
    case Task::kConvexHull:
      for (auto& pt : out.points) {
        maybe_bump(pt[0]);
        maybe_bump(pt[1]);
      }
      break;
    case Task::kFloydWarshall: {
      const int n = static_cast<int>(out.graph.rows());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j && out.graph(i, j) >= 0.0) maybe_bump(out.graph(i, j));
      break;
    }
    case Task::kKnapsack:
    case Task::kFracKnapsack:
      for (auto& v : out.values) maybe_bump(v);
      for (auto& w : out.weights) maybe_bump(w);
      break;
    default:
      for (auto& v : out.values) maybe_bump(v);
      break;
  }
  canonicalize(out);
  return out;
}

std::vector<Instance> generate(const TaskConfig& cfg, int count) {
  validate_config(cfg);
  if (count < 0) throw ConfigError("instance count must be >= 0");
  std::vector<Instance> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = instance_seed(cfg.seed, static_cast<std::uint64_t>(i));
    Instance inst;
    inst.raw = generate_raw(cfg, s);
    if (cfg.perturb_prob > 0.0)
      inst.raw = apply_adversarial(inst.raw, cfg, instance_seed(s, 0x5adbeefULL));
    inst.label = oracle_label(inst.raw);
    inst.tokens = encode_tokens(inst.raw);
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

const char* label_kind_name(Label::Kind k) {
  switch (k) {
    case Label::Kind::kScalar: return "scalar";
    case Label::Kind::kBit: return "bit";
    case Label::Kind::kTokenMask: return "token_mask";
    case Label::Kind::kPairMask: return "pair_mask";
    case Label::Kind::kPairReals: return "pair_reals";
  }
  return "scalar";
}

Label::Kind label_kind_from(const std::string& s) {
  if (s == "scalar") return Label::Kind::kScalar;
  if (s == "bit") return Label::Kind::kBit;
  if (s == "token_mask") return Label::Kind::kTokenMask;
  if (s == "pair_mask") return Label::Kind::kPairMask;
  if (s == "pair_reals") return Label::Kind::kPairReals;
  throw StructureError("unknown label kind '" + s + "'");
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw StructureError("matrix must be a nonempty array");
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = static_cast<Eigen::Index>(rows[0].size());
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != c)
      throw StructureError("ragged matrix rows");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

std::string format_instance(const Instance& inst) {
  json j;
  j["task"] = task_name(inst.raw.task);
  json raw = json::object();
  if (!inst.raw.values.empty()) raw["values"] = inst.raw.values;
  if (!inst.raw.weights.empty()) raw["weights"] = inst.raw.weights;
  if (!inst.raw.points.empty()) {
    json pts = json::array();
    for (const auto& p : inst.raw.points) pts.push_back(json::array({p[0], p[1]}));
    raw["points"] = std::move(pts);
  }
  if (inst.raw.graph.size() > 0) raw["graph"] = mat_to_json(inst.raw.graph);
  if (inst.raw.has_target) raw["target"] = inst.raw.target;
  j["raw"] = std::move(raw);
  j["tokens"] = mat_to_json(inst.tokens);
  json lab;
  lab["kind"] = label_kind_name(inst.label.kind);
  if (inst.label.kind == Label::Kind::kScalar || inst.label.kind == Label::Kind::kBit)
    lab["scalar"] = inst.label.scalar;
  else
    lab["values"] = inst.label.values;
  j["label"] = std::move(lab);
  return j.dump();
}

Instance parse_instance(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw StructureError(std::string("bad instance record: ") + e.what());
  }
  try {
    Instance inst;
    inst.raw.task = task_from(j.at("task").get<std::string>());
    const json& raw = j.at("raw");
    if (raw.contains("values")) inst.raw.values = raw["values"].get<std::vector<double>>();
    if (raw.contains("weights")) inst.raw.weights = raw["weights"].get<std::vector<double>>();
    if (raw.contains("points"))
      for (const auto& p : raw["points"])
        inst.raw.points.push_back({p[0].get<double>(), p[1].get<double>()});
    if (raw.contains("graph")) inst.raw.graph = mat_from_json(raw["graph"]);
    if (raw.contains("target")) {
      inst.raw.target = raw["target"].get<double>();
      inst.raw.has_target = true;
    }
    inst.tokens = mat_from_json(j.at("tokens"));
    const json& lab = j.at("label");
    inst.label.kind = label_kind_from(lab.at("kind").get<std::string>());
    if (inst.label.kind == Label::Kind::kScalar || inst.label.kind == Label::Kind::kBit)
      inst.label.scalar = lab.at("scalar").get<double>();
    else
      inst.label.values = lab.at("values").get<std::vector<double>>();
    return inst;
  } catch (const json::exception& e) {
    throw StructureError(std::string("bad instance record: ") + e.what());
  } catch (const ConfigError& e) {
    throw StructureError(std::string("bad instance record: ") + e.what());
  }
}

void write_dataset(std::ostream& out, const std::vector<Instance>& data) {
  for (const auto& inst : data) out << format_instance(inst) << "\n";
}

std::vector<Instance> read_dataset(std::istream& in) {
  std::vector<Instance> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse_instance(line));
    } catch (const StructureError& e) {
      throw StructureError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace trop
