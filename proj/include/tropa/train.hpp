#pragma once

// Losses, AdamW, the training loop, micro-F1 / MSE metrics, the three OOD
// evaluation protocols, and attention-map extraction for the CSV dumps.

#include "tropa/attention.hpp"
#include "tropa/datasets.hpp"
#include "tropa/tape.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace trop {

inline constexpr const char* kTropaVersion = "0.1.0";

enum class LossKind : std::uint8_t { kMse = 0, kBcePooled = 1, kBceTokenwise = 2 };
enum class MetricKind : std::uint8_t { kMse = 0, kMicroF1 = 1 };
enum class Split : std::uint8_t { kInDist = 0, kLengthOod = 1, kValueOod = 2, kAdversarial = 3 };

std::string loss_kind_name(LossKind k);
LossKind loss_kind_from(const std::string& name);  // ConfigError on unknown names
std::string metric_kind_name(MetricKind k);
std::string split_name(Split s);

/// mse for regression labels, tokenwise bce for masks, pooled bce for
/// decision bits.
LossKind default_loss(Task t);
MetricKind metric_for(LossKind k);
/// Pooled head for scalar/decision labels, tokenwise otherwise.
HeadKind head_kind_for(Task t);

struct TrainConfig {
  int epochs = 100;
  int batch = 500;
  double lr = 1e-3;
  LossKind loss = LossKind::kBceTokenwise;
  std::uint64_t seed = 0;
  TaskConfig task;
  AttentionKind kind = AttentionKind::kTropical;
  int samples = 100000;    // training set size
  int eval_samples = 1000; // per evaluation split
  int heads = 2;
  int d = 64;
  int n_max = 2048;
};

/// Published defaults: epochs 100 (1000 for bin_packing and
/// balanced_partition), batch 500 (16 for the graph tasks), constant lr
/// 1e-3 with no warm-up.
TrainConfig default_train_config(Task task, AttentionKind kind);
void validate_train_config(const TrainConfig& cfg);

struct MetricReport {
  MetricKind metric = MetricKind::kMicroF1;
  double value = 0.0;
  Split split = Split::kInDist;
};

std::string format_metric(const MetricReport& r);

struct OodProtocol {
  enum class Kind : std::uint8_t { kLength = 0, kValue = 1, kAdversarial = 2 };
  Kind kind = Kind::kLength;
  int target_n = 0;          // length protocol; 0 picks 64 (16 for graph tasks)
  Range value_range;         // value protocol; unset falls back to the task table
  double perturb_prob = 0.5; // adversarial protocol
};

std::string protocol_name(OodProtocol::Kind k);
OodProtocol::Kind protocol_from(const std::string& name);
Split split_for(OodProtocol::Kind k);

/// Scalar loss node. mse is the mean squared error; both bce kinds use the
/// stable log-sum-exp form on logits, averaged over every entry.
Var compute_loss(Tape& t, LossKind kind, Var pred, const Mat& targets);

/// Supervision column for one instance: 1x1 for scalar/decision labels,
/// one row per token (or vertex pair) otherwise.
Mat label_targets(const Label& lab);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamState {
  std::vector<Mat> m, v;  // first/second moments, registry order
  long step = 0;
};

AdamState make_adam_state(const std::vector<std::pair<std::string, Mat*>>& params);

/// Decoupled-weight-decay Adam with bias-corrected moments.
void adamw_step(const std::vector<std::pair<std::string, Mat*>>& params,
                const std::vector<Mat>& grads, AdamState& state, const AdamHyper& hp);

struct TrainResult {
  EncoderModel model;
  std::vector<double> losses;  // mean training loss per epoch
};

/// Full training run; deterministic for a fixed config. When out_dir is
/// nonempty, persists checkpoint.bin, manifest.txt, and loss.csv there.
/// Aborts with DomainError on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const std::string& out_dir = "");

/// Evaluation instances drawn from an index window disjoint from the
/// training window of the same dataset seed.
std::vector<Instance> make_eval_set(const TaskConfig& cfg, int count);

double micro_f1(long tp, long fp, long fn);

MetricReport evaluate(const EncoderModel& model, const std::vector<Instance>& data,
                      MetricKind metric, Split split = Split::kInDist);

/// Fresh OOD dataset per protocol: length swaps n (64, graphs 16), value
/// swaps in the table's OOD range, adversarial perturbs with probability
/// 0.5. Degenerate parameters reproduce the in-distribution evaluation.
MetricReport run_ood_protocol(const EncoderModel& model, const TrainConfig& cfg,
                              const OodProtocol& proto);

/// Per-head weight matrices as dumped: row-stochastic attention for the
/// softmax kernels, scores shifted onto the tropical simplex (row max 0)
/// for the tropical kernel.
std::vector<Mat> attention_weight_view(const EncoderModel& m, const AttentionTrace& tr);

/// Key columns ranked by token Euclidean norm, largest first, ties to the
/// lower index; at most k entries.
std::vector<int> top_norm_keys(const Mat& tokens, int k);

struct AttentionView {
  std::vector<AttentionTrace> full;  // per instance: scores, weights, contexts
  std::vector<Mat> reduced;          // per head: batch x top_k weight peaks
};

/// reduced[h](b, c) is the largest weight any query of instance b places on
/// the c-th largest key (by token norm).
AttentionView extract_attention(const EncoderModel& model, const std::vector<Mat>& batch,
                                int top_k);

void write_matrix_csv(const std::string& path, const Mat& m);
void write_loss_csv(const std::string& path, const std::vector<double>& losses);
void write_manifest(const std::string& path, const TrainConfig& cfg, const TrainResult& result,
                    const std::vector<MetricReport>& metrics);

}  // namespace trop
