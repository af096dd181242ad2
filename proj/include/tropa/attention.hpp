#pragma once

// The three attention kernels (vanilla softmax, length-adaptive softmax,
// tropical max-plus) over a shared one-layer encoder, plus the exact
// max-plus evaluation path and binary checkpoints.

#include "tropa/tape.hpp"
#include "tropa/tropical.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace trop {

enum class AttentionKind : std::uint8_t { kVanilla = 0, kAdaptive = 1, kTropical = 2 };
enum class HeadKind : std::uint8_t { kTokenwise = 0, kPooled = 1 };

std::string attention_kind_name(AttentionKind k);
AttentionKind attention_kind_from(const std::string& name);

struct AttentionParams {
  int heads = 2;
  int head_dim = 32;
  std::vector<Mat> wq, wk, wv;  // head_dim x d each
  Mat out_proj;                 // d x d
  Mat lambda;                   // n_max x 1 token-position shift (tropical)
  Mat beta;                     // 1 x 1 length-adaptive gain (adaptive)
  double tau = 1.0;             // softmax temperature
  int n_max = 2048;

  int width() const { return heads * head_dim; }
};

struct EncoderModel {
  AttentionKind kind = AttentionKind::kVanilla;
  HeadKind head = HeadKind::kPooled;
  std::string task;
  int in_width = 0;
  int d = 64;
  Mat embed_w;  // d x in_width
  Mat embed_b;  // 1 x d
  AttentionParams attn;
  Mat head_w;  // 1 x d
  Mat head_b;  // 1 x 1
  int trained_n = 0;  // longest sequence length seen in training
};

EncoderModel make_model(AttentionKind kind, HeadKind head, const std::string& task,
                        int in_width, int heads, int d, int n_max, std::uint64_t seed);

/// Ordered view of the trainable tensors (kernel-specific extras included
/// only for their kind); drives the optimizer and the checkpoint layout.
std::vector<std::pair<std::string, Mat*>> param_registry(EncoderModel& m);

/// The shift actually applied at sequence length n: stored entries up to
/// trained_n, then their mean for positions never seen in training.
Vec effective_lambda(const EncoderModel& m, int n);

struct BoundParams {
  Var embed_w, embed_wt, embed_b;
  std::vector<Var> wq, wk, wv;        // raw head_dim x d leaves
  std::vector<Var> wq_t, wk_t, wv_t;  // d x head_dim, pre-transposed
  Var out_proj, out_projt;            // d x d
  Var head_w, head_wt;                // 1 x d and its transpose
  Var head_b;
  Var lambda;  // n_max x 1 (tropical)
  Var beta;    // 1 x 1 (adaptive)
};

/// Registers every model tensor on the tape once; reused across instances
/// within a batch so gradients accumulate on the shared nodes.
BoundParams bind_params(Tape& t, const EncoderModel& m);

/// Leaf tape nodes in the same order as param_registry; zips with the
/// registry to pull gradients after backward().
std::vector<Var> bound_leaves(const EncoderModel& m, const BoundParams& p);

struct KernelOut {
  Var out;                    // n x d, after the output projection
  std::vector<Var> scores;    // per head n x n (logits for softmax kinds, S for tropical)
  std::vector<Var> alphas;    // per head row-stochastic weights (softmax kinds only)
  std::vector<Var> contexts;  // per head n x head_dim
};

/// Tropical multi-head block on an already-tropicalized representation z
/// (n x d): per head Q/K/V = z max-plus W^T, S = -pairwise Hilbert distance,
/// C = S max-plus V, output = concat(exp(C)) out_proj^T.
KernelOut mhta_from_z(Tape& t, const EncoderModel& m, const BoundParams& p, Var z);

/// Full kernel on the post-embedding representation (n x d).
KernelOut attention_forward(Tape& t, const EncoderModel& m, const BoundParams& p, Var x, int n);

struct ForwardOut {
  Var output;  // n x 1 token logits/values, or 1 x 1 pooled
  KernelOut attn;
};

ForwardOut encoder_forward(Tape& t, const EncoderModel& m, const BoundParams& p,
                           const Mat& tokens);

struct AttentionTrace {
  std::vector<Mat> scores;    // per head n x n
  std::vector<Mat> alphas;    // per head, empty for tropical
  std::vector<Mat> contexts;  // per head n x head_dim
};

AttentionTrace trace_of(const Tape& t, const KernelOut& k);

/// Exact-arithmetic tropical block used by the circuit compilers' verifiers;
/// score matrices are finite by construction (Hilbert metric on finite rows).
struct ExactMhta {
  std::vector<Mat> scores;          // per head n x n
  std::vector<TropMatrix> contexts;  // per head n x head_dim
};

ExactMhta tropical_mhta_exact(const TropMatrix& z, const std::vector<TropMatrix>& wq,
                              const std::vector<TropMatrix>& wk,
                              const std::vector<TropMatrix>& wv);

void save_checkpoint(const EncoderModel& m, const std::string& path);
EncoderModel load_checkpoint(const std::string& path);

}  // namespace trop
