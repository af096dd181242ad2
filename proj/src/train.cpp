#include "tropa/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

namespace trop {
namespace {

// Evaluation instances live in an index window far above any training
// index; instance_seed is injective in the index, so the seed streams
// never overlap.
constexpr std::uint64_t kEvalIndexBase = 1ULL << 40;

bool graph_task(Task t) { return t == Task::kFloydWarshall || t == Task::kScc; }

int token_rows(const TaskConfig& cfg) {
  return graph_task(cfg.task) ? cfg.n * cfg.n : cfg.n;
}

Label::Kind label_kind_of(Task t) {
  switch (t) {
    case Task::kFloydWarshall: return Label::Kind::kPairReals;
    case Task::kQuickSelect: return Label::Kind::kTokenMask;
    case Task::kThreeSum: return Label::Kind::kBit;
    case Task::kSubsetSum: return Label::Kind::kBit;
    case Task::kBalancedPartition: return Label::Kind::kScalar;
    case Task::kConvexHull: return Label::Kind::kTokenMask;
    case Task::kKnapsack: return Label::Kind::kScalar;
    case Task::kFracKnapsack: return Label::Kind::kScalar;
    case Task::kMinCoinChange: return Label::Kind::kScalar;
    case Task::kBinPacking: return Label::Kind::kScalar;
    case Task::kScc: return Label::Kind::kPairMask;
  }
  throw ContractError("unknown task");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string range_str(const Range& r) {
  if (!r.present) return "none";
  return fmt(r.lo) + " " + fmt(r.hi);
}

}  // namespace

std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::kMse: return "mse";
    case LossKind::kBcePooled: return "bce_pooled";
    case LossKind::kBceTokenwise: return "bce_tokenwise";
  }
  throw ContractError("unknown loss kind");
}

LossKind loss_kind_from(const std::string& name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "bce_pooled") return LossKind::kBcePooled;
  if (name == "bce_tokenwise") return LossKind::kBceTokenwise;
  throw ConfigError("unknown loss kind: " + name);
}

std::string metric_kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::kMse: return "mse";
    case MetricKind::kMicroF1: return "micro_f1";
  }
  throw ContractError("unknown metric kind");
}

std::string split_name(Split s) {
  switch (s) {
    case Split::kInDist: return "in_dist";
    case Split::kLengthOod: return "length_ood";
    case Split::kValueOod: return "value_ood";
    case Split::kAdversarial: return "adversarial";
  }
  throw ContractError("unknown split");
}

LossKind default_loss(Task t) {
  switch (label_kind_of(t)) {
    case Label::Kind::kScalar:
    case Label::Kind::kPairReals: return LossKind::kMse;
    case Label::Kind::kBit: return LossKind::kBcePooled;
    case Label::Kind::kTokenMask:
    case Label::Kind::kPairMask: return LossKind::kBceTokenwise;
  }
  throw ContractError("unknown label kind");
}

MetricKind metric_for(LossKind k) {
  return k == LossKind::kMse ? MetricKind::kMse : MetricKind::kMicroF1;
}

HeadKind head_kind_for(Task t) {
  return label_arity(t, 2) == 1 ? HeadKind::kPooled : HeadKind::kTokenwise;
}

TrainConfig default_train_config(Task task, AttentionKind kind) {
  TrainConfig cfg;
  cfg.task = default_config(task);
  cfg.kind = kind;
  cfg.loss = default_loss(task);
  cfg.epochs = (task == Task::kBinPacking || task == Task::kBalancedPartition) ? 1000 : 100;
  cfg.batch = graph_task(task) ? 16 : 500;
  return cfg;
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch < 1) throw ConfigError("batch size must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (cfg.samples < 1) throw ConfigError("sample count must be >= 1");
  if (cfg.eval_samples < 1) throw ConfigError("eval sample count must be >= 1");
  if (cfg.heads < 1 || cfg.d < 1 || cfg.d % cfg.heads != 0)
    throw ConfigError("model width must be a positive multiple of the head count");
  validate_config(cfg.task);
  if (token_rows(cfg.task) > cfg.n_max)
    throw ConfigError("token count " + std::to_string(token_rows(cfg.task)) +
                      " exceeds n_max " + std::to_string(cfg.n_max));
  if (cfg.loss != default_loss(cfg.task.task))
    throw ConfigError("loss kind " + loss_kind_name(cfg.loss) + " incompatible with " +
                      task_name(cfg.task.task) + " labels");
}

std::string format_metric(const MetricReport& r) {
  return metric_kind_name(r.metric) + " " + split_name(r.split) + " " + fmt(r.value);
}

std::string protocol_name(OodProtocol::Kind k) {
  switch (k) {
    case OodProtocol::Kind::kLength: return "length";
    case OodProtocol::Kind::kValue: return "value";
    case OodProtocol::Kind::kAdversarial: return "adversarial";
  }
  throw ContractError("unknown protocol kind");
}

OodProtocol::Kind protocol_from(const std::string& name) {
  if (name == "length") return OodProtocol::Kind::kLength;
  if (name == "value") return OodProtocol::Kind::kValue;
  if (name == "adversarial") return OodProtocol::Kind::kAdversarial;
  throw ConfigError("unknown ood protocol: " + name);
}

Split split_for(OodProtocol::Kind k) {
  switch (k) {
    case OodProtocol::Kind::kLength: return Split::kLengthOod;
    case OodProtocol::Kind::kValue: return Split::kValueOod;
    case OodProtocol::Kind::kAdversarial: return Split::kAdversarial;
  }
  throw ContractError("unknown protocol kind");
}

Var compute_loss(Tape& t, LossKind kind, Var pred, const Mat& targets) {
  switch (kind) {
    case LossKind::kMse: return t.mse(pred, targets);
    case LossKind::kBcePooled:
    case LossKind::kBceTokenwise: return t.bce_with_logits(pred, targets);
  }
  throw ContractError("unknown loss kind");
}

Mat label_targets(const Label& lab) {
  switch (lab.kind) {
    case Label::Kind::kScalar:
    case Label::Kind::kBit: return Mat::Constant(1, 1, lab.scalar);
    case Label::Kind::kTokenMask:
    case Label::Kind::kPairMask:
    case Label::Kind::kPairReals: {
      Mat out(static_cast<Eigen::Index>(lab.values.size()), 1);
      for (size_t i = 0; i < lab.values.size(); ++i)
        out(static_cast<Eigen::Index>(i), 0) = lab.values[i];
      return out;
    }
  }
  throw ContractError("unknown label kind");
}

AdamState make_adam_state(const std::vector<std::pair<std::string, Mat*>>& params) {
  AdamState st;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const auto& [name, mat] : params) {
    (void)name;
    st.m.push_back(Mat::Zero(mat->rows(), mat->cols()));
    st.v.push_back(Mat::Zero(mat->rows(), mat->cols()));
  }
  return st;
}

void adamw_step(const std::vector<std::pair<std::string, Mat*>>& params,
                const std::vector<Mat>& grads, AdamState& state, const AdamHyper& hp) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw ShapeError("adamw_step: params, grads, and state must align");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i].second;
    const Mat& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw ShapeError("adamw_step: gradient shape mismatch for " + params[i].first);
    Mat& m = state.m[i];
    Mat& v = state.v[i];
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g.array().square().matrix();
    const Mat mhat = m / bc1;
    const Mat vhat = v / bc2;
    p.array() -= hp.lr * (mhat.array() / (vhat.array().sqrt() + hp.eps) +
                          hp.weight_decay * p.array());
  }
}

std::vector<Instance> make_eval_set(const TaskConfig& cfg, int count) {
  validate_config(cfg);
  if (count < 0) throw ConfigError("instance count must be >= 0");
  std::vector<Instance> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = instance_seed(cfg.seed, kEvalIndexBase + static_cast<std::uint64_t>(i));
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

double micro_f1(long tp, long fp, long fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw DomainError("micro_f1: negative counts");
  const long denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;  // no positives anywhere, nothing was missed
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

MetricReport evaluate(const EncoderModel& model, const std::vector<Instance>& data,
                      MetricKind metric, Split split) {
  if (data.empty()) throw ConfigError("evaluation set is empty");
  const Task task = data.front().raw.task;
  if (task_name(task) != model.task)
    throw ConfigError("checkpoint task " + model.task + " does not match dataset task " +
                      task_name(task));
  const Label::Kind lk = label_kind_of(task);
  const bool binary = lk == Label::Kind::kBit || lk == Label::Kind::kTokenMask ||
                      lk == Label::Kind::kPairMask;
  if (metric == MetricKind::kMicroF1 && !binary)
    throw ConfigError("micro_f1 needs binary labels; " + task_name(task) + " is a regression task");
  long tp = 0, fp = 0, fn = 0;
  double sq_sum = 0.0;
  long count = 0;
  for (const Instance& inst : data) {
    if (inst.raw.task != task) throw ConfigError("mixed tasks in evaluation set");
    Tape t;
    BoundParams p = bind_params(t, model);
    ForwardOut f = encoder_forward(t, model, p, inst.tokens);
    const Mat& pred = t.value(f.output);
    const Mat tgt = label_targets(inst.label);
    if (pred.rows() != tgt.rows() || pred.cols() != tgt.cols())
      throw ShapeError("prediction shape does not match label arity");
    if (metric == MetricKind::kMicroF1) {
      for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        const bool hat = pred(i, 0) > 0.0;  // logit threshold 0
        const bool ref = tgt(i, 0) > 0.5;
        if (hat && ref) ++tp;
        else if (hat && !ref) ++fp;
        else if (!hat && ref) ++fn;
      }
    } else {
      sq_sum += (pred - tgt).squaredNorm();
      count += pred.size();
    }
  }
  MetricReport rep;
  rep.metric = metric;
  rep.split = split;
  rep.value = metric == MetricKind::kMicroF1 ? micro_f1(tp, fp, fn)
                                             : sq_sum / static_cast<double>(count);
  return rep;
}

MetricReport run_ood_protocol(const EncoderModel& model, const TrainConfig& cfg,
                              const OodProtocol& proto) {
  TaskConfig tcfg = cfg.task;
  switch (proto.kind) {
    case OodProtocol::Kind::kLength:
      tcfg.n = proto.target_n > 0 ? proto.target_n : (graph_task(tcfg.task) ? 16 : 64);
      break;
    case OodProtocol::Kind::kValue: {
      const Range r = proto.value_range.present ? proto.value_range : tcfg.ood_value_range;
      if (!r.present)
        throw ConfigError("value protocol needs an ood value range for " + task_name(tcfg.task));
      tcfg.value_range = r;
      break;
    }
    case OodProtocol::Kind::kAdversarial:
      if (!(proto.perturb_prob >= 0.0 && proto.perturb_prob <= 1.0))
        throw ConfigError("perturbation probability must lie in [0, 1]");
      tcfg.perturb_prob = proto.perturb_prob;
      break;
  }
  const std::vector<Instance> data = make_eval_set(tcfg, cfg.eval_samples);
  return evaluate(model, data, metric_for(cfg.loss), split_for(proto.kind));
}

std::vector<Mat> attention_weight_view(const EncoderModel& m, const AttentionTrace& tr) {
  std::vector<Mat> out;
  if (m.kind == AttentionKind::kTropical) {
    for (const Mat& s : tr.scores) {
      Mat w = s;
      for (Eigen::Index i = 0; i < w.rows(); ++i) w.row(i).array() -= w.row(i).maxCoeff();
      out.push_back(std::move(w));
    }
  } else {
    out = tr.alphas;
  }
  return out;
}

std::vector<int> top_norm_keys(const Mat& tokens, int k) {
  if (k < 1) throw ConfigError("top_k must be >= 1");
  const int n = static_cast<int>(tokens.rows());
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&tokens](int a, int b) {
    return tokens.row(a).norm() > tokens.row(b).norm();
  });
  idx.resize(static_cast<size_t>(std::min(k, n)));
  return idx;
}

AttentionView extract_attention(const EncoderModel& model, const std::vector<Mat>& batch,
                                int top_k) {
  if (batch.empty()) throw ConfigError("attention extraction needs a nonempty batch");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  const Eigen::Index n = batch.front().rows();
  for (const Mat& b : batch)
    if (b.rows() != n) throw ShapeError("mixed sequence lengths in attention batch");
  AttentionView view;
  const int cols = static_cast<int>(std::min<Eigen::Index>(top_k, n));
  for (int h = 0; h < model.attn.heads; ++h)
    view.reduced.push_back(Mat::Zero(static_cast<Eigen::Index>(batch.size()), cols));
  for (size_t b = 0; b < batch.size(); ++b) {
    Tape t;
    BoundParams p = bind_params(t, model);
    ForwardOut f = encoder_forward(t, model, p, batch[b]);
    AttentionTrace tr = trace_of(t, f.attn);
    const std::vector<Mat> weights = attention_weight_view(model, tr);
    const std::vector<int> keys = top_norm_keys(batch[b], top_k);
    for (size_t h = 0; h < weights.size(); ++h)
      for (int c = 0; c < cols; ++c)
        view.reduced[h](static_cast<Eigen::Index>(b), c) =
            weights[h].col(keys[static_cast<size_t>(c)]).maxCoeff();
    view.full.push_back(std::move(tr));
  }
  return view;
}

TrainResult train(const TrainConfig& cfg, const std::string& out_dir) {
  validate_train_config(cfg);
  const Task task = cfg.task.task;
  const std::vector<Instance> data = generate(cfg.task, cfg.samples);
  EncoderModel model =
      make_model(cfg.kind, head_kind_for(task), task_name(task), token_width(task), cfg.heads,
                 cfg.d, cfg.n_max, instance_seed(cfg.seed ^ 0x6d6f64656cULL, 0));
  const auto registry = param_registry(model);
  AdamState state = make_adam_state(registry);
  AdamHyper hp;
  hp.lr = cfg.lr;

  int max_rows = 0;
  for (const Instance& inst : data)
    max_rows = std::max(max_rows, static_cast<int>(inst.tokens.rows()));

  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> losses;
  losses.reserve(static_cast<size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(instance_seed(cfg.seed ^ 0x73687566666cULL,
                                              static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      Tape t;
      BoundParams p = bind_params(t, model);
      Var total;
      for (size_t i = start; i < end; ++i) {
        const Instance& inst = data[static_cast<size_t>(order[i])];
        ForwardOut f = encoder_forward(t, model, p, inst.tokens);
        Var l = compute_loss(t, cfg.loss, f.output, label_targets(inst.label));
        total = (i == start) ? l : t.add(total, l);
      }
      Var mean_loss = t.scale(total, 1.0 / static_cast<double>(end - start));
      const double lv = t.value(mean_loss)(0, 0);
      if (!std::isfinite(lv))
        throw DomainError("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                          std::to_string(start / static_cast<size_t>(cfg.batch) + 1) +
                          ": loss is not finite");
      t.backward(mean_loss);
      const std::vector<Var> leaves = bound_leaves(model, p);
      std::vector<Mat> grads;
      grads.reserve(leaves.size());
      for (Var leaf : leaves) grads.push_back(t.grad(leaf));
      adamw_step(registry, grads, state, hp);
      epoch_sum += lv * static_cast<double>(end - start);
    }
    losses.push_back(epoch_sum / static_cast<double>(data.size()));
  }

  model.trained_n = max_rows;
  TrainResult result{std::move(model), std::move(losses)};
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint(result.model, out_dir + "/checkpoint.bin");
    write_loss_csv(out_dir + "/loss.csv", result.losses);
    write_manifest(out_dir + "/manifest.txt", cfg, result, {});
  }
  return result;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ",";
      out << fmt(m(i, j));
    }
    out << "\n";
  }
}

void write_loss_csv(const std::string& path, const std::vector<double>& losses) {
  std::ofstream out = open_out(path);
  out << "epoch,loss\n";
  for (size_t i = 0; i < losses.size(); ++i) out << i + 1 << "," << fmt(losses[i]) << "\n";
}

void write_manifest(const std::string& path, const TrainConfig& cfg, const TrainResult& result,
                    const std::vector<MetricReport>& metrics) {
  const AdamHyper hp{};  // optimizer constants as used by train()
  std::ofstream out = open_out(path);
  out << "library tropa " << kTropaVersion << "\n";
  out << "command train\n";
  out << "attention " << attention_kind_name(cfg.kind) << "\n";
  out << "loss " << loss_kind_name(cfg.loss) << "\n";
  out << "metric " << metric_kind_name(metric_for(cfg.loss)) << "\n";
  out << "seed " << cfg.seed << "\n";
  out << "epochs " << cfg.epochs << "\n";
  out << "batch " << cfg.batch << "\n";
  out << "lr " << fmt(cfg.lr) << "\n";
  out << "lr_table_variant 0.0001\n";  // published alternative; pick via config
  out << "samples " << cfg.samples << "\n";
  out << "eval_samples " << cfg.eval_samples << "\n";
  out << "heads " << cfg.heads << "\n";
  out << "width " << cfg.d << "\n";
  out << "n_max " << cfg.n_max << "\n";
  out << "adamw\n";
  out << "  beta1 " << fmt(hp.beta1) << "\n";
  out << "  beta2 " << fmt(hp.beta2) << "\n";
  out << "  eps " << fmt(hp.eps) << "\n";
  out << "  weight_decay " << fmt(hp.weight_decay) << "\n";
  out << "task\n";
  out << "  name " << task_name(cfg.task.task) << "\n";
  out << "  n " << cfg.task.n << "\n";
  out << "  seed " << cfg.task.seed << "\n";
  out << "  value_range " << range_str(cfg.task.value_range) << "\n";
  out << "  target_range " << range_str(cfg.task.target_range) << "\n";
  out << "  weight_range " << range_str(cfg.task.weight_range) << "\n";
  out << "  ood_value_range " << range_str(cfg.task.ood_value_range) << "\n";
  out << "  adversarial_range " << range_str(cfg.task.adversarial_range) << "\n";
  out << "  perturb_prob " << fmt(cfg.task.perturb_prob) << "\n";
  out << "trained_n " << result.model.trained_n << "\n";
  if (!result.losses.empty()) out << "final_loss " << fmt(result.losses.back()) << "\n";
  out << "metrics\n";
  for (const MetricReport& r : metrics) out << "  " << format_metric(r) << "\n";
}

}  // namespace trop
