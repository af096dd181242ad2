#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tropa/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace trop;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("tropa_train_" + tag);
  std::filesystem::remove_all(dir);
  return dir.string();
}

TrainConfig smoke_config(AttentionKind kind, std::uint64_t seed) {
  TrainConfig cfg = default_train_config(Task::kQuickSelect, kind);
  cfg.epochs = 2;
  cfg.samples = 120;
  cfg.batch = 60;
  cfg.eval_samples = 40;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::pair<std::string, Mat*>> single_param(Mat& m) {
  return {{"p", &m}};
}

}  // namespace

TEST_CASE("loss, metric, split, and protocol names") {
  CHECK(loss_kind_name(LossKind::kMse) == "mse");
  CHECK(loss_kind_name(LossKind::kBcePooled) == "bce_pooled");
  CHECK(loss_kind_name(LossKind::kBceTokenwise) == "bce_tokenwise");
  for (const char* name : {"mse", "bce_pooled", "bce_tokenwise"})
    CHECK(loss_kind_name(loss_kind_from(name)) == name);
  CHECK_THROWS_AS(loss_kind_from("hinge"), ConfigError);

  CHECK(metric_kind_name(MetricKind::kMse) == "mse");
  CHECK(metric_kind_name(MetricKind::kMicroF1) == "micro_f1");
  CHECK(split_name(Split::kInDist) == "in_dist");
  CHECK(split_name(Split::kLengthOod) == "length_ood");
  CHECK(split_name(Split::kValueOod) == "value_ood");
  CHECK(split_name(Split::kAdversarial) == "adversarial");

  for (const char* name : {"length", "value", "adversarial"})
    CHECK(protocol_name(protocol_from(name)) == name);
  CHECK_THROWS_AS(protocol_from("rotation"), ConfigError);
  CHECK(split_for(OodProtocol::Kind::kLength) == Split::kLengthOod);
  CHECK(split_for(OodProtocol::Kind::kValue) == Split::kValueOod);
  CHECK(split_for(OodProtocol::Kind::kAdversarial) == Split::kAdversarial);

  MetricReport rep;
  rep.metric = MetricKind::kMicroF1;
  rep.split = Split::kLengthOod;
  rep.value = 0.5;
  CHECK(format_metric(rep) == "micro_f1 length_ood 0.5");
}

TEST_CASE("per-task loss, metric, and head defaults") {
  CHECK(default_loss(Task::kQuickSelect) == LossKind::kBceTokenwise);
  CHECK(default_loss(Task::kConvexHull) == LossKind::kBceTokenwise);
  CHECK(default_loss(Task::kScc) == LossKind::kBceTokenwise);
  CHECK(default_loss(Task::kThreeSum) == LossKind::kBcePooled);
  CHECK(default_loss(Task::kSubsetSum) == LossKind::kBcePooled);
  CHECK(default_loss(Task::kFloydWarshall) == LossKind::kMse);
  CHECK(default_loss(Task::kKnapsack) == LossKind::kMse);
  CHECK(default_loss(Task::kBinPacking) == LossKind::kMse);

  CHECK(metric_for(LossKind::kMse) == MetricKind::kMse);
  CHECK(metric_for(LossKind::kBcePooled) == MetricKind::kMicroF1);
  CHECK(metric_for(LossKind::kBceTokenwise) == MetricKind::kMicroF1);

  CHECK(head_kind_for(Task::kQuickSelect) == HeadKind::kTokenwise);
  CHECK(head_kind_for(Task::kFloydWarshall) == HeadKind::kTokenwise);
  CHECK(head_kind_for(Task::kScc) == HeadKind::kTokenwise);
  CHECK(head_kind_for(Task::kKnapsack) == HeadKind::kPooled);
  CHECK(head_kind_for(Task::kSubsetSum) == HeadKind::kPooled);
}

TEST_CASE("default train config follows the published budgets") {
  TrainConfig qs = default_train_config(Task::kQuickSelect, AttentionKind::kTropical);
  CHECK(qs.epochs == 100);
  CHECK(qs.batch == 500);
  CHECK(qs.lr == doctest::Approx(1e-3));
  CHECK(qs.loss == LossKind::kBceTokenwise);
  CHECK(qs.kind == AttentionKind::kTropical);
  CHECK(qs.task.task == Task::kQuickSelect);

  CHECK(default_train_config(Task::kBinPacking, AttentionKind::kVanilla).epochs == 1000);
  CHECK(default_train_config(Task::kBalancedPartition, AttentionKind::kVanilla).epochs == 1000);
  CHECK(default_train_config(Task::kFloydWarshall, AttentionKind::kVanilla).batch == 16);
  CHECK(default_train_config(Task::kScc, AttentionKind::kVanilla).batch == 16);
  validate_train_config(qs);
}

TEST_CASE("validate_train_config rejects bad fields") {
  TrainConfig cfg = default_train_config(Task::kQuickSelect, AttentionKind::kVanilla);
  cfg.epochs = 0;
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = default_train_config(Task::kQuickSelect, AttentionKind::kVanilla);
  cfg.batch = 0;
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = default_train_config(Task::kQuickSelect, AttentionKind::kVanilla);
  cfg.lr = 0.0;
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = default_train_config(Task::kQuickSelect, AttentionKind::kVanilla);
  cfg.d = 63;  // not a multiple of two heads
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = default_train_config(Task::kQuickSelect, AttentionKind::kVanilla);
  cfg.loss = LossKind::kMse;  // mask labels want tokenwise bce
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = default_train_config(Task::kScc, AttentionKind::kVanilla);
  cfg.task.n = 50;  // 2500 token rows exceed the 2048 position table
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
}

TEST_CASE("compute_loss hand values") {
  Tape t;
  Mat target(1, 1);
  target << 3.0;
  Var pred = t.input(target);
  CHECK(t.value(compute_loss(t, LossKind::kMse, pred, target))(0, 0) == 0.0);

  Mat one(1, 1);
  one << 1.0;
  Var zero_logit = t.input(Mat::Zero(1, 1));
  const double bce = t.value(compute_loss(t, LossKind::kBcePooled, zero_logit, one))(0, 0);
  CHECK(bce == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Mat logits(2, 1);
  logits << 2.0, -1.0;
  Mat targets(2, 1);
  targets << 1.0, 0.0;
  Var lv = t.input(logits);
  const double tokenwise =
      t.value(compute_loss(t, LossKind::kBceTokenwise, lv, targets))(0, 0);
  const double expected = 0.5 * (std::log1p(std::exp(-2.0)) + std::log1p(std::exp(-1.0)));
  CHECK(tokenwise == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(compute_loss(t, LossKind::kMse, lv, one), ShapeError);
  CHECK_THROWS_AS(compute_loss(t, LossKind::kBceTokenwise, lv, one), ShapeError);
}

TEST_CASE("label_targets shapes") {
  Label scalar;
  scalar.kind = Label::Kind::kScalar;
  scalar.scalar = 7.5;
  Mat m = label_targets(scalar);
  CHECK(m.rows() == 1);
  CHECK(m.cols() == 1);
  CHECK(m(0, 0) == 7.5);

  Label mask;
  mask.kind = Label::Kind::kTokenMask;
  mask.values = {1.0, 0.0, 1.0};
  Mat mm = label_targets(mask);
  CHECK(mm.rows() == 3);
  CHECK(mm.cols() == 1);
  CHECK(mm(2, 0) == 1.0);
}

TEST_CASE("micro_f1 formula") {
  CHECK(micro_f1(2, 1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(micro_f1(5, 0, 0) == 1.0);
  CHECK(micro_f1(0, 0, 0) == 1.0);
  CHECK(micro_f1(0, 3, 2) == 0.0);
  CHECK_THROWS_AS(micro_f1(-1, 0, 0), DomainError);
}

TEST_CASE("adamw first step moves by about lr in the sign direction") {
  Mat p(1, 2);
  p << 1.0, -2.0;
  Mat g(1, 2);
  g << 0.5, -4.0;
  AdamState st = make_adam_state(single_param(p));
  AdamHyper hp;
  hp.lr = 0.1;
  hp.weight_decay = 0.0;
  adamw_step(single_param(p), {g}, st, hp);
  // bias-corrected m-hat/sqrt(v-hat) equals sign(g) on the first step
  CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p(0, 1) == doctest::Approx(-1.9).epsilon(1e-6));
  CHECK(st.step == 1);
}

TEST_CASE("adamw zero grads and zero decay leave params unchanged") {
  Mat p(2, 2);
  p << 1.0, 2.0, 3.0, 4.0;
  const Mat before = p;
  AdamState st = make_adam_state(single_param(p));
  AdamHyper hp;
  hp.weight_decay = 0.0;
  adamw_step(single_param(p), {Mat::Zero(2, 2)}, st, hp);
  adamw_step(single_param(p), {Mat::Zero(2, 2)}, st, hp);
  CHECK(p == before);
}

TEST_CASE("adamw lr zero leaves params unchanged even with gradients") {
  Mat p(1, 1);
  p << 2.5;
  AdamState st = make_adam_state(single_param(p));
  AdamHyper hp;
  hp.lr = 0.0;
  hp.weight_decay = 0.0;
  Mat g(1, 1);
  g << 13.0;
  adamw_step(single_param(p), {g}, st, hp);
  CHECK(p(0, 0) == 2.5);
}

TEST_CASE("adamw decay-only step shrinks params multiplicatively") {
  Mat p(1, 1);
  p << 10.0;
  AdamState st = make_adam_state(single_param(p));
  AdamHyper hp;
  hp.lr = 0.1;
  hp.weight_decay = 0.01;
  adamw_step(single_param(p), {Mat::Zero(1, 1)}, st, hp);
  CHECK(p(0, 0) == doctest::Approx(10.0 * (1.0 - 0.001)).epsilon(1e-12));
}

TEST_CASE("adamw trajectories are deterministic") {
  Mat p1(1, 3), p2(1, 3);
  p1 << 1.0, -1.0, 0.5;
  p2 = p1;
  AdamState s1 = make_adam_state(single_param(p1));
  AdamState s2 = make_adam_state(single_param(p2));
  AdamHyper hp;
  for (int step = 0; step < 7; ++step) {
    Mat g(1, 3);
    g << 0.1 * step, -0.3, 2.0 / (1.0 + step);
    adamw_step(single_param(p1), {g}, s1, hp);
    adamw_step(single_param(p2), {g}, s2, hp);
  }
  CHECK(p1 == p2);
  CHECK(s1.m[0] == s2.m[0]);
  CHECK(s1.v[0] == s2.v[0]);
  CHECK(s1.step == s2.step);
}

TEST_CASE("adamw shape errors") {
  Mat p(1, 2);
  p << 1.0, 2.0;
  AdamState st = make_adam_state(single_param(p));
  AdamHyper hp;
  CHECK_THROWS_AS(adamw_step(single_param(p), {}, st, hp), ShapeError);
  CHECK_THROWS_AS(adamw_step(single_param(p), {Mat::Zero(2, 2)}, st, hp), ShapeError);
}

TEST_CASE("training loss decreases on a quickselect smoke run") {
  TrainConfig cfg = default_train_config(Task::kQuickSelect, AttentionKind::kTropical);
  cfg.epochs = 5;
  cfg.samples = 2000;
  cfg.batch = 250;
  cfg.seed = 7;
  TrainResult res = train(cfg);
  REQUIRE(res.losses.size() == 5);
  for (double l : res.losses) CHECK(std::isfinite(l));
  for (size_t i = 1; i < res.losses.size(); ++i) CHECK(res.losses[i] < res.losses[i - 1]);
  CHECK(res.model.trained_n == 8);
}

TEST_CASE("training aborts on divergence with a diagnostic") {
  TrainConfig cfg = smoke_config(AttentionKind::kTropical, 3);
  cfg.lr = 1e8;  // force an overflow within a couple of steps
  cfg.epochs = 4;
  CHECK_THROWS_AS(train(cfg), DomainError);
}

TEST_CASE("train writes deterministic artifacts") {
  const std::string dir_a = temp_dir("a");
  const std::string dir_b = temp_dir("b");
  TrainConfig cfg = smoke_config(AttentionKind::kTropical, 11);
  TrainResult ra = train(cfg, dir_a);
  TrainResult rb = train(cfg, dir_b);
  CHECK(slurp(dir_a + "/checkpoint.bin") == slurp(dir_b + "/checkpoint.bin"));
  CHECK(slurp(dir_a + "/loss.csv") == slurp(dir_b + "/loss.csv"));
  CHECK(slurp(dir_a + "/manifest.txt") == slurp(dir_b + "/manifest.txt"));

  const std::string manifest = slurp(dir_a + "/manifest.txt");
  CHECK(manifest.find("command train") != std::string::npos);
  CHECK(manifest.find("lr 0.001") != std::string::npos);
  CHECK(manifest.find("lr_table_variant 0.0001") != std::string::npos);
  CHECK(manifest.find("weight_decay 0.01") != std::string::npos);
  CHECK(manifest.find("name quickselect") != std::string::npos);
  CHECK(manifest.find("attention tropical") != std::string::npos);

  const std::string losses = slurp(dir_a + "/loss.csv");
  CHECK(losses.rfind("epoch,loss\n", 0) == 0);

  EncoderModel loaded = load_checkpoint(dir_a + "/checkpoint.bin");
  CHECK(loaded.task == "quickselect");
  CHECK(loaded.trained_n == 8);
  CHECK(ra.losses == rb.losses);
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("different seeds change the checkpoint") {
  const std::string dir_a = temp_dir("s1");
  const std::string dir_b = temp_dir("s2");
  train(smoke_config(AttentionKind::kVanilla, 1), dir_a);
  train(smoke_config(AttentionKind::kVanilla, 2), dir_b);
  CHECK(slurp(dir_a + "/checkpoint.bin") != slurp(dir_b + "/checkpoint.bin"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("graph tasks record squared token counts in trained_n") {
  TrainConfig cfg = default_train_config(Task::kScc, AttentionKind::kVanilla);
  cfg.task.n = 4;
  cfg.epochs = 1;
  cfg.samples = 24;
  cfg.batch = 16;
  TrainResult res = train(cfg);
  CHECK(res.model.trained_n == 16);
}

TEST_CASE("evaluate bounds, mismatches, and the zero-model case") {
  TrainConfig cfg = smoke_config(AttentionKind::kVanilla, 5);
  EncoderModel model = make_model(cfg.kind, head_kind_for(Task::kQuickSelect), "quickselect",
                                  token_width(Task::kQuickSelect), cfg.heads, cfg.d, cfg.n_max,
                                  99);
  const std::vector<Instance> data = make_eval_set(cfg.task, 30);
  MetricReport rep = evaluate(model, data, MetricKind::kMicroF1);
  CHECK(rep.split == Split::kInDist);
  CHECK(rep.value >= 0.0);
  CHECK(rep.value <= 1.0);

  // untrained decision head on a pooled task sits near the base rate
  CHECK_THROWS_AS(evaluate(model, {}, MetricKind::kMicroF1), ConfigError);
  const std::vector<Instance> wrong = make_eval_set(default_config(Task::kSubsetSum), 4);
  CHECK_THROWS_AS(evaluate(model, wrong, MetricKind::kMicroF1), ConfigError);

  TaskConfig kcfg = default_config(Task::kKnapsack);
  const std::vector<Instance> kdata = make_eval_set(kcfg, 6);
  EncoderModel kmodel = make_model(AttentionKind::kVanilla, HeadKind::kPooled, "knapsack",
                                   token_width(Task::kKnapsack), 2, 64, 2048, 99);
  CHECK_THROWS_AS(evaluate(kmodel, kdata, MetricKind::kMicroF1), ConfigError);
  MetricReport kms = evaluate(kmodel, kdata, MetricKind::kMse);
  CHECK(kms.value >= 0.0);

  // all-zero parameters on a zero-diff partition instance: mse exactly 0
  EncoderModel zero = make_model(AttentionKind::kVanilla, HeadKind::kPooled, "balanced_partition",
                                 token_width(Task::kBalancedPartition), 2, 64, 2048, 1);
  for (auto& [name, mat] : param_registry(zero)) {
    (void)name;
    mat->setZero();
  }
  Instance even;
  even.raw.task = Task::kBalancedPartition;
  even.raw.values = {2.0, 2.0};
  even.label = oracle_label(even.raw);
  even.tokens = encode_tokens(even.raw);
  REQUIRE(even.label.scalar == 0.0);
  MetricReport zr = evaluate(zero, {even}, MetricKind::kMse);
  CHECK(zr.value == 0.0);
}

TEST_CASE("degenerate ood protocols reproduce the in-distribution evaluation") {
  TrainConfig cfg = smoke_config(AttentionKind::kTropical, 21);
  TrainResult res = train(cfg);
  const MetricReport base =
      evaluate(res.model, make_eval_set(cfg.task, cfg.eval_samples), MetricKind::kMicroF1);

  OodProtocol same_len;
  same_len.kind = OodProtocol::Kind::kLength;
  same_len.target_n = cfg.task.n;
  const MetricReport len_rep = run_ood_protocol(res.model, cfg, same_len);
  CHECK(len_rep.value == base.value);
  CHECK(len_rep.split == Split::kLengthOod);

  OodProtocol no_perturb;
  no_perturb.kind = OodProtocol::Kind::kAdversarial;
  no_perturb.perturb_prob = 0.0;
  const MetricReport adv_rep = run_ood_protocol(res.model, cfg, no_perturb);
  CHECK(adv_rep.value == base.value);
  CHECK(adv_rep.split == Split::kAdversarial);
}

TEST_CASE("ood protocols swap in the published shifts") {
  TrainConfig cfg = smoke_config(AttentionKind::kVanilla, 23);
  TrainResult res = train(cfg);

  OodProtocol value;
  value.kind = OodProtocol::Kind::kValue;
  const MetricReport vrep = run_ood_protocol(res.model, cfg, value);
  TaskConfig shifted = cfg.task;
  shifted.value_range = shifted.ood_value_range;  // quickselect table row: (11, 21)
  const MetricReport manual =
      evaluate(res.model, make_eval_set(shifted, cfg.eval_samples), MetricKind::kMicroF1);
  CHECK(vrep.value == manual.value);
  CHECK(vrep.split == Split::kValueOod);
  CHECK(cfg.task.ood_value_range.lo == 11.0);
  CHECK(cfg.task.ood_value_range.hi == 21.0);

  OodProtocol length;
  length.kind = OodProtocol::Kind::kLength;
  const MetricReport lrep = run_ood_protocol(res.model, cfg, length);
  TaskConfig longer = cfg.task;
  longer.n = 64;  // sequence default
  const MetricReport manual_len =
      evaluate(res.model, make_eval_set(longer, cfg.eval_samples), MetricKind::kMicroF1);
  CHECK(lrep.value == manual_len.value);

  OodProtocol adv;
  adv.kind = OodProtocol::Kind::kAdversarial;
  const MetricReport arep = run_ood_protocol(res.model, cfg, adv);
  TaskConfig bumped = cfg.task;
  bumped.perturb_prob = 0.5;
  const MetricReport manual_adv =
      evaluate(res.model, make_eval_set(bumped, cfg.eval_samples), MetricKind::kMicroF1);
  CHECK(arep.value == manual_adv.value);
}

TEST_CASE("evaluation seed window never reuses training instances") {
  TaskConfig cfg = default_config(Task::kQuickSelect);
  const std::vector<Instance> train_side = generate(cfg, 5);
  const std::vector<Instance> eval_side = make_eval_set(cfg, 5);
  for (const Instance& e : eval_side)
    for (const Instance& t : train_side)
      CHECK(format_instance(e) != format_instance(t));
}

TEST_CASE("extract_attention single-token identities") {
  RawInstance raw;
  raw.task = Task::kQuickSelect;
  raw.values = {5.0};
  raw.target = 1.0;
  raw.has_target = true;
  const Mat tokens = encode_tokens(raw);
  REQUIRE(tokens.rows() == 1);

  EncoderModel soft = make_model(AttentionKind::kVanilla, HeadKind::kTokenwise, "quickselect",
                                 token_width(Task::kQuickSelect), 2, 64, 2048, 4);
  AttentionView sv = extract_attention(soft, {tokens}, 1);
  REQUIRE(sv.reduced.size() == 2);
  for (const Mat& r : sv.reduced) {
    CHECK(r.rows() == 1);
    CHECK(r.cols() == 1);
    CHECK(r(0, 0) == 1.0);
  }

  EncoderModel tropical = make_model(AttentionKind::kTropical, HeadKind::kTokenwise, "quickselect",
                                     token_width(Task::kQuickSelect), 2, 64, 2048, 4);
  AttentionView tv = extract_attention(tropical, {tokens}, 1);
  for (const Mat& r : tv.reduced) CHECK(r(0, 0) == 0.0);
}

TEST_CASE("extract_attention shapes, ranges, and full-column coverage") {
  TaskConfig cfg = default_config(Task::kQuickSelect);
  const std::vector<Instance> data = generate(cfg, 32);
  std::vector<Mat> batch;
  for (const Instance& inst : data) batch.push_back(inst.tokens);

  EncoderModel soft = make_model(AttentionKind::kVanilla, HeadKind::kTokenwise, "quickselect",
                                 token_width(Task::kQuickSelect), 2, 64, 2048, 8);
  AttentionView view = extract_attention(soft, batch, 8);
  REQUIRE(view.reduced.size() == 2);
  for (const Mat& r : view.reduced) {
    CHECK(r.rows() == 32);
    CHECK(r.cols() == 8);
    CHECK(r.minCoeff() >= 0.0);
    CHECK(r.maxCoeff() <= 1.0);
  }
  REQUIRE(view.full.size() == 32);
  CHECK(view.full[0].scores.size() == 2);
  CHECK(view.full[0].alphas.size() == 2);

  // top_k = n covers every key: reduced row = permuted per-column peaks
  const std::vector<Mat> weights = attention_weight_view(soft, view.full[0]);
  for (size_t h = 0; h < weights.size(); ++h) {
    std::vector<double> col_peaks, row_vals;
    for (Eigen::Index j = 0; j < weights[h].cols(); ++j)
      col_peaks.push_back(weights[h].col(j).maxCoeff());
    for (Eigen::Index c = 0; c < view.reduced[h].cols(); ++c)
      row_vals.push_back(view.reduced[h](0, c));
    std::sort(col_peaks.begin(), col_peaks.end());
    std::sort(row_vals.begin(), row_vals.end());
    REQUIRE(col_peaks.size() == row_vals.size());
    for (size_t i = 0; i < col_peaks.size(); ++i)
      CHECK(col_peaks[i] == doctest::Approx(row_vals[i]).epsilon(1e-12));
  }

  EncoderModel tropical = make_model(AttentionKind::kTropical, HeadKind::kTokenwise, "quickselect",
                                     token_width(Task::kQuickSelect), 2, 64, 2048, 8);
  AttentionView tview = extract_attention(tropical, batch, 8);
  for (const Mat& r : tview.reduced) CHECK(r.maxCoeff() <= 0.0);
  for (const AttentionTrace& tr : tview.full) CHECK(tr.alphas.empty());

  CHECK_THROWS_AS(extract_attention(soft, {}, 8), ConfigError);
  CHECK_THROWS_AS(extract_attention(soft, batch, 0), ConfigError);
  std::vector<Mat> mixed = {batch[0], Mat::Zero(3, 2)};
  CHECK_THROWS_AS(extract_attention(soft, mixed, 4), ShapeError);
}

TEST_CASE("top_norm_keys ranks by token norm with stable ties") {
  Mat tokens(4, 2);
  tokens << 1.0, 0.0,   // norm 1
      3.0, 4.0,         // norm 5
      0.0, 5.0,         // norm 5 (tie, higher index)
      2.0, 0.0;         // norm 2
  const std::vector<int> top = top_norm_keys(tokens, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == 1);
  CHECK(top[1] == 2);
  CHECK(top[2] == 3);
  CHECK(top_norm_keys(tokens, 10).size() == 4);
  CHECK_THROWS_AS(top_norm_keys(tokens, 0), ConfigError);
}

TEST_CASE("csv writers") {
  const std::string dir = temp_dir("csv");
  std::filesystem::create_directories(dir);
  Mat m(2, 3);
  m << 1.0, 2.5, -3.0, 0.0, 0.125, 9.0;
  write_matrix_csv(dir + "/m.csv", m);
  CHECK(slurp(dir + "/m.csv") == "1,2.5,-3\n0,0.125,9\n");
  write_loss_csv(dir + "/l.csv", {0.5, 0.25});
  CHECK(slurp(dir + "/l.csv") == "epoch,loss\n1,0.5\n2,0.25\n");
  std::filesystem::remove_all(dir);
}
