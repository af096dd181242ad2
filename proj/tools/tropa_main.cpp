// tropa: dataset generation, training, evaluation, compiled-stack
// verification, and attention dumps behind one reproducible interface.

#include <CLI11.hpp>

#include "tropa/compile.hpp"
#include "tropa/config.hpp"
#include "tropa/datasets.hpp"
#include "tropa/train.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace trop;

namespace {

void guard_manifest(const std::string& out_dir, bool force) {
  const fs::path manifest = fs::path(out_dir) / "manifest.txt";
  if (!force && fs::exists(manifest))
    throw ConfigError(manifest.string() + " already exists; pass --force to overwrite");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

void write_command_manifest(const std::string& out_dir, const std::string& command,
                            const TrainConfig& cfg, const std::vector<std::string>& extra) {
  std::ofstream out = open_out(out_dir + "/manifest.txt");
  out << "library tropa " << kTropaVersion << "\n";
  out << "command " << command << "\n";
  out << format_train_config(cfg);
  for (const std::string& line : extra) out << line << "\n";
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  if (out.empty()) throw ConfigError("empty list: '" + csv + "'");
  return out;
}

std::vector<int> split_ints(const std::string& csv) {
  std::vector<int> out;
  for (const std::string& item : split_list(csv)) {
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError("expected an integer list, got '" + item + "'");
    }
  }
  return out;
}

struct SeedOverride {
  std::uint64_t value = 0;
  bool set = false;

  void apply(TrainConfig& cfg) const {
    if (!set) return;
    cfg.seed = value;
    cfg.task.seed = value;
  }
};

TrainConfig config_for_checkpoint(const EncoderModel& model, const std::string& config_path) {
  if (config_path.empty())
    return default_train_config(task_from(model.task), model.kind);
  TrainConfig cfg = parse_train_config_file(config_path);
  if (task_name(cfg.task.task) != model.task)
    throw ConfigError("config task " + task_name(cfg.task.task) +
                      " does not match checkpoint task " + model.task);
  if (cfg.kind != model.kind)
    throw ConfigError("config attention " + attention_kind_name(cfg.kind) +
                      " does not match checkpoint attention " + attention_kind_name(model.kind));
  return cfg;
}

int run_gen(const std::string& task_flag, const std::string& config_path,
            const std::string& out_dir, const SeedOverride& seed, bool force) {
  TrainConfig cfg;
  if (!config_path.empty()) {
    cfg = parse_train_config_file(config_path);
    if (!task_flag.empty() && task_from(task_flag) != cfg.task.task)
      throw ConfigError("--task " + task_flag + " conflicts with config task " +
                        task_name(cfg.task.task));
  } else if (!task_flag.empty()) {
    cfg = default_train_config(task_from(task_flag), AttentionKind::kTropical);
  } else {
    throw ConfigError("gen needs --task or --config");
  }
  seed.apply(cfg);
  fs::create_directories(out_dir);
  guard_manifest(out_dir, force);
  const std::vector<Instance> data = generate(cfg.task, cfg.samples);
  {
    std::ofstream out = open_out(out_dir + "/dataset.jsonl");
    write_dataset(out, data);
  }
  write_command_manifest(out_dir, "gen", cfg, {"records " + std::to_string(data.size())});
  std::cout << "wrote " << data.size() << " records to " << out_dir << "/dataset.jsonl\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& out_dir,
              const SeedOverride& seed, bool force) {
  TrainConfig cfg = parse_train_config_file(config_path);
  seed.apply(cfg);
  fs::create_directories(out_dir);
  guard_manifest(out_dir, force);
  const TrainResult result = train(cfg, out_dir);
  std::cout << "trained " << task_name(cfg.task.task) << " ("
            << attention_kind_name(cfg.kind) << ") for " << cfg.epochs << " epochs; final loss "
            << result.losses.back() << "\n";
  std::cout << "checkpoint " << out_dir << "/checkpoint.bin\n";
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& config_path,
             const std::string& protocols_csv, const std::string& out_dir,
             const SeedOverride& seed, bool force) {
  const EncoderModel model = load_checkpoint(checkpoint);
  TrainConfig cfg = config_for_checkpoint(model, config_path);
  seed.apply(cfg);
  fs::create_directories(out_dir);
  guard_manifest(out_dir, force);
  std::vector<MetricReport> reports;
  for (const std::string& name : split_list(protocols_csv)) {
    if (name == "in_dist") {
      reports.push_back(
          evaluate(model, make_eval_set(cfg.task, cfg.eval_samples), metric_for(cfg.loss)));
    } else {
      OodProtocol proto;
      proto.kind = protocol_from(name);
      reports.push_back(run_ood_protocol(model, cfg, proto));
    }
  }
  std::vector<std::string> extra = {"checkpoint " + checkpoint, "metrics"};
  {
    std::ofstream out = open_out(out_dir + "/metrics.txt");
    for (const MetricReport& r : reports) {
      out << format_metric(r) << "\n";
      std::cout << format_metric(r) << "\n";
      extra.push_back("  " + format_metric(r));
    }
  }
  write_command_manifest(out_dir, "eval", cfg, extra);
  return 0;
}

int run_verify(const std::string& suite, int trials, std::uint64_t seed,
               const std::string& out_dir) {
  const VerifyReport rep = run_verify_suite(suite, trials, seed);
  std::cout << format_report(rep);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out = open_out(out_dir + "/report.txt");
    out << format_report(rep);
  }
  return rep.failures == 0 ? 0 : 1;
}

int run_attn_dump(const std::string& checkpoint, const std::string& lengths_csv, int top_k,
                  int batch, const std::string& out_dir, const SeedOverride& seed, bool force) {
  const EncoderModel model = load_checkpoint(checkpoint);
  TrainConfig cfg = config_for_checkpoint(model, "");
  seed.apply(cfg);
  if (batch < 1) throw ConfigError("batch must be >= 1");
  const bool graph =
      cfg.task.task == Task::kFloydWarshall || cfg.task.task == Task::kScc;
  fs::create_directories(out_dir);
  guard_manifest(out_dir, force);
  std::vector<std::string> extra = {"checkpoint " + checkpoint,
                                    "top_k " + std::to_string(top_k),
                                    "batch " + std::to_string(batch), "files"};
  for (int n : split_ints(lengths_csv)) {
    if (n < 1) throw ConfigError("lengths must be positive");
    const int rows = graph ? n * n : n;
    if (rows > model.attn.n_max)
      throw ConfigError("length " + std::to_string(n) + " needs " + std::to_string(rows) +
                        " positions but the checkpoint holds " + std::to_string(model.attn.n_max));
    TaskConfig tcfg = cfg.task;
    tcfg.n = n;
    const std::vector<Instance> data = make_eval_set(tcfg, batch);
    std::vector<Mat> tokens;
    tokens.reserve(data.size());
    for (const Instance& inst : data) tokens.push_back(inst.tokens);
    const AttentionView view = extract_attention(model, tokens, top_k);
    for (size_t h = 0; h < view.reduced.size(); ++h) {
      const std::string name = model.task + "_" + attention_kind_name(model.kind) + "_" +
                               std::to_string(n) + "_" + std::to_string(h) + ".csv";
      write_matrix_csv(out_dir + "/" + name, view.reduced[h]);
      extra.push_back("  " + name);
      std::cout << "wrote " << out_dir << "/" << name << "\n";
    }
  }
  write_command_manifest(out_dir, "attn-dump", cfg, extra);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tropical attention workbench"};
  app.require_subcommand(1);

  std::string task_flag, config_path, out_dir, checkpoint, protocols = "in_dist";
  std::string suite, lengths = "8,16,32,64,128,256,512,1024";
  int trials = 100, top_k = 8, batch = 32;
  std::uint64_t verify_seed = 0;
  SeedOverride seed;
  bool force = false;

  auto add_seed = [&seed](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&seed](const std::uint64_t& v) {
          seed.value = v;
          seed.set = true;
        },
        "override the config seed");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a dataset");
  gen->add_option("--task", task_flag, "task name (defaults applied)");
  gen->add_option("--config", config_path, "run config file");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_flag("--force", force, "overwrite an existing manifest");
  add_seed(gen);

  CLI::App* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path, "run config file")->required();
  tr->add_option("--out", out_dir, "output directory")->required();
  tr->add_flag("--force", force, "overwrite an existing manifest");
  add_seed(tr);

  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ev->add_option("--config", config_path, "run config file (defaults from the checkpoint)");
  ev->add_option("--protocol", protocols,
                 "comma list of in_dist|length|value|adversarial");
  ev->add_option("--out", out_dir, "output directory")->required();
  ev->add_flag("--force", force, "overwrite an existing manifest");
  add_seed(ev);

  CLI::App* ver = app.add_subcommand("verify", "run a compiled-stack verification suite");
  ver->add_option("--suite", suite, "max_gate|affine|poly|circuit|dp")->required();
  ver->add_option("--trials", trials, "trial count");
  ver->add_option("--seed", verify_seed, "suite seed");
  ver->add_option("--out", out_dir, "optional report directory");

  CLI::App* ad = app.add_subcommand("attn-dump", "dump reduced attention views as CSV");
  ad->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  ad->add_option("--lengths", lengths, "comma list of sequence lengths");
  ad->add_option("--top-k", top_k, "key columns per view");
  ad->add_option("--batch", batch, "instances per length");
  ad->add_option("--out", out_dir, "output directory")->required();
  ad->add_flag("--force", force, "overwrite an existing manifest");
  add_seed(ad);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen(task_flag, config_path, out_dir, seed, force);
    if (tr->parsed()) return run_train(config_path, out_dir, seed, force);
    if (ev->parsed()) return run_eval(checkpoint, config_path, protocols, out_dir, seed, force);
    if (ver->parsed()) return run_verify(suite, trials, verify_seed, out_dir);
    if (ad->parsed()) return run_attn_dump(checkpoint, lengths, top_k, batch, out_dir, seed, force);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
