#include "tropa/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace trop {
namespace {

struct ConfigLine {
  int number = 0;
  bool in_task = false;
  std::string key;
  std::vector<std::string> args;
};

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double to_double(const ConfigLine& l, size_t at = 0) {
  if (l.args.size() != at + 1) fail(l.number, "'" + l.key + "' expects one numeric value");
  try {
    size_t used = 0;
    const double v = std::stod(l.args[at], &used);
    if (used != l.args[at].size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(l.number, "'" + l.key + "' expects a number, got '" + l.args[at] + "'");
  }
}

int to_int(const ConfigLine& l) {
  const double v = to_double(l);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) fail(l.number, "'" + l.key + "' expects an integer");
  return i;
}

std::uint64_t to_u64(const ConfigLine& l) {
  if (l.args.size() != 1) fail(l.number, "'" + l.key + "' expects one value");
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(l.args[0], &used);
    if (used != l.args[0].size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(l.number, "'" + l.key + "' expects an unsigned integer, got '" + l.args[0] + "'");
  }
}

Range to_range(const ConfigLine& l) {
  if (l.args.size() == 1 && l.args[0] == "none") return Range{};
  if (l.args.size() != 2) fail(l.number, "'" + l.key + "' expects 'none' or two numbers");
  ConfigLine lo = l, hi = l;
  lo.args = {l.args[0]};
  hi.args = {l.args[1]};
  return make_range(to_double(lo), to_double(hi));
}

std::string one_word(const ConfigLine& l) {
  if (l.args.size() != 1) fail(l.number, "'" + l.key + "' expects one value");
  return l.args[0];
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

TrainConfig parse_train_config(std::istream& in) {
  std::vector<ConfigLine> lines;
  std::string raw;
  int number = 0;
  bool task_open = false;
  while (std::getline(in, raw)) {
    ++number;
    if (raw.find('\t') != std::string::npos) fail(number, "tabs are not allowed, indent with spaces");
    size_t indent = 0;
    while (indent < raw.size() && raw[indent] == ' ') ++indent;
    const std::string body = raw.substr(indent);
    if (body.empty() || body[0] == '#') continue;
    ConfigLine l;
    l.number = number;
    std::istringstream toks(body);
    toks >> l.key;
    std::string tok;
    while (toks >> tok) l.args.push_back(tok);
    if (indent == 0) {
      task_open = false;
      if (l.key == "task") {
        if (!l.args.empty()) fail(number, "'task' opens a block and takes no value");
        task_open = true;
        continue;
      }
    } else if (indent == 2) {
      if (!task_open) fail(number, "indented line outside the task block");
      l.in_task = true;
    } else {
      fail(number, "indentation must be zero or two spaces");
    }
    lines.push_back(std::move(l));
  }

  // The task name and attention kind pick the defaults everything else
  // overrides, so resolve those two first regardless of file order.
  Task task = Task::kQuickSelect;
  bool saw_task = false;
  AttentionKind kind = AttentionKind::kTropical;
  for (const ConfigLine& l : lines) {
    if (l.in_task && l.key == "name") {
      try {
        task = task_from(one_word(l));
      } catch (const ConfigError& e) {
        fail(l.number, e.what());
      }
      saw_task = true;
    }
    if (!l.in_task && l.key == "attention") {
      try {
        kind = attention_kind_from(one_word(l));
      } catch (const ConfigError& e) {
        fail(l.number, e.what());
      }
    }
  }
  if (!saw_task) throw ConfigError("config needs a task block with a name");

  TrainConfig cfg = default_train_config(task, kind);
  for (const ConfigLine& l : lines) {
    if (l.in_task) {
      if (l.key == "name") continue;
      else if (l.key == "n") cfg.task.n = to_int(l);
      else if (l.key == "seed") cfg.task.seed = to_u64(l);
      else if (l.key == "value_range") cfg.task.value_range = to_range(l);
      else if (l.key == "target_range") cfg.task.target_range = to_range(l);
      else if (l.key == "weight_range") cfg.task.weight_range = to_range(l);
      else if (l.key == "ood_value_range") cfg.task.ood_value_range = to_range(l);
      else if (l.key == "adversarial_range") cfg.task.adversarial_range = to_range(l);
      else if (l.key == "perturb_prob") cfg.task.perturb_prob = to_double(l);
      else fail(l.number, "unknown task key '" + l.key + "'");
      continue;
    }
    if (l.key == "attention") continue;
    else if (l.key == "loss") {
      try {
        cfg.loss = loss_kind_from(one_word(l));
      } catch (const ConfigError& e) {
        fail(l.number, e.what());
      }
    } else if (l.key == "epochs") cfg.epochs = to_int(l);
    else if (l.key == "batch") cfg.batch = to_int(l);
    else if (l.key == "lr") cfg.lr = to_double(l);
    else if (l.key == "seed") cfg.seed = to_u64(l);
    else if (l.key == "samples") cfg.samples = to_int(l);
    else if (l.key == "eval_samples") cfg.eval_samples = to_int(l);
    else if (l.key == "heads") cfg.heads = to_int(l);
    else if (l.key == "width") cfg.d = to_int(l);
    else if (l.key == "n_max") cfg.n_max = to_int(l);
    else fail(l.number, "unknown key '" + l.key + "'");
  }
  validate_train_config(cfg);
  return cfg;
}

TrainConfig parse_train_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  return parse_train_config(in);
}

std::string format_train_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "attention " << attention_kind_name(cfg.kind) << "\n";
  out << "loss " << loss_kind_name(cfg.loss) << "\n";
  out << "epochs " << cfg.epochs << "\n";
  out << "batch " << cfg.batch << "\n";
  out << "lr " << fmt(cfg.lr) << "\n";
  out << "seed " << cfg.seed << "\n";
  out << "samples " << cfg.samples << "\n";
  out << "eval_samples " << cfg.eval_samples << "\n";
  out << "heads " << cfg.heads << "\n";
  out << "width " << cfg.d << "\n";
  out << "n_max " << cfg.n_max << "\n";
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
  return out.str();
}

}  // namespace trop
