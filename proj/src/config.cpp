#include "vid/config.hpp"

#include <fstream>
#include <sstream>

#include "vid/errors.hpp"

namespace vid {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParamError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParamError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(temperature > 0.0)) throw ParamError("temperature must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParamError("lambda must be in [0, 1]");
  if (batch_size == 0) throw ParamError("batch_size must be positive");
  if (width == 0 || layers == 0 || heads == 0) throw ParamError("encoder dimensions must be positive");
  if (width % heads != 0) throw ParamError("width must be divisible by heads");
  if (max_len < 4) throw ParamError("max_len too small");
  if (!(lr > 0.0)) throw ParamError("lr must be positive");
  if (!(finetune_lr > 0.0)) throw ParamError("finetune_lr must be positive");
  if (weight_decay < 0.0) throw ParamError("weight_decay must be non-negative");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ParamError("val_fraction must be in (0, 1)");
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "temperature") temperature = parse_double(key, value);
  else if (key == "lambda") lambda = parse_double(key, value);
  else if (key == "teacher_epochs") teacher_epochs = parse_u64(key, value);
  else if (key == "distill_epochs") distill_epochs = parse_u64(key, value);
  else if (key == "finetune_epochs") finetune_epochs = parse_u64(key, value);
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "width") width = parse_u64(key, value);
  else if (key == "layers") layers = parse_u64(key, value);
  else if (key == "heads") heads = parse_u64(key, value);
  else if (key == "max_len") max_len = parse_u64(key, value);
  else if (key == "lr") lr = parse_double(key, value);
  else if (key == "finetune_lr") finetune_lr = parse_double(key, value);
  else if (key == "beta1") beta1 = parse_double(key, value);
  else if (key == "beta2") beta2 = parse_double(key, value);
  else if (key == "weight_decay") weight_decay = parse_double(key, value);
  else if (key == "batch_size") batch_size = parse_u64(key, value);
  else if (key == "val_fraction") val_fraction = parse_double(key, value);
  else if (key == "head_init_std") head_init_std = parse_double(key, value);
  else if (key == "check_invariants") check_invariants = value == "1" || value == "true";
  else throw ParamError("unknown config key: " + key);
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  return {
      {"temperature", fmt_double(temperature)},
      {"lambda", fmt_double(lambda)},
      {"teacher_epochs", std::to_string(teacher_epochs)},
      {"distill_epochs", std::to_string(distill_epochs)},
      {"finetune_epochs", std::to_string(finetune_epochs)},
      {"seed", std::to_string(seed)},
      {"width", std::to_string(width)},
      {"layers", std::to_string(layers)},
      {"heads", std::to_string(heads)},
      {"max_len", std::to_string(max_len)},
      {"lr", fmt_double(lr)},
      {"finetune_lr", fmt_double(finetune_lr)},
      {"beta1", fmt_double(beta1)},
      {"beta2", fmt_double(beta2)},
      {"weight_decay", fmt_double(weight_decay)},
      {"batch_size", std::to_string(batch_size)},
      {"val_fraction", fmt_double(val_fraction)},
      {"head_init_std", fmt_double(head_init_std)},
  };
}

std::string ExperimentConfig::canonical_string() const {
  std::ostringstream os;
  for (const auto& [k, v] : to_map()) os << k << '=' << v << '\n';
  return os.str();
}

std::string ExperimentConfig::config_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_string()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + " line " + std::to_string(line_no) + ": expected key=value");
    }
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config file: " + path);
  out << canonical_string();
  if (check_invariants) out << "check_invariants=1\n";
}

}  // namespace vid
