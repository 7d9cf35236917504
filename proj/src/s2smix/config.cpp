#include "s2smix/config.hpp"

#include <fstream>
#include <sstream>

#include "s2smix/error.hpp"

namespace s2smix {

namespace {

std::string trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    const int v = std::stoi(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected an integer, got '" + val + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    const uint64_t v = std::stoull(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected an unsigned integer, got '" + val + "'");
  }
}

double to_double(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    const double v = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected a number, got '" + val + "'");
  }
}

bool to_bool(const std::string& key, const std::string& val) {
  if (val == "true" || val == "1") return true;
  if (val == "false" || val == "0") return false;
  throw UsageError("config key '" + key + "': expected true/false, got '" + val + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "embed_dim") cfg.model.embed_dim = to_int(key, val);
    else if (key == "lstm_dim") cfg.model.lstm_dim = to_int(key, val);
    else if (key == "components") cfg.model.components = to_int(key, val);
    else if (key == "variant") cfg.model.variant = variant_from_string(val);
    else if (key == "dropout") cfg.model.dropout_rate = to_double(key, val);
    else if (key == "condition_cell") cfg.model.condition_cell = to_bool(key, val);
    else if (key == "batch_size") cfg.train.batch_size = to_int(key, val);
    else if (key == "epochs") cfg.train.epochs = to_int(key, val);
    else if (key == "learning_rate") cfg.train.adam.learning_rate = to_double(key, val);
    else if (key == "beta1") cfg.train.adam.beta1 = to_double(key, val);
    else if (key == "beta2") cfg.train.adam.beta2 = to_double(key, val);
    else if (key == "adam_epsilon") cfg.train.adam.epsilon = to_double(key, val);
    else if (key == "clip_norm") cfg.train.adam.clip_norm = to_double(key, val);
    else if (key == "label_smoothing") cfg.train.label_smoothing = to_double(key, val);
    else if (key == "train_mode") cfg.train.mode = train_mode_from_string(val);
    else if (key == "mc_samples") cfg.train.mc_samples = to_int(key, val);
    else if (key == "seed") cfg.train.seed = to_u64(key, val);
    else if (key == "beam") cfg.decode.beam = to_int(key, val);
    else if (key == "gamma") cfg.decode.gamma = to_double(key, val);
    else if (key == "max_len") cfg.decode.max_len = to_int(key, val);
    else if (key == "length_norm") cfg.decode.length_norm = to_bool(key, val);
    else if (key == "task") cfg.data.task = val;
    else if (key == "data_seed") cfg.data.seed = to_u64(key, val);
    else if (key == "styles") cfg.data.styles = to_int(key, val);
    else if (key == "n_train") cfg.data.n_train = to_int(key, val);
    else if (key == "n_dev") cfg.data.n_dev = to_int(key, val);
    else if (key == "n_test") cfg.data.n_test = to_int(key, val);
    else if (key == "max_len_filter") cfg.data.max_len_filter = to_int(key, val);
    else throw UsageError("unknown config key '" + key + "'");
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_string(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "# model\n"
     << "embed_dim = " << c.model.embed_dim << "\n"
     << "lstm_dim = " << c.model.lstm_dim << "\n"
     << "components = " << c.model.components << "\n"
     << "variant = " << variant_to_string(c.model.variant) << "\n"
     << "dropout = " << c.model.dropout_rate << "\n"
     << "condition_cell = " << (c.model.condition_cell ? "true" : "false") << "\n"
     << "# training\n"
     << "batch_size = " << c.train.batch_size << "\n"
     << "epochs = " << c.train.epochs << "\n"
     << "learning_rate = " << c.train.adam.learning_rate << "\n"
     << "beta1 = " << c.train.adam.beta1 << "\n"
     << "beta2 = " << c.train.adam.beta2 << "\n"
     << "adam_epsilon = " << c.train.adam.epsilon << "\n"
     << "clip_norm = " << c.train.adam.clip_norm << "\n"
     << "label_smoothing = " << c.train.label_smoothing << "\n"
     << "train_mode = " << train_mode_to_string(c.train.mode) << "\n"
     << "mc_samples = " << c.train.mc_samples << "\n"
     << "seed = " << c.train.seed << "\n"
     << "# decoding\n"
     << "beam = " << c.decode.beam << "\n"
     << "gamma = " << c.decode.gamma << "\n"
     << "max_len = " << c.decode.max_len << "\n"
     << "length_norm = " << (c.decode.length_norm ? "true" : "false") << "\n"
     << "# data\n"
     << "task = " << c.data.task << "\n"
     << "data_seed = " << c.data.seed << "\n"
     << "styles = " << c.data.styles << "\n"
     << "n_train = " << c.data.n_train << "\n"
     << "n_dev = " << c.data.n_dev << "\n"
     << "n_test = " << c.data.n_test << "\n"
     << "max_len_filter = " << c.data.max_len_filter << "\n";
  return os.str();
}

void write_config_file(const ExperimentConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << config_to_string(config);
}

}  // namespace s2smix
