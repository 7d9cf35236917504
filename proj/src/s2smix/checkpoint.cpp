#include "s2smix/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "s2smix/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

namespace s2smix {

namespace {

constexpr char kMagic[8] = {'S', '2', 'S', 'M', 'I', 'X', 'C', 'K'};

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct TensorEntry {
  std::string name;
  std::vector<int> shape;
  int64_t count = 0;
};

std::string join_space(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += ' ';
    out += items[i];
  }
  return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const ModelConfig& mc = ckpt.model_config();
  const TrainConfig& tc = ckpt.train_config;
  const TrainingState& st = ckpt.state;

  std::ostringstream man;
  man << "format_version = " << Checkpoint::kFormatVersion << '\n'
      << "vocab_size_src = " << mc.vocab_size_src << '\n'
      << "vocab_size_tgt = " << mc.vocab_size_tgt << '\n'
      << "embed_dim = " << mc.embed_dim << '\n'
      << "lstm_dim = " << mc.lstm_dim << '\n'
      << "components = " << mc.components << '\n'
      << "variant = " << variant_to_string(mc.variant) << '\n'
      << "dropout = " << fmt_double(mc.dropout_rate) << '\n'
      << "condition_cell = " << (mc.condition_cell ? 1 : 0) << '\n'
      << "batch_size = " << tc.batch_size << '\n'
      << "epochs = " << tc.epochs << '\n'
      << "learning_rate = " << fmt_double(tc.adam.learning_rate) << '\n'
      << "beta1 = " << fmt_double(tc.adam.beta1) << '\n'
      << "beta2 = " << fmt_double(tc.adam.beta2) << '\n'
      << "adam_epsilon = " << fmt_double(tc.adam.epsilon) << '\n'
      << "clip_norm = " << fmt_double(tc.adam.clip_norm) << '\n'
      << "label_smoothing = " << fmt_double(tc.label_smoothing) << '\n'
      << "train_mode = " << train_mode_to_string(tc.mode) << '\n'
      << "mc_samples = " << tc.mc_samples << '\n'
      << "seed = " << tc.seed << '\n'
      << "epoch = " << st.epoch << '\n'
      << "step_in_epoch = " << st.step_in_epoch << '\n'
      << "global_step = " << st.global_step << '\n'
      << "adam_t = " << st.adam.t << '\n'
      << "best_dev_ppl = " << fmt_double(st.best_dev_ppl) << '\n'
      << "best_epoch = " << st.best_epoch << '\n'
      << "dev_ppl = " << fmt_double(ckpt.dev_ppl) << '\n'
      << "rng_state = " << st.rng_state << '\n'
      << "vocab_src = " << join_space(ckpt.src_vocab.regular_tokens()) << '\n'
      << "vocab_tgt = " << join_space(ckpt.tgt_vocab.regular_tokens()) << '\n';

  std::vector<const Tensor*> payload;
  auto add_tensor = [&](const std::string& name, const Tensor& t) {
    man << "tensor " << name << " f64";
    for (size_t i = 0; i < t.shape.size(); ++i) man << (i ? "x" : " ") << t.shape[i];
    man << ' ' << t.numel() << '\n';
    payload.push_back(&t);
  };
  const ParamSet& set = st.params.set;
  for (size_t i = 0; i < set.count(); ++i) add_tensor(set.names[i], set.tensors[i]);
  for (size_t i = 0; i < set.count(); ++i) add_tensor("adam.m." + set.names[i], st.adam.m[i]);
  for (size_t i = 0; i < set.count(); ++i) add_tensor("adam.v." + set.names[i], st.adam.v[i]);

  const std::string manifest = man.str();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const uint32_t version = Checkpoint::kFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint64_t man_len = manifest.size();
  out.write(reinterpret_cast<const char*>(&man_len), sizeof(man_len));
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  for (const Tensor* t : payload) {
    out.write(reinterpret_cast<const char*>(t->values.data()),
              static_cast<std::streamsize>(t->values.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed while writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != Checkpoint::kFormatVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  uint64_t man_len = 0;
  in.read(reinterpret_cast<char*>(&man_len), sizeof(man_len));
  std::string manifest(man_len, '\0');
  in.read(manifest.data(), static_cast<std::streamsize>(man_len));
  if (!in) throw DataError("truncated checkpoint manifest: " + path);

  std::map<std::string, std::string> kv;
  std::vector<TensorEntry> entries;
  {
    std::istringstream ms(manifest);
    std::string line;
    while (std::getline(ms, line)) {
      if (line.rfind("tensor ", 0) == 0) {
        std::istringstream ls(line);
        std::string word, name, dtype, dims;
        int64_t count;
        ls >> word >> name >> dtype >> dims >> count;
        if (!ls || dtype != "f64") throw DataError("bad tensor entry: " + line);
        TensorEntry e;
        e.name = name;
        e.count = count;
        size_t start = 0;
        while (start <= dims.size()) {
          const size_t x = dims.find('x', start);
          e.shape.push_back(std::stoi(dims.substr(start, x - start)));
          if (x == std::string::npos) break;
          start = x + 1;
        }
        entries.push_back(std::move(e));
      } else {
        const size_t eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 3);
      }
    }
  }

  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("checkpoint manifest missing key: " + key);
    return it->second;
  };

  ModelConfig mc;
  mc.vocab_size_src = std::stoi(get("vocab_size_src"));
  mc.vocab_size_tgt = std::stoi(get("vocab_size_tgt"));
  mc.embed_dim = std::stoi(get("embed_dim"));
  mc.lstm_dim = std::stoi(get("lstm_dim"));
  mc.components = std::stoi(get("components"));
  mc.variant = variant_from_string(get("variant"));
  mc.dropout_rate = std::stod(get("dropout"));
  mc.condition_cell = std::stoi(get("condition_cell")) != 0;

  Checkpoint ckpt;
  TrainConfig& tc = ckpt.train_config;
  tc.batch_size = std::stoi(get("batch_size"));
  tc.epochs = std::stoi(get("epochs"));
  tc.adam.learning_rate = std::stod(get("learning_rate"));
  tc.adam.beta1 = std::stod(get("beta1"));
  tc.adam.beta2 = std::stod(get("beta2"));
  tc.adam.epsilon = std::stod(get("adam_epsilon"));
  tc.adam.clip_norm = std::stod(get("clip_norm"));
  tc.label_smoothing = std::stod(get("label_smoothing"));
  tc.mode = train_mode_from_string(get("train_mode"));
  tc.mc_samples = std::stoi(get("mc_samples"));
  tc.seed = std::stoull(get("seed"));

  TrainingState& st = ckpt.state;
  // Structure from the config; values overwritten from the payload below.
  Rng scratch(0);
  st.params = ModelParams::init(mc, scratch);
  st.adam = AdamState::zeros_like(st.params.set);
  st.epoch = std::stoi(get("epoch"));
  st.step_in_epoch = std::stoi(get("step_in_epoch"));
  st.global_step = std::stoll(get("global_step"));
  st.adam.t = std::stoll(get("adam_t"));
  st.best_dev_ppl = std::stod(get("best_dev_ppl"));
  st.best_epoch = std::stoi(get("best_epoch"));
  st.rng_state = get("rng_state");
  ckpt.dev_ppl = std::stod(get("dev_ppl"));
  for (const std::string& tok : tokenize(get("vocab_src"))) ckpt.src_vocab.add(tok);
  for (const std::string& tok : tokenize(get("vocab_tgt"))) ckpt.tgt_vocab.add(tok);

  for (const TensorEntry& e : entries) {
    Tensor* dst = nullptr;
    ParamSet& set = st.params.set;
    if (e.name.rfind("adam.m.", 0) == 0) {
      const int i = set.find(e.name.substr(7));
      if (i >= 0) dst = &st.adam.m[static_cast<size_t>(i)];
    } else if (e.name.rfind("adam.v.", 0) == 0) {
      const int i = set.find(e.name.substr(7));
      if (i >= 0) dst = &st.adam.v[static_cast<size_t>(i)];
    } else {
      const int i = set.find(e.name);
      if (i >= 0) dst = &set.tensors[static_cast<size_t>(i)];
    }
    if (dst == nullptr) throw DataError("checkpoint tensor '" + e.name + "' has no destination");
    if (dst->shape != e.shape || dst->numel() != e.count) {
      throw DataError("checkpoint tensor '" + e.name + "' shape mismatch");
    }
    in.read(reinterpret_cast<char*>(dst->values.data()),
            static_cast<std::streamsize>(dst->values.size() * sizeof(double)));
    if (!in) throw DataError("truncated checkpoint payload at tensor '" + e.name + "'");
  }
  return ckpt;
}

}  // namespace s2smix
