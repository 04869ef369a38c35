#include "srgnn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace srgnn {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'R', 'G', 'N', 'N', 'C', 'K', 'P'};
constexpr std::array<char, 8> kTrailer = {'S', 'R', 'G', 'N', 'N', 'E', 'N', 'D'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const std::string& name, const Eigen::MatrixXd& m) {
    str(name);
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
  }

 private:
  void le(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    bytes(buf, static_cast<std::size_t>(n));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("checkpoint: truncated file");
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw IoError("checkpoint: implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  Eigen::MatrixXd tensor(const std::string& expected_name) {
    const std::string name = str();
    if (name != expected_name) {
      throw IoError("checkpoint: expected tensor '" + expected_name + "', found '" + name + "'");
    }
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    if (rows > (1ull << 32) || cols > (1ull << 32)) throw IoError("checkpoint: implausible shape");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    }
    return m;
  }

 private:
  std::uint64_t le(int n) {
    unsigned char buf[8];
    bytes(reinterpret_cast<char*>(buf), static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
};

// Hex-float text so every double survives the round trip exactly.
std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& c) {
  return {
      {"d", std::to_string(c.model.dim)},
      {"steps", std::to_string(c.model.steps)},
      {"readout", std::string(to_string(c.model.readout))},
      {"connection", std::string(to_string(c.model.connection))},
      {"loss", std::string(to_string(c.model.loss))},
      {"normalize_attention", c.model.normalize_attention ? "1" : "0"},
      {"lr", exact(c.lr)},
      {"lr_decay", exact(c.lr_decay)},
      {"decay_every", std::to_string(c.decay_every)},
      {"batch_size", std::to_string(c.batch_size)},
      {"l2", exact(c.l2)},
      {"epochs", std::to_string(c.epochs)},
      {"seed", std::to_string(c.seed)},
      {"validation_fraction", exact(c.validation_fraction)},
      {"k", std::to_string(c.k)},
  };
}

TrainConfig parse_config(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError("checkpoint: config is missing '" + key + "'");
    return it->second;
  };
  auto real = [&](const std::string& key) { return std::strtod(get(key).c_str(), nullptr); };
  auto integer = [&](const std::string& key) { return std::stoi(get(key)); };

  TrainConfig c;
  c.model.dim = integer("d");
  c.model.steps = integer("steps");
  c.model.readout = parse_readout_mode(get("readout"));
  c.model.connection = parse_connection_scheme(get("connection"));
  c.model.loss = parse_loss_mode(get("loss"));
  c.model.normalize_attention = get("normalize_attention") == "1";
  c.lr = real("lr");
  c.lr_decay = real("lr_decay");
  c.decay_every = integer("decay_every");
  c.batch_size = integer("batch_size");
  c.l2 = real("l2");
  c.epochs = integer("epochs");
  c.seed = std::stoull(get("seed"));
  c.validation_fraction = real("validation_fraction");
  c.k = integer("k");
  return c;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  validate_shapes(ckpt.model.params, ckpt.config.model);
  Writer w(out);
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);

  const auto entries = config_entries(ckpt.config);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [k, v] : entries) {
    w.str(k);
    w.str(v);
  }

  w.u64(ckpt.model.catalog());
  w.u64(ckpt.epoch);

  const auto names = tensor_names(ckpt.config.model);
  auto write_set = [&](const ModelParams& set) {
    const auto tensors = flatten(set);
    for (std::size_t i = 0; i < names.size(); ++i) w.tensor(names[i], tensors[i]);
  };
  w.u32(static_cast<std::uint32_t>(names.size()));
  write_set(ckpt.model.params);

  const bool has_adam = is_present(ckpt.adam.m.embedding);
  w.u32(has_adam ? 1 : 0);
  w.u64(ckpt.adam.step);
  if (has_adam) {
    write_set(ckpt.adam.m);
    write_set(ckpt.adam.v);
  }

  const auto& edges = ckpt.model.global.edges();
  w.u64(edges.size());
  for (const auto& [edge, count] : edges) {
    w.u32(edge.first);
    w.u32(edge.second);
    w.u64(count);
  }
  w.bytes(kTrailer.data(), kTrailer.size());
  if (!out) throw IoError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw IoError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }

  std::map<std::string, std::string> kv;
  const std::uint32_t n_entries = r.u32();
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    std::string key = r.str();
    kv[key] = r.str();
  }

  Checkpoint ckpt;
  ckpt.config = parse_config(kv);
  ckpt.model.config = ckpt.config.model;
  const std::uint64_t catalog = r.u64();
  ckpt.epoch = r.u64();

  const auto names = tensor_names(ckpt.config.model);
  const std::uint32_t n_tensors = r.u32();
  if (n_tensors != names.size()) throw IoError("checkpoint: tensor count does not match config");
  auto read_set = [&]() {
    std::vector<Eigen::MatrixXd> tensors;
    for (const auto& name : names) tensors.push_back(r.tensor(name));
    return unflatten(tensors, ckpt.config.model, catalog);
  };
  ckpt.model.params = read_set();

  const std::uint32_t has_adam = r.u32();
  ckpt.adam.step = r.u64();
  if (has_adam) {
    ckpt.adam.m = read_set();
    ckpt.adam.v = read_set();
  }

  const std::uint64_t n_edges = r.u64();
  for (std::uint64_t i = 0; i < n_edges; ++i) {
    const ItemId from = r.u32();
    const ItemId to = r.u32();
    ckpt.model.global.add_edge(from, to, r.u64());
  }
  std::array<char, 8> trailer{};
  r.bytes(trailer.data(), trailer.size());
  if (trailer != kTrailer) throw IoError("checkpoint: bad trailer");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace srgnn
