#include "strae/trainer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "strae/error.hpp"
#include "strae/io/atomic_file.hpp"

namespace strae::train {

namespace {

constexpr const char* kMagic = "strae-checkpoint 1";

struct TensorEntry {
  diff::Shape shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

void append_le(std::string& blob, std::span<const double> values) {
  for (double d : values) {
    auto bits = std::bit_cast<std::uint64_t>(d);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    blob.append(bytes, 8);
  }
}

void read_le(const std::string& blob, std::size_t offset, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, blob.data() + offset + 8 * i, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out[i] = std::bit_cast<double>(bits);
  }
}

}  // namespace

std::filesystem::path blob_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  p += ".bin";
  return p;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& manifest) {
  std::string blob;
  std::ostringstream tensors;
  auto add = [&](const std::string& name, const diff::Tensor& t) {
    tensors << "tensor " << name << ' ' << t.rank();
    for (auto d : t.shape()) tensors << ' ' << d;
    tensors << ' ' << blob.size() << ' ' << t.size() << '\n';
    append_le(blob, t.data());
  };
  auto params = c.params.parameters();
  if (c.adam.m.size() != params.size() || c.adam.v.size() != params.size()) {
    throw ContractError("checkpoint optimizer state does not match parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) add("param." + params[k]->name, params[k]->value);
  for (std::size_t k = 0; k < params.size(); ++k) add("adam.m." + params[k]->name, c.adam.m[k]);
  for (std::size_t k = 0; k < params.size(); ++k) add("adam.v." + params[k]->name, c.adam.v[k]);

  std::ostringstream out;
  out << kMagic << '\n'
      << "epoch " << c.epoch << '\n'
      << "architecture " << model::to_string(c.params.architecture) << '\n'
      << "n " << c.params.n << '\n'
      << "vocab_size " << c.params.vocab_size << '\n'
      << "adam.step " << c.adam.step << '\n'
      << "adam.beta1 " << format_double(c.adam.beta1) << '\n'
      << "adam.beta2 " << format_double(c.adam.beta2) << '\n'
      << "adam.epsilon " << format_double(c.adam.epsilon) << '\n'
      << "dev_loss_history " << c.dev_loss_history.size();
  for (double d : c.dev_loss_history) out << ' ' << format_double(d);
  out << '\n' << "rng " << c.rng_state << '\n';
  std::istringstream cfg(c.config.to_text());
  for (std::string line; std::getline(cfg, line);) out << "config " << line << '\n';
  out << tensors.str();
  out << "blob " << blob_path(manifest).filename().string() << ' ' << blob.size() << '\n' << "end\n";

  io::write_file_atomic(blob_path(manifest), blob);
  io::write_file_atomic(manifest, out.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw InputError("cannot open checkpoint manifest: " + manifest.string());
  auto fail = [&](const std::string& what) { return InputError(manifest.string() + ": " + what); };

  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw fail("not a checkpoint manifest");

  Checkpoint c;
  std::string config_text;
  std::map<std::string, TensorEntry> entries;
  std::string arch = "strae";
  std::size_t n = 0, vocab_size = 0, blob_size = 0;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end") {
      ended = true;
      break;
    } else if (key == "epoch") {
      ls >> c.epoch;
    } else if (key == "architecture") {
      ls >> arch;
    } else if (key == "n") {
      ls >> n;
    } else if (key == "vocab_size") {
      ls >> vocab_size;
    } else if (key == "adam.step") {
      ls >> c.adam.step;
    } else if (key == "adam.beta1" || key == "adam.beta2" || key == "adam.epsilon") {
      std::string v;
      ls >> v;
      double d = std::strtod(v.c_str(), nullptr);
      (key == "adam.beta1" ? c.adam.beta1 : key == "adam.beta2" ? c.adam.beta2 : c.adam.epsilon) = d;
    } else if (key == "dev_loss_history") {
      std::size_t count = 0;
      ls >> count;
      for (std::size_t i = 0; i < count; ++i) {
        std::string v;
        if (!(ls >> v)) throw fail("truncated dev_loss_history");
        c.dev_loss_history.push_back(std::strtod(v.c_str(), nullptr));
      }
    } else if (key == "rng") {
      std::getline(ls >> std::ws, c.rng_state);
    } else if (key == "config") {
      std::string rest;
      std::getline(ls >> std::ws, rest);
      config_text += rest + '\n';
    } else if (key == "tensor") {
      std::string name;
      std::size_t rank = 0;
      TensorEntry e;
      ls >> name >> rank;
      e.shape.resize(rank);
      for (auto& d : e.shape) ls >> d;
      ls >> e.offset >> e.count;
      if (!ls || diff::element_count(e.shape) != e.count) throw fail("malformed tensor line: " + line);
      entries[name] = e;
    } else if (key == "blob") {
      std::string name;
      ls >> name >> blob_size;
    } else if (!key.empty()) {
      throw fail("unknown manifest key: " + key);
    }
  }
  if (!ended) throw fail("manifest is truncated (missing 'end')");

  c.config = TrainConfig::from_text(config_text);
  c.params = model::ModelParams::zeros(model::parse_architecture(arch), vocab_size, n);

  std::ifstream bin(blob_path(manifest), std::ios::binary);
  if (!bin) throw InputError("cannot open checkpoint blob: " + blob_path(manifest).string());
  std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (blob.size() != blob_size) throw fail("blob size does not match manifest");

  auto fill = [&](const std::string& name, diff::Tensor& t) {
    auto it = entries.find(name);
    if (it == entries.end()) throw fail("missing tensor " + name);
    if (it->second.shape != t.shape()) throw fail("tensor " + name + " has unexpected shape");
    if (it->second.offset + 8 * it->second.count > blob.size()) throw fail("tensor " + name + " exceeds blob");
    read_le(blob, it->second.offset, t.data());
  };
  auto params = c.params.parameters();
  c.adam = [&] {
    AdamState s = AdamState::for_params(params);
    s.step = c.adam.step;
    s.beta1 = c.adam.beta1;
    s.beta2 = c.adam.beta2;
    s.epsilon = c.adam.epsilon;
    return s;
  }();
  for (std::size_t k = 0; k < params.size(); ++k) {
    fill("param." + params[k]->name, params[k]->value);
    fill("adam.m." + params[k]->name, c.adam.m[k]);
    fill("adam.v." + params[k]->name, c.adam.v[k]);
  }
  return c;
}

}  // namespace strae::train
