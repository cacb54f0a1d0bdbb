#include "strae/trainer/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "strae/error.hpp"
#include "strae/io/atomic_file.hpp"

namespace strae::train {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    auto u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::strae:
      return "strae";
    case ModelKind::iornn:
      return "iornn";
    case ModelKind::self_strae:
      return "self_strae";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "strae") return ModelKind::strae;
  if (text == "iornn") return ModelKind::iornn;
  if (text == "self_strae") return ModelKind::self_strae;
  throw InputError("unknown model: " + text);
}

model::Architecture architecture_of(ModelKind m) {
  return m == ModelKind::iornn ? model::Architecture::iornn : model::Architecture::strae;
}

double TrainConfig::learning_rate() const {
  if (lr) return *lr;
  return objective == objectives::Objective::cross_entropy ? 1e-3 : 1e-4;
}

void TrainConfig::validate() const {
  const bool induced = structure_source == model::StructureSource::induced;
  if ((model == ModelKind::self_strae) != induced) {
    throw InputError("model self_strae requires structure_source induced and vice versa");
  }
  if (n == 0) throw InputError("n must be at least 1");
  if (batch_size == 0) throw InputError("batch_size must be at least 1");
  if (!(tau > 0.0)) throw InputError("tau must be positive");
  if (!(r > 0.0)) throw InputError("r must be positive");
  if (learning_rate() < 0.0) throw InputError("lr must be non-negative");
  if (max_length == 0) throw InputError("max_length must be at least 1");
  if (clip_norm < 0.0) throw InputError("clip_norm must be non-negative");
  if (structure_source == model::StructureSource::given && tree_file.empty()) {
    throw InputError("structure_source tree_file requires tree_file");
  }
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "objective") objective = objectives::parse_objective(value);
  else if (key == "model") model = parse_model_kind(value);
  else if (key == "structure_source") structure_source = model::parse_structure_source(value);
  else if (key == "n") n = parse_uint(key, value);
  else if (key == "lr") lr = value.empty() || value == "default" ? std::nullopt : std::optional(parse_real(key, value));
  else if (key == "batch_size") batch_size = parse_uint(key, value);
  else if (key == "epochs") epochs = parse_uint(key, value);
  else if (key == "tau") tau = parse_real(key, value);
  else if (key == "r") r = parse_real(key, value);
  else if (key == "seed") seed = parse_uint(key, value);
  else if (key == "vocab") vocab = value;
  else if (key == "corpus") corpus = value;
  else if (key == "dev_corpus") dev_corpus = value;
  else if (key == "tree_file") tree_file = value;
  else if (key == "dev_tree_file") dev_tree_file = value;
  else if (key == "checkpoint_dir") checkpoint_dir = value;
  else if (key == "deterministic") deterministic = parse_bool(key, value);
  else if (key == "lowercase") lowercase = parse_bool(key, value);
  else if (key == "intra_view_negatives") intra_view_negatives = parse_bool(key, value);
  else if (key == "max_length") max_length = parse_uint(key, value);
  else if (key == "clip_norm") clip_norm = parse_real(key, value);
  else if (key == "threads") threads = parse_uint(key, value);
  else throw InputError("unknown config key: " + key);
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "objective = " << objectives::to_string(objective) << '\n'
      << "model = " << to_string(model) << '\n'
      << "structure_source = " << model::to_string(structure_source) << '\n'
      << "n = " << n << '\n'
      << "lr = " << (lr ? format_double(*lr) : std::string("default")) << '\n'
      << "batch_size = " << batch_size << '\n'
      << "epochs = " << epochs << '\n'
      << "tau = " << format_double(tau) << '\n'
      << "r = " << format_double(r) << '\n'
      << "seed = " << seed << '\n'
      << "vocab = " << vocab.string() << '\n'
      << "corpus = " << corpus.string() << '\n'
      << "dev_corpus = " << dev_corpus.string() << '\n'
      << "tree_file = " << tree_file.string() << '\n'
      << "dev_tree_file = " << dev_tree_file.string() << '\n'
      << "checkpoint_dir = " << checkpoint_dir.string() << '\n'
      << "deterministic = " << (deterministic ? "true" : "false") << '\n'
      << "lowercase = " << (lowercase ? "true" : "false") << '\n'
      << "intra_view_negatives = " << (intra_view_negatives ? "true" : "false") << '\n'
      << "max_length = " << max_length << '\n'
      << "clip_norm = " << format_double(clip_norm) << '\n'
      << "threads = " << threads << '\n';
  return out.str();
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    c.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_text(ss.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void TrainConfig::save(const std::filesystem::path& path) const { io::write_file_atomic(path, to_text()); }

}  // namespace strae::train
