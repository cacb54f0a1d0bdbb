#include "strae/model/params.hpp"

#include "strae/error.hpp"

namespace strae::model {

std::string to_string(Architecture a) { return a == Architecture::strae ? "strae" : "iornn"; }

Architecture parse_architecture(const std::string& text) {
  if (text == "strae") return Architecture::strae;
  if (text == "iornn") return Architecture::iornn;
  throw InputError("unknown architecture: " + text);
}

ModelParams ModelParams::zeros(Architecture architecture, std::size_t vocab_size, std::size_t n) {
  if (n == 0) throw ContractError("embedding side length N must be at least 1");
  if (vocab_size == 0) throw ContractError("vocabulary size must be at least 1");
  ModelParams p;
  p.architecture = architecture;
  p.n = n;
  p.vocab_size = vocab_size;
  p.embedding = Parameter("embedding", Tensor({vocab_size, n * n}));
  p.composition = Parameter("composition", Tensor({2 * n, n}));
  p.decomposition = Parameter("decomposition", Tensor({n, 2 * n}));
  if (architecture == Architecture::iornn) {
    p.decompose_left = Parameter("decompose_left", Tensor({2 * n, n}));
    p.decompose_right = Parameter("decompose_right", Tensor({2 * n, n}));
    p.global_root = Parameter("global_root", Tensor({n, n}));
  }
  return p;
}

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out{&embedding, &composition, &decomposition};
  if (architecture == Architecture::iornn) {
    out.insert(out.end(), {&decompose_left, &decompose_right, &global_root});
  }
  return out;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  std::vector<const Parameter*> out{&embedding, &composition, &decomposition};
  if (architecture == Architecture::iornn) {
    out.insert(out.end(), {&decompose_left, &decompose_right, &global_root});
  }
  return out;
}

void ModelParams::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

BoundParams bind(diff::Tape& tape, ModelParams& params) {
  BoundParams b;
  b.architecture = params.architecture;
  b.n = params.n;
  b.vocab_size = params.vocab_size;
  b.embedding = tape.watch(params.embedding);
  b.composition = tape.watch(params.composition);
  b.decomposition = tape.watch(params.decomposition);
  if (params.architecture == Architecture::iornn) {
    b.decompose_left = tape.watch(params.decompose_left);
    b.decompose_right = tape.watch(params.decompose_right);
    b.global_root = tape.watch(params.global_root);
  }
  return b;
}

BoundParams bind_frozen(diff::Tape& tape, const ModelParams& params) {
  BoundParams b;
  b.architecture = params.architecture;
  b.n = params.n;
  b.vocab_size = params.vocab_size;
  b.embedding = tape.reference(params.embedding.value);
  b.composition = tape.reference(params.composition.value);
  b.decomposition = tape.reference(params.decomposition.value);
  if (params.architecture == Architecture::iornn) {
    b.decompose_left = tape.reference(params.decompose_left.value);
    b.decompose_right = tape.reference(params.decompose_right.value);
    b.global_root = tape.reference(params.global_root.value);
  }
  return b;
}

}  // namespace strae::model
