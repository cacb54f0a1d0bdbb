#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strae/diffcore/tape.hpp"

namespace strae::model {

using diff::Parameter;
using diff::Tensor;
using diff::Var;

enum class Architecture { strae, iornn };

std::string to_string(Architecture a);
Architecture parse_architecture(const std::string& text);

/// Learnable matrices. Every architecture owns the embedding matrix Psi
/// (V x N^2), shared between leaf embedding and leaf indexing, the
/// composition matrix Phi (2N x N) and the decomposition matrix Theta
/// (N x 2N). IORNN adds two per-child decomposition matrices (2N x N) and
/// a learned N x N global root.
struct ModelParams {
  Architecture architecture = Architecture::strae;
  std::size_t n = 0;
  std::size_t vocab_size = 0;

  Parameter embedding;
  Parameter composition;
  Parameter decomposition;
  Parameter decompose_left;
  Parameter decompose_right;
  Parameter global_root;

  /// Zero-valued parameters of the right shapes.
  static ModelParams zeros(Architecture architecture, std::size_t vocab_size, std::size_t n);

  std::size_t dim() const { return n * n; }

  /// Parameters that exist for this architecture, in a fixed order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  void zero_grad();
};

/// Tape handles for one forward pass.
struct BoundParams {
  Architecture architecture = Architecture::strae;
  std::size_t n = 0;
  std::size_t vocab_size = 0;
  Var embedding;
  Var composition;
  Var decomposition;
  Var decompose_left;
  Var decompose_right;
  Var global_root;

  diff::Tape& tape() const { return embedding.tape(); }
};

/// Watches every parameter so gradients flow back into `params`.
BoundParams bind(diff::Tape& tape, ModelParams& params);
/// Read-only binding for inference; no gradients are tracked.
BoundParams bind_frozen(diff::Tape& tape, const ModelParams& params);

}  // namespace strae::model
