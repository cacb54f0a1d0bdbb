#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "strae/diffcore/tape.hpp"
#include "strae/diffcore/tensor.hpp"

namespace testing {

inline strae::diff::Tensor to_tensor(const oracle::Matrix& m) {
  std::vector<double> flat;
  for (const auto& r : m) flat.insert(flat.end(), r.begin(), r.end());
  return strae::diff::Tensor({m.size(), m.empty() ? 0 : m[0].size()}, std::move(flat));
}

inline strae::diff::Tensor random_tensor(strae::diff::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  strae::diff::Tensor t(shape);
  for (auto& x : t.data()) x = u(rng);
  return t;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("strae_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::string out;
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (!f) return out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

}  // namespace testing
