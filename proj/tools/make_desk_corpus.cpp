// Regenerates the bundled synthetic corpora under data/desk.
#include <filesystem>
#include <iostream>
#include <string>

#include "strae/desk/desk_corpus.hpp"
#include "strae/io/atomic_file.hpp"

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  strae::io::write_file_atomic(path, text);
}

void write_corpus(const std::filesystem::path& dir, const std::string& stem, const strae::desk::Corpus& c) {
  write_lines(dir / (stem + ".txt"), c.sentences);
  write_lines(dir / (stem + ".trees"), c.trees);
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path dir = argc > 1 ? argv[1] : "data/desk";
  std::filesystem::create_directories(dir);
  using namespace strae::desk;

  write_corpus(dir, "tiny", generate(tiny_grammar(), 64, 1));
  auto full = generate(full_grammar(), 10000, 2);
  write_corpus(dir, "full", full);
  write_corpus(dir, "full.dev", generate(full_grammar(), 1000, 3));

  auto task = word_similarity_task(full.sentences);
  std::string tsv;
  for (const auto& p : task.pairs) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", p.gold);
    tsv += p.first + "\t" + p.second + "\t" + buf + "\n";
  }
  strae::io::write_file_atomic(dir / "wordsim.tsv", tsv);
  std::cout << "wrote desk corpora to " << dir.string() << "\n";
  return 0;
}
