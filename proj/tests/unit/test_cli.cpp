#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "strae/cli/cli.hpp"
#include "strae/corpus/bracketed.hpp"
#include "strae/trainer/checkpoint.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData = STRAE_DATA_DIR;

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

Result strae_run(std::vector<std::string> args) {
  args.insert(args.begin(), "strae");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Result r;
  r.status = strae::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string last_field(const std::string& line) { return line.substr(line.rfind('\t') + 1); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("gradcheck passes for the default sizes") {
    auto r = strae_run({"gradcheck", "--model", "strae", "--objective", "contrastive", "--n", "3", "--v", "20"});
    CHECK(r.status == 0);
    CHECK(r.out.find("max_rel_error") != std::string::npos);
    CHECK(r.out.find("pass") != std::string::npos);
  }

  TEST_CASE("unknown flags print usage and fail") {
    auto r = strae_run({"build-vocab", "--corpus", "x", "--out", "y", "--bogus"});
    CHECK(r.status != 0);
    CHECK((r.out + r.err).find("Usage") != std::string::npos);
    auto none = strae_run({});
    CHECK(none.status != 0);
  }

  TEST_CASE("file errors name the path") {
    auto r = strae_run({"build-vocab", "--corpus", "/nonexistent/corpus.txt", "--out", "/tmp/v.tsv"});
    CHECK(r.status == 1);
    CHECK(r.err.find("/nonexistent/corpus.txt") != std::string::npos);
  }

  TEST_CASE("vocab, train, induce, export and evaluate") {
    auto dir = testing::temp_dir("cli_pipeline");
    auto corpus = (kData / "desk" / "tiny.txt").string();
    auto vocab = (dir / "vocab.tsv").string();
    REQUIRE(strae_run({"build-vocab", "--corpus", corpus, "--out", vocab, "--min-freq", "0"}).status == 0);

    auto ckdir = (dir / "run").string();
    auto tr = strae_run({"train", "--model", "self_strae", "--structure", "induced", "--objective", "contrastive",
                         "--n", "3", "--epochs", "2", "--batch-size", "16", "--vocab", vocab, "--corpus", corpus,
                         "--checkpoint-dir", ckdir});
    REQUIRE(tr.status == 0);
    CHECK(tr.out.find("epoch 2 train") != std::string::npos);
    auto ckpt = (dir / "run" / "final.ckpt").string();
    REQUIRE(fs::exists(ckpt));

    auto trees = (dir / "induced.trees").string();
    REQUIRE(strae_run({"induce", "--checkpoint", ckpt, "--vocab", vocab, "--corpus", corpus, "--out", trees}).status ==
            0);
    auto parsed = strae::corpus::read_tree_file(trees);
    CHECK(parsed.size() == 64);
    CHECK(parsed[0].tree.is_binary());

    testing::write_text(dir / "pairs.tsv", "fox\tdog\t3\nroad\tcity\t2\nfox\tcity\t0.5\nhouse\tleaves\t1\n");
    auto task = (dir / "pairs.tsv").string();
    auto direct = strae_run({"eval-sim", "--checkpoint", ckpt, "--vocab", vocab, "--task", task});
    REQUIRE(direct.status == 0);
    auto emb = (dir / "emb.txt").string();
    REQUIRE(strae_run({"export-embeddings", "--checkpoint", ckpt, "--vocab", vocab, "--out", emb}).status == 0);
    auto imported = strae_run({"eval-sim", "--embeddings", emb, "--task", task});
    REQUIRE(imported.status == 0);
    double a = std::stod(last_field(direct.out));
    double b = std::stod(last_field(imported.out));
    CHECK(std::abs(a - b) < 1e-12);

    auto rep = strae_run({"report", "--checkpoint", ckpt, "--vocab", vocab, "--word-task", task, "--json",
                          (dir / "r.json").string()});
    CHECK(rep.status == 0);
    CHECK(rep.out.find("self_strae/contrastive/induced") != std::string::npos);
    CHECK(fs::exists(dir / "r.json"));
  }

  TEST_CASE("right-branching training on the desk corpus logs dev loss per epoch") {
    auto dir = testing::temp_dir("cli_rb");
    auto vocab = (dir / "vocab.tsv").string();
    auto dev = (kData / "desk" / "full.dev.txt").string();
    REQUIRE(strae_run({"build-vocab", "--corpus", dev, "--out", vocab}).status == 0);
    auto r = strae_run({"train", "--structure", "right_branching", "--n", "3", "--epochs", "2", "--batch-size",
                        "32", "--vocab", vocab, "--corpus", dev, "--dev-corpus", dev, "--checkpoint-dir",
                        (dir / "run").string(), "--set", "max_length=24"});
    REQUIRE(r.status == 0);
    auto metrics = testing::read_text(dir / "run" / "metrics.tsv");
    CHECK(metrics.find("1\t0\tdev\t") != std::string::npos);
    CHECK(metrics.find("2\t0\tdev\t") != std::string::npos);
  }

  TEST_CASE("config file plus flag overrides") {
    auto dir = testing::temp_dir("cli_cfg");
    auto corpus = (kData / "desk" / "tiny.txt").string();
    auto vocab = (dir / "vocab.tsv").string();
    REQUIRE(strae_run({"build-vocab", "--corpus", corpus, "--out", vocab, "--min-freq", "0"}).status == 0);
    testing::write_text(dir / "run.cfg", "objective = cross_entropy\nn = 2\nepochs = 1\nbatch_size = 64\n");
    auto r = strae_run({"train", "--config", (dir / "run.cfg").string(), "--epochs", "2", "--vocab", vocab,
                        "--corpus", corpus, "--checkpoint-dir", (dir / "run").string(), "--quiet"});
    REQUIRE(r.status == 0);
    auto ck = strae::train::load_checkpoint(dir / "run" / "final.ckpt");
    CHECK(ck.config.n == 2);
    CHECK(ck.config.epochs == 2);
    CHECK(ck.config.objective == strae::objectives::Objective::cross_entropy);
  }
}
