#include "strae/cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <map>

#include "strae/corpus/bracketed.hpp"
#include "strae/error.hpp"
#include "strae/eval/embeddings_io.hpp"
#include "strae/eval/probe.hpp"
#include "strae/eval/report.hpp"
#include "strae/io/atomic_file.hpp"
#include "strae/trainer/trainer.hpp"

namespace strae::cli {

namespace fs = std::filesystem;

namespace {

struct Loaded {
  train::Checkpoint checkpoint;
  corpus::Vocabulary vocab;
};

Loaded load_model(const fs::path& manifest, const fs::path& vocab_override) {
  Loaded l{train::load_checkpoint(manifest), {}};
  fs::path vocab = vocab_override.empty() ? l.checkpoint.config.vocab : vocab_override;
  if (vocab.empty()) throw InputError(manifest.string() + ": no vocabulary path; pass --vocab");
  l.vocab = corpus::Vocabulary::load(vocab);
  if (l.vocab.size() != l.checkpoint.params.vocab_size)
    throw InputError(vocab.string() + ": " + std::to_string(l.vocab.size()) + " entries, checkpoint expects " +
                     std::to_string(l.checkpoint.params.vocab_size));
  return l;
}

model::StructureSource structure_for(const std::string& flag, const train::TrainConfig& config) {
  if (!flag.empty()) return model::parse_structure_source(flag);
  return config.structure_source;
}

std::string group_of(const train::TrainConfig& c) {
  return train::to_string(c.model) + "/" + objectives::to_string(c.objective) + "/" +
         model::to_string(c.structure_source);
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

void add_train_flags(CLI::App& cmd, std::map<std::string, std::string>& values, std::vector<std::string>& sets,
                     bool& intra, bool& no_lowercase) {
  const std::pair<const char*, const char*> flags[] = {
      {"objective", "cross_entropy | contrastive | degenerate"},
      {"model", "strae | iornn | self_strae"},
      {"structure", "tree_file | balanced | right_branching | induced"},
      {"n", "embedding side N (dimension N^2)"},
      {"lr", "learning rate (default 1e-3 for cross entropy, 1e-4 otherwise)"},
      {"batch-size", "sentences per batch"},
      {"epochs", "training epochs"},
      {"tau", "contrastive temperature"},
      {"r", "embedding initialisation range"},
      {"seed", "random seed"},
      {"vocab", "vocabulary file"},
      {"corpus", "training corpus"},
      {"dev-corpus", "development corpus"},
      {"tree-file", "bracketed trees aligned with the corpus"},
      {"dev-tree-file", "bracketed trees aligned with the dev corpus"},
      {"checkpoint-dir", "output directory"},
      {"max-length", "sentence length cap"},
      {"clip-norm", "global gradient-norm clip; 0 disables"},
  };
  for (const auto& [name, help] : flags) cmd.add_option(std::string("--") + name, values[name], help);
  cmd.add_option("--set", sets, "extra key=value config overrides");
  cmd.add_flag("--intra-view-negatives", intra, "add up-up and down-down negatives");
  cmd.add_flag("--no-lowercase", no_lowercase, "keep token case");
}

train::TrainConfig config_from_flags(const std::string& config_path, const std::map<std::string, std::string>& values,
                                     const std::vector<std::string>& sets, bool intra, bool no_lowercase,
                                     bool deterministic, std::size_t threads) {
  train::TrainConfig c = config_path.empty() ? train::TrainConfig{} : train::TrainConfig::load(config_path);
  for (const auto& [flag, value] : values) {
    if (value.empty()) continue;
    std::string key = flag == "structure" ? "structure_source" : flag;
    for (auto& ch : key)
      if (ch == '-') ch = '_';
    c.set(key, value);
  }
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (intra) c.intra_view_negatives = true;
  if (no_lowercase) c.lowercase = false;
  if (deterministic) c.deterministic = true;
  if (threads > 0) c.threads = threads;
  c.validate();
  return c;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tree-structured autoencoder toolkit", "strae"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  std::size_t threads = 0;
  bool deterministic = false;
  app.add_option("--threads", threads, "worker threads for evaluation")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", deterministic, "fixed reduction order (always on for training)");

  // build-vocab
  auto* vocab_cmd = app.add_subcommand("build-vocab", "build a vocabulary file from a corpus");
  std::string bv_corpus, bv_out;
  int bv_min_freq = 2;
  bool bv_no_lower = false;
  vocab_cmd->add_option("--corpus", bv_corpus, "one sentence per line")->required();
  vocab_cmd->add_option("--out", bv_out, "vocabulary file to write")->required();
  vocab_cmd->add_option("--min-freq", bv_min_freq, "keep tokens seen more than this many times");
  vocab_cmd->add_flag("--no-lowercase", bv_no_lower, "keep token case");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model; writes checkpoints and metrics.tsv");
  std::string tr_config, tr_resume;
  std::map<std::string, std::string> tr_values;
  std::vector<std::string> tr_sets;
  bool tr_intra = false, tr_no_lower = false, tr_quiet = false;
  train_cmd->add_option("--config", tr_config, "key = value config file; flags override it");
  train_cmd->add_option("--resume", tr_resume, "continue from a checkpoint manifest");
  train_cmd->add_flag("--quiet", tr_quiet, "no per-epoch progress");
  add_train_flags(*train_cmd, tr_values, tr_sets, tr_intra, tr_no_lower);

  // induce
  auto* induce_cmd = app.add_subcommand("induce", "write induced bracketed trees for a corpus");
  std::string in_ckpt, in_vocab, in_corpus, in_out;
  induce_cmd->add_option("--checkpoint", in_ckpt, "checkpoint manifest")->required();
  induce_cmd->add_option("--vocab", in_vocab, "vocabulary (default: the checkpoint's)");
  induce_cmd->add_option("--corpus", in_corpus, "one sentence per line")->required();
  induce_cmd->add_option("--out", in_out, "tree file to write")->required();

  // eval-sim
  auto* sim_cmd = app.add_subcommand("eval-sim", "Spearman rho on a word or sentence similarity task");
  std::string es_ckpt, es_vocab, es_emb, es_task, es_kind = "word", es_structure;
  sim_cmd->add_option("--checkpoint", es_ckpt, "checkpoint manifest");
  sim_cmd->add_option("--embeddings", es_emb, "exported word embeddings instead of a checkpoint");
  sim_cmd->add_option("--vocab", es_vocab, "vocabulary (default: the checkpoint's)");
  sim_cmd->add_option("--task", es_task, "TSV item1<TAB>item2<TAB>score")->required();
  sim_cmd->add_option("--kind", es_kind, "word | sentence");
  sim_cmd->add_option("--structure", es_structure, "structure for sentences (default: the checkpoint's)");

  // eval-probe
  auto* probe_cmd = app.add_subcommand("eval-probe", "frozen-embedding classification probe");
  std::string ep_ckpt, ep_vocab, ep_task, ep_structure;
  std::size_t ep_seeds = 5;
  probe_cmd->add_option("--checkpoint", ep_ckpt, "checkpoint manifest")->required();
  probe_cmd->add_option("--vocab", ep_vocab, "vocabulary (default: the checkpoint's)");
  probe_cmd->add_option("--task", ep_task, "split prefix; reads <task>.train/.dev/.test")->required();
  probe_cmd->add_option("--structure", ep_structure, "structure for sentences (default: the checkpoint's)");
  probe_cmd->add_option("--seeds", ep_seeds, "number of probe seeds")->check(CLI::PositiveNumber);

  // export-embeddings
  auto* export_cmd = app.add_subcommand("export-embeddings", "write word embeddings in text format");
  std::string ex_ckpt, ex_vocab, ex_out;
  export_cmd->add_option("--checkpoint", ex_ckpt, "checkpoint manifest")->required();
  export_cmd->add_option("--vocab", ex_vocab, "vocabulary (default: the checkpoint's)");
  export_cmd->add_option("--out", ex_out, "embedding file to write")->required();

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check; exit 0 iff all pass");
  std::string gc_model = "all", gc_objective = "all";
  std::size_t gc_n = 3, gc_v = 20, gc_len = 5;
  std::uint64_t gc_seed = 0;
  double gc_tol = 1e-4;
  grad_cmd->add_option("--model", gc_model, "strae | iornn | self_strae | all");
  grad_cmd->add_option("--objective", gc_objective, "cross_entropy | contrastive | degenerate | all");
  grad_cmd->add_option("--n", gc_n, "embedding side N")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--v", gc_v, "vocabulary size")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--length", gc_len, "sentence length")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", gc_seed, "random seed");
  grad_cmd->add_option("--tolerance", gc_tol, "maximum relative error");

  // report
  auto* report_cmd = app.add_subcommand("report", "evaluate checkpoints on task sets and aggregate");
  std::vector<std::string> rp_ckpts, rp_word, rp_sent, rp_probe;
  std::string rp_vocab, rp_json, rp_out, rp_structure;
  std::size_t rp_seeds = 5;
  report_cmd->add_option("--checkpoint", rp_ckpts, "checkpoint manifests")->required();
  report_cmd->add_option("--vocab", rp_vocab, "vocabulary (default: each checkpoint's)");
  report_cmd->add_option("--word-task", rp_word, "word similarity TSV files");
  report_cmd->add_option("--sentence-task", rp_sent, "sentence similarity TSV files");
  report_cmd->add_option("--probe-task", rp_probe, "probe task prefixes");
  report_cmd->add_option("--structure", rp_structure, "structure for sentences (default: each checkpoint's)");
  report_cmd->add_option("--probe-seeds", rp_seeds, "probe seeds per task")->check(CLI::PositiveNumber);
  report_cmd->add_option("--json", rp_json, "also write the report as JSON");
  report_cmd->add_option("--out", rp_out, "write the text report to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const std::size_t eval_threads = threads == 0 ? 1 : threads;
  try {
    if (*vocab_cmd) {
      auto v = corpus::build_vocabulary(bv_corpus, bv_min_freq, {!bv_no_lower});
      v.save(bv_out);
      out << "wrote " << bv_out << " (V=" << v.size() << ")\n";
    } else if (*train_cmd) {
      std::unique_ptr<train::Trainer> trainer;
      if (!tr_resume.empty()) {
        trainer = std::make_unique<train::Trainer>(train::Trainer::resume(tr_resume, &err));
      } else {
        auto config = config_from_flags(tr_config, tr_values, tr_sets, tr_intra, tr_no_lower, deterministic, threads);
        if (config.checkpoint_dir.empty()) throw InputError("train: --checkpoint-dir is required");
        trainer = std::make_unique<train::Trainer>(train::Trainer::from_config(config, &err));
      }
      auto result = trainer->run(tr_quiet ? nullptr : &out);
      out << "best epoch " << result.best_epoch << "; final checkpoint " << result.final_checkpoint.string() << "\n";
    } else if (*induce_cmd) {
      auto m = load_model(in_ckpt, in_vocab);
      corpus::TokenizerOptions options{m.checkpoint.config.lowercase};
      auto lines = corpus::read_corpus(in_corpus, options);
      std::string text;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) {
          text += "\n";
          continue;
        }
        auto ids = corpus::encode_sentence(lines[i], m.vocab, options);
        diff::Tape tape;
        auto bound = model::bind_frozen(tape, m.checkpoint.params);
        auto induced = model::induce_structure(bound, ids);
        text += corpus::to_bracketed(induced.tree, lines[i]) + "\n";
      }
      io::write_file_atomic(in_out, text);
      out << "wrote " << in_out << "\n";
    } else if (*sim_cmd) {
      auto kind = eval::parse_task_kind(es_kind);
      auto task = eval::load_similarity_task(es_task, kind);
      double rho = 0.0;
      if (!es_emb.empty()) {
        if (kind != eval::TaskKind::word) throw InputError("eval-sim: --embeddings supports word tasks only");
        auto table = eval::EmbeddingTable::load(es_emb);
        rho = eval::eval_similarity(task, eval::table_embedder(table), eval_threads);
      } else {
        if (es_ckpt.empty()) throw InputError("eval-sim: pass --checkpoint or --embeddings");
        auto m = load_model(es_ckpt, es_vocab);
        auto embed = eval::model_embedder(m.checkpoint.params, m.vocab, kind,
                                          structure_for(es_structure, m.checkpoint.config),
                                          m.checkpoint.config.lowercase);
        rho = eval::eval_similarity(task, embed, eval_threads);
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", rho);
      out << task.name << "\tspearman\t" << buf << "\n";
    } else if (*probe_cmd) {
      auto m = load_model(ep_ckpt, ep_vocab);
      auto task = eval::load_probe_task(ep_task);
      auto embed = eval::model_embedder(m.checkpoint.params, m.vocab, eval::TaskKind::sentence,
                                        structure_for(ep_structure, m.checkpoint.config),
                                        m.checkpoint.config.lowercase);
      std::vector<std::uint64_t> seeds(ep_seeds);
      for (std::size_t i = 0; i < ep_seeds; ++i) seeds[i] = i;
      eval::ProbeOptions options;
      options.threads = eval_threads;
      auto r = eval::train_probe(task, embed, seeds, options);
      out << task.name << "\taccuracy\t" << fixed(100.0 * r.mean, 2) << " +- " << fixed(100.0 * r.stddev, 2) << "\n";
    } else if (*export_cmd) {
      auto m = load_model(ex_ckpt, ex_vocab);
      auto table = eval::word_table(m.checkpoint.params, m.vocab);
      table.save(ex_out);
      out << "wrote " << ex_out << " (" << table.size() << " x " << table.dim() << ")\n";
    } else if (*grad_cmd) {
      std::vector<train::ModelKind> models;
      std::vector<objectives::Objective> objs;
      if (gc_model == "all")
        models = {train::ModelKind::strae, train::ModelKind::iornn, train::ModelKind::self_strae};
      else
        models = {train::parse_model_kind(gc_model)};
      if (gc_objective == "all")
        objs = {objectives::Objective::cross_entropy, objectives::Objective::contrastive,
                objectives::Objective::degenerate};
      else
        objs = {objectives::parse_objective(gc_objective)};
      bool ok = true;
      for (auto mk : models)
        for (auto ob : objs) {
          train::TrainConfig c;
          c.model = mk;
          c.objective = ob;
          c.n = gc_n;
          c.seed = gc_seed;
          c.structure_source =
              mk == train::ModelKind::self_strae ? model::StructureSource::induced : model::StructureSource::balanced;
          auto r = train::check_model_gradients(c, gc_v, gc_len);
          bool pass = r.max_relative_error < gc_tol;
          ok = ok && pass;
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.3e", r.max_relative_error);
          out << train::to_string(mk) << "\t" << objectives::to_string(ob) << "\tmax_rel_error " << buf << "\t"
              << (pass ? "pass" : "FAIL") << "\n";
        }
      return ok ? 0 : 1;
    } else if (*report_cmd) {
      if (rp_word.empty() && rp_sent.empty() && rp_probe.empty())
        throw InputError("report: pass at least one --word-task, --sentence-task or --probe-task");
      std::vector<eval::SimilarityTask> word_tasks, sent_tasks;
      std::vector<eval::ProbeTask> probe_tasks;
      for (const auto& f : rp_word) word_tasks.push_back(eval::load_similarity_task(f, eval::TaskKind::word));
      for (const auto& f : rp_sent) sent_tasks.push_back(eval::load_similarity_task(f, eval::TaskKind::sentence));
      for (const auto& f : rp_probe) probe_tasks.push_back(eval::load_probe_task(f));
      std::vector<std::uint64_t> seeds(rp_seeds);
      for (std::size_t i = 0; i < rp_seeds; ++i) seeds[i] = i;

      std::vector<eval::ReportRow> rows;
      for (const auto& ck : rp_ckpts) {
        auto m = load_model(ck, rp_vocab);
        const auto& cfg = m.checkpoint.config;
        auto structure = structure_for(rp_structure, cfg);
        std::vector<eval::TaskResult> results;
        auto words = eval::model_embedder(m.checkpoint.params, m.vocab, eval::TaskKind::word, structure, cfg.lowercase);
        auto sents =
            eval::model_embedder(m.checkpoint.params, m.vocab, eval::TaskKind::sentence, structure, cfg.lowercase);
        for (const auto& t : word_tasks)
          results.push_back({t.name, eval::Metric::spearman, eval::eval_similarity(t, words, eval_threads), 0.0});
        for (const auto& t : sent_tasks)
          results.push_back({t.name, eval::Metric::spearman, eval::eval_similarity(t, sents, eval_threads), 0.0});
        eval::ProbeOptions options;
        options.threads = eval_threads;
        for (const auto& t : probe_tasks) {
          auto r = eval::train_probe(t, sents, seeds, options);
          results.push_back({t.name, eval::Metric::accuracy, r.mean, r.stddev});
        }
        rows.push_back(eval::make_row(ck, group_of(cfg), cfg.seed, std::move(results)));
      }
      std::string text = eval::render_text(rows);
      if (!rp_out.empty()) io::write_file_atomic(rp_out, text);
      if (!rp_json.empty()) io::write_file_atomic(rp_json, eval::render_json(rows));
      out << text;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace strae::cli
