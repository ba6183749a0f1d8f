// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: vocabulary building, training, translation,
// scoring, BLEU, gradient checking and embedding export.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include "CLI11.hpp"

#include "dcnmt/checkpoint.hpp"
#include "dcnmt/evaluation.hpp"
#include "dcnmt/generation.hpp"
#include "dcnmt/model.hpp"
#include "dcnmt/training.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace dcnmt;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DCNMT_SEED")) return std::strtoull(env, nullptr, 10);
  return 1;
}

std::vector<std::pair<std::string, std::string>> read_pairs(const std::string& src_path,
                                                            const std::string& tgt_path) {
  std::vector<std::string> src = read_lines(src_path);
  std::vector<std::string> tgt = read_lines(tgt_path);
  if (src.size() != tgt.size())
    throw DataError("corpus line counts differ: " + src_path + " has " +
                    std::to_string(src.size()) + " lines, " + tgt_path + " has " +
                    std::to_string(tgt.size()));
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    pairs.emplace_back(std::move(src[i]), std::move(tgt[i]));
  return pairs;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw DataError("cannot open output file: " + path);
  return file;
}

// --- configuration files --------------------------------------------------

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Loads the flat key=value file named by --config (if any) and appends the
// keys not already given on the command line as subcommand flags, so the
// precedence is flags > config > defaults. Returns 0 to continue, or the
// process exit code after printing a one-line diagnostic.
int merge_config_args(CLI::App& app, std::vector<std::string>& args) {
  if (args.empty()) return 0;
  CLI::App* sc = nullptr;
  for (CLI::App* cand : app.get_subcommands(nullptr))
    if (cand->get_name() == args[0]) sc = cand;
  if (!sc) return 0;  // unknown subcommand; the parser reports it

  std::string path;
  for (std::size_t i = 1; i < args.size() && path.empty(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return 0;  // not given, or missing its value (parser reports it)

  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open config file: " << path << "\n";
    return 2;
  }

  const std::vector<std::string> given = args;
  auto on_command_line = [&](const std::string& flag) {
    for (const std::string& a : given)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::cerr << path << ":" << lineno << ": expected key=value\n";
      return 1;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::string flag = "--" + key;
    if (key.empty() || key == "config" || sc->get_option_no_throw(flag) == nullptr) {
      std::cerr << path << ":" << lineno << ": unknown configuration key: " << key << "\n";
      return 1;
    }
    if (!on_command_line(flag)) args.push_back(flag + "=" + value);
  }
  return 0;
}

// --- grad-check subcommand ----------------------------------------------------

struct CheckResult {
  std::string name;
  double worst;
};

CheckResult check_component(const std::string& name, const std::function<Value(Tape&)>& loss,
                            std::span<Parameter* const> params, double eps, double tol,
                            std::uint64_t seed) {
  GradCheckReport report = grad_check(loss, params, eps, tol, seed);
  return {name, report.worst_rel_err};
}

std::vector<CheckResult> standard_grad_checks(std::size_t hidden, std::size_t embed, double eps,
                                              double tol, std::uint64_t seed) {
  std::vector<CheckResult> results;
  std::mt19937_64 rng(seed);

  {
    GruParams cell("dgru", embed, hidden, true, rng);
    Parameter h0("h0", uniform_init(hidden, 1, 0.5, rng));
    Parameter x1("x1", uniform_init(embed, 2, 0.5, rng));
    Parameter x2("x2", uniform_init(embed, 2, 0.5, rng));
    std::vector<Parameter*> params;
    cell.collect(params);
    params.push_back(&h0);
    params.push_back(&x1);
    params.push_back(&x2);
    auto loss = [&](Tape& t) {
      Value h0b = broadcast_column(t.leaf(h0), 2);
      double a1[] = {0.0, 1.0}, a2[] = {1.0, 0.0};
      Value h = dgru_step(cell, t.leaf(x1), h0b, a1, h0b);
      h = dgru_step(cell, t.leaf(x2), h, a2, h0b);
      return sum_all(h);
    };
    results.push_back(check_component("dgru", loss, params, eps, tol, seed));
  }

  {
    GruParams cell("enc_gru", embed, hidden, true, rng);
    Parameter h0("h0", uniform_init(hidden, 1, 0.5, rng));
    Parameter x1("x1", uniform_init(embed, 2, 0.5, rng));
    Parameter x2("x2", uniform_init(embed, 2, 0.5, rng));
    std::vector<Parameter*> params;
    cell.collect(params);
    params.push_back(&h0);
    params.push_back(&x1);
    params.push_back(&x2);
    auto loss = [&](Tape& t) {
      Value h = broadcast_column(t.leaf(h0), 2);
      h = gru_core(cell, t.leaf(x1), h);
      h = gru_core(cell, t.leaf(x2), h);
      return sum_all(h);
    };
    results.push_back(check_component("encoder_gru", loss, params, eps, tol, seed));
  }

  {
    std::size_t ann_dim = 2 * hidden;
    AttentionParams att("att", hidden, ann_dim, hidden, rng);
    Parameter s("s", uniform_init(hidden, 2, 0.5, rng));
    Parameter a1("a1", uniform_init(ann_dim, 2, 0.5, rng));
    Parameter a2("a2", uniform_init(ann_dim, 2, 0.5, rng));
    std::vector<Parameter*> params;
    att.collect(params);
    params.push_back(&s);
    params.push_back(&a1);
    params.push_back(&a2);
    std::vector<std::vector<double>> masks(2, std::vector<double>(2, 1.0));
    auto loss = [&](Tape& t) {
      Annotations ann;
      ann.rows = {t.leaf(a1), t.leaf(a2)};
      return sum_all(attend(t.leaf(s), ann, masks, att).context);
    };
    results.push_back(check_component("attention", loss, params, eps, tol, seed));
  }

  {
    std::size_t ann_dim = 2 * hidden;
    DecoderParams dec("dec", hidden, ann_dim, hidden, hidden, hidden, 1, true, rng);
    Parameter a1("a1", uniform_init(ann_dim, 2, 0.5, rng));
    Parameter a2("a2", uniform_init(ann_dim, 2, 0.5, rng));
    Parameter fb("fb", uniform_init(hidden, 2, 0.5, rng));
    std::vector<Parameter*> params;
    dec.collect(params);
    params.push_back(&a1);
    params.push_back(&a2);
    params.push_back(&fb);
    std::vector<std::vector<double>> masks(2, std::vector<double>(2, 1.0));
    auto loss = [&](Tape& t) {
      Annotations ann;
      ann.rows = {t.leaf(a1), t.leaf(a2)};
      ann.bwd_rows = {slice_rows(t.leaf(a1), hidden, hidden),
                      slice_rows(t.leaf(a2), hidden, hidden)};
      std::vector<Value> s = decoder_init(t, ann, dec);
      DecoderStepResult r1 = decoder_step(t.leaf(fb), s, ann, masks, dec);
      DecoderStepResult r2 = decoder_step(t.leaf(fb), r1.s, ann, masks, dec);
      return sum_all(add(r1.d, r2.d));
    };
    results.push_back(check_component("decoder_step", loss, params, eps, tol, seed));
  }

  {
    GruParams cell("igru", embed, hidden, true, rng);
    Parameter d1("d1", uniform_init(hidden, 2, 0.5, rng));
    Parameter d2("d2", uniform_init(hidden, 2, 0.5, rng));
    Parameter x1("x1", uniform_init(embed, 2, 0.5, rng));
    Parameter x2("x2", uniform_init(embed, 2, 0.5, rng));
    std::vector<Parameter*> params;
    cell.collect(params);
    params.push_back(&d1);
    params.push_back(&d2);
    params.push_back(&x1);
    params.push_back(&x2);
    auto loss = [&](Tape& t) {
      double a1[] = {1.0, 1.0}, a2[] = {0.0, 1.0};
      Value h = t.constant(Tensor(hidden, 2));
      h = igru_step(cell, t.leaf(x1), h, a1, t.leaf(d1));
      h = igru_step(cell, t.leaf(x2), h, a2, t.leaf(d2));
      return sum_all(h);
    };
    results.push_back(check_component("igru", loss, params, eps, tol, seed));
  }

  {
    std::vector<std::string> corpus = {"abc ab", "cba ba", "bac ca"};
    CharVocab vocab = build_vocab(corpus, 8);
    ModelConfig cfg;
    cfg.embed_dim = embed;
    cfg.dgru_hidden = hidden;
    cfg.enc_hidden = hidden;
    cfg.dec_hidden = hidden;
    cfg.igru_hidden = hidden;
    cfg.att_dim = hidden;
    cfg.seed = seed;
    Model model(cfg, vocab, vocab);
    EncodedSequence src = encode("abc ab", model.src_vocab);
    EncodedSequence tgt = encode_target("cba ba", model.tgt_vocab);
    Batch sb = make_batch(std::span<const EncodedSequence>(&src, 1), model.src_vocab);
    Batch tb = make_batch(std::span<const EncodedSequence>(&tgt, 1), model.tgt_vocab);
    auto loss = [&](Tape& t) { return batch_loss(t, model, sb, tb).loss_sum; };
    results.push_back(check_component("end_to_end", loss, model.params, eps, tol, seed));
  }

  return results;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"character-level neural machine translation with word-summary decimation"};
  app.require_subcommand(1);

  // build-vocab
  auto* sc_vocab = app.add_subcommand("build-vocab", "Build a character vocabulary from corpora");
  std::vector<std::string> vocab_corpora;
  std::string vocab_out;
  std::size_t max_chars = 120;
  sc_vocab->add_option("--corpus", vocab_corpora, "Corpus files, one sentence per line")
      ->required();
  sc_vocab->add_option("--out", vocab_out, "Output vocabulary file")->required();
  sc_vocab->add_option("--max-chars", max_chars, "Regular characters to keep (default 120)");

  // train
  auto* sc_train = app.add_subcommand("train", "Train a model on a parallel corpus");
  std::string train_src, train_tgt, train_src_vocab, train_tgt_vocab, train_out, train_resume;
  std::string loss_log;
  ModelConfig mc;
  TrainConfig tc;
  std::uint64_t train_seed = default_seed();
  std::size_t threads = 1;
  bool no_bias = false;
  sc_train->add_option("--src", train_src, "Source corpus")->required();
  sc_train->add_option("--tgt", train_tgt, "Target corpus")->required();
  sc_train->add_option("--src-vocab", train_src_vocab, "Source vocabulary file")->required();
  sc_train->add_option("--tgt-vocab", train_tgt_vocab, "Target vocabulary file")->required();
  sc_train->add_option("--out", train_out, "Checkpoint output path")->required();
  sc_train->add_option("--resume", train_resume, "Resume from an existing checkpoint");
  sc_train->add_option("--hidden", mc.enc_hidden,
                       "Encoder/decoder/interpolator hidden size (default 64; 1024 at full scale)");
  sc_train->add_option("--embed", mc.embed_dim, "Character embedding size (default 64)");
  sc_train->add_option("--dgru-hidden", mc.dgru_hidden,
                       "Decimator hidden size (default 64; 512 at full scale)");
  sc_train->add_option("--layers", mc.layers, "Recurrent depth, 1 or 2 (default 1)")
      ->check(CLI::Range(std::size_t{1}, std::size_t{2}));
  sc_train->add_flag("--no-bias", no_bias, "Drop bias terms (literal update equations)");
  sc_train->add_option("--batch", tc.batch_size, "Mini-batch size (default 80)");
  sc_train->add_option("--sort-window", tc.sort_window,
                       "Batches per length-sorted shuffle window (default 20)");
  sc_train->add_option("--max-words", tc.max_words, "Filter pairs longer than this (default 50)");
  sc_train->add_option("--epochs", tc.epochs, "Training epochs (default 1)");
  sc_train->add_option("--rho", tc.rho, "Adadelta decay rate (default 0.95)");
  sc_train->add_option("--eps", tc.eps, "Adadelta epsilon (default 1e-6)");
  sc_train->add_option("--clip", tc.clip_norm, "Global gradient-norm clip (default 1.0)");
  sc_train->add_option("--grad-scale", tc.grad_scale,
                       "Objective scale applied to gradients after clipping (default 1)");
  sc_train->add_option("--seed", train_seed, "RNG seed (env DCNMT_SEED, then 1)");
  sc_train->add_option("--loss-log", loss_log, "CSV loss log path");
  sc_train->add_option("--checkpoint-interval", tc.checkpoint_interval,
                       "Updates between checkpoints (0 = only at the end)");
  sc_train->add_option("--threads", threads, "Worker threads (default 1; execution is serial)")
      ->check(CLI::PositiveNumber);

  // translate
  auto* sc_translate = app.add_subcommand("translate", "Translate sentences with beam search");
  std::string tr_model, tr_input, tr_output;
  std::size_t beam = 12, tr_max_chars = 0;
  bool tr_scores = false, tr_length_norm = false;
  sc_translate->add_option("--model", tr_model, "Checkpoint file")->required();
  sc_translate->add_option("--input", tr_input, "Input file, one sentence per line")->required();
  sc_translate->add_option("--output", tr_output, "Output file (default stdout)");
  sc_translate->add_option("--beam", beam, "Beam width (default 12)")->check(CLI::PositiveNumber);
  sc_translate->add_option("--max-chars", tr_max_chars,
                           "Generation cap (default 6*source length+20)");
  sc_translate->add_flag("--scores", tr_scores, "Append a tab-separated log-probability column");
  sc_translate->add_flag("--length-norm", tr_length_norm,
                         "Pick the final hypothesis by length-normalized log-probability");

  // score
  auto* sc_score = app.add_subcommand("score", "Teacher-forced log-probabilities of pairs");
  std::string score_model, score_src, score_tgt, score_out;
  sc_score->add_option("--model", score_model, "Checkpoint file")->required();
  sc_score->add_option("--src", score_src, "Source file")->required();
  sc_score->add_option("--tgt", score_tgt, "Target file")->required();
  sc_score->add_option("--output", score_out, "Output file (default stdout)");

  // bleu
  auto* sc_bleu = app.add_subcommand("bleu", "Corpus BLEU of a hypothesis file");
  std::string bleu_hyp, bleu_ref;
  int bleu_max_n = 4;
  bool bleu_smooth = false;
  sc_bleu->add_option("--hyp", bleu_hyp, "Hypothesis file")->required();
  sc_bleu->add_option("--ref", bleu_ref, "Reference file")->required();
  sc_bleu->add_option("--max-n", bleu_max_n, "Longest n-gram order (default 4)")
      ->check(CLI::PositiveNumber);
  sc_bleu->add_flag("--smooth", bleu_smooth, "Add-one smoothing for tiny corpora");

  // grad-check
  auto* sc_grad = app.add_subcommand("grad-check",
                                     "Verify analytic gradients against finite differences");
  std::size_t gc_hidden = 16, gc_embed = 8;
  double gc_eps = 1e-5, gc_tol = 1e-4;
  std::uint64_t gc_seed = default_seed();
  sc_grad->add_option("--hidden", gc_hidden, "Hidden size for the checked cells (default 16)");
  sc_grad->add_option("--embed", gc_embed, "Embedding size (default 8)");
  sc_grad->add_option("--eps", gc_eps, "Finite-difference step (default 1e-5)");
  sc_grad->add_option("--tol", gc_tol, "Relative error tolerance (default 1e-4)");
  sc_grad->add_option("--seed", gc_seed, "RNG seed (env DCNMT_SEED, then 1)");

  // export-embeddings
  auto* sc_export = app.add_subcommand("export-embeddings",
                                       "Dump decimator word summaries for a word list");
  std::string ex_model, ex_words, ex_out;
  sc_export->add_option("--model", ex_model, "Checkpoint file")->required();
  sc_export->add_option("--words", ex_words, "Word list, one per line")->required();
  sc_export->add_option("--out", ex_out, "Output dump path")->required();

  // Flat key=value configuration per subcommand, merged by a pre-parse pass
  // so that flags beat config, config beats defaults, and unknown keys are
  // rejected before any compute.
  std::string config_path;
  for (CLI::App* sc : app.get_subcommands(nullptr))
    sc->add_option("--config", config_path, "flat key=value configuration file");

  std::vector<std::string> args(argv + 1, argv + argc);
  if (int rc = merge_config_args(app, args); rc != 0) return rc;
  std::reverse(args.begin(), args.end());

  try {
    app.parse(std::move(args));
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return 2;  // unreadable config file
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*sc_vocab) {
      std::vector<std::string> lines;
      for (const std::string& path : vocab_corpora)
        for (std::string& line : read_lines(path)) lines.push_back(std::move(line));
      save_vocab(build_vocab(lines, max_chars), vocab_out);
      std::cout << "wrote " << vocab_out << "\n";
    } else if (*sc_train) {
      auto pairs = read_pairs(train_src, train_tgt);
      tc.seed = train_seed;
      tc.loss_log_path = loss_log;
      tc.checkpoint_path = train_out;

      std::unique_ptr<Model> model;
      TrainState state;
      if (!train_resume.empty()) {
        LoadedCheckpoint loaded = load_checkpoint(train_resume);
        model = std::move(loaded.model);
        if (loaded.state) state = std::move(*loaded.state);
      } else {
        mc.dec_hidden = mc.enc_hidden;
        mc.igru_hidden = mc.enc_hidden;
        mc.att_dim = mc.enc_hidden;
        mc.use_bias = !no_bias;
        mc.seed = train_seed;
        model = std::make_unique<Model>(mc, load_vocab(train_src_vocab),
                                        load_vocab(train_tgt_vocab));
      }
      TrainStats stats = train_loop(*model, pairs, tc, state);
      std::cout << "updates " << stats.updates << ", filtered " << stats.filtered_pairs
                << " pairs";
      if (!stats.epoch_loss_per_char.empty())
        std::cout << ", final loss/char " << stats.epoch_loss_per_char.back();
      std::cout << ", checkpoint " << train_out << "\n";
    } else if (*sc_translate) {
      LoadedCheckpoint loaded = load_checkpoint(tr_model);
      std::ofstream file;
      std::ostream& out = open_output(file, tr_output);
      for (const std::string& line : read_lines(tr_input)) {
        TranslationResult r = translate(*loaded.model, line, beam, tr_max_chars, tr_length_norm);
        out << r.text;
        if (tr_scores) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.9g", r.logp);
          out << '\t' << buf;
        }
        out << '\n';
      }
    } else if (*sc_score) {
      LoadedCheckpoint loaded = load_checkpoint(score_model);
      auto pairs = read_pairs(score_src, score_tgt);
      std::ofstream file;
      std::ostream& out = open_output(file, score_out);
      for (const auto& [s, t] : pairs) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", score(*loaded.model, s, t));
        out << buf << '\n';
      }
    } else if (*sc_bleu) {
      BleuReport r = bleu(read_lines(bleu_hyp), read_lines(bleu_ref), bleu_max_n, bleu_smooth);
      std::printf("BLEU = %.4f (", r.bleu);
      for (std::size_t i = 0; i < r.precisions.size(); ++i)
        std::printf("%s%.3f", i ? "/" : "", r.precisions[i]);
      std::printf(", BP = %.3f, hyp len %zu, ref len %zu)\n", r.brevity_penalty,
                  r.hypothesis_length, r.reference_length);
    } else if (*sc_grad) {
      bool all_pass = true;
      for (const CheckResult& r : standard_grad_checks(gc_hidden, gc_embed, gc_eps, gc_tol,
                                                       gc_seed)) {
        bool pass = r.worst <= gc_tol;
        all_pass = all_pass && pass;
        std::printf("%-12s worst relative error %.3e  %s\n", r.name.c_str(), r.worst,
                    pass ? "ok" : "FAIL");
      }
      return all_pass ? 0 : 3;
    } else if (*sc_export) {
      LoadedCheckpoint loaded = load_checkpoint(ex_model);
      export_embeddings(*loaded.model, read_lines(ex_words), ex_out);
      std::cout << "wrote " << ex_out << "\n";
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
