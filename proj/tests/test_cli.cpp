// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests of the command-line tool as a subprocess. The binary path
// arrives in the DCNMT_BIN environment variable.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace {

std::string bin() {
  const char* b = std::getenv("DCNMT_BIN");
  REQUIRE(b != nullptr);
  return b;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dcnmt_cli_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run(const TempDir& tmp, const std::string& args) {
  static int counter = 0;
  std::string capture = tmp.file("out" + std::to_string(counter++) + ".txt");
  std::string cmd = bin() + " " + args + " >" + capture + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(capture, std::ios::binary);
  r.output = std::string(std::istreambuf_iterator<char>(in), {});
  return r;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("no subcommand is a usage error, help succeeds") {
  TempDir tmp;
  CHECK(run(tmp, "").exit_code == 1);
  RunResult help = run(tmp, "--help");
  CHECK(help.exit_code == 0);
  for (const char* sub : {"build-vocab", "train", "translate", "score", "bleu", "grad-check",
                          "export-embeddings"})
    CHECK(help.output.find(sub) != std::string::npos);
  CHECK(run(tmp, "train --bogus-flag 1").exit_code == 1);
  CHECK(run(tmp, "no-such-command").exit_code == 1);
}

TEST_CASE("build-vocab writes the documented file format") {
  TempDir tmp;
  write_file(tmp.file("corpus.txt"), "ab ab\nb\n");
  RunResult r = run(tmp, "build-vocab --corpus " + tmp.file("corpus.txt") + " --out " +
                             tmp.file("vocab.tsv") + " --max-chars 3");
  CHECK(r.exit_code == 0);
  CHECK(slurp(tmp.file("vocab.tsv")) ==
        "0\tU+0062\n"
        "1\tU+0061\n"
        "2\t<del>\n"
        "3\t<unk>\n"
        "4\t<go>\n"
        "5\t<eos>\n");
}

TEST_CASE("missing input files exit with the data error code") {
  TempDir tmp;
  CHECK(run(tmp, "build-vocab --corpus " + tmp.file("nope.txt") + " --out " +
                     tmp.file("v.tsv")).exit_code == 2);
  CHECK(run(tmp, "translate --model " + tmp.file("nope.ckpt") + " --input " +
                     tmp.file("nope.txt")).exit_code == 2);
  write_file(tmp.file("a.txt"), "a\n");
  write_file(tmp.file("ab.txt"), "a\nb\n");
  CHECK(run(tmp, "bleu --hyp " + tmp.file("a.txt") + " --ref " + tmp.file("ab.txt"))
            .exit_code == 2);
}

TEST_CASE("train, translate, score, bleu and export round-trip") {
  TempDir tmp;
  write_file(tmp.file("corpus.txt"), "ab c\nde\nc ab\ne d\nab\nc de\nd\ne ab\n");
  REQUIRE(run(tmp, "build-vocab --corpus " + tmp.file("corpus.txt") + " --out " +
                       tmp.file("vocab.tsv")).exit_code == 0);

  std::string train_args = "train --src " + tmp.file("corpus.txt") + " --tgt " +
                           tmp.file("corpus.txt") + " --src-vocab " + tmp.file("vocab.tsv") +
                           " --tgt-vocab " + tmp.file("vocab.tsv") + " --out " +
                           tmp.file("model.ckpt") +
                           " --hidden 8 --embed 8 --dgru-hidden 8 --batch 4 --epochs 2"
                           " --seed 5 --loss-log " + tmp.file("loss.csv");
  RunResult train = run(tmp, train_args);
  CHECK(train.exit_code == 0);
  CHECK(std::filesystem::exists(tmp.file("model.ckpt")));
  std::string log = slurp(tmp.file("loss.csv"));
  CHECK(log.rfind("update,epoch,loss_sum,loss_per_char,grad_norm,seconds", 0) == 0);

  write_file(tmp.file("in.txt"), "ab c\nde\n");
  RunResult tr = run(tmp, "translate --model " + tmp.file("model.ckpt") + " --input " +
                              tmp.file("in.txt") + " --output " + tmp.file("hyp.txt") +
                              " --beam 2 --max-chars 24");
  CHECK(tr.exit_code == 0);
  std::string hyp = slurp(tmp.file("hyp.txt"));
  CHECK(std::count(hyp.begin(), hyp.end(), '\n') == 2);

  RunResult sc = run(tmp, "score --model " + tmp.file("model.ckpt") + " --src " +
                              tmp.file("in.txt") + " --tgt " + tmp.file("in.txt"));
  CHECK(sc.exit_code == 0);
  std::istringstream lines(sc.output);
  std::string line;
  int score_lines = 0;
  while (std::getline(lines, line)) {
    CHECK(std::stod(line) < 0.0);
    ++score_lines;
  }
  CHECK(score_lines == 2);

  RunResult bl = run(tmp, "bleu --hyp " + tmp.file("in.txt") + " --ref " + tmp.file("in.txt"));
  CHECK(bl.exit_code == 0);
  CHECK(bl.output.find("BLEU = 1.0000") != std::string::npos);

  write_file(tmp.file("words.txt"), "ab\nde\n");
  RunResult ex = run(tmp, "export-embeddings --model " + tmp.file("model.ckpt") + " --words " +
                              tmp.file("words.txt") + " --out " + tmp.file("emb.tsv"));
  CHECK(ex.exit_code == 0);
  std::string emb = slurp(tmp.file("emb.tsv"));
  CHECK(emb.rfind("ab\t", 0) == 0);
}

TEST_CASE("grad-check subcommand passes at its defaults") {
  TempDir tmp;
  RunResult r = run(tmp, "grad-check --hidden 8 --embed 4");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("end_to_end") != std::string::npos);
  CHECK(r.output.find("FAIL") == std::string::npos);
}

TEST_CASE("config file supplies defaults, flags win, unknown keys are rejected") {
  TempDir tmp;
  write_file(tmp.file("corpus.txt"), "ab\ncd\n");  // four regular characters
  write_file(tmp.file("good.ini"), "max-chars=3\n");

  auto vocab_lines = [&](const std::string& path) {
    std::string text = slurp(path);
    return std::count(text.begin(), text.end(), '\n');
  };

  RunResult good = run(tmp, "build-vocab --config " + tmp.file("good.ini") + " --corpus " +
                                tmp.file("corpus.txt") + " --out " + tmp.file("v.tsv"));
  CHECK(good.exit_code == 0);
  CHECK(vocab_lines(tmp.file("v.tsv")) == 3 + 4);  // config capped the regular characters

  RunResult flag_wins = run(tmp, "build-vocab --config " + tmp.file("good.ini") +
                                     " --max-chars 4 --corpus " + tmp.file("corpus.txt") +
                                     " --out " + tmp.file("v2.tsv"));
  CHECK(flag_wins.exit_code == 0);
  CHECK(vocab_lines(tmp.file("v2.tsv")) == 4 + 4);  // the flag overrides the config value

  write_file(tmp.file("bad.ini"), "no-such-key=7\n");
  RunResult bad = run(tmp, "build-vocab --config " + tmp.file("bad.ini") + " --corpus " +
                               tmp.file("corpus.txt") + " --out " + tmp.file("v3.tsv"));
  CHECK(bad.exit_code == 1);

  CHECK(run(tmp, "build-vocab --config " + tmp.file("missing.ini") + " --corpus " +
                     tmp.file("corpus.txt") + " --out " + tmp.file("v4.tsv")).exit_code == 2);
}

TEST_CASE("the seed environment variable feeds training determinism") {
  TempDir tmp;
  write_file(tmp.file("corpus.txt"), "ab\nba\nb a\na\n");
  REQUIRE(run(tmp, "build-vocab --corpus " + tmp.file("corpus.txt") + " --out " +
                       tmp.file("vocab.tsv")).exit_code == 0);
  std::string base = "train --src " + tmp.file("corpus.txt") + " --tgt " +
                     tmp.file("corpus.txt") + " --src-vocab " + tmp.file("vocab.tsv") +
                     " --tgt-vocab " + tmp.file("vocab.tsv") +
                     " --hidden 6 --embed 6 --dgru-hidden 6 --batch 2 --epochs 1";

  std::string env_prefix = "DCNMT_SEED=77 ";
  std::string cmd1 = env_prefix + bin() + " " + base + " --out " + tmp.file("m1.ckpt") + " >" +
                     tmp.file("o1.txt") + " 2>&1";
  std::string cmd2 = env_prefix + bin() + " " + base + " --out " + tmp.file("m2.ckpt") + " >" +
                     tmp.file("o2.txt") + " 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd1.c_str())) == 0);
  REQUIRE(WEXITSTATUS(std::system(cmd2.c_str())) == 0);
  CHECK(slurp(tmp.file("m1.ckpt")) == slurp(tmp.file("m2.ckpt")));

  // an explicit flag overrides the environment
  std::string cmd3 = env_prefix + bin() + " " + base + " --seed 78 --out " +
                     tmp.file("m3.ckpt") + " >" + tmp.file("o3.txt") + " 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd3.c_str())) == 0);
  CHECK(slurp(tmp.file("m3.ckpt")) != slurp(tmp.file("m1.ckpt")));
}

