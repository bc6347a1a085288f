#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

using nlohmann::json;

namespace {

const std::string& work_dir() {
  static const std::string dir = [] {
    const auto path = std::filesystem::temp_directory_path() /
                      ("beamkit_cli_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
    return path.string();
  }();
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  static int counter = 0;
  const std::string base = work_dir() + "/capture_" + std::to_string(counter++);
  const std::string cmd = std::string(BEAMKIT_CLI_PATH) + " " + args + " > " + base +
                          ".out 2> " + base + ".err";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(base + ".out");
  r.err = slurp(base + ".err");
  return r;
}

std::string tiny_lattice() {
  return std::string(BEAMKIT_FIXTURE_DIR) + "/tiny.json";
}

json first_line_json(const std::string& text) {
  const std::size_t eol = text.find('\n');
  return json::parse(text.substr(0, eol));
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("gen-corpus is reproducible byte for byte") {
  const std::string f1 = work_dir() + "/gen1.jsonl";
  const std::string f2 = work_dir() + "/gen2.jsonl";
  const std::string flags = "gen-corpus --seed 5 -n 12 --vocab 30 --len-min 2 "
                            "--len-max 8 --tau 0.8 --out ";
  CHECK(run(flags + f1).exit_code == 0);
  CHECK(run(flags + f2).exit_code == 0);
  const std::string a = slurp(f1);
  CHECK(!a.empty());
  CHECK(a == slurp(f2));
  CHECK(count_lines(a) == 12);
}

TEST_CASE("decode reports tokens, scores and admission steps") {
  const std::string corpus = work_dir() + "/lat_corpus.jsonl";
  spit(corpus, "{\"src\": [0], \"refs\": [[0, 2]]}\n");
  const std::string out = work_dir() + "/lat_decode.jsonl";

  const RunResult r = run("decode --model lattice --lattice " + tiny_lattice() +
                          " --corpus " + corpus +
                          " --method default --beam 2 --stopping topmost --out " + out);
  REQUIRE(r.exit_code == 0);

  const json rec = first_line_json(slurp(out));
  CHECK(rec["tokens"] == json::array({0, 2}));
  CHECK(rec["raw_score"].get<double>() ==
        doctest::Approx(-0.86750056770472317).epsilon(1e-15));
  CHECK(rec["adjusted_score"].get<double>() == rec["raw_score"].get<double>());
  CHECK(rec["stop_step"] == 2);
  CHECK(rec["eos_steps"] == json::array({2}));
}

TEST_CASE("decode writes a scatter of finished candidates on request") {
  const std::string corpus = work_dir() + "/lat_corpus2.jsonl";
  spit(corpus, "{\"src\": [0], \"refs\": [[0, 2]]}\n");
  const std::string out = work_dir() + "/lat_decode2.jsonl";
  const std::string scatter = work_dir() + "/scatter.csv";

  const RunResult r = run("decode --model lattice --lattice " + tiny_lattice() +
                          " --corpus " + corpus +
                          " --method default --beam 3 --stopping maxlen --out " + out +
                          " --scatter-out " + scatter);
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(scatter);
  CHECK(csv.rfind("length,score\n", 0) == 0);
  CHECK(count_lines(csv) == 5);  // header plus the four admitted candidates
}

TEST_CASE("usage errors exit with code 2 and one line of stderr") {
  const std::string corpus = work_dir() + "/usage_corpus.jsonl";
  spit(corpus, "{\"src\": [2], \"refs\": [[2, 1]]}\n");

  {
    const RunResult r = run("decode --corpus " + corpus + " --method bwr");
    CHECK(r.exit_code == 2);
    CHECK(count_lines(r.err) == 1);
    CHECK(r.err.rfind("error:", 0) == 0);
  }
  {
    const RunResult r =
        run("decode --corpus " + corpus + " --method default --stopping optimal");
    CHECK(r.exit_code == 2);
    CHECK(count_lines(r.err) == 1);
  }
  {
    const RunResult r = run("decode --corpus " + corpus + " --method frobnicate");
    CHECK(r.exit_code == 2);
  }
  {
    const RunResult r = run("decode --corpus " + corpus + " --stopping sideways");
    CHECK(r.exit_code == 2);
  }
  {
    const RunResult r =
        run("decode --corpus " + corpus + " --predictor fixed:notanumber");
    CHECK(r.exit_code == 2);
  }
  // CLI11-level errors take the same exit code
  CHECK(run("decode").exit_code == 2);
  CHECK(run("frobnicate").exit_code == 2);
}

TEST_CASE("runtime failures exit with code 1") {
  const RunResult r = run("decode --corpus /nonexistent/corpus.jsonl");
  CHECK(r.exit_code == 1);
}

TEST_CASE("decode output is independent of the thread count") {
  const std::string corpus = work_dir() + "/jobs_corpus.jsonl";
  REQUIRE(run("gen-corpus --seed 11 -n 10 --vocab 30 --tau 0.8 --out " + corpus)
              .exit_code == 0);
  const std::string one = work_dir() + "/jobs1.jsonl";
  const std::string eight = work_dir() + "/jobs8.jsonl";
  const std::string flags = "decode --seed 11 --vocab 30 --tau 0.8 --corpus " + corpus +
                            " --method length-norm --beam 4 --stopping maxlen";
  REQUIRE(run(flags + " --jobs 1 --out " + one).exit_code == 0);
  REQUIRE(run(flags + " --jobs 8 --out " + eight).exit_code == 0);
  const std::string a = slurp(one);
  CHECK(!a.empty());
  CHECK(a == slurp(eight));
}

TEST_CASE("a width-1 decode scores BLEU one against its own references") {
  const std::string corpus = work_dir() + "/bleu_corpus.jsonl";
  REQUIRE(run("gen-corpus --seed 19 -n 8 --vocab 30 --len-min 4 --len-max 10 "
              "--tau 0.8 --out " + corpus)
              .exit_code == 0);
  const std::string hyp = work_dir() + "/bleu_hyp.jsonl";
  REQUIRE(run("decode --seed 19 --vocab 30 --tau 0.8 --corpus " + corpus +
              " --method default --beam 1 --stopping maxlen --out " + hyp)
              .exit_code == 0);

  const RunResult r = run("bleu --hyp " + hyp + " --ref " + corpus);
  REQUIRE(r.exit_code == 0);
  const json stats = json::parse(r.out);
  CHECK(stats["bleu"].get<double>() == 1.0);
  CHECK(stats["lr"].get<double>() == 1.0);
}

TEST_CASE("fit-ratio reports the least-squares generation ratio") {
  const std::string corpus = work_dir() + "/fit_corpus.jsonl";
  spit(corpus,
       "{\"src\": [2, 3], \"refs\": [[4, 5, 6, 1]]}\n"
       "{\"src\": [2, 3, 4], \"refs\": [[4, 5, 6, 7, 8, 1]]}\n");
  const RunResult r = run("fit-ratio --corpus " + corpus);
  REQUIRE(r.exit_code == 0);
  const json fit = json::parse(r.out);
  CHECK(fit["gr"].get<double>() == 2.0);
  CHECK(fit["pairs"].get<int>() == 2);
}

TEST_CASE("stats summarizes a decode output") {
  const std::string corpus = work_dir() + "/stats_corpus.jsonl";
  spit(corpus, "{\"src\": [0], \"refs\": [[0, 2]]}\n");
  const std::string out = work_dir() + "/stats_decode.jsonl";
  REQUIRE(run("decode --model lattice --lattice " + tiny_lattice() + " --corpus " +
              corpus + " --method length-norm --beam 3 --stopping maxlen --out " + out)
              .exit_code == 0);

  const RunResult r = run("stats --in " + out);
  REQUIRE(r.exit_code == 0);
  const json stats = json::parse(r.out);
  CHECK(stats["sentences"] == 1);
  CHECK(stats["eos_coverage"][0] == 1);
  CHECK(stats["eos_mean_steps"][0].get<double>() == 1.0);  // [eos] admitted at step 1
  CHECK(stats["mean_stop_step"].get<double>() == 12.0);
}

TEST_CASE("sweep emits one row per method, reward and beam") {
  const std::string corpus = work_dir() + "/sweep_corpus.jsonl";
  REQUIRE(run("gen-corpus --seed 7 -n 6 --vocab 30 --tau 0.8 --out " + corpus)
              .exit_code == 0);
  const std::string csv_path = work_dir() + "/sweep.csv";

  const RunResult r = run("sweep --seed 7 --vocab 30 --tau 0.8 --corpus " + corpus +
                          " --methods default,length-norm --beams 1,2 --out " + csv_path);
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(csv_path);
  CHECK(csv.rfind("method,beam,bleu,lr,bp,mean_len,mean_stop_step,mean_first_eos\n",
                  0) == 0);
  CHECK(count_lines(csv) == 5);  // header + 2 methods x 2 beams

  const std::string grid_path = work_dir() + "/sweep_grid.csv";
  const RunResult g = run("sweep --seed 7 --vocab 30 --tau 0.8 --corpus " + corpus +
                          " --methods bwr --grid-r 2.0,3.5 --beams 2 --out " +
                          grid_path);
  REQUIRE(g.exit_code == 0);
  const std::string grid = slurp(grid_path);
  CHECK(grid.find("bwr@r=2,") != std::string::npos);
  CHECK(grid.find("bwr@r=3.5,") != std::string::npos);
  CHECK(count_lines(grid) == 3);
}
