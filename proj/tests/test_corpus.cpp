#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "beamkit/corpus.hpp"
#include "beamkit/decoder.hpp"
#include "beamkit/errors.hpp"
#include "beamkit/model.hpp"

using namespace beamkit;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

struct FileGuard {
  std::string path;
  ~FileGuard() { std::remove(path.c_str()); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("corpus round-trips through JSONL") {
  const std::vector<CorpusRecord> records{
      {{2, 3, 4}, {{2, 3, 1}}},
      {{5}, {{5, 1}, {6, 5, 1}}},
  };
  const std::string path = temp_path("beamkit_corpus_roundtrip.jsonl");
  FileGuard guard{path};
  save_corpus(path, records);
  const std::vector<CorpusRecord> loaded = load_corpus(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].src == records[0].src);
  CHECK(loaded[0].refs == records[0].refs);
  CHECK(loaded[1].src == records[1].src);
  CHECK(loaded[1].refs == records[1].refs);

  // a second save is byte-identical
  const std::string again = temp_path("beamkit_corpus_roundtrip2.jsonl");
  FileGuard guard2{again};
  save_corpus(again, loaded);
  std::ifstream a(path), b(again);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("corpus loader rejects malformed lines") {
  const std::string path = temp_path("beamkit_corpus_bad.jsonl");
  FileGuard guard{path};

  write_text(path, "{\"src\": [2], \"refs\": [[2, 1]]}\nnot json\n");
  CHECK_THROWS_AS(load_corpus(path), FormatError);

  write_text(path, "{\"src\": [2]}\n");
  CHECK_THROWS_AS(load_corpus(path), FormatError);

  write_text(path, "{\"src\": [], \"refs\": [[2, 1]]}\n");
  CHECK_THROWS_AS(load_corpus(path), FormatError);

  write_text(path, "{\"src\": [2], \"refs\": []}\n");
  CHECK_THROWS_AS(load_corpus(path), FormatError);

  write_text(path, "{\"src\": [2], \"refs\": [[2, \"x\"]]}\n");
  CHECK_THROWS_AS(load_corpus(path), FormatError);

  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), PathError);
}

TEST_CASE("corpus loader skips blank lines") {
  const std::string path = temp_path("beamkit_corpus_blank.jsonl");
  FileGuard guard{path};
  write_text(path, "\n{\"src\": [2], \"refs\": [[2, 1]]}\n\n");
  CHECK(load_corpus(path).size() == 1);
}

TEST_CASE("gen_corpus is deterministic and well-formed") {
  GenCorpusSpec spec;
  spec.seed = 21;
  spec.n = 25;
  spec.vocab_size = 30;
  spec.len_min = 2;
  spec.len_max = 9;
  spec.tau = 0.8;

  const std::vector<CorpusRecord> a = gen_corpus(spec);
  const std::vector<CorpusRecord> b = gen_corpus(spec);
  REQUIRE(a.size() == 25);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].src == b[i].src);
    CHECK(a[i].refs == b[i].refs);
  }

  for (const CorpusRecord& rec : a) {
    CHECK(rec.src.size() >= 2);
    CHECK(rec.src.size() <= 9);
    for (TokenId t : rec.src) {
      CHECK(t >= 2);  // regular ids only
      CHECK(t < 30);
    }
    REQUIRE(rec.refs.size() == 1);
    REQUIRE(!rec.refs[0].empty());
    CHECK(rec.refs[0].back() == 1);  // references carry their terminal eos
  }
}

TEST_CASE("gen_corpus references are greedy decodes of the same model") {
  GenCorpusSpec spec;
  spec.seed = 33;
  spec.n = 8;
  spec.vocab_size = 24;
  spec.tau = 0.9;
  const std::vector<CorpusRecord> corpus = gen_corpus(spec);

  const HashModel model(HashModelSpec{33, standard_vocab(24), 0.9});
  for (const CorpusRecord& rec : corpus) {
    SentenceContext ctx;
    ctx.source_tokens = rec.src;
    const DecodeResult res = decode_greedy(model, ctx, DecodeConfig{});
    CHECK(res.best.tokens == rec.refs[0]);
  }
}

TEST_CASE("gen_corpus lengths track the source length") {
  GenCorpusSpec spec;
  spec.seed = 42;
  spec.n = 60;
  spec.vocab_size = 50;
  spec.len_min = 4;
  spec.len_max = 16;
  spec.tau = 0.6;
  const std::vector<CorpusRecord> corpus = gen_corpus(spec);

  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const double n = static_cast<double>(corpus.size());
  for (const CorpusRecord& rec : corpus) {
    const double x = static_cast<double>(rec.src.size());
    const double y = static_cast<double>(rec.refs[0].size());
    sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
  }
  const double cov = sxy - sx * sy / n;
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  REQUIRE(vx > 0);
  REQUIRE(vy > 0);
  const double pearson = cov / std::sqrt(vx * vy);
  CHECK(pearson > 0.5);
}

TEST_CASE("gen_corpus validates its inputs") {
  GenCorpusSpec spec;
  spec.n = 0;
  CHECK_THROWS_AS(gen_corpus(spec), ContractError);
  spec.n = 1;
  spec.vocab_size = 2;  // no regular ids left
  CHECK_THROWS_AS(gen_corpus(spec), ContractError);
  spec.vocab_size = 50;
  spec.len_min = 5;
  spec.len_max = 4;
  CHECK_THROWS_AS(gen_corpus(spec), ContractError);
  spec.len_max = 5;
  spec.tau = 0.0;
  CHECK_THROWS_AS(gen_corpus(spec), ValidationError);  // from the model
}
