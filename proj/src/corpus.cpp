#include "beamkit/corpus.hpp"

#include <fstream>
#include <utility>

#include <json.hpp>

#include "beamkit/decoder.hpp"
#include "beamkit/errors.hpp"
#include "beamkit/model.hpp"
#include "beamkit/rng.hpp"

namespace beamkit {

namespace {

std::vector<TokenId> parse_token_array(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + " must be an array of token ids");
  std::vector<TokenId> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_integer())
      throw FormatError(std::string(what) + " must contain only integers");
    out.push_back(v.get<TokenId>());
  }
  return out;
}

}  // namespace

std::vector<CorpusRecord> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open corpus file: " + path);
  std::vector<CorpusRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("src") || !j.contains("refs"))
      throw FormatError("corpus line " + std::to_string(lineno) +
                        ": expected {\"src\": [...], \"refs\": [[...]]}");
    CorpusRecord rec;
    rec.src = parse_token_array(j["src"], "src");
    if (rec.src.empty())
      throw FormatError("corpus line " + std::to_string(lineno) + ": empty src");
    if (!j["refs"].is_array() || j["refs"].empty())
      throw FormatError("corpus line " + std::to_string(lineno) + ": refs must be nonempty");
    for (const auto& r : j["refs"]) rec.refs.push_back(parse_token_array(r, "ref"));
    out.push_back(std::move(rec));
  }
  return out;
}

void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path);
  if (!out) throw PathError("cannot write corpus file: " + path);
  for (const CorpusRecord& rec : records) {
    nlohmann::ordered_json j;
    j["src"] = rec.src;
    j["refs"] = rec.refs;
    out << j.dump() << '\n';
  }
  if (!out) throw PathError("failed writing corpus file: " + path);
}

std::vector<CorpusRecord> gen_corpus(const GenCorpusSpec& spec) {
  if (spec.n < 1) throw ContractError("corpus needs at least one sentence");
  if (spec.vocab_size < 3)
    throw ContractError("vocab needs a regular token besides bos and eos");
  if (spec.len_min < 1 || spec.len_max < spec.len_min)
    throw ContractError("bad source length range");

  const HashModel model(HashModelSpec{spec.seed, standard_vocab(spec.vocab_size), spec.tau});
  SplitMix rng(spec.seed);
  const DecodeConfig cfg;
  const std::uint64_t span = static_cast<std::uint64_t>(spec.len_max - spec.len_min) + 1;

  std::vector<CorpusRecord> out;
  out.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    CorpusRecord rec;
    const int len = spec.len_min + static_cast<int>(rng.next_below(span));
    rec.src.reserve(len);
    for (int j = 0; j < len; ++j)
      rec.src.push_back(2 + static_cast<TokenId>(rng.next_below(
                                static_cast<std::uint64_t>(spec.vocab_size) - 2)));
    SentenceContext ctx;
    ctx.source_tokens = rec.src;
    rec.refs.push_back(decode_greedy(model, ctx, cfg).best.tokens);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace beamkit
