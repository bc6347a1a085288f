#include "beamkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "beamkit/rng.hpp"

namespace beamkit {

// ============================================================================
// HashModel
// ============================================================================

HashModel::HashModel(HashModelSpec spec) : spec_(spec) {
  if (spec_.tau <= 0.0) throw ValidationError("temperature must be positive");
}

double HashModel::eos_logit(std::size_t prefix_len, std::size_t source_len) const {
  return spec_.eos_base +
         spec_.eos_slope * (static_cast<double>(prefix_len) - static_cast<double>(source_len));
}

StepResult HashModel::step(std::span<const TokenId> source,
                           std::span<const TokenId> prefix) const {
  const std::int32_t n = spec_.vocab.size;
  const TokenId eos = spec_.vocab.eos_id;

  std::uint64_t p = splitmix64(spec_.seed ^ fnv1a64(source));
  for (TokenId t : prefix) {
    p = splitmix64(p ^ (static_cast<std::uint64_t>(t) + 1));
  }

  std::vector<double> raw(static_cast<std::size_t>(n));
  for (std::int32_t v = 0; v < n; ++v) {
    if (v == eos) {
      raw[v] = eos_logit(prefix.size(), source.size());
    } else {
      std::uint64_t h = splitmix64(p ^ (static_cast<std::uint64_t>(v + 1) * splitmix_gamma));
      raw[v] = unit_interval(h) / spec_.tau;
    }
  }

  // Log-softmax with a fixed ascending-id summation order so that repeated
  // calls are bit-identical.
  double m = raw[0];
  for (std::int32_t v = 1; v < n; ++v) m = std::max(m, raw[v]);
  double z = 0.0;
  for (std::int32_t v = 0; v < n; ++v) z += std::exp(raw[v] - m);
  const double log_z = m + std::log(z);

  StepResult out;
  out.logprobs.resize(static_cast<std::size_t>(n));
  for (std::int32_t v = 0; v < n; ++v) out.logprobs[v] = raw[v] - log_z;
  if (!source.empty()) {
    out.attention.assign(source.size(), 1.0 / static_cast<double>(source.size()));
  }
  return out;
}

// ============================================================================
// TrieLattice
// ============================================================================

namespace {

using nlohmann::json;

constexpr double node_mass_tolerance = 1e-6;

struct ParseState {
  const Vocab* vocab = nullptr;
  int max_depth = 0;
};

std::unique_ptr<TrieNode> parse_node(const json& doc, ParseState& st, int depth);

TrieArc parse_arc(TokenId token, const json& doc, ParseState& st, int depth) {
  if (!doc.is_object() || !doc.contains("logprob"))
    throw FormatError("arc must be an object with a logprob");
  const json& lp = doc.at("logprob");
  if (!lp.is_number()) throw FormatError("arc logprob must be a number");

  TrieArc arc;
  arc.logprob = lp.get<double>();
  const json& child = doc.contains("child") ? doc.at("child") : json(nullptr);
  const bool is_eos = (token == st.vocab->eos_id);
  if (is_eos) {
    if (!child.is_null()) throw ValidationError("eos arc must not have a child");
  } else {
    if (child.is_null())
      throw ValidationError("non-eos arc must have a child node");
    arc.child = parse_node(child, st, depth + 1);
  }
  return arc;
}

std::unique_ptr<TrieNode> parse_node(const json& doc, ParseState& st, int depth) {
  if (!doc.is_object() || !doc.contains("arcs") || !doc.at("arcs").is_object())
    throw FormatError("node must be an object with an arcs map");
  st.max_depth = std::max(st.max_depth, depth);

  auto node = std::make_unique<TrieNode>();
  for (const auto& [key, value] : doc.at("arcs").items()) {
    TokenId token;
    try {
      std::size_t pos = 0;
      token = static_cast<TokenId>(std::stol(key, &pos));
      if (pos != key.size()) throw FormatError("");
    } catch (const std::exception&) {
      throw FormatError("arc key is not an integer token id: " + key);
    }
    if (token < 0 || token >= st.vocab->size)
      throw ValidationError("arc token id out of vocab range: " + key);
    if (!node->arcs.emplace(token, parse_arc(token, value, st, depth)).second)
      throw FormatError("duplicate arc for token " + key);
  }
  if (node->arcs.empty()) throw ValidationError("node has no arcs");

  // Per-node probability mass must be 1; small drift is renormalized in log
  // space, larger drift is rejected.
  double mass = 0.0;
  for (const auto& [token, arc] : node->arcs) mass += std::exp(arc.logprob);
  if (std::abs(mass - 1.0) > node_mass_tolerance)
    throw ValidationError("node probability mass is " + std::to_string(mass));
  const double log_mass = std::log(mass);
  for (auto& [token, arc] : node->arcs) arc.logprob -= log_mass;
  return node;
}

}  // namespace

TrieLattice TrieLattice::parse(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("lattice is not valid json: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("lattice document must be an object");
  for (const char* field : {"vocab_size", "eos_id", "bos_id", "root"}) {
    if (!doc.contains(field)) throw FormatError(std::string("missing field: ") + field);
  }
  if (!doc["vocab_size"].is_number_integer() || !doc["eos_id"].is_number_integer() ||
      !doc["bos_id"].is_number_integer())
    throw FormatError("vocab_size, eos_id and bos_id must be integers");

  Vocab vocab(doc["vocab_size"].get<std::int32_t>(), doc["eos_id"].get<TokenId>(),
              doc["bos_id"].get<TokenId>());
  ParseState st;
  st.vocab = &vocab;
  auto root = parse_node(doc["root"], st, 0);
  return TrieLattice(vocab, std::move(root), st.max_depth);
}

StepResult TrieLattice::step(std::span<const TokenId> source,
                             std::span<const TokenId> prefix) const {
  (void)source;  // lattices are unconditional, kept for interface parity
  const TrieNode* node = root_.get();
  for (TokenId t : prefix) {
    auto it = node->arcs.find(t);
    if (it == node->arcs.end() || it->second.child == nullptr)
      throw PathError("prefix is not a path in the lattice");
    node = it->second.child.get();
  }
  StepResult out;
  out.logprobs.assign(static_cast<std::size_t>(vocab_.size), absent_logprob);
  for (const auto& [token, arc] : node->arcs) out.logprobs[token] = arc.logprob;
  return out;
}

TrieLattice load_lattice(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open lattice file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return TrieLattice::parse(buf.str());
}

}  // namespace beamkit
