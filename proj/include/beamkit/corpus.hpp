#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beamkit/types.hpp"

namespace beamkit {

// ============================================================================
// Token-id corpora
//
// A corpus is JSONL, one record per line:
//   {"src": [int...], "refs": [[int...], ...]}
// Sources hold regular tokens only; references include their terminal eos.
// ============================================================================

struct CorpusRecord {
  std::vector<TokenId> src;
  std::vector<std::vector<TokenId>> refs;
};

/** The id convention for hash-model runs: bos 0, eos 1, regular tokens 2+. */
inline Vocab standard_vocab(std::int32_t size) { return Vocab(size, 1, 0); }

/** Parse a JSONL corpus. Schema violations raise FormatError. */
std::vector<CorpusRecord> load_corpus(const std::string& path);

/** Write a JSONL corpus; field order is fixed so reruns are byte-identical. */
void save_corpus(const std::string& path, const std::vector<CorpusRecord>& records);

/**
 * Synthetic corpus: source lengths uniform in [len_min, len_max] and source
 * tokens uniform over the regular ids, both from one splitmix64 stream seeded
 * with seed; references are greedy decodes of the hash model with the same
 * seed, so they are consistent with the model a decoder will later query.
 */
struct GenCorpusSpec {
  std::uint64_t seed = 0;
  int n = 1;
  std::int32_t vocab_size = 50;
  int len_min = 3;
  int len_max = 12;
  double tau = 1.0;
};

std::vector<CorpusRecord> gen_corpus(const GenCorpusSpec& spec);

}  // namespace beamkit
