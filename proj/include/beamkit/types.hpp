#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "beamkit/errors.hpp"

namespace beamkit {

using TokenId = std::int32_t;

// ============================================================================
// Vocabulary
// ============================================================================

/**
 * Closed token id space. Ids are opaque integers in [0, size). eos terminates
 * a hypothesis; bos is the conceptual start symbol and is never stored in a
 * hypothesis (it contributes no log-probability).
 */
struct Vocab {
  std::int32_t size;
  TokenId eos_id;
  TokenId bos_id;

  Vocab(std::int32_t size_, TokenId eos, TokenId bos)
      : size(size_), eos_id(eos), bos_id(bos) {
    if (size < 2) throw ValidationError("vocab size must be at least 2");
    if (eos < 0 || eos >= size) throw ValidationError("eos id out of range");
    if (bos < 0 || bos >= size) throw ValidationError("bos id out of range");
    if (eos == bos) throw ValidationError("eos and bos must differ");
  }
};

// ============================================================================
// Hypothesis
// ============================================================================

/**
 * One partial or finished output sequence. Immutable by convention: extend()
 * returns a new value and never mutates its input.
 *
 * score is the running sum of step_logprobs accumulated strictly left to
 * right, so equal token/logprob sequences produce bit-identical scores.
 * |y| (tokens.size()) counts the terminal eos of a finished hypothesis.
 */
struct Hypothesis {
  std::vector<TokenId> tokens;
  std::vector<double> step_logprobs;
  double score = 0.0;
  bool finished = false;
  std::vector<double> coverage_sums;  // per source position; empty without attention

  std::size_t length() const { return tokens.size(); }
};

/**
 * Append one token. Throws ContractError when h is already finished or the
 * logprob is positive. attention, when nonempty, is accumulated into
 * coverage_sums position by position.
 */
inline Hypothesis extend(const Hypothesis& h, TokenId token, double logprob,
                         TokenId eos_id, std::span<const double> attention = {}) {
  if (h.finished) throw ContractError("cannot extend a finished hypothesis");
  if (logprob > 0.0) throw ContractError("step logprob must be nonpositive");
  Hypothesis out = h;
  out.tokens.push_back(token);
  out.step_logprobs.push_back(logprob);
  out.score = h.score + logprob;
  out.finished = (token == eos_id);
  if (!attention.empty()) {
    if (out.coverage_sums.empty()) out.coverage_sums.assign(attention.size(), 0.0);
    if (out.coverage_sums.size() != attention.size())
      throw ContractError("attention width changed mid hypothesis");
    for (std::size_t j = 0; j < attention.size(); ++j) out.coverage_sums[j] += attention[j];
  }
  return out;
}

// ============================================================================
// Beam
// ============================================================================

/**
 * Ordered beam at one step: items sorted by raw score descending, at most
 * beam-size entries. Finished items keep their slot and compete by their
 * frozen score.
 */
struct Beam {
  std::vector<Hypothesis> items;
  int step = 0;
};

// ============================================================================
// Scoring method
// ============================================================================

enum class Method {
  default_score,            // raw model score
  length_norm,              // score / |y|
  gnmt,                     // length penalty + coverage penalty
  word_reward,              // score + r * |y|
  bounded_word_reward,      // score + r * min(|y|, L_pred)
  bounded_adaptive_reward,  // score + sum of per-step rewards up to the bound
  bp_norm,                  // brevity-penalty-normalized score
};

struct ScoringMethod {
  Method kind = Method::default_score;
  double r = 0.0;      // reward per word
  double gr = 1.0;     // fallback generation ratio when no predictor is used
  double alpha = 0.0;  // gnmt length exponent
  double beta = 0.0;   // gnmt coverage weight
};

// ============================================================================
// Decode configuration and per-sentence context
// ============================================================================

enum class StoppingRule {
  topmost_finished,  // stop when the top beam slot holds a finished item
  b_finished,        // stop after beam-size finished candidates were admitted
  max_len,           // run to the hard step bound R
  optimal,           // provably loss-free early stop for the active method
};

struct DecodeConfig {
  int beam_size = 4;
  double max_len_factor = 2.0;
  int max_len_offset = 10;
  StoppingRule stopping = StoppingRule::max_len;
};

/** Hard decode bound R = ceil(max_len_factor * |x|) + max_len_offset. */
inline int max_steps(const DecodeConfig& cfg, std::size_t source_len) {
  if (cfg.beam_size < 1) throw ContractError("beam size must be positive");
  return static_cast<int>(std::ceil(cfg.max_len_factor * static_cast<double>(source_len))) +
         cfg.max_len_offset;
}

/**
 * Everything decode needs about one source sentence. adaptive_rewards holds
 * r_t for steps 1..t at indices 0..t-1 and is appended by the decoder itself
 * when the adaptive-reward method runs.
 */
struct SentenceContext {
  std::vector<TokenId> source_tokens;
  double l_pred = 0.0;  // predicted output length, may be fractional
  int max_len = 0;      // R
  std::vector<double> adaptive_rewards;
};

}  // namespace beamkit
