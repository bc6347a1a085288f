#pragma once

#include <vector>

#include "beamkit/model.hpp"
#include "beamkit/scoring.hpp"
#include "beamkit/stopping.hpp"
#include "beamkit/types.hpp"

namespace beamkit {

// ============================================================================
// Beam-search decoder
//
// The loop keeps finished hypotheses in their beam slots, where they compete
// by frozen raw score, and additionally records them in a finished pool the
// moment they win a beam slot. Rescoring applies only to pool entries; beam
// ordering always uses the raw model score.
// ============================================================================

/** A finished hypothesis together with its method-adjusted score. */
struct ScoredHypothesis {
  Hypothesis hyp;
  double adjusted = 0.0;
};

struct DecodeResult {
  Hypothesis best;                           // argmax of adjusted score over the pool
  double best_adjusted_score = 0.0;
  std::vector<ScoredHypothesis> finished_pool;  // in admission order
  int steps_run = 0;
  std::vector<int> eos_step_positions;       // admission step of each pool entry
};

/**
 * One step of beam search: pool the carried finished items and every viable
 * one-token extension of the unfinished items, then keep the top beam_size by
 * raw score (ties: earlier beam rank, then smaller token id). Extensions at
 * the absent-token sentinel are dropped; an empty pool is a DeadEndError.
 */
Beam expand_beam(const Beam& beam, const Stepper& stepper, const SentenceContext& ctx,
                 int beam_size);

/**
 * Full beam search over at most R = max_steps(cfg, |source|) steps. Writes R
 * into ctx.max_len; for the bounded adaptive reward it also fills
 * ctx.adaptive_rewards with one entry per step run. Newly finished candidates
 * enter the finished pool only when they survive the top-b cut. When no
 * candidate finishes by R, the top candidate is force-terminated with eos.
 * All stopping rules except MaxLen also stop once every beam slot is
 * finished, since expansion is then a fixed point.
 */
DecodeResult decode(const Stepper& stepper, SentenceContext& ctx, const DecodeConfig& cfg,
                    const ScoringMethod& method);

/** Greedy argmax decoding; equivalent to decode with beam_size 1. */
DecodeResult decode_greedy(const Stepper& stepper, SentenceContext& ctx,
                           const DecodeConfig& cfg);

/**
 * Exhaustive-search oracle: enumerates every terminated sequence with at most
 * depth_limit non-eos tokens and returns the argmax of the adjusted score
 * (ties: lexicographically smallest token sequence). Guarded by
 * vocab_size^depth_limit <= 1e6 (BudgetError).
 */
Hypothesis exhaustive_best(const Stepper& stepper, const SentenceContext& ctx,
                           const ScoringMethod& method, int depth_limit);

}  // namespace beamkit
