#pragma once

#include <cmath>
#include <optional>

#include "beamkit/types.hpp"

namespace beamkit {

// ============================================================================
// Stopping predicates
//
// The decode loop evaluates one of these after every expansion. The optimal
// rules compare an upper bound on every future finished candidate against the
// best finished score seen so far, so firing can never change the returned
// result; the bounds rely on step logprobs being nonpositive.
// ============================================================================

/** Rolling state the decoder maintains for stopping decisions. */
struct StopState {
  std::optional<double> best_finished;  // best adjusted finished score so far
  int finished_count = 0;               // finished candidates admitted to the beam
  int t = 0;                            // current step, 1-based
  double s_t0 = 0.0;                    // raw score of the top beam slot
};

/** Default criterion: the top beam slot holds a finished hypothesis. */
inline bool should_stop_topmost(const Beam& beam) {
  if (beam.items.empty()) return true;  // nothing can ever be extended
  return beam.items.front().finished;
}

/** Stop once beam_size finished candidates have been admitted. */
inline bool should_stop_b_finished(const StopState& st, int beam_size) {
  if (beam_size < 1) throw ContractError("beam size must be positive");
  return st.finished_count >= beam_size;
}

namespace detail {
inline double require_best(const StopState& st) {
  if (!st.best_finished)
    throw ContractError("optimal stopping checked with no finished candidate");
  return *st.best_finished;
}
}  // namespace detail

/**
 * Optimal rule for bp-norm (and, with the corresponding best score, for
 * length-norm): every future candidate scores at most S_t0 / R, so stop as
 * soon as S_t0 / R <= best. Equality is safe because a later candidate that
 * only ties loses the earliest-found tie-break.
 */
inline bool should_stop_optimal_bp_norm(const StopState& st, const SentenceContext& ctx) {
  const double best = detail::require_best(st);
  if (ctx.max_len < 1) throw ContractError("context max_len not set");
  return st.s_t0 / static_cast<double>(ctx.max_len) <= best;
}

/**
 * Optimal rule for the bounded adaptive reward: past L_pred the reward sum is
 * frozen, so once the top raw score plus that frozen sum drops below the best
 * finished score nothing can improve.
 */
inline bool should_stop_optimal_adar(const StopState& st, const SentenceContext& ctx) {
  const double best = detail::require_best(st);
  if (static_cast<double>(st.t) <= ctx.l_pred) return false;
  const int upper = static_cast<int>(std::floor(ctx.l_pred));
  if (upper > static_cast<int>(ctx.adaptive_rewards.size()))
    throw ContractError("adaptive reward missing for a step inside the bound");
  double bound = st.s_t0;
  for (int i = 0; i < upper; ++i) bound += ctx.adaptive_rewards[i];
  return bound < best;
}

/**
 * Optimal rule for the bounded word reward: future candidates earn at most
 * r * L_pred of reward on top of a raw score that can only fall below S_t0.
 */
inline bool should_stop_optimal_bwr(const StopState& st, const SentenceContext& ctx, double r) {
  const double best = detail::require_best(st);
  return best >= st.s_t0 + r * ctx.l_pred;
}

}  // namespace beamkit
