#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "beamkit/types.hpp"

namespace beamkit {

// ============================================================================
// Rescoring functions
//
// Raw model score S is the sum of step log-probabilities; every method below
// maps (S, |y|, context) to an adjusted score used only to rank finished
// candidates. |y| counts the terminal eos. All functions require |y| >= 1.
// ============================================================================

struct ScoreBreakdown {
  double raw = 0.0;
  double adjusted = 0.0;
  std::optional<double> l_star;  // effective length bound, when one applies
};

namespace detail {
inline void require_nonempty(const Hypothesis& h) {
  if (h.tokens.empty()) throw ContractError("cannot score an empty hypothesis");
  if (!std::isfinite(h.score)) throw ContractError("hypothesis score must be finite");
}
}  // namespace detail

/** Raw model score, unchanged. */
inline double score_default(const Hypothesis& h) {
  detail::require_nonempty(h);
  return h.score;
}

/** S / |y|. */
inline double score_length_norm(const Hypothesis& h) {
  detail::require_nonempty(h);
  return h.score / static_cast<double>(h.tokens.size());
}

/**
 * Length penalty plus coverage penalty:
 *   S / lp(|y|) + cp,  lp = ((5 + |y|) / 6)^alpha,
 *   cp = beta * sum_j log(min(coverage_j, 1)).
 * beta != 0 requires accumulated attention on the hypothesis.
 */
inline double score_gnmt(const Hypothesis& h, double alpha, double beta) {
  detail::require_nonempty(h);
  const double lp = std::pow((5.0 + static_cast<double>(h.tokens.size())) / 6.0, alpha);
  double cp = 0.0;
  if (beta != 0.0) {
    if (h.coverage_sums.empty())
      throw ContractError("coverage penalty requested but the hypothesis has no attention");
    double acc = 0.0;
    for (double c : h.coverage_sums) acc += std::log(std::min(c, 1.0));
    cp = beta * acc;
  }
  return h.score / lp + cp;
}

/** S + r * |y|. */
inline double score_word_reward(const Hypothesis& h, double r) {
  detail::require_nonempty(h);
  return h.score + r * static_cast<double>(h.tokens.size());
}

/** S + r * min(|y|, L_pred); the bound keeps the reward from growing forever. */
inline double score_bounded_word_reward(const Hypothesis& h, double r, double l_pred) {
  detail::require_nonempty(h);
  return h.score + r * std::min(static_cast<double>(h.tokens.size()), l_pred);
}

/**
 * S + sum of the per-step rewards r_1..r_T with T = floor(min(|y|, L_pred)).
 * rewards[i] is the reward of step i+1. Missing entries are a ContractError.
 */
inline double score_bounded_adaptive_reward(const Hypothesis& h, double l_pred,
                                            std::span<const double> rewards) {
  detail::require_nonempty(h);
  const double bound = std::min(static_cast<double>(h.tokens.size()), l_pred);
  const int upper = static_cast<int>(std::floor(bound));
  if (upper > static_cast<int>(rewards.size()))
    throw ContractError("adaptive reward missing for a step inside the bound");
  double acc = h.score;
  for (int t = 0; t < upper; ++t) acc += rewards[t];
  return acc;
}

/**
 * Brevity-penalty normalization: min(1 - L_pred/|y|, 0) + S/|y|.
 * exp of the result equals bp(|y|, L_pred) times the geometric mean of the
 * token probabilities.
 */
inline double score_bp_norm(const Hypothesis& h, double l_pred) {
  detail::require_nonempty(h);
  const double len = static_cast<double>(h.tokens.size());
  return std::min(1.0 - l_pred / len, 0.0) + h.score / len;
}

/**
 * Per-step adaptive reward: the negated mean of the last step log-probability
 * over the current beam slots. Finished slots contribute the frozen logprob
 * of their terminal eos. Always >= 0 because step logprobs are nonpositive.
 */
inline double adaptive_reward_step(const Beam& beam) {
  if (beam.items.empty()) throw ContractError("adaptive reward of an empty beam");
  double acc = 0.0;
  for (const Hypothesis& h : beam.items) {
    if (h.step_logprobs.empty()) throw ContractError("beam item has no steps");
    acc += h.step_logprobs.back();
  }
  return -acc / static_cast<double>(beam.items.size());
}

/** Adjusted score of h under the given method. */
inline ScoreBreakdown score_breakdown(const ScoringMethod& m, const Hypothesis& h,
                                      const SentenceContext& ctx) {
  ScoreBreakdown out;
  out.raw = h.score;
  switch (m.kind) {
    case Method::default_score:
      out.adjusted = score_default(h);
      break;
    case Method::length_norm:
      out.adjusted = score_length_norm(h);
      break;
    case Method::gnmt:
      out.adjusted = score_gnmt(h, m.alpha, m.beta);
      break;
    case Method::word_reward:
      out.adjusted = score_word_reward(h, m.r);
      break;
    case Method::bounded_word_reward:
      out.adjusted = score_bounded_word_reward(h, m.r, ctx.l_pred);
      out.l_star = std::min(static_cast<double>(h.tokens.size()), ctx.l_pred);
      break;
    case Method::bounded_adaptive_reward:
      out.adjusted = score_bounded_adaptive_reward(h, ctx.l_pred, ctx.adaptive_rewards);
      out.l_star = std::min(static_cast<double>(h.tokens.size()), ctx.l_pred);
      break;
    case Method::bp_norm:
      out.adjusted = score_bp_norm(h, ctx.l_pred);
      break;
  }
  return out;
}

inline double adjusted_score(const ScoringMethod& m, const Hypothesis& h,
                             const SentenceContext& ctx) {
  return score_breakdown(m, h, ctx).adjusted;
}

/** True when the method reads ctx.l_pred. */
inline bool uses_length_prediction(Method kind) {
  return kind == Method::bounded_word_reward || kind == Method::bounded_adaptive_reward ||
         kind == Method::bp_norm;
}

}  // namespace beamkit
