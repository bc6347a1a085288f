#include "beamkit/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace beamkit {

namespace {

// Lightweight pool entry; hypotheses are materialized only for the survivors.
struct Candidate {
  double score;
  int parent_rank;
  TokenId token;  // -1 marks a carried finished item
  bool carried;
};

bool candidate_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.parent_rank != b.parent_rank) return a.parent_rank < b.parent_rank;
  return a.token < b.token;
}

bool optimal_rule_exists(Method kind) {
  return kind == Method::bp_norm || kind == Method::length_norm ||
         kind == Method::bounded_adaptive_reward || kind == Method::bounded_word_reward;
}

}  // namespace

Beam expand_beam(const Beam& beam, const Stepper& stepper, const SentenceContext& ctx,
                 int beam_size) {
  if (beam.items.empty()) throw ContractError("cannot expand an empty beam");
  if (beam_size < 1) throw ContractError("beam size must be positive");

  const std::int32_t vsize = stepper.vocab().size;
  std::vector<Candidate> pool;
  std::vector<StepResult> steps(beam.items.size());
  for (int rank = 0; rank < static_cast<int>(beam.items.size()); ++rank) {
    const Hypothesis& h = beam.items[rank];
    if (h.finished) {
      pool.push_back({h.score, rank, -1, true});
      continue;
    }
    steps[rank] = stepper.step(ctx.source_tokens, h.tokens);
    const auto& lp = steps[rank].logprobs;
    for (TokenId v = 0; v < vsize; ++v) {
      if (lp[v] <= absent_threshold) continue;
      pool.push_back({h.score + lp[v], rank, v, false});
    }
  }
  if (pool.empty()) throw DeadEndError("no viable extension of any beam item");

  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(beam_size), pool.size());
  std::partial_sort(pool.begin(), pool.begin() + keep, pool.end(), candidate_before);

  Beam out;
  out.step = beam.step + 1;
  out.items.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const Candidate& c = pool[i];
    if (c.carried) {
      out.items.push_back(beam.items[c.parent_rank]);
    } else {
      const StepResult& sr = steps[c.parent_rank];
      out.items.push_back(extend(beam.items[c.parent_rank], c.token, sr.logprobs[c.token],
                                 stepper.vocab().eos_id, sr.attention));
    }
  }
  return out;
}

DecodeResult decode(const Stepper& stepper, SentenceContext& ctx, const DecodeConfig& cfg,
                    const ScoringMethod& method) {
  const int max_len = max_steps(cfg, ctx.source_tokens.size());
  ctx.max_len = max_len;
  if (cfg.stopping == StoppingRule::optimal && !optimal_rule_exists(method.kind))
    throw ContractError("no optimal stopping rule exists for this scoring method");

  const bool adaptive = method.kind == Method::bounded_adaptive_reward;
  if (adaptive) ctx.adaptive_rewards.clear();

  DecodeResult res;
  StopState st;

  auto admit = [&](const Hypothesis& h, int t) {
    const double adj = adjusted_score(method, h, ctx);
    res.finished_pool.push_back({h, adj});
    res.eos_step_positions.push_back(t);
    st.finished_count += 1;
    if (!st.best_finished || adj > *st.best_finished) {
      st.best_finished = adj;
      res.best = h;
      res.best_adjusted_score = adj;
    }
  };

  Beam beam;
  beam.items.emplace_back();  // empty prefix

  for (int t = 1; t <= max_len; ++t) {
    beam = expand_beam(beam, stepper, ctx, cfg.beam_size);
    if (adaptive) ctx.adaptive_rewards.push_back(adaptive_reward_step(beam));

    // A hypothesis finished this step iff it has exactly t tokens: unfinished
    // items grow one token per step, carried items are strictly shorter.
    for (const Hypothesis& h : beam.items) {
      if (h.finished && static_cast<int>(h.tokens.size()) == t) admit(h, t);
    }

    st.t = t;
    st.s_t0 = beam.items.front().score;
    res.steps_run = t;

    bool stop = false;
    switch (cfg.stopping) {
      case StoppingRule::topmost_finished:
        stop = should_stop_topmost(beam);
        break;
      case StoppingRule::b_finished:
        stop = should_stop_b_finished(st, cfg.beam_size);
        break;
      case StoppingRule::max_len:
        break;
      case StoppingRule::optimal:
        if (st.best_finished) {
          switch (method.kind) {
            case Method::bp_norm:
            case Method::length_norm:
              stop = should_stop_optimal_bp_norm(st, ctx);
              break;
            case Method::bounded_adaptive_reward:
              stop = should_stop_optimal_adar(st, ctx);
              break;
            case Method::bounded_word_reward:
              stop = should_stop_optimal_bwr(st, ctx, method.r);
              break;
            default:
              break;  // rejected on entry
          }
        }
        break;
    }
    if (stop) break;

    if (cfg.stopping != StoppingRule::max_len) {
      const bool all_finished = std::all_of(beam.items.begin(), beam.items.end(),
                                            [](const Hypothesis& h) { return h.finished; });
      if (all_finished) break;
    }
  }

  if (res.finished_pool.empty()) {
    // Nothing finished within the budget: force-terminate the top candidate.
    // Every finished beam item is already in the pool, so the top is unfinished.
    const Hypothesis& top = beam.items.front();
    const TokenId eos = stepper.vocab().eos_id;
    const StepResult sr = stepper.step(ctx.source_tokens, top.tokens);
    Hypothesis forced = extend(top, eos, sr.logprobs[eos], eos, sr.attention);
    if (adaptive) {
      // The forced append is one more step over a one-item beam, so it carries
      // a reward entry like any other step; without it a predicted length
      // beyond the budget would reach past the reward vector.
      Beam last;
      last.items.push_back(forced);
      ctx.adaptive_rewards.push_back(adaptive_reward_step(last));
    }
    admit(forced, res.steps_run);
  }
  return res;
}

DecodeResult decode_greedy(const Stepper& stepper, SentenceContext& ctx,
                           const DecodeConfig& cfg) {
  const int max_len = max_steps(cfg, ctx.source_tokens.size());
  ctx.max_len = max_len;
  const TokenId eos = stepper.vocab().eos_id;
  const std::int32_t vsize = stepper.vocab().size;

  Hypothesis h;
  int t = 0;
  while (!h.finished && t < max_len) {
    const StepResult sr = stepper.step(ctx.source_tokens, h.tokens);
    TokenId arg = -1;
    double best_lp = 0.0;
    for (TokenId v = 0; v < vsize; ++v) {
      if (sr.logprobs[v] <= absent_threshold) continue;
      if (arg < 0 || sr.logprobs[v] > best_lp) {
        arg = v;
        best_lp = sr.logprobs[v];
      }
    }
    if (arg < 0) throw DeadEndError("no viable extension of the greedy prefix");
    h = extend(h, arg, best_lp, eos, sr.attention);
    ++t;
  }
  if (!h.finished) {
    const StepResult sr = stepper.step(ctx.source_tokens, h.tokens);
    h = extend(h, eos, sr.logprobs[eos], eos, sr.attention);
  }

  DecodeResult res;
  res.best = h;
  res.best_adjusted_score = h.score;
  res.finished_pool.push_back({h, h.score});
  res.steps_run = t;
  res.eos_step_positions.push_back(t);
  return res;
}

namespace {

struct ExhaustiveSearch {
  const Stepper& stepper;
  const SentenceContext& ctx;
  const ScoringMethod& method;
  int depth_limit;

  bool have = false;
  double best_adj = 0.0;
  Hypothesis best{};

  void visit(const Hypothesis& prefix) {
    const StepResult sr = stepper.step(ctx.source_tokens, prefix.tokens);
    const Vocab& vocab = stepper.vocab();
    if (sr.logprobs[vocab.eos_id] > absent_threshold) {
      Hypothesis done =
          extend(prefix, vocab.eos_id, sr.logprobs[vocab.eos_id], vocab.eos_id, sr.attention);
      const double adj = adjusted_score(method, done, ctx);
      if (!have || adj > best_adj || (adj == best_adj && done.tokens < best.tokens)) {
        have = true;
        best_adj = adj;
        best = std::move(done);
      }
    }
    if (static_cast<int>(prefix.tokens.size()) >= depth_limit) return;
    for (TokenId v = 0; v < vocab.size; ++v) {
      if (v == vocab.eos_id) continue;
      if (sr.logprobs[v] <= absent_threshold) continue;
      visit(extend(prefix, v, sr.logprobs[v], vocab.eos_id, sr.attention));
    }
  }
};

}  // namespace

Hypothesis exhaustive_best(const Stepper& stepper, const SentenceContext& ctx,
                           const ScoringMethod& method, int depth_limit) {
  if (depth_limit < 0) throw ContractError("depth limit must be nonnegative");
  const double leaves =
      std::pow(static_cast<double>(stepper.vocab().size), static_cast<double>(depth_limit));
  if (leaves > 1e6) throw BudgetError("exhaustive search space exceeds the budget");

  ExhaustiveSearch search{stepper, ctx, method, depth_limit};
  search.visit(Hypothesis{});
  if (!search.have) throw DeadEndError("no terminated sequence within the depth limit");
  return search.best;
}

}  // namespace beamkit
