#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "beamkit/corpus.hpp"
#include "beamkit/decoder.hpp"
#include "beamkit/length_predict.hpp"
#include "beamkit/types.hpp"

namespace beamkit {

// ============================================================================
// Evaluation: corpus BLEU, length diagnostics, and beam sweeps
// ============================================================================

using Sentence = std::vector<TokenId>;

/**
 * Corpus BLEU in the multi-bleu style: clipped n-gram counts pooled over the
 * corpus, per-sentence reference length chosen closest to the hypothesis
 * length (ties to the shorter), zero score when any precision is zero.
 */
struct BleuStats {
  std::array<double, 4> p_n{};  // clipped n-gram precisions, n = 1..4
  double bp = 0.0;              // brevity penalty
  double lr = 0.0;              // corpus length ratio
  double bleu = 0.0;
  long long hyp_len = 0;
  long long ref_len = 0;  // sum of closest reference lengths
};

/** Corpus-pooled clipped n-gram precisions for n = 1..4. */
std::array<double, 4> ngram_precisions(const std::vector<Sentence>& hyps,
                                       const std::vector<std::vector<Sentence>>& refs);

/** min(e^{1 - 1/lr}, 1) with lr = hyp_len / ref_len; both lengths >= 1. */
double brevity_penalty(long long hyp_len, long long ref_len);

BleuStats bleu(const std::vector<Sentence>& hyps,
               const std::vector<std::vector<Sentence>>& refs);

/** Corpus length ratio: total hypothesis length over total closest-ref length. */
double corpus_ratio(const std::vector<Sentence>& hyps,
                    const std::vector<std::vector<Sentence>>& refs);

/**
 * Mean admission step of the first, second, and third finished candidates.
 * Sentences with fewer finished candidates skip the missing slots; coverage
 * counts how many sentences contributed to each slot (mean is 0 at coverage 0).
 */
struct EosStats {
  std::array<double, 3> mean_step{};
  std::array<int, 3> coverage{};
};

EosStats eos_stats(const std::vector<DecodeResult>& results);

/** One (length, raw score) pair per finished candidate. */
std::vector<std::pair<int, double>> length_score_scatter(const DecodeResult& result);

/** The scatter as CSV with header `length,score`. */
std::string scatter_csv(const DecodeResult& result);

/**
 * Spearman rank correlation with average ranks on ties. Returns 0 when either
 * side has no rank variance.
 */
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/** Canonical method names used by the CLI and the sweep CSV. */
std::string method_name(Method kind);
Method parse_method_name(const std::string& name);

/** Per-sentence context: source, predicted length when the method needs one. */
SentenceContext make_context(const std::vector<TokenId>& source,
                             const RatioPredictor& predictor, const ScoringMethod& method,
                             const DecodeConfig& cfg);

/**
 * Decode every corpus sentence, optionally on several threads. Results are
 * stored by input index, so the output is identical for any jobs >= 1.
 */
std::vector<DecodeResult> decode_corpus(const Stepper& stepper,
                                        const std::vector<CorpusRecord>& corpus,
                                        const RatioPredictor& predictor,
                                        const DecodeConfig& cfg, const ScoringMethod& method,
                                        int jobs = 1);

struct SweepRow {
  std::string method;
  int beam = 0;
  double bleu = 0.0;
  double lr = 0.0;
  double bp = 0.0;
  double mean_len = 0.0;
  double mean_stop_step = 0.0;
  double mean_first_eos = 0.0;
};

/** Decode the corpus once per (method, beam) pair and aggregate the metrics. */
std::vector<SweepRow> beam_sweep(const Stepper& stepper,
                                 const std::vector<CorpusRecord>& corpus,
                                 const std::vector<ScoringMethod>& methods,
                                 const std::vector<int>& beams, const RatioPredictor& predictor,
                                 const DecodeConfig& cfg, int jobs = 1);

/** The sweep as CSV: `method,beam,bleu,lr,bp,mean_len,mean_stop_step,mean_first_eos`. */
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace beamkit
