#include "beamkit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace beamkit {

namespace {

void require_aligned(const std::vector<Sentence>& hyps,
                     const std::vector<std::vector<Sentence>>& refs) {
  if (hyps.size() != refs.size())
    throw ContractError("hypothesis and reference corpora differ in length");
  for (const auto& r : refs)
    if (r.empty()) throw ContractError("every hypothesis needs at least one reference");
}

// Reference length closest to hyp_len; ties go to the shorter reference.
long long closest_ref_len(std::size_t hyp_len, const std::vector<Sentence>& refs) {
  long long best = -1;
  long long best_gap = std::numeric_limits<long long>::max();
  for (const Sentence& r : refs) {
    const long long len = static_cast<long long>(r.size());
    const long long gap = std::llabs(len - static_cast<long long>(hyp_len));
    if (gap < best_gap || (gap == best_gap && len < best)) {
      best_gap = gap;
      best = len;
    }
  }
  return best;
}

using NgramCounts = std::map<std::vector<TokenId>, long long>;

NgramCounts count_ngrams(const Sentence& s, int n) {
  NgramCounts out;
  if (static_cast<int>(s.size()) < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i)
    out[std::vector<TokenId>(s.begin() + i, s.begin() + i + n)] += 1;
  return out;
}

std::string format_real(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

}  // namespace

std::array<double, 4> ngram_precisions(const std::vector<Sentence>& hyps,
                                       const std::vector<std::vector<Sentence>>& refs) {
  require_aligned(hyps, refs);
  std::array<double, 4> out{};
  for (int n = 1; n <= 4; ++n) {
    long long matched = 0;
    long long total = 0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      const NgramCounts hyp_counts = count_ngrams(hyps[i], n);
      NgramCounts ref_max;
      for (const Sentence& r : refs[i])
        for (const auto& [gram, count] : count_ngrams(r, n))
          ref_max[gram] = std::max(ref_max[gram], count);
      for (const auto& [gram, count] : hyp_counts) {
        total += count;
        const auto it = ref_max.find(gram);
        if (it != ref_max.end()) matched += std::min(count, it->second);
      }
    }
    out[n - 1] = total > 0 ? static_cast<double>(matched) / static_cast<double>(total) : 0.0;
  }
  return out;
}

double brevity_penalty(long long hyp_len, long long ref_len) {
  if (hyp_len < 1 || ref_len < 1) throw ContractError("lengths must be positive");
  const double lr = static_cast<double>(hyp_len) / static_cast<double>(ref_len);
  return std::min(std::exp(1.0 - 1.0 / lr), 1.0);
}

BleuStats bleu(const std::vector<Sentence>& hyps,
               const std::vector<std::vector<Sentence>>& refs) {
  require_aligned(hyps, refs);
  BleuStats st;
  st.p_n = ngram_precisions(hyps, refs);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    st.hyp_len += static_cast<long long>(hyps[i].size());
    st.ref_len += closest_ref_len(hyps[i].size(), refs[i]);
  }
  if (st.hyp_len < 1 || st.ref_len < 1)
    throw ContractError("corpus BLEU needs nonempty hypotheses and references");
  st.lr = static_cast<double>(st.hyp_len) / static_cast<double>(st.ref_len);
  st.bp = brevity_penalty(st.hyp_len, st.ref_len);
  const bool any_zero =
      std::any_of(st.p_n.begin(), st.p_n.end(), [](double p) { return p <= 0.0; });
  if (any_zero) {
    st.bleu = 0.0;
  } else {
    double log_sum = 0.0;
    for (double p : st.p_n) log_sum += std::log(p);
    st.bleu = st.bp * std::exp(log_sum / 4.0);
  }
  return st;
}

double corpus_ratio(const std::vector<Sentence>& hyps,
                    const std::vector<std::vector<Sentence>>& refs) {
  require_aligned(hyps, refs);
  long long hyp_len = 0;
  long long ref_len = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    hyp_len += static_cast<long long>(hyps[i].size());
    ref_len += closest_ref_len(hyps[i].size(), refs[i]);
  }
  if (ref_len < 1) throw ContractError("corpus ratio needs nonempty references");
  return static_cast<double>(hyp_len) / static_cast<double>(ref_len);
}

EosStats eos_stats(const std::vector<DecodeResult>& results) {
  EosStats st;
  std::array<double, 3> sums{};
  for (const DecodeResult& r : results) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (r.eos_step_positions.size() > k) {
        sums[k] += static_cast<double>(r.eos_step_positions[k]);
        st.coverage[k] += 1;
      }
    }
  }
  for (std::size_t k = 0; k < 3; ++k)
    st.mean_step[k] = st.coverage[k] > 0 ? sums[k] / st.coverage[k] : 0.0;
  return st;
}

std::vector<std::pair<int, double>> length_score_scatter(const DecodeResult& result) {
  std::vector<std::pair<int, double>> out;
  out.reserve(result.finished_pool.size());
  for (const ScoredHypothesis& s : result.finished_pool)
    out.emplace_back(static_cast<int>(s.hyp.tokens.size()), s.hyp.score);
  return out;
}

std::string scatter_csv(const DecodeResult& result) {
  std::ostringstream os;
  os << "length,score\n";
  for (const auto& [len, score] : length_score_scatter(result))
    os << len << ',' << format_real(score) << '\n';
  return os.str();
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractError("spearman needs equal-length inputs");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;

  const auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return v[i] < v[j];
    });
    std::vector<double> out(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) out[order[k]] = avg;
      i = j + 1;
    }
    return out;
  };

  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

std::string method_name(Method kind) {
  switch (kind) {
    case Method::default_score: return "default";
    case Method::length_norm: return "length-norm";
    case Method::gnmt: return "gnmt";
    case Method::word_reward: return "word-reward";
    case Method::bounded_word_reward: return "bwr";
    case Method::bounded_adaptive_reward: return "adar";
    case Method::bp_norm: return "bp-norm";
  }
  throw ContractError("unknown scoring method");
}

Method parse_method_name(const std::string& name) {
  if (name == "default") return Method::default_score;
  if (name == "length-norm") return Method::length_norm;
  if (name == "gnmt") return Method::gnmt;
  if (name == "word-reward") return Method::word_reward;
  if (name == "bwr") return Method::bounded_word_reward;
  if (name == "adar") return Method::bounded_adaptive_reward;
  if (name == "bp-norm") return Method::bp_norm;
  throw UsageError("unknown method: " + name);
}

SentenceContext make_context(const std::vector<TokenId>& source,
                             const RatioPredictor& predictor, const ScoringMethod& method,
                             const DecodeConfig& cfg) {
  SentenceContext ctx;
  ctx.source_tokens = source;
  ctx.max_len = max_steps(cfg, source.size());
  if (uses_length_prediction(method.kind)) ctx.l_pred = predictor.predict_length(source);
  return ctx;
}

std::vector<DecodeResult> decode_corpus(const Stepper& stepper,
                                        const std::vector<CorpusRecord>& corpus,
                                        const RatioPredictor& predictor,
                                        const DecodeConfig& cfg, const ScoringMethod& method,
                                        int jobs) {
  if (jobs < 1) throw ContractError("jobs must be positive");
  std::vector<DecodeResult> results(corpus.size());

  const auto decode_one = [&](std::size_t i) {
    SentenceContext ctx = make_context(corpus[i].src, predictor, method, cfg);
    results[i] = decode(stepper, ctx, cfg, method);
  };

  const std::size_t n = corpus.size();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) decode_one(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          decode_one(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

std::vector<SweepRow> beam_sweep(const Stepper& stepper,
                                 const std::vector<CorpusRecord>& corpus,
                                 const std::vector<ScoringMethod>& methods,
                                 const std::vector<int>& beams, const RatioPredictor& predictor,
                                 const DecodeConfig& cfg, int jobs) {
  if (beams.empty()) throw ContractError("sweep needs at least one beam size");
  std::vector<std::vector<Sentence>> refs;
  refs.reserve(corpus.size());
  for (const CorpusRecord& rec : corpus) refs.push_back(rec.refs);

  std::vector<SweepRow> rows;
  rows.reserve(methods.size() * beams.size());
  for (const ScoringMethod& method : methods) {
    for (const int b : beams) {
      DecodeConfig run_cfg = cfg;
      run_cfg.beam_size = b;
      const std::vector<DecodeResult> results =
          decode_corpus(stepper, corpus, predictor, run_cfg, method, jobs);

      std::vector<Sentence> hyps;
      hyps.reserve(results.size());
      double len_sum = 0.0, step_sum = 0.0;
      for (const DecodeResult& r : results) {
        hyps.push_back(r.best.tokens);
        len_sum += static_cast<double>(r.best.tokens.size());
        step_sum += static_cast<double>(r.steps_run);
      }
      const BleuStats bs = bleu(hyps, refs);
      const EosStats es = eos_stats(results);

      SweepRow row;
      row.method = method_name(method.kind);
      row.beam = b;
      row.bleu = bs.bleu;
      row.lr = bs.lr;
      row.bp = bs.bp;
      row.mean_len = len_sum / static_cast<double>(results.size());
      row.mean_stop_step = step_sum / static_cast<double>(results.size());
      row.mean_first_eos = es.mean_step[0];
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "method,beam,bleu,lr,bp,mean_len,mean_stop_step,mean_first_eos\n";
  for (const SweepRow& r : rows) {
    os << r.method << ',' << r.beam << ',' << format_real(r.bleu) << ',' << format_real(r.lr)
       << ',' << format_real(r.bp) << ',' << format_real(r.mean_len) << ','
       << format_real(r.mean_stop_step) << ',' << format_real(r.mean_first_eos) << '\n';
  }
  return os.str();
}

}  // namespace beamkit
