#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "beamkit/corpus.hpp"
#include "beamkit/decoder.hpp"
#include "beamkit/errors.hpp"
#include "beamkit/eval.hpp"
#include "beamkit/length_predict.hpp"
#include "beamkit/model.hpp"

namespace {

using beamkit::CorpusRecord;
using beamkit::DecodeConfig;
using beamkit::DecodeResult;
using beamkit::Method;
using beamkit::RatioPredictor;
using beamkit::ScoringMethod;
using beamkit::Stepper;
using beamkit::StoppingRule;
using beamkit::TokenId;
using beamkit::UsageError;

struct ModelFlags {
  std::string kind = "hash";
  std::uint64_t seed = 0;
  std::int32_t vocab = 50;
  double tau = 1.0;
  std::string lattice_path;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--model", f.kind, "model: hash or lattice")
      ->check(CLI::IsMember({"hash", "lattice"}));
  cmd->add_option("--seed", f.seed, "hash model seed");
  cmd->add_option("--vocab", f.vocab, "hash model vocabulary size");
  cmd->add_option("--tau", f.tau, "hash model temperature");
  cmd->add_option("--lattice", f.lattice_path, "lattice JSON path (model=lattice)");
}

std::unique_ptr<Stepper> make_stepper(const ModelFlags& f) {
  if (f.kind == "hash") {
    return std::make_unique<beamkit::HashModel>(
        beamkit::HashModelSpec{f.seed, beamkit::standard_vocab(f.vocab), f.tau});
  }
  if (f.lattice_path.empty()) throw UsageError("model=lattice requires --lattice");
  return std::make_unique<beamkit::TrieLattice>(beamkit::load_lattice(f.lattice_path));
}

StoppingRule parse_stopping(const std::string& name) {
  if (name == "topmost") return StoppingRule::topmost_finished;
  if (name == "b-finished") return StoppingRule::b_finished;
  if (name == "maxlen") return StoppingRule::max_len;
  if (name == "optimal") return StoppingRule::optimal;
  throw UsageError("unknown stopping rule: " + name);
}

bool method_uses_reward(Method kind) {
  return kind == Method::word_reward || kind == Method::bounded_word_reward;
}

bool optimal_rule_exists(Method kind) {
  return kind == Method::bp_norm || kind == Method::length_norm ||
         kind == Method::bounded_adaptive_reward || kind == Method::bounded_word_reward;
}

void require_flag_consistency(Method kind, bool r_given, bool has_grid, StoppingRule stopping) {
  if (method_uses_reward(kind) && !r_given && !has_grid)
    throw UsageError("method '" + beamkit::method_name(kind) + "' requires -r");
  if (stopping == StoppingRule::optimal && !optimal_rule_exists(kind))
    throw UsageError("optimal stopping is not defined for method '" +
                     beamkit::method_name(kind) + "'");
}

RatioPredictor parse_predictor(const std::string& spec,
                               const std::vector<CorpusRecord>& corpus) {
  if (spec.rfind("fixed:", 0) == 0) {
    const std::string arg = spec.substr(6);
    try {
      std::size_t used = 0;
      const double gr = std::stod(arg, &used);
      if (used != arg.size() || gr <= 0.0) throw std::invalid_argument(arg);
      return RatioPredictor::make_fixed(gr);
    } catch (const std::exception&) {
      throw UsageError("bad fixed predictor ratio: " + arg);
    }
  }
  if (spec.rfind("fit:", 0) == 0) {
    const auto fit_corpus = beamkit::load_corpus(spec.substr(4));
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(fit_corpus.size());
    for (const CorpusRecord& rec : fit_corpus)
      pairs.emplace_back(static_cast<int>(rec.src.size()),
                         static_cast<int>(rec.refs.front().size()));
    return RatioPredictor::make_least_squares(pairs);
  }
  if (spec == "oracle") {
    std::map<std::vector<TokenId>, double> table;
    for (const CorpusRecord& rec : corpus)
      table[rec.src] = static_cast<double>(rec.refs.front().size());
    return RatioPredictor::make_oracle(std::move(table));
  }
  throw UsageError("unknown predictor: " + spec + " (expected fixed:GR, fit:PATH, or oracle)");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw beamkit::PathError("cannot write: " + path);
  out << text;
  if (!out) throw beamkit::PathError("failed writing: " + path);
}

// Decoding flags shared by decode and sweep.
struct RunFlags {
  std::string corpus_path;
  std::string method = "default";
  int beam = 4;
  std::string stopping = "maxlen";
  std::string predictor = "fixed:1.0";
  double r = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double max_len_factor = 2.0;
  int max_len_offset = 10;
  int jobs = 1;
  std::string out_path;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool single_method) {
  cmd->add_option("--corpus", f.corpus_path, "input corpus JSONL")->required();
  if (single_method) {
    cmd->add_option("--method", f.method,
                    "default|length-norm|gnmt|word-reward|bwr|adar|bp-norm");
    cmd->add_option("--beam", f.beam, "beam size");
  }
  cmd->add_option("--stopping", f.stopping, "topmost|b-finished|maxlen|optimal");
  cmd->add_option("--predictor", f.predictor, "fixed:GR | fit:PATH | oracle");
  cmd->add_option("-r,--reward", f.r, "word reward");
  cmd->add_option("--alpha", f.alpha, "gnmt length exponent");
  cmd->add_option("--beta", f.beta, "gnmt coverage weight");
  cmd->add_option("--max-len-factor", f.max_len_factor, "max steps = ceil(factor*|x|)+offset");
  cmd->add_option("--max-len-offset", f.max_len_offset, "additive max step slack");
  cmd->add_option("--jobs", f.jobs, "worker threads");
  cmd->add_option("--out", f.out_path, "output path (default stdout)");
}

// One line per sentence: {"tokens", "raw_score", "adjusted_score", "stop_step", "eos_steps"}.
std::string results_jsonl(const std::vector<DecodeResult>& results) {
  std::ostringstream os;
  for (const DecodeResult& res : results) {
    nlohmann::ordered_json j;
    j["tokens"] = res.best.tokens;
    j["raw_score"] = res.best.score;
    j["adjusted_score"] = res.best_adjusted_score;
    j["stop_step"] = res.steps_run;
    j["eos_steps"] = res.eos_step_positions;
    os << j.dump() << '\n';
  }
  return os.str();
}

int run_gen_corpus(const beamkit::GenCorpusSpec& spec, const std::string& out_path) {
  beamkit::save_corpus(out_path, beamkit::gen_corpus(spec));
  return 0;
}

int run_decode(const ModelFlags& mf, const RunFlags& rf, bool r_given,
               const std::string& scatter_path) {
  ScoringMethod method;
  method.kind = beamkit::parse_method_name(rf.method);
  method.r = rf.r;
  method.alpha = rf.alpha;
  method.beta = rf.beta;
  const StoppingRule stopping = parse_stopping(rf.stopping);
  require_flag_consistency(method.kind, r_given, false, stopping);

  const auto corpus = beamkit::load_corpus(rf.corpus_path);
  const auto stepper = make_stepper(mf);
  const RatioPredictor predictor = parse_predictor(rf.predictor, corpus);
  const DecodeConfig cfg{rf.beam, rf.max_len_factor, rf.max_len_offset, stopping};

  const auto results =
      beamkit::decode_corpus(*stepper, corpus, predictor, cfg, method, rf.jobs);
  write_text(rf.out_path, results_jsonl(results));

  if (!scatter_path.empty()) {
    // Pool the finished candidates of every sentence into one scatter.
    DecodeResult pooled;
    for (const DecodeResult& res : results)
      pooled.finished_pool.insert(pooled.finished_pool.end(), res.finished_pool.begin(),
                                  res.finished_pool.end());
    write_text(scatter_path, beamkit::scatter_csv(pooled));
  }
  return 0;
}

int run_sweep(const ModelFlags& mf, const RunFlags& rf, bool r_given,
              const std::vector<std::string>& method_names, const std::vector<int>& beams,
              const std::vector<double>& grid_r) {
  const StoppingRule stopping = parse_stopping(rf.stopping);
  std::vector<ScoringMethod> plain;
  std::vector<ScoringMethod> rewarded;  // swept once per grid point
  for (const std::string& name : method_names) {
    ScoringMethod m;
    m.kind = beamkit::parse_method_name(name);
    m.r = rf.r;
    m.alpha = rf.alpha;
    m.beta = rf.beta;
    require_flag_consistency(m.kind, r_given, !grid_r.empty(), stopping);
    if (method_uses_reward(m.kind) && !grid_r.empty())
      rewarded.push_back(m);
    else
      plain.push_back(m);
  }

  const auto corpus = beamkit::load_corpus(rf.corpus_path);
  const auto stepper = make_stepper(mf);
  const RatioPredictor predictor = parse_predictor(rf.predictor, corpus);
  const DecodeConfig cfg{rf.beam, rf.max_len_factor, rf.max_len_offset, stopping};

  std::vector<beamkit::SweepRow> rows;
  if (!plain.empty()) {
    rows = beamkit::beam_sweep(*stepper, corpus, plain, beams, predictor, cfg, rf.jobs);
  }
  for (const double r : grid_r) {
    for (ScoringMethod m : rewarded) {
      m.r = r;
      auto grid_rows = beamkit::beam_sweep(*stepper, corpus, {m}, beams, predictor, cfg, rf.jobs);
      for (beamkit::SweepRow& row : grid_rows) {
        std::ostringstream tag;
        tag << row.method << "@r=" << r;
        row.method = tag.str();
        rows.push_back(std::move(row));
      }
    }
  }
  write_text(rf.out_path, beamkit::sweep_csv(rows));
  return 0;
}

// Either corpus schema ({"src","refs"}: hypothesis = first ref) or decode
// output schema ({"tokens",...}: hypothesis = tokens, single reference).
void load_bleu_side(const std::string& path, std::vector<beamkit::Sentence>& hyps,
                    std::vector<std::vector<beamkit::Sentence>>& refs) {
  std::ifstream in(path);
  if (!in) throw beamkit::PathError("cannot open: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw beamkit::FormatError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("tokens")) {
      const auto tokens = j["tokens"].get<beamkit::Sentence>();
      hyps.push_back(tokens);
      refs.push_back({tokens});
    } else if (j.contains("refs")) {
      const auto r = j["refs"].get<std::vector<beamkit::Sentence>>();
      if (r.empty())
        throw beamkit::FormatError(path + " line " + std::to_string(lineno) + ": empty refs");
      hyps.push_back(r.front());
      refs.push_back(r);
    } else {
      throw beamkit::FormatError(path + " line " + std::to_string(lineno) +
                                 ": expected tokens or refs");
    }
  }
}

int run_bleu(const std::string& hyp_path, const std::string& ref_path,
             const std::string& out_path) {
  std::vector<beamkit::Sentence> hyps, ref_side_hyps;
  std::vector<std::vector<beamkit::Sentence>> hyp_side_refs, refs;
  load_bleu_side(hyp_path, hyps, hyp_side_refs);
  load_bleu_side(ref_path, ref_side_hyps, refs);
  const beamkit::BleuStats st = beamkit::bleu(hyps, refs);
  nlohmann::ordered_json j;
  j["bleu"] = st.bleu;
  j["bp"] = st.bp;
  j["lr"] = st.lr;
  j["p_n"] = st.p_n;
  j["hyp_len"] = st.hyp_len;
  j["ref_len"] = st.ref_len;
  write_text(out_path, j.dump() + "\n");
  return 0;
}

int run_fit_ratio(const std::string& corpus_path, const std::string& out_path) {
  const auto corpus = beamkit::load_corpus(corpus_path);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(corpus.size());
  for (const CorpusRecord& rec : corpus)
    pairs.emplace_back(static_cast<int>(rec.src.size()),
                       static_cast<int>(rec.refs.front().size()));
  nlohmann::ordered_json j;
  j["gr"] = beamkit::fit_ratio(pairs);
  j["pairs"] = pairs.size();
  write_text(out_path, j.dump() + "\n");
  return 0;
}

int run_stats(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw beamkit::PathError("cannot open: " + in_path);
  std::vector<DecodeResult> results;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw beamkit::FormatError(in_path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    DecodeResult res;
    res.best.tokens = j.at("tokens").get<beamkit::Sentence>();
    res.steps_run = j.at("stop_step").get<int>();
    res.eos_step_positions = j.at("eos_steps").get<std::vector<int>>();
    results.push_back(std::move(res));
  }
  const beamkit::EosStats es = beamkit::eos_stats(results);
  double len_sum = 0.0, step_sum = 0.0;
  for (const DecodeResult& r : results) {
    len_sum += static_cast<double>(r.best.tokens.size());
    step_sum += static_cast<double>(r.steps_run);
  }
  const double n = results.empty() ? 1.0 : static_cast<double>(results.size());
  nlohmann::ordered_json j;
  j["sentences"] = results.size();
  j["mean_len"] = len_sum / n;
  j["mean_stop_step"] = step_sum / n;
  j["eos_mean_steps"] = es.mean_step;
  j["eos_coverage"] = es.coverage;
  write_text(out_path, j.dump() + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beam search decoding over deterministic toy models"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic hash-model corpus");
  beamkit::GenCorpusSpec gen_spec;
  std::string gen_out;
  gen->add_option("--seed", gen_spec.seed, "stream and model seed");
  gen->add_option("-n,--count", gen_spec.n, "number of sentences")->required();
  gen->add_option("--vocab", gen_spec.vocab_size, "vocabulary size");
  gen->add_option("--len-min", gen_spec.len_min, "minimum source length");
  gen->add_option("--len-max", gen_spec.len_max, "maximum source length");
  gen->add_option("--tau", gen_spec.tau, "hash model temperature");
  gen->add_option("--out", gen_out, "output corpus path")->required();

  auto* dec = app.add_subcommand("decode", "beam-decode a corpus");
  ModelFlags dec_model;
  RunFlags dec_run;
  std::string scatter_out;
  add_model_flags(dec, dec_model);
  add_run_flags(dec, dec_run, true);
  dec->add_option("--scatter-out", scatter_out, "write length,score CSV of finished candidates");

  auto* swp = app.add_subcommand("sweep", "decode over a (method, beam) grid, emit CSV");
  ModelFlags swp_model;
  RunFlags swp_run;
  std::vector<std::string> swp_methods{"default"};
  std::vector<int> swp_beams{1, 2, 5, 10, 20, 40};
  std::vector<double> swp_grid_r;
  add_model_flags(swp, swp_model);
  add_run_flags(swp, swp_run, false);
  swp->add_option("--methods", swp_methods, "comma-separated method list")->delimiter(',');
  swp->add_option("--beams", swp_beams, "comma-separated beam sizes")->delimiter(',');
  swp->add_option("--grid-r", swp_grid_r, "sweep reward methods over these r values")
      ->delimiter(',');

  auto* blu = app.add_subcommand("bleu", "corpus BLEU between two JSONL files");
  std::string bleu_hyp, bleu_ref, bleu_out;
  blu->add_option("--hyp", bleu_hyp, "hypothesis side")->required();
  blu->add_option("--ref", bleu_ref, "reference side")->required();
  blu->add_option("--out", bleu_out, "output path (default stdout)");

  auto* fit = app.add_subcommand("fit-ratio", "fit a generation ratio on a corpus");
  std::string fit_corpus, fit_out;
  fit->add_option("--corpus", fit_corpus, "corpus JSONL")->required();
  fit->add_option("--out", fit_out, "output path (default stdout)");

  auto* sta = app.add_subcommand("stats", "eos and length statistics of decode output");
  std::string stats_in, stats_out;
  sta->add_option("--in", stats_in, "decode output JSONL")->required();
  sta->add_option("--out", stats_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return run_gen_corpus(gen_spec, gen_out);
    if (dec->parsed())
      return run_decode(dec_model, dec_run, dec->count("-r") > 0, scatter_out);
    if (swp->parsed())
      return run_sweep(swp_model, swp_run, swp->count("-r") > 0, swp_methods, swp_beams,
                       swp_grid_r);
    if (blu->parsed()) return run_bleu(bleu_hyp, bleu_ref, bleu_out);
    if (fit->parsed()) return run_fit_ratio(fit_corpus, fit_out);
    if (sta->parsed()) return run_stats(stats_in, stats_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
