#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "beamkit/errors.hpp"
#include "beamkit/types.hpp"

namespace beamkit {

// ============================================================================
// Target length prediction
//
// Bounded rewards and bp-norm need an estimate of the target length before
// decoding starts. The estimate is a per-source ratio: either fixed, fitted
// on (source_len, target_len) pairs, or an oracle lookup keyed by the exact
// source token sequence.
// ============================================================================

/**
 * Least-squares ratio through the origin: minimizes sum over pairs of
 * (y - g*x)^2, giving g = sum(x*y) / sum(x^2).
 */
inline double fit_ratio(std::span<const std::pair<int, int>> pairs) {
  if (pairs.empty()) throw ContractError("fit_ratio needs at least one pair");
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [x, y] : pairs) {
    sxy += static_cast<double>(x) * static_cast<double>(y);
    sxx += static_cast<double>(x) * static_cast<double>(x);
  }
  if (sxx == 0.0) throw ContractError("fit_ratio needs a nonzero source length");
  return sxy / sxx;
}

/** Predicts target length from a source sentence. */
struct RatioPredictor {
  enum class Kind { fixed, least_squares, oracle };

  Kind kind = Kind::fixed;
  double gr = 1.0;  // generation ratio, used by fixed and least_squares
  std::map<std::vector<TokenId>, double> table;  // oracle: source tokens -> length

  static RatioPredictor make_fixed(double ratio) {
    RatioPredictor p;
    p.kind = Kind::fixed;
    p.gr = ratio;
    return p;
  }

  static RatioPredictor make_least_squares(std::span<const std::pair<int, int>> pairs) {
    RatioPredictor p;
    p.kind = Kind::least_squares;
    p.gr = fit_ratio(pairs);
    return p;
  }

  static RatioPredictor make_oracle(std::map<std::vector<TokenId>, double> table) {
    RatioPredictor p;
    p.kind = Kind::oracle;
    p.table = std::move(table);
    return p;
  }

  /** Predicted target length L_pred for one source sentence. */
  double predict_length(std::span<const TokenId> source) const {
    if (kind == Kind::oracle) {
      const std::vector<TokenId> key(source.begin(), source.end());
      const auto it = table.find(key);
      if (it == table.end()) throw LookupError("oracle predictor has no entry for source");
      return it->second;
    }
    return gr * static_cast<double>(source.size());
  }
};

}  // namespace beamkit
