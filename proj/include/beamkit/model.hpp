#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "beamkit/types.hpp"

namespace beamkit {

// ============================================================================
// Stepper interface
// ============================================================================

/** Logprob for a token with no arc at the current lattice node. */
inline constexpr double absent_logprob = -1e30;

/** Candidates at or below this are treated as absent, never expanded. */
inline constexpr double absent_threshold = -1e29;

struct StepResult {
  std::vector<double> logprobs;   // one entry per vocab id
  std::vector<double> attention;  // one entry per source position, or empty
};

/**
 * A conditional next-token distribution p(. | source, prefix). Implementations
 * are immutable after construction and safe to share across threads. step()
 * must be a pure function of its arguments.
 */
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual const Vocab& vocab() const = 0;
  virtual StepResult step(std::span<const TokenId> source,
                          std::span<const TokenId> prefix) const = 0;
};

// ============================================================================
// Hash model
// ============================================================================

/**
 * Parameters of the keyed-hash language model. Non-eos logits are uniform
 * hash noise in [0, 1/tau); the eos logit is an affine ramp in the prefix
 * length, shifted by the source length so that generated lengths track |x|:
 *
 *   raw_eos = eos_base + eos_slope * (|prefix| - |source|)
 *
 * With the defaults the ramp crosses the top of the noise band roughly
 * 11-12 steps past |x|, which makes greedy output length an increasing
 * function of source length.
 */
struct HashModelSpec {
  std::uint64_t seed = 0;
  Vocab vocab;
  double tau = 1.0;
  double eos_base = -3.0;
  double eos_slope = 0.35;
};

/**
 * Deterministic stand-in for a trained translator. The conditional
 * distribution is derived from a splitmix64 chain keyed on (seed, source,
 * prefix), so identical inputs give bit-identical log-probabilities on every
 * platform with IEEE doubles. Attention is uniform over source positions.
 */
class HashModel final : public Stepper {
 public:
  explicit HashModel(HashModelSpec spec);

  const Vocab& vocab() const override { return spec_.vocab; }
  StepResult step(std::span<const TokenId> source,
                  std::span<const TokenId> prefix) const override;

  /** Raw eos logit before the softmax; exposed for ramp tests. */
  double eos_logit(std::size_t prefix_len, std::size_t source_len) const;

  const HashModelSpec& spec() const { return spec_; }

 private:
  HashModelSpec spec_;
};

// ============================================================================
// Trie lattice
// ============================================================================

struct TrieNode;

struct TrieArc {
  double logprob = 0.0;
  std::unique_ptr<TrieNode> child;  // null exactly for eos
};

struct TrieNode {
  std::map<TokenId, TrieArc> arcs;  // ordered by token id for determinism
};

/**
 * An explicit finite distribution over output sequences, stored as a trie.
 * Each node carries arcs token -> (logprob, child); eos arcs are childless
 * and other arcs always have a child, so every stored prefix has a
 * distribution and every path terminates by the maximum depth.
 */
class TrieLattice final : public Stepper {
 public:
  TrieLattice(Vocab vocab, std::unique_ptr<TrieNode> root, int depth)
      : vocab_(vocab), root_(std::move(root)), depth_(depth) {}

  const Vocab& vocab() const override { return vocab_; }

  /** Throws PathError when prefix is not a path in the lattice. */
  StepResult step(std::span<const TokenId> source,
                  std::span<const TokenId> prefix) const override;

  /** Longest root-to-node arc count. */
  int depth() const { return depth_; }

  /**
   * Build from a serialized document. Validates the schema, id ranges,
   * childless eos arcs, and per-node probability mass: nodes off by at most
   * 1e-6 are renormalized, anything further off is a ValidationError.
   */
  static TrieLattice parse(const std::string& json_text);

 private:
  Vocab vocab_;
  std::unique_ptr<TrieNode> root_;
  int depth_ = 0;
};

/** Read and parse a lattice file. PathError if unreadable. */
TrieLattice load_lattice(const std::string& path);

}  // namespace beamkit
