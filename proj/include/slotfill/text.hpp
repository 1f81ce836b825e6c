#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slotfill/tensor.hpp"

namespace slotfill {

/// Tokenize + normalize: whitespace split, leading/trailing punctuation
/// detached into single-character tokens, ASCII lowercasing, every decimal
/// digit replaced by '#'. Idempotent over join+reapply.
std::vector<std::string> preprocess(const std::string& text);

std::string join_tokens(const std::vector<std::string>& tokens);

/// Frozen word-embedding table. Keys are preprocessed token forms; unknown
/// tokens map to a fixed OOV vector.
struct EmbeddingTable {
  std::size_t dim = 0;
  std::map<std::string, std::vector<double>> entries;  // ordered for stable serialization
  std::vector<double> oov_vector;

  const std::vector<double>& vector_for(const std::string& token) const;
};

/// Text format: optional "count dim" header, then one `token v1 .. vdim`
/// line per entry. A "_OOV_" row, if present, becomes the OOV vector;
/// otherwise one is derived deterministically.
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& table, const std::string& path);

/// Embedded token sequence; errors on an empty input (models need >= 1 token).
std::vector<Tensor> lookup(const std::vector<std::string>& tokens, const EmbeddingTable& table);

/// Deterministic pseudo-random table: each token's vector depends only on
/// (token, dim, seed), drawn uniform and normalized to unit length.
EmbeddingTable make_random_table(const std::vector<std::string>& vocab, std::size_t dim,
                                 std::uint64_t seed);

std::uint64_t fnv1a64(const std::string& s);

/// Content hash of a file, hex encoded. Used to pin checkpoints to the
/// embedding table they were trained with.
std::string file_fingerprint(const std::string& path);

}  // namespace slotfill
