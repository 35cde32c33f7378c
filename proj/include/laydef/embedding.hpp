#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace laydef {

// Sparse token -> weight vector.
struct EmbeddingVector {
  std::map<std::string, double> weights;

  bool empty() const { return weights.empty(); }
};

// Number of documents and, per token, how many documents contain it.
struct DocumentFrequency {
  std::size_t documents = 0;
  std::map<std::string, std::size_t> df;

  static DocumentFrequency build(const std::vector<std::string>& texts);
  std::size_t frequency(const std::string& token) const;
};

/// tf * (ln((1 + N) / (1 + df)) + 1) per token.
EmbeddingVector embed(std::string_view text, const DocumentFrequency& stats);

/// 0 when either side has zero norm.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Anything that maps text to a vector. Implementations must be safe to call
// concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

class BagOfWordsEmbedder final : public Embedder {
 public:
  explicit BagOfWordsEmbedder(DocumentFrequency stats) : stats_(std::move(stats)) {}

  EmbeddingVector embed(std::string_view text) const override { return laydef::embed(text, stats_); }
  const DocumentFrequency& stats() const { return stats_; }

 private:
  DocumentFrequency stats_;
};

}  // namespace laydef
