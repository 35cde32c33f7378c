#include "laydef/embedding.hpp"

#include <cmath>
#include <set>

#include "laydef/text.hpp"

namespace laydef {

DocumentFrequency DocumentFrequency::build(const std::vector<std::string>& texts) {
  DocumentFrequency out;
  out.documents = texts.size();
  for (const auto& text : texts) {
    auto tokens = tokenize(text);
    std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++out.df[t];
  }
  return out;
}

std::size_t DocumentFrequency::frequency(const std::string& token) const {
  auto it = df.find(token);
  return it == df.end() ? 0 : it->second;
}

EmbeddingVector embed(std::string_view text, const DocumentFrequency& stats) {
  EmbeddingVector v;
  std::map<std::string, int> tf;
  for (auto& t : tokenize(text)) ++tf[std::move(t)];
  const double n = static_cast<double>(stats.documents);
  for (const auto& [token, count] : tf) {
    const double df = static_cast<double>(stats.frequency(token));
    v.weights[token] = count * (std::log((1.0 + n) / (1.0 + df)) + 1.0);
  }
  return v;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [t, w] : a.weights) {
    na += w * w;
    auto it = b.weights.find(t);
    if (it != b.weights.end()) dot += w * it->second;
  }
  for (const auto& [t, w] : b.weights) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

}  // namespace laydef
