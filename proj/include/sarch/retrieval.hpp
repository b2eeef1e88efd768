#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sarch/embedding.hpp"
#include "sarch/index.hpp"

namespace sarch::retrieval {

using index::UnitId;

enum class Pipeline { Keyword, Embedding, Hybrid };

std::string_view to_string(Pipeline p);
std::optional<Pipeline> parse_pipeline(std::string_view s);

inline constexpr std::array<Pipeline, 3> kAllPipelines = {Pipeline::Keyword, Pipeline::Embedding,
                                                          Pipeline::Hybrid};

struct Query {
  std::string text;
  Modality modality = Modality::Text;
  Pipeline pipeline = Pipeline::Hybrid;
  std::size_t k = 10;
};

struct RankedEntry {
  UnitId unit_id = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
  bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
  std::vector<RankedEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  bool operator==(const RankedList&) const = default;

  /// Assigns ranks 1..n in order.
  static RankedList from_scored(const std::vector<index::ScoredUnit>& scored);
};

struct RrfParams {
  double k_rrf = 60.0;
};

using Stopwords = std::set<std::string, std::less<>>;

/// The shipped English list.
const Stopwords& default_stopwords();
/// One word per line; '#' starts a comment.
Stopwords load_stopwords(const std::string& path);

/// Lowercase tokens minus stopwords, order and duplicates kept. Falls back to
/// all tokens when every token is a stopword.
std::vector<std::string> extract_keywords(std::string_view query_text, const Stopwords& stopwords);

/// Store for the requested modality is absent from the index.
class MissingStoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query-ready index: immutable corpus plus the provider and settings used
/// to answer queries against it.
struct Engine {
  std::shared_ptr<const index::CorpusIndex> corpus;
  std::shared_ptr<const embed::EmbeddingProvider> provider;
  Stopwords stopwords = default_stopwords();
  index::Bm25Params bm25;
  RrfParams rrf;
  std::size_t candidate_depth = 50;
};

RankedList run_keyword(const Query& q, const Engine& engine);
RankedList run_embedding(const Query& q, const Engine& engine);

/// sum over lists of 1 / (k_rrf + rank), descending, ties by unit_id, top k.
RankedList rrf_fuse(const std::vector<RankedList>& lists, const RrfParams& params, std::size_t k);

/// Fused keyword + embedding lists at depth max(k, candidate_depth), before truncation.
RankedList hybrid_candidates(const Query& q, const Engine& engine);
RankedList run_hybrid(const Query& q, const Engine& engine);

/// Dispatches on q.pipeline.
RankedList run_query(const Query& q, const Engine& engine);

}  // namespace sarch::retrieval
