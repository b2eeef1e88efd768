#include "sarch/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <map>

#include "sarch/text.hpp"

namespace sarch::retrieval {

std::string_view to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Keyword: return "keyword";
    case Pipeline::Embedding: return "embedding";
    case Pipeline::Hybrid: return "hybrid";
  }
  return "hybrid";
}

std::optional<Pipeline> parse_pipeline(std::string_view s) {
  if (s == "keyword") return Pipeline::Keyword;
  if (s == "embedding") return Pipeline::Embedding;
  if (s == "hybrid") return Pipeline::Hybrid;
  return std::nullopt;
}

RankedList RankedList::from_scored(const std::vector<index::ScoredUnit>& scored) {
  RankedList out;
  out.entries.reserve(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i)
    out.entries.push_back({scored[i].unit_id, scored[i].score, i + 1});
  return out;
}

const Stopwords& default_stopwords() {
  static const Stopwords kWords = {
      "a",        "about",   "above",   "after",   "again",  "against", "all",     "am",
      "an",       "and",     "any",     "are",     "as",     "at",      "be",      "because",
      "been",     "before",  "being",   "below",   "between", "both",   "but",     "by",
      "can",      "could",   "did",     "do",      "does",   "doing",   "down",    "during",
      "each",     "few",     "for",     "from",    "further", "had",    "has",     "have",
      "having",   "he",      "her",     "here",    "hers",   "herself", "him",     "himself",
      "his",      "how",     "i",       "if",      "in",     "into",    "is",      "it",
      "its",      "itself",  "just",    "me",      "more",   "most",    "my",      "myself",
      "no",       "nor",     "not",     "now",     "of",     "off",     "on",      "once",
      "only",     "or",      "other",   "our",     "ours",   "ourselves", "out",   "over",
      "own",      "s",       "same",    "she",     "should", "so",      "some",    "such",
      "t",        "than",    "that",    "the",     "their",  "theirs",  "them",    "themselves",
      "then",     "there",   "these",   "they",    "this",   "those",   "through", "to",
      "too",      "under",   "until",   "up",      "very",   "vs",      "was",     "we",
      "were",     "what",    "when",    "where",   "which",  "while",   "who",     "whom",
      "why",      "will",    "with",    "would",   "you",    "your",    "yours",   "yourself",
      "yourselves"};
  return kWords;
}

Stopwords load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file '" + path + "'");
  Stopwords out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    for (auto& tok : text::tokenize(line)) out.insert(std::move(tok));
  }
  return out;
}

std::vector<std::string> extract_keywords(std::string_view query_text, const Stopwords& stopwords) {
  auto tokens = text::tokenize(query_text);
  std::vector<std::string> kept;
  for (const auto& t : tokens)
    if (!stopwords.contains(t)) kept.push_back(t);
  return kept.empty() ? tokens : kept;
}

namespace {

void check_query(const Query& q) {
  if (q.k == 0) throw std::invalid_argument("query k must be at least 1");
  if (text::trim(q.text).empty()) throw std::invalid_argument("query text must not be empty");
}

RankedList keyword_at_depth(const Query& q, const Engine& e, std::size_t depth) {
  const auto terms = extract_keywords(q.text, e.stopwords);
  return RankedList::from_scored(index::keyword_topk(terms, q.modality, depth, e.corpus->inverted, e.bm25));
}

RankedList embedding_at_depth(const Query& q, const Engine& e, std::size_t depth) {
  const index::VectorStore* store = e.corpus->store(q.modality);
  if (!store)
    throw MissingStoreError("no vector store for modality '" + std::string(to_string(q.modality)) + "'");
  if (store->size() == 0) return {};
  const auto query_vec = e.provider->embed_text(q.text, q.modality);
  return RankedList::from_scored(index::vector_topk(query_vec, depth, *store));
}

}  // namespace

RankedList run_keyword(const Query& q, const Engine& engine) {
  check_query(q);
  return keyword_at_depth(q, engine, q.k);
}

RankedList run_embedding(const Query& q, const Engine& engine) {
  check_query(q);
  return embedding_at_depth(q, engine, q.k);
}

RankedList rrf_fuse(const std::vector<RankedList>& lists, const RrfParams& params, std::size_t k) {
  if (lists.empty()) throw std::invalid_argument("rrf_fuse needs at least one list");
  if (!(params.k_rrf > 0)) throw std::invalid_argument("k_rrf must be positive");

  // Ranks are summed smallest first so the total does not depend on list order.
  std::map<UnitId, std::vector<std::size_t>> ranks;
  for (const auto& list : lists)
    for (const auto& e : list.entries) ranks[e.unit_id].push_back(e.rank);

  std::vector<index::ScoredUnit> fused;
  fused.reserve(ranks.size());
  for (auto& [unit, rs] : ranks) {
    std::sort(rs.begin(), rs.end());
    double s = 0.0;
    for (auto r : rs) s += 1.0 / (params.k_rrf + double(r));
    fused.push_back({unit, s});
  }
  std::sort(fused.begin(), fused.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score > b.score : a.unit_id < b.unit_id;
  });
  if (fused.size() > k) fused.resize(k);
  return RankedList::from_scored(fused);
}

RankedList hybrid_candidates(const Query& q, const Engine& engine) {
  check_query(q);
  const std::size_t depth = std::max(q.k, engine.candidate_depth);
  auto keyword = std::async(std::launch::async, [&] { return keyword_at_depth(q, engine, depth); });
  RankedList embedding = embedding_at_depth(q, engine, depth);
  RankedList kw = keyword.get();
  return rrf_fuse({kw, embedding}, engine.rrf, kw.size() + embedding.size());
}

RankedList run_hybrid(const Query& q, const Engine& engine) {
  RankedList fused = hybrid_candidates(q, engine);
  if (fused.entries.size() > q.k) fused.entries.resize(q.k);
  return fused;
}

RankedList run_query(const Query& q, const Engine& engine) {
  switch (q.pipeline) {
    case Pipeline::Keyword: return run_keyword(q, engine);
    case Pipeline::Embedding: return run_embedding(q, engine);
    case Pipeline::Hybrid: return run_hybrid(q, engine);
  }
  return {};
}

}  // namespace sarch::retrieval
