#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sarch/retrieval.hpp"

namespace sarch::eval {

using index::UnitId;
using retrieval::Pipeline;
using retrieval::RankedList;

struct BenchmarkQuery {
  std::string query_id;
  std::string text;
  Modality modality = Modality::Text;
};

struct Judgment {
  std::string query_id;
  UnitId unit_id = 0;
  bool relevant = false;
};

/// Relevance labels keyed by (query, unit). Unjudged pairs are non-relevant.
class Judgments {
 public:
  /// Throws std::invalid_argument on a second judgment for the same pair.
  void add(const Judgment& j);
  bool relevant(const std::string& query_id, UnitId unit) const;
  std::size_t size() const { return labels_.size(); }

 private:
  std::map<std::pair<std::string, UnitId>, bool> labels_;
};

/// A judgment as stored on disk, before it is resolved against an index.
struct JudgmentRecord {
  std::string query_id;
  std::string doc_id;
  int page_no = 0;
  std::string block_id;  // empty for a page-level text unit
  bool relevant = false;
};

/// Relevant units in the top min(k, n) positions, divided by k.
double precision_at_k(const RankedList& ranked, const Judgments& judgments,
                      const std::string& query_id, std::size_t k);

/// 1 / rank of the first relevant entry, 0 when there is none.
double reciprocal_rank(const RankedList& ranked, const Judgments& judgments,
                       const std::string& query_id);

struct QueryMetrics {
  std::string query_id;
  Pipeline pipeline = Pipeline::Keyword;
  double p_at_5 = 0, p_at_3 = 0, p_at_1 = 0, mrr = 0;
  std::vector<UnitId> results;
};

struct PipelineRow {
  Pipeline pipeline = Pipeline::Keyword;
  std::size_t num_queries = 0;
  double p_at_5 = 0, p_at_3 = 0, p_at_1 = 0, mrr = 0;
};

struct MetricsReport {
  std::vector<PipelineRow> rows;  // keyword, embedding, hybrid
  std::vector<QueryMetrics> per_query;
  std::vector<std::string> warnings;

  const PipelineRow& row(Pipeline p) const;
};

/// Runs every query through all three pipelines with k = 5 and macro-averages.
/// A query whose modality has no vector store scores zero and adds a warning.
MetricsReport run_benchmark(const std::vector<BenchmarkQuery>& queries, const Judgments& judgments,
                            const retrieval::Engine& engine);

/// The 30-query modality-wise benchmark (11 image, 15 text, 4 table).
const std::vector<BenchmarkQuery>& default_benchmark();

// Tab-separated files; blank lines and lines starting with '#' are skipped.
//   benchmark: query_id <TAB> modality <TAB> text
//   judgments: query_id <TAB> doc_id <TAB> page_no <TAB> block_id-or-empty <TAB> 0|1
std::vector<BenchmarkQuery> load_benchmark(const std::string& path);
std::vector<JudgmentRecord> load_judgment_records(const std::string& path);
std::vector<JudgmentRecord> parse_judgment_records(const std::string& content);

/// Resolves records against the index; unknown units are reported in `warnings`.
Judgments resolve_judgments(const std::vector<JudgmentRecord>& records,
                            const index::CorpusIndex& corpus, std::vector<std::string>* warnings);

/// Plain-text table: Search Type | P@5 | P@3 | P@1 | MRR.
std::string format_report(const MetricsReport& report);
std::string report_to_json(const MetricsReport& report);

}  // namespace sarch::eval
