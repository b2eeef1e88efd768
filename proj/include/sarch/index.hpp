#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sarch/embedding.hpp"
#include "sarch/model.hpp"

namespace sarch::index {

using UnitId = std::uint32_t;

class IndexError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad magic, version or truncated/corrupt bytes in a persisted index.
class CorruptIndexError : public IndexError {
 public:
  using IndexError::IndexError;
};

struct Posting {
  UnitId unit_id = 0;
  std::uint32_t tf = 0;
  bool operator==(const Posting&) const = default;
};

struct PostingList {
  std::string term;
  std::vector<Posting> entries;  // strictly increasing unit_id, tf >= 1
  bool operator==(const PostingList&) const = default;
};

/// A retrievable item: a whole page for Text, an image or table block otherwise.
struct IndexUnit {
  UnitId unit_id = 0;
  Modality modality = Modality::Text;
  std::string doc_id;
  int page_no = 0;
  std::optional<std::string> block_id;
  std::uint32_t token_count = 0;
  bool operator==(const IndexUnit&) const = default;
};

/// What a search result shows for a unit.
struct UnitPayload {
  std::string title;
  std::string text;  // page text, or the context bundle's combined text
  std::optional<std::string> caption;
  std::optional<ImageKind> image_kind;
  std::optional<TableData> table;
  bool operator==(const UnitPayload&) const = default;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Term statistics for one modality. N and avg length are per partition.
struct Partition {
  std::map<std::string, PostingList> postings;
  std::vector<UnitId> unit_ids;
  std::uint64_t total_tokens = 0;

  double avg_len() const {
    return unit_ids.empty() ? 0.0 : double(total_tokens) / double(unit_ids.size());
  }
  bool operator==(const Partition&) const = default;
};

struct InvertedIndex {
  std::vector<IndexUnit> units;  // units[i].unit_id == i
  std::array<Partition, 3> partitions;

  const Partition& partition(Modality m) const { return partitions[static_cast<std::size_t>(m)]; }
  Partition& partition(Modality m) { return partitions[static_cast<std::size_t>(m)]; }

  /// Adds a unit built from `tokens`; the unit_id is assigned here.
  UnitId add_unit(IndexUnit unit, const std::vector<std::string>& tokens);
  bool operator==(const InvertedIndex&) const = default;
};

struct VectorStore {
  Modality modality = Modality::Text;
  std::size_t dim = 0;
  std::vector<UnitId> unit_ids;
  std::vector<float> data;  // row-major, unit_ids.size() x dim

  std::size_t size() const { return unit_ids.size(); }
  std::vector<float> vector(std::size_t row) const;
  void add(UnitId unit, const embed::Embedding& e);
  bool operator==(const VectorStore&) const = default;
};

struct ScoredUnit {
  UnitId unit_id = 0;
  double score = 0.0;
  bool operator==(const ScoredUnit&) const = default;
};

/// Everything a built corpus needs to answer queries.
struct CorpusIndex {
  InvertedIndex inverted;
  std::vector<UnitPayload> payloads;  // by unit_id
  std::map<Modality, VectorStore> stores;
  CorpusManifest manifest;
  embed::ProviderConfig provider;

  const IndexUnit& unit(UnitId id) const;
  const VectorStore* store(Modality m) const;
  /// Unit for (doc, page, block); block empty means the page's Text unit.
  std::optional<UnitId> find_unit(const std::string& doc_id, int page_no,
                                  const std::string& block_id) const;
  bool operator==(const CorpusIndex&) const = default;
};

struct IndexOptions {
  // Replace upstream image kinds with the provider's classification.
  bool classify_images = true;
};

/// Builds units, postings and vector stores from contextualized documents.
/// Units whose text has no tokens are skipped.
CorpusIndex index_corpus(const std::vector<ExtractedDocument>& docs,
                         const embed::EmbeddingProvider& provider, const IndexOptions& options = {});

double bm25_score(const std::vector<std::string>& query_terms, UnitId unit,
                  const InvertedIndex& index, const Bm25Params& params = {});

/// Units of `modality` with positive score, descending, ties by unit_id.
std::vector<ScoredUnit> keyword_topk(const std::vector<std::string>& query_terms,
                                     Modality modality, std::size_t k, const InvertedIndex& index,
                                     const Bm25Params& params = {});

/// Exhaustive cosine (dot product on unit vectors), descending, ties by unit_id.
std::vector<ScoredUnit> vector_topk(const embed::Embedding& query, std::size_t k,
                                    const VectorStore& store);

inline constexpr std::uint32_t kFormatVersion = 1;

std::string serialize(const CorpusIndex& index);
CorpusIndex deserialize(std::string_view bytes);
void persist(const CorpusIndex& index, const std::string& path);
CorpusIndex load(const std::string& path);

}  // namespace sarch::index
