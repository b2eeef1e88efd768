#pragma once

#include <string>
#include <vector>

#include "sarch/context.hpp"
#include "sarch/embedding.hpp"
#include "sarch/index.hpp"

namespace sarch {

/// Parses every *.json extraction file in `dir`, in filename order.
std::vector<ExtractedDocument> load_corpus_dir(const std::string& dir);

struct IngestOptions {
  const context::Lexicon* lexicon = nullptr;
  index::IndexOptions index;
};

/// Offline pipeline: contextualize -> classify -> embed -> index.
index::CorpusIndex ingest(const std::vector<ExtractedDocument>& docs,
                          const embed::EmbeddingProvider& provider,
                          const IngestOptions& options = {});

}  // namespace sarch
