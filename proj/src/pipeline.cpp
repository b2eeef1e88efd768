#include "sarch/pipeline.hpp"

#include <algorithm>
#include <filesystem>

namespace sarch {

std::vector<ExtractedDocument> load_corpus_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<ExtractedDocument> docs;
  docs.reserve(files.size());
  for (const auto& f : files) docs.push_back(load_extraction_file(f.string()));
  return docs;
}

index::CorpusIndex ingest(const std::vector<ExtractedDocument>& docs,
                          const embed::EmbeddingProvider& provider, const IngestOptions& options) {
  std::vector<ExtractedDocument> contextualized;
  contextualized.reserve(docs.size());
  for (const auto& d : docs) contextualized.push_back(context::contextualize(d, options.lexicon));
  return index::index_corpus(contextualized, provider, options.index);
}

}  // namespace sarch
