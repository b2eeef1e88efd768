#pragma once

#include <string>
#include <vector>

#include "sarch/model.hpp"
#include "sarch/pipeline.hpp"

namespace testsupport {

inline std::string data_path(const std::string& rel) { return std::string(SARCH_DATA_DIR) + "/" + rel; }

inline std::vector<sarch::ExtractedDocument> fixture_docs() {
  return sarch::load_corpus_dir(data_path("fixtures/corpus"));
}

inline sarch::Block text_block(std::string id, std::string text) {
  sarch::Block b;
  b.block_id = std::move(id);
  b.kind = sarch::BlockKind::Text;
  b.text = std::move(text);
  return b;
}

inline sarch::Block image_block(std::string id, std::string ocr,
                                sarch::ImageKind kind = sarch::ImageKind::Figure) {
  sarch::Block b;
  b.block_id = std::move(id);
  b.kind = sarch::BlockKind::Image;
  b.text = std::move(ocr);
  b.image_kind = kind;
  return b;
}

inline sarch::Block table_block(std::string id, std::vector<std::string> header,
                                std::vector<std::vector<std::string>> rows) {
  sarch::Block b;
  b.block_id = std::move(id);
  b.kind = sarch::BlockKind::Table;
  b.table = sarch::TableData{std::move(header), std::move(rows), std::nullopt};
  return b;
}

inline sarch::Page page(int no, std::vector<sarch::Block> blocks) {
  for (auto& b : blocks) b.page_no = no;
  return sarch::Page{no, std::move(blocks)};
}

inline sarch::ExtractedDocument doc(std::string id, std::vector<sarch::Page> pages) {
  sarch::ExtractedDocument d;
  d.doc_id = id;
  d.title = "Title of " + id;
  d.source_path = id + ".pdf";
  d.pages = std::move(pages);
  return d;
}

}  // namespace testsupport
