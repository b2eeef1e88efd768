#include <random>

#include "doctest.h"
#include "sarch/model.hpp"
#include "support.hpp"

using namespace sarch;
using namespace testsupport;

namespace {

const char* kMinimal = R"({"doc_id": "d1", "title": "T", "source_path": "d1.pdf",
  "pages": [{"page_no": 1, "blocks": [
    {"block_id": "b1", "kind": "text", "bbox": [0, 0, 10, 10], "text": "Harappan seal"}]}]})";

}  // namespace

TEST_CASE("minimal file parses to one page with one block") {
  auto d = parse_extraction_file(kMinimal);
  CHECK(d.doc_id == "d1");
  REQUIRE(d.pages.size() == 1);
  REQUIRE(d.pages[0].blocks.size() == 1);
  CHECK(d.pages[0].blocks[0].text == "Harappan seal");
  CHECK(d.pages[0].blocks[0].kind == BlockKind::Text);
  CHECK(d.pages[0].blocks[0].page_no == 1);
}

TEST_CASE("table block without table is a validation error naming the block") {
  const char* src = R"({"doc_id": "d1", "title": "T", "source_path": "",
    "pages": [{"page_no": 1, "blocks": [
      {"block_id": "tab-7", "kind": "table", "bbox": [0, 0, 1, 1], "text": ""}]}]})";
  try {
    parse_extraction_file(src);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.block_id() == "tab-7");
    CHECK(std::string(e.what()).find("tab-7") != std::string::npos);
  }
}

TEST_CASE("image_kind on a text block is rejected") {
  const char* src = R"({"doc_id": "d1", "title": "T", "source_path": "",
    "pages": [{"page_no": 1, "blocks": [
      {"block_id": "t1", "kind": "text", "bbox": [0, 0, 1, 1], "text": "x", "image_kind": "map"}]}]})";
  CHECK_THROWS_AS(parse_extraction_file(src), ValidationError);
}

TEST_CASE("other invariant violations") {
  auto base = doc("d", {page(1, {text_block("a", "x"), text_block("a", "y")})});
  CHECK_THROWS_AS(validate(base), ValidationError);  // duplicate block_id

  auto gap = doc("d", {page(2, {text_block("a", "x")})});
  CHECK_THROWS_AS(validate(gap), ValidationError);  // pages start at 1

  auto bad_box = doc("d", {page(1, {text_block("a", "x")})});
  bad_box.pages[0].blocks[0].bbox = {5, 0, 1, 1};
  CHECK_THROWS_AS(validate(bad_box), ValidationError);

  auto no_kind = doc("d", {page(1, {image_block("i", "ocr")})});
  no_kind.pages[0].blocks[0].image_kind.reset();
  CHECK_THROWS_AS(validate(no_kind), ValidationError);
}

TEST_CASE("syntax errors report line and column") {
  std::string src = "{\n  \"doc_id\": \"d\",\n  \"title\": ,\n}";
  try {
    parse_extraction_file(src);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() >= 12);
  }
}

TEST_CASE("build_manifest counts") {
  CHECK(build_manifest({}) == CorpusManifest{});

  auto d = doc("one", {page(1, {image_block("i1", "x")}),
                       page(2, {table_block("t1", {"a"}, {{"1"}}), text_block("p", "text")})});
  auto m = build_manifest({d});
  CHECK(m.num_documents == 1);
  CHECK(m.num_pages == 2);
  CHECK(m.num_images == 1);
  CHECK(m.num_tables == 1);
  REQUIRE(m.documents.size() == 1);
  CHECK(m.documents[0].doc_id == "one");

  CHECK_THROWS_WITH_AS(build_manifest({d, d}), doctest::Contains("one"), ValidationError);
}

TEST_CASE("fixture corpus manifest is (3,7,2,1)") {
  auto m = build_manifest(fixture_docs());
  CHECK(m.num_documents == 3);
  CHECK(m.num_pages == 7);
  CHECK(m.num_images == 2);
  CHECK(m.num_tables == 1);
}

TEST_CASE("manifest is additive over disjoint corpora") {
  auto docs = fixture_docs();
  for (std::size_t split = 0; split <= docs.size(); ++split) {
    std::vector<ExtractedDocument> a(docs.begin(), docs.begin() + split), b(docs.begin() + split, docs.end());
    auto ma = build_manifest(a), mb = build_manifest(b), all = build_manifest(docs);
    CHECK(ma.num_documents + mb.num_documents == all.num_documents);
    CHECK(ma.num_pages + mb.num_pages == all.num_pages);
    CHECK(ma.num_images + mb.num_images == all.num_images);
    CHECK(ma.num_tables + mb.num_tables == all.num_tables);
  }
}

TEST_CASE("serialize then parse is the identity") {
  for (const auto& d : fixture_docs()) CHECK(parse_extraction_file(serialize_extraction(d)) == d);

  std::mt19937 rng(7);
  auto word = [&] {
    static const char* w[] = {"seal", "Fig. 2", "<b>x</b>", "naïve", "\"q\"", "", "a\nb", "ñ"};
    return std::string(w[rng() % 8]);
  };
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Page> pages;
    int n_pages = 1 + rng() % 3, id = 0;
    for (int p = 1; p <= n_pages; ++p) {
      std::vector<Block> blocks;
      for (int b = 0, nb = rng() % 4; b < nb; ++b) {
        std::string bid = "b" + std::to_string(id++);
        switch (rng() % 3) {
          case 0: blocks.push_back(text_block(bid, word() + " " + word())); break;
          case 1: blocks.push_back(image_block(bid, word(), static_cast<ImageKind>(rng() % 4))); break;
          default: {
            auto t = table_block(bid, {word(), word()}, {{word()}, {word(), word(), word()}});
            if (rng() % 2) t.table->caption = word();
            blocks.push_back(t);
          }
        }
        blocks.back().bbox = {double(rng() % 10), 1.5, 20.25, double(30 + rng() % 10)};
        if (blocks.back().kind != BlockKind::Text && rng() % 2) {
          ContextBundle c;
          c.target_block_id = bid;
          c.caption = word();
          c.ordinal = 1 + int(rng() % 30);
          c.referring_paragraphs = {word(), word()};
          c.inner_text = word();
          c.combined_text = combine_context(c.caption, c.referring_paragraphs, c.inner_text);
          blocks.back().context = c;
        }
      }
      pages.push_back(page(p, blocks));
    }
    auto d = doc("doc" + std::to_string(trial), pages);
    CHECK(parse_extraction_file(serialize_extraction(d)) == d);
  }
}

TEST_CASE("combine_context order and empty parts") {
  CHECK(combine_context(std::string("Fig. 1"), {"para"}, "") == "Fig. 1\npara");
  CHECK(combine_context(std::nullopt, {}, "inner") == "inner");
  CHECK(combine_context(std::string("c"), {"p1", "p2"}, "i") == "c\np1\np2\ni");
}

TEST_CASE("enum wire names round trip") {
  for (auto m : kAllModalities) CHECK(parse_modality(to_string(m)) == m);
  for (auto k : {ImageKind::Map, ImageKind::Photograph, ImageKind::SiteLayout, ImageKind::Figure})
    CHECK(parse_image_kind(to_string(k)) == k);
  CHECK_FALSE(parse_modality("video"));
}
