#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sarch/pipeline.hpp"
#include "support.hpp"

using namespace sarch;
using namespace testsupport;

TEST_CASE("load_corpus_dir reads json files in name order") {
  auto docs = fixture_docs();
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].doc_id == "harappan_survey");
  CHECK(docs[1].doc_id == "mohenjo_daro_report");
  CHECK(docs[2].doc_id == "lothal_excavations");
  CHECK_THROWS(load_corpus_dir("/definitely/not/here"));
}

TEST_CASE("load_corpus_dir names the offending file") {
  auto dir = std::filesystem::temp_directory_path() / "sarch_pipeline_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{\n  \"doc_id\": \n";
  std::ofstream(dir / "notes.txt") << "ignored";
  CHECK_THROWS_WITH(load_corpus_dir(dir.string()), doctest::Contains("bad.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("ingest contextualizes before indexing") {
  embed::HashProvider p(32);
  auto lex = context::Lexicon::from_file(data_path("fixtures/lexicon.txt"));
  IngestOptions opts;
  opts.lexicon = &lex;
  auto idx = ingest(fixture_docs(), p, opts);
  CHECK(idx.inverted.units.size() == 10);
  auto map = idx.find_unit("harappan_survey", 2, "a-p2-img1");
  REQUIRE(map);
  CHECK(idx.payloads[*map].caption == "Fig. 2 Map showing sites discovered during 1948 and 1957");

  opts.index.classify_images = false;
  auto kept = ingest(fixture_docs(), p, opts);
  CHECK(kept.payloads[*kept.find_unit("mohenjo_daro_report", 2, "b-p2-img1")].image_kind ==
        ImageKind::Photograph);
}
