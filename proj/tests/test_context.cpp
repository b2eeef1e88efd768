#include <random>

#include "doctest.h"
#include "sarch/context.hpp"
#include "support.hpp"

using namespace sarch;
using namespace sarch::context;
using namespace testsupport;

TEST_CASE("strip_formatting_tags examples") {
  CHECK(strip_formatting_tags("<b>Harappa</b> site") == "Harappa site");
  CHECK(strip_formatting_tags("plain text") == "plain text");
  CHECK(strip_formatting_tags("<i>Fig. 3</i>  map<br/>of sites") == "Fig. 3 map of sites");
  CHECK(strip_formatting_tags("Har<b>app</b>a") == "Harappa");
  CHECK(strip_formatting_tags("<<b>b>x</b>") == "x");
  CHECK(strip_formatting_tags("a < b and c > d") == "a < b and c > d");
  CHECK(strip_formatting_tags("  \n ") == "");
}

TEST_CASE("strip_formatting_tags is idempotent") {
  std::mt19937 rng(5);
  const char* pieces[] = {"<b>", "</b>", "<i>", "x", " ", "  ", "<", ">", "<br/>", "seal", "<p>", "\t"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    for (int i = 0, n = rng() % 12; i < n; ++i) s += pieces[rng() % 12];
    auto once = strip_formatting_tags(s);
    CHECK(strip_formatting_tags(once) == once);
  }
}

TEST_CASE("levenshtein") {
  CHECK(levenshtein("harapan", "harappan") == 1);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("same", "same") == 0);
}

TEST_CASE("spell_correct examples") {
  auto lex = Lexicon::from_words({"harappan", "seal"});
  CHECK(spell_correct("Harappan", lex) == "Harappan");
  CHECK(spell_correct("Harapan seal", lex) == "harappan seal");
  CHECK(spell_correct("xqzt", lex) == "xqzt");
  CHECK(spell_correct("seals, 1948!", lex) == "seal, 1948!");
  CHECK_THROWS(spell_correct("x", Lexicon{}));

  // Equal distance: lexicographically first wins.
  auto tie = Lexicon::from_words({"bat", "cat"});
  CHECK(spell_correct("aat", tie) == "bat");
}

TEST_CASE("spell_correct is the identity on lexicon words") {
  auto lex = Lexicon::from_words({"copper", "bead", "steatite", "lothal"});
  CHECK(spell_correct("Copper bead, STEATITE; lothal.", lex) == "Copper bead, STEATITE; lothal.");
}

TEST_CASE("detect_in_image_caption examples") {
  auto a = detect_in_image_caption("FIG. 7 PAINTED POTTERY FROM LOTHAL. Scale 1:4");
  REQUIRE(a);
  CHECK(a->ordinal == 7);
  CHECK(a->caption_text == "FIG. 7 PAINTED POTTERY FROM LOTHAL");

  CHECK_FALSE(detect_in_image_caption("a map of the region"));

  auto c = detect_in_image_caption("see figure 12 showing granary plan");
  REQUIRE(c);
  CHECK(c->ordinal == 12);
  CHECK(c->caption_text == "figure 12 showing granary plan");

  CHECK_FALSE(detect_in_image_caption("configure 3 devices"));
  CHECK_FALSE(detect_in_image_caption("figure without number"));
}

TEST_CASE("detect_table_caption") {
  auto t = detect_table_caption("Table 1: Steatite bead artifacts. More text");
  REQUIRE(t);
  CHECK(t->ordinal == 1);
  CHECK(t->caption_text == "Table 1: Steatite bead artifacts");
  CHECK(detect_table_caption("Tab. 4 list")->ordinal == 4);
  CHECK_FALSE(detect_table_caption("Fig. 2 map"));
}

TEST_CASE("mentions_ordinal matches whole tokens") {
  CHECK(mentions_ordinal("Figure 2 shows the map of the Ghaggar basin", 2, BlockKind::Image));
  CHECK_FALSE(mentions_ordinal("Figure 21 shows beads", 2, BlockKind::Image));
  CHECK(mentions_ordinal("as seen in fig 2, the site", 2, BlockKind::Image));
  CHECK(mentions_ordinal("(Fig.2)", 2, BlockKind::Image));
  CHECK_FALSE(mentions_ordinal("Figure 2 shows", 2, BlockKind::Table));
  CHECK(mentions_ordinal("Table 3 lists", 3, BlockKind::Table));
}

TEST_CASE("mine_referring_paragraphs across adjacent pages") {
  auto prev = page(1, {text_block("p1", "As Figure 3 shows, the citadel rises."), text_block("p1b", "Unrelated.")});
  auto same = page(2, {image_block("img", "plan"), text_block("p2", "Figure 31 is elsewhere.")});
  auto next = page(3, {text_block("p3", "Returning to fig. 3, the drains are covered.")});
  auto got = mine_referring_paragraphs(3, BlockKind::Image, &prev, same, &next);
  CHECK(got == std::vector<std::string>{"As Figure 3 shows, the citadel rises.",
                                        "Returning to fig. 3, the drains are covered."});
  CHECK(mine_referring_paragraphs(3, BlockKind::Image, nullptr, same, nullptr).empty());

  auto basin = page(1, {text_block("a", "Figure 2 shows the map of the Ghaggar basin"),
                        text_block("b", "Figure 21 shows beads")});
  CHECK(mine_referring_paragraphs(2, BlockKind::Image, nullptr, basin, nullptr) ==
        std::vector<std::string>{"Figure 2 shows the map of the Ghaggar basin"});
}

TEST_CASE("clean_table examples") {
  auto pad = clean_table({"A", "B", "C"}, {{"a", "b"}});
  CHECK(pad.rows[0] == std::vector<std::string>{"a", "b", "NaN"});
  auto fill = clean_table({"A", "B", "C"}, {{"a", "", "c"}});
  CHECK(fill.rows[0] == std::vector<std::string>{"a", "NaN", "c"});
  auto cut = clean_table({"A", "B"}, {{"a", "b", "c"}});
  CHECK(cut.rows[0] == std::vector<std::string>{"a", "b"});
  auto tags = clean_table({"<b>Site</b>"}, {{"<i>Lothal</i>"}, {"<br/>"}});
  CHECK(tags.header[0] == "Site");
  CHECK(tags.rows[0][0] == "Lothal");
  CHECK(tags.rows[1][0] == "NaN");
  CHECK_THROWS(clean_table({}, {{"a"}}));
}

TEST_CASE("clean_table on random ragged tables") {
  std::mt19937 rng(99);
  const char* cells[] = {"", "x", "12", "<b>y</b>", " ", "3.5%", "Lothal"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> header(1 + rng() % 6, "h");
    std::vector<std::vector<std::string>> rows(rng() % 8);
    for (auto& r : rows) {
      r.resize(rng() % 10);
      for (auto& c : r) c = cells[rng() % 7];
    }
    auto t = clean_table(header, rows);
    REQUIRE(t.rows.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      REQUIRE(t.rows[i].size() == header.size());
      for (std::size_t c = 0; c < header.size(); ++c) {
        CHECK_FALSE(t.rows[i][c].empty());
        if (c >= rows[i].size() || strip_formatting_tags(rows[i][c]).empty())
          CHECK(t.rows[i][c] == "NaN");
        else
          CHECK(t.rows[i][c] == strip_formatting_tags(rows[i][c]));
      }
    }
    CHECK(clean_table(t.header, t.rows) == t);
  }
}

TEST_CASE("is_numeric_cell") {
  for (const char* s : {"213", "1,024", "3.5", "-2", "45%", " 7 "}) CHECK(is_numeric_cell(s));
  for (const char* s : {"", "NaN", "IIB", "1.2.3", "12a", "%"}) CHECK_FALSE(is_numeric_cell(s));
}

TEST_CASE("build_context_bundle examples") {
  auto map = image_block("m", "MOHENJO-DARO  HARAPPA  LOTHAL", ImageKind::Map);
  auto b = build_context_bundle(map, std::nullopt, {});
  for (const char* name : {"MOHENJO-DARO", "HARAPPA", "LOTHAL"})
    CHECK(b.combined_text.find(name) != std::string::npos);
  CHECK_FALSE(b.caption);

  auto tab = table_block("t", {"Site", "Beads"}, {{"Lothal", "213"}});
  auto tb = build_context_bundle(tab, std::nullopt, {});
  CHECK(tb.inner_text.find("Site Beads Lothal") != std::string::npos);
  CHECK(tb.inner_text.find("213") == std::string::npos);
  CHECK(tb.caption == "Table summary: Site Beads Lothal");

  auto img = image_block("i", "");
  auto ib = build_context_bundle(img, std::string("Fig. 1"), {"The paragraph."});
  CHECK(ib.combined_text == "Fig. 1\nThe paragraph.");
  CHECK(ib.ordinal == 1);

  CHECK_THROWS(build_context_bundle(text_block("x", "t"), std::nullopt, {}));
}

TEST_CASE("contextualize the fixture corpus") {
  auto docs = fixture_docs();
  auto survey = contextualize(docs[0]);
  const Block& map = survey.pages[1].blocks[1];
  REQUIRE(map.kind == BlockKind::Image);
  REQUIRE(map.context);
  CHECK(map.context->caption == "Fig. 2 Map showing sites discovered during 1948 and 1957");
  CHECK(map.context->ordinal == 2);
  for (const auto& p : map.context->referring_paragraphs) {
    CHECK(mentions_ordinal(p, 2, BlockKind::Image));
    CHECK(p.find("Figure 21") == std::string::npos);
  }
  bool has_example = false;
  for (const auto& p : map.context->referring_paragraphs)
    has_example |= p.rfind("Figure 2 shows the map of", 0) == 0;
  CHECK(has_example);
  CHECK(survey.pages[0].blocks[0].text.find('<') == std::string::npos);

  auto lothal = contextualize(docs[2]);
  const Block& tab = lothal.pages[1].blocks[1];
  REQUIRE(tab.table);
  for (const auto& row : tab.table->rows) CHECK(row.size() == 3);
  CHECK(tab.table->rows[0][1] == "steatite");
  CHECK(tab.table->rows[1][2] == "NaN");
  CHECK(tab.context->ordinal == 1);
  CHECK(tab.context->inner_text.find("213") == std::string::npos);

  CHECK(contextualize(survey) == survey);
}

TEST_CASE("contextualize with a lexicon corrects text blocks only") {
  auto d = doc("d", {page(1, {text_block("t", "Harapan seal"), image_block("i", "Harapan")})});
  auto lex = Lexicon::from_words({"harappan", "seal"});
  auto out = contextualize(d, &lex);
  CHECK(out.pages[0].blocks[0].text == "harappan seal");
  CHECK(out.pages[0].blocks[1].text == "Harapan");
}
