#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sarch/model.hpp"

namespace sarch::context {

struct Lexicon {
  std::set<std::string> words;  // lowercase

  bool contains(std::string_view word) const;
  bool empty() const { return words.empty(); }

  /// One lowercase word per line; blank lines are ignored.
  static Lexicon from_file(const std::string& path);
  static Lexicon from_words(std::initializer_list<std::string_view> words);
};

enum class CaptionSource { InImageText, PageText };

struct CaptionHit {
  int ordinal = 0;
  std::string caption_text;
  CaptionSource source = CaptionSource::InImageText;
};

/// Removes angle-bracket tags (repeatedly, until none remain), collapses
/// whitespace runs to one space and trims. A '<' that does not open a tag is kept.
std::string strip_formatting_tags(std::string_view text);

std::size_t levenshtein(std::string_view a, std::string_view b);

/// Replaces purely alphabetic tokens missing from the lexicon with the closest
/// lexicon word (distance <= 2, lexicographically first on ties). Everything
/// else, separators included, is copied through unchanged.
std::string spell_correct(std::string_view text, const Lexicon& lex);

/// First "Fig."/"Figure" + integer in OCR text, through the end of its sentence.
std::optional<CaptionHit> detect_in_image_caption(std::string_view ocr_text);

/// Same rule for "Table"/"Tab." captions.
std::optional<CaptionHit> detect_table_caption(std::string_view text);

/// True when `paragraph` mentions the ordinal after a figure (or table) keyword,
/// with the number matched as a whole token.
bool mentions_ordinal(std::string_view paragraph, int ordinal, BlockKind target_kind);

/// Text blocks on the previous, same and next pages that mention the ordinal,
/// in page order then block order.
std::vector<std::string> mine_referring_paragraphs(int ordinal, BlockKind target_kind,
                                                   const Page* previous, const Page& same,
                                                   const Page* next);

/// Numeric iff an integer or decimal after dropping commas and one trailing '%'.
bool is_numeric_cell(std::string_view cell);

inline constexpr std::string_view kMissingCell = "NaN";

/// Strips tags from every cell, fills blank cells with NaN and pads or
/// right-truncates each row to the header width.
TableData clean_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

/// Header plus non-numeric, non-missing cell values, space-separated.
std::string flatten_table(const TableData& table);

ContextBundle build_context_bundle(const Block& block, const std::optional<std::string>& caption,
                                   const std::vector<std::string>& paragraphs);

/// Full cleaning + context pass over a document. Text blocks are tag-stripped
/// (and spell corrected when a lexicon is given); every image and table block
/// gets a ContextBundle.
ExtractedDocument contextualize(const ExtractedDocument& doc, const Lexicon* lexicon = nullptr);

}  // namespace sarch::context
