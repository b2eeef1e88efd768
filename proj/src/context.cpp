#include "sarch/context.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "sarch/text.hpp"

namespace sarch::context {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Tags that sit inside a word and vanish without leaving a separator.
bool is_inline_tag(std::string_view name) {
  static const std::set<std::string, std::less<>> kInline = {
      "a",   "abbr", "b",    "big", "code", "em",     "font", "i",   "mark",
      "s",   "small", "span", "strike", "strong", "sub", "sup", "tt",  "u"};
  return kInline.contains(text::to_lower(name));
}

// One left-to-right pass; returns true if any tag was removed.
bool strip_once(std::string_view in, std::string& out) {
  out.clear();
  bool changed = false;
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] == '<') {
      std::size_t j = i + 1;
      if (j < in.size() && in[j] == '/') ++j;
      if (j < in.size() && (is_alpha(in[j]) || in[j] == '!' || in[j] == '?')) {
        const std::size_t name_begin = j;
        while (j < in.size() && (std::isalnum(static_cast<unsigned char>(in[j])))) ++j;
        const std::string_view name = in.substr(name_begin, j - name_begin);
        while (j < in.size() && in[j] != '>' && in[j] != '<') ++j;
        if (j < in.size() && in[j] == '>') {
          if (!is_inline_tag(name)) out += ' ';
          i = j + 1;
          changed = true;
          continue;
        }
      }
    }
    out += in[i++];
  }
  return changed;
}

std::string collapse_whitespace(std::string_view s) {
  return text::join(text::split_whitespace(s), " ");
}

// Keyword alternatives are matched case-insensitively with a non-letter before them.
struct OrdinalMatch {
  std::size_t keyword_begin;
  std::size_t number_end;
  long long value;
};

// "fig", "fig.", "figure" for images; "tab.", "table" for tables.
std::optional<std::size_t> match_keyword(std::string_view lower, std::size_t at, BlockKind kind,
                                         bool allow_bare_fig) {
  auto starts = [&](std::string_view kw) { return lower.substr(at, kw.size()) == kw; };
  if (kind == BlockKind::Table) {
    if (starts("table")) return at + 5;
    if (starts("tab.")) return at + 4;
    return std::nullopt;
  }
  if (starts("figure")) return at + 6;
  if (starts("fig.")) return at + 4;
  if (allow_bare_fig && starts("fig")) return at + 3;
  return std::nullopt;
}

std::vector<OrdinalMatch> find_ordinals(std::string_view text, BlockKind kind, bool allow_bare_fig) {
  const std::string lower = text::to_lower(text);
  std::vector<OrdinalMatch> out;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (i > 0 && is_alpha(lower[i - 1])) continue;
    auto after = match_keyword(lower, i, kind, allow_bare_fig);
    if (!after) continue;
    std::size_t j = *after;
    while (j < lower.size() && is_space(lower[j])) ++j;
    const std::size_t digits = j;
    while (j < lower.size() && is_digit(lower[j])) ++j;
    if (j == digits || j - digits > 9) continue;
    out.push_back({i, j, std::stoll(std::string(lower.substr(digits, j - digits)))});
  }
  return out;
}

std::optional<CaptionHit> detect_caption(std::string_view text, BlockKind kind) {
  for (const auto& m : find_ordinals(text, kind, /*allow_bare_fig=*/false)) {
    if (m.value < 1) continue;
    std::size_t end = m.number_end;
    while (end < text.size() && text[end] != '.' && text[end] != '!' && text[end] != '?') ++end;
    std::string caption = text::trim(text.substr(m.keyword_begin, end - m.keyword_begin));
    return CaptionHit{static_cast<int>(m.value), std::move(caption), CaptionSource::InImageText};
  }
  return std::nullopt;
}

std::string first_tokens(std::string_view s, std::size_t n) {
  auto words = text::split_whitespace(s);
  if (words.size() > n) words.resize(n);
  return text::join(words, " ");
}

}  // namespace

bool Lexicon::contains(std::string_view word) const {
  return words.contains(text::to_lower(word));
}

Lexicon Lexicon::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon '" + path + "'");
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = text::to_lower(text::trim(line));
    if (!w.empty()) lex.words.insert(std::move(w));
  }
  return lex;
}

Lexicon Lexicon::from_words(std::initializer_list<std::string_view> words) {
  Lexicon lex;
  for (auto w : words) lex.words.insert(text::to_lower(w));
  return lex;
}

std::string strip_formatting_tags(std::string_view input) {
  std::string cur(input), next;
  while (strip_once(cur, next)) std::swap(cur, next);
  return collapse_whitespace(cur);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string spell_correct(std::string_view input, const Lexicon& lex) {
  if (lex.empty()) throw std::invalid_argument("spell_correct requires a non-empty lexicon");
  constexpr std::size_t kMaxDistance = 2;
  std::string out;
  std::size_t i = 0;
  while (i < input.size()) {
    if (!text::is_word_byte(static_cast<unsigned char>(input[i]))) {
      out += input[i++];
      continue;
    }
    std::size_t j = i;
    bool alphabetic = true;
    while (j < input.size() && text::is_word_byte(static_cast<unsigned char>(input[j]))) {
      alphabetic = alphabetic && is_alpha(input[j]);
      ++j;
    }
    const std::string_view token = input.substr(i, j - i);
    i = j;
    if (!alphabetic || lex.contains(token)) {
      out += token;
      continue;
    }
    const std::string lower = text::to_lower(token);
    const std::string* best = nullptr;
    std::size_t best_dist = kMaxDistance + 1;
    for (const auto& w : lex.words) {  // sorted, so the first strict minimum wins ties
      const std::size_t len_gap = w.size() > lower.size() ? w.size() - lower.size()
                                                          : lower.size() - w.size();
      if (len_gap >= best_dist) continue;
      const std::size_t d = levenshtein(lower, w);
      if (d < best_dist) best_dist = d, best = &w;
    }
    out += best ? std::string_view(*best) : token;
  }
  return out;
}

std::optional<CaptionHit> detect_in_image_caption(std::string_view ocr_text) {
  return detect_caption(ocr_text, BlockKind::Image);
}

std::optional<CaptionHit> detect_table_caption(std::string_view text) {
  return detect_caption(text, BlockKind::Table);
}

bool mentions_ordinal(std::string_view paragraph, int ordinal, BlockKind target_kind) {
  for (const auto& m : find_ordinals(paragraph, target_kind, /*allow_bare_fig=*/true))
    if (m.value == ordinal) return true;
  return false;
}

std::vector<std::string> mine_referring_paragraphs(int ordinal, BlockKind target_kind,
                                                   const Page* previous, const Page& same,
                                                   const Page* next) {
  std::vector<std::string> out;
  for (const Page* page : {previous, &same, next}) {
    if (!page) continue;
    for (const Block& b : page->blocks)
      if (b.kind == BlockKind::Text && mentions_ordinal(b.text, ordinal, target_kind))
        out.push_back(b.text);
  }
  return out;
}

bool is_numeric_cell(std::string_view cell) {
  std::string s;
  for (char c : text::trim(cell))
    if (c != ',') s += c;
  if (!s.empty() && s.back() == '%') s.pop_back();
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  bool digits = false, dot = false;
  for (; i < s.size(); ++i) {
    if (is_digit(s[i])) {
      digits = true;
    } else if (s[i] == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digits;
}

TableData clean_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  if (header.empty()) throw std::invalid_argument("clean_table: header must not be empty");
  TableData out;
  out.header.reserve(header.size());
  for (const auto& h : header) out.header.push_back(strip_formatting_tags(h));
  out.rows.reserve(rows.size());
  for (const auto& row : rows) {
    std::vector<std::string> cleaned;
    cleaned.reserve(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      std::string cell = c < row.size() ? strip_formatting_tags(row[c]) : std::string();
      cleaned.push_back(cell.empty() ? std::string(kMissingCell) : std::move(cell));
    }
    out.rows.push_back(std::move(cleaned));
  }
  return out;
}

std::string flatten_table(const TableData& table) {
  std::vector<std::string> parts;
  for (const auto& h : table.header)
    if (!text::trim(h).empty()) parts.push_back(text::trim(h));
  for (const auto& row : table.rows) {
    for (const auto& cell : row) {
      std::string c = text::trim(cell);
      if (c.empty() || c == kMissingCell || is_numeric_cell(c)) continue;
      parts.push_back(std::move(c));
    }
  }
  return text::join(parts, " ");
}

ContextBundle build_context_bundle(const Block& block, const std::optional<std::string>& caption,
                                   const std::vector<std::string>& paragraphs) {
  if (block.kind == BlockKind::Text)
    throw std::invalid_argument("build_context_bundle: block '" + block.block_id +
                                "' is a text block");
  ContextBundle b;
  b.target_block_id = block.block_id;
  b.referring_paragraphs = paragraphs;

  if (caption && !text::trim(*caption).empty()) {
    b.caption = text::trim(*caption);
  } else if (auto hit = detect_in_image_caption(block.text)) {
    b.caption = hit->caption_text;
  }
  if (b.caption) {
    auto hit = block.kind == BlockKind::Table ? detect_table_caption(*b.caption)
                                              : detect_in_image_caption(*b.caption);
    if (hit) b.ordinal = hit->ordinal;
  }

  if (block.kind == BlockKind::Image) {
    b.inner_text = text::trim(block.text);
  } else {
    b.inner_text = block.table ? flatten_table(*block.table) : text::trim(block.text);
    if (!b.caption && !b.inner_text.empty())
      b.caption = "Table summary: " + first_tokens(b.inner_text, 30);
  }
  b.combined_text = combine_context(b.caption, b.referring_paragraphs, b.inner_text);
  return b;
}

namespace {

// Text blocks on the page that open with a caption for the given kind.
std::vector<std::pair<std::size_t, CaptionHit>> caption_blocks(const Page& page, BlockKind kind) {
  std::vector<std::pair<std::size_t, CaptionHit>> out;
  for (std::size_t i = 0; i < page.blocks.size(); ++i) {
    const Block& b = page.blocks[i];
    if (b.kind != BlockKind::Text) continue;
    auto hit = kind == BlockKind::Table ? detect_table_caption(b.text) : detect_in_image_caption(b.text);
    if (!hit) continue;
    if (b.text.find_first_not_of(" \t\r\n") != b.text.find(hit->caption_text)) continue;
    hit->source = CaptionSource::PageText;
    out.emplace_back(i, std::move(*hit));
  }
  return out;
}

}  // namespace

ExtractedDocument contextualize(const ExtractedDocument& input, const Lexicon* lexicon) {
  ExtractedDocument doc = input;
  for (Page& page : doc.pages) {
    for (Block& b : page.blocks) {
      b.text = strip_formatting_tags(b.text);
      if (b.kind == BlockKind::Text && lexicon && !lexicon->empty())
        b.text = spell_correct(b.text, *lexicon);
      if (b.table) {
        std::optional<std::string> caption = b.table->caption;
        *b.table = clean_table(b.table->header, b.table->rows);
        if (caption) b.table->caption = strip_formatting_tags(*caption);
      }
      b.context.reset();
    }
  }

  for (std::size_t p = 0; p < doc.pages.size(); ++p) {
    Page& page = doc.pages[p];
    const Page* prev = p > 0 ? &doc.pages[p - 1] : nullptr;
    const Page* next = p + 1 < doc.pages.size() ? &doc.pages[p + 1] : nullptr;
    auto figure_captions = caption_blocks(page, BlockKind::Image);
    auto table_captions = caption_blocks(page, BlockKind::Table);
    std::size_t next_figure = 0, next_table = 0;

    for (Block& b : page.blocks) {
      if (b.kind == BlockKind::Text) continue;
      std::optional<std::string> caption;
      std::optional<std::size_t> caption_block;
      if (b.kind == BlockKind::Image) {
        if (auto hit = detect_in_image_caption(b.text)) {
          caption = hit->caption_text;
        } else if (next_figure < figure_captions.size()) {
          caption_block = figure_captions[next_figure].first;
          caption = figure_captions[next_figure++].second.caption_text;
        }
      } else {
        if (b.table->caption && !b.table->caption->empty()) {
          caption = b.table->caption;
        } else if (next_table < table_captions.size()) {
          caption_block = table_captions[next_table].first;
          caption = table_captions[next_table++].second.caption_text;
        }
      }

      std::optional<int> ordinal;
      if (caption) {
        auto hit = b.kind == BlockKind::Table ? detect_table_caption(*caption)
                                              : detect_in_image_caption(*caption);
        if (hit) ordinal = hit->ordinal;
      }
      std::vector<std::string> paragraphs;
      if (ordinal) {
        const std::string* caption_text =
            caption_block ? &page.blocks[*caption_block].text : nullptr;
        for (auto& para : mine_referring_paragraphs(*ordinal, b.kind, prev, page, next))
          if (!caption_text || para != *caption_text) paragraphs.push_back(std::move(para));
      }
      b.context = build_context_bundle(b, caption, paragraphs);
    }
  }
  return doc;
}

}  // namespace sarch::context
