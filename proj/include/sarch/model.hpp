#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sarch {

enum class BlockKind { Text, Image, Table };
enum class ImageKind { Map, Photograph, SiteLayout, Figure };

/// Result modality. Values line up with BlockKind so a block's kind is its modality.
enum class Modality : std::uint8_t { Text = 0, Image = 1, Table = 2 };

inline constexpr std::array<Modality, 3> kAllModalities = {Modality::Text, Modality::Image,
                                                            Modality::Table};

std::string_view to_string(BlockKind kind);
std::string_view to_string(ImageKind kind);
std::string_view to_string(Modality modality);

std::optional<BlockKind> parse_block_kind(std::string_view s);
std::optional<ImageKind> parse_image_kind(std::string_view s);
std::optional<Modality> parse_modality(std::string_view s);

inline Modality modality_of(BlockKind kind) { return static_cast<Modality>(kind); }

// Syntax error in an extraction file. line/column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column, std::size_t offset);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::size_t offset_;
};

// Structurally well-formed input that breaks a model invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::string block_id = {});
  const std::string& block_id() const noexcept { return block_id_; }

 private:
  std::string block_id_;
};

struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool operator==(const BBox&) const = default;
};

struct TableData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::optional<std::string> caption;
  bool operator==(const TableData&) const = default;
};

// Searchable context assembled for an image or table block.
struct ContextBundle {
  std::string target_block_id;
  std::optional<std::string> caption;
  std::optional<int> ordinal;
  std::vector<std::string> referring_paragraphs;
  std::string inner_text;
  std::string combined_text;
  bool operator==(const ContextBundle&) const = default;
};

/// Caption first, then referring paragraphs, then inner text, newline-joined.
/// Empty parts are skipped.
std::string combine_context(const std::optional<std::string>& caption,
                            const std::vector<std::string>& paragraphs,
                            const std::string& inner_text);

struct Block {
  std::string block_id;
  BlockKind kind = BlockKind::Text;
  BBox bbox;
  std::string text;
  std::optional<ImageKind> image_kind;
  std::optional<TableData> table;
  // Present only in contextualized files.
  std::optional<ContextBundle> context;
  int page_no = 0;
  bool operator==(const Block&) const = default;
};

struct Page {
  int page_no = 0;
  std::vector<Block> blocks;
  bool operator==(const Page&) const = default;
};

struct ExtractedDocument {
  std::string doc_id;
  std::string title;
  std::string source_path;
  std::vector<Page> pages;
  bool operator==(const ExtractedDocument&) const = default;
};

struct ManifestEntry {
  std::string doc_id;
  std::string title;
  std::size_t num_pages = 0;
  std::size_t num_images = 0;
  std::size_t num_tables = 0;
  bool operator==(const ManifestEntry&) const = default;
};

struct CorpusManifest {
  std::size_t num_documents = 0;
  std::size_t num_pages = 0;
  std::size_t num_images = 0;
  std::size_t num_tables = 0;
  std::vector<ManifestEntry> documents;
  bool operator==(const CorpusManifest&) const = default;
};

/// Parses and validates one document in the canonical extraction format.
/// Throws ParseError on malformed syntax, ValidationError on invariant violations.
ExtractedDocument parse_extraction_file(std::string_view bytes);
ExtractedDocument load_extraction_file(const std::string& path);

/// Canonical serialization; parse_extraction_file(serialize(d)) == d.
std::string serialize_extraction(const ExtractedDocument& doc, int indent = 2);

/// Checks every invariant of an in-memory document.
void validate(const ExtractedDocument& doc);

/// Throws ValidationError naming the id when a doc_id repeats.
CorpusManifest build_manifest(const std::vector<ExtractedDocument>& docs);

}  // namespace sarch
