#include "sarch/model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sarch {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Text: return "text";
    case BlockKind::Image: return "image";
    case BlockKind::Table: return "table";
  }
  return "text";
}

std::string_view to_string(ImageKind kind) {
  switch (kind) {
    case ImageKind::Map: return "map";
    case ImageKind::Photograph: return "photograph";
    case ImageKind::SiteLayout: return "site_layout";
    case ImageKind::Figure: return "figure";
  }
  return "figure";
}

std::string_view to_string(Modality modality) {
  return to_string(static_cast<BlockKind>(modality));
}

std::optional<BlockKind> parse_block_kind(std::string_view s) {
  if (s == "text") return BlockKind::Text;
  if (s == "image") return BlockKind::Image;
  if (s == "table") return BlockKind::Table;
  return std::nullopt;
}

std::optional<ImageKind> parse_image_kind(std::string_view s) {
  if (s == "map") return ImageKind::Map;
  if (s == "photograph") return ImageKind::Photograph;
  if (s == "site_layout") return ImageKind::SiteLayout;
  if (s == "figure") return ImageKind::Figure;
  return std::nullopt;
}

std::optional<Modality> parse_modality(std::string_view s) {
  auto kind = parse_block_kind(s);
  if (!kind) return std::nullopt;
  return modality_of(*kind);
}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column,
                       std::size_t offset)
    : std::runtime_error(what), line_(line), column_(column), offset_(offset) {}

ValidationError::ValidationError(const std::string& what, std::string block_id)
    : std::runtime_error(what), block_id_(std::move(block_id)) {}

std::string combine_context(const std::optional<std::string>& caption,
                            const std::vector<std::string>& paragraphs,
                            const std::string& inner_text) {
  std::string out;
  auto append = [&out](const std::string& part) {
    if (part.empty()) return;
    if (!out.empty()) out += '\n';
    out += part;
  };
  if (caption) append(*caption);
  for (const auto& p : paragraphs) append(p);
  append(inner_text);
  return out;
}

namespace {

// Field access with schema errors reported against the enclosing block (if any).
struct Reader {
  std::string where;
  std::string block_id;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError(where + ": " + msg, block_id);
  }

  const json& field(const json& obj, const char* name) const {
    auto it = obj.find(name);
    if (it == obj.end()) fail(std::string("missing field '") + name + "'");
    return *it;
  }

  std::string str(const json& obj, const char* name) const {
    const json& v = field(obj, name);
    if (!v.is_string()) fail(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<std::string> str_list(const json& v, const char* name) const {
    if (!v.is_array()) fail(std::string("field '") + name + "' must be an array of strings");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& e : v) {
      if (!e.is_string()) fail(std::string("field '") + name + "' must contain only strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }
};

TableData read_table(const json& j, const Reader& r) {
  if (!j.is_object()) r.fail("field 'table' must be an object");
  TableData t;
  t.header = r.str_list(r.field(j, "header"), "header");
  const json& rows = r.field(j, "rows");
  if (!rows.is_array()) r.fail("field 'rows' must be an array");
  for (const auto& row : rows) t.rows.push_back(r.str_list(row, "rows"));
  if (auto it = j.find("caption"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) r.fail("field 'caption' must be a string");
    t.caption = it->get<std::string>();
  }
  return t;
}

ContextBundle read_context(const json& j, const Reader& r) {
  if (!j.is_object()) r.fail("field 'context' must be an object");
  ContextBundle c;
  c.target_block_id = r.block_id;
  if (auto it = j.find("caption"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) r.fail("context.caption must be a string");
    c.caption = it->get<std::string>();
  }
  if (auto it = j.find("ordinal"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 1)
      r.fail("context.ordinal must be a positive integer");
    c.ordinal = it->get<int>();
  }
  if (auto it = j.find("referring_paragraphs"); it != j.end())
    c.referring_paragraphs = r.str_list(*it, "referring_paragraphs");
  if (auto it = j.find("inner_text"); it != j.end()) {
    if (!it->is_string()) r.fail("context.inner_text must be a string");
    c.inner_text = it->get<std::string>();
  }
  c.combined_text = combine_context(c.caption, c.referring_paragraphs, c.inner_text);
  return c;
}

Block read_block(const json& j, int page_no, const std::string& doc_where) {
  Reader r{doc_where + " page " + std::to_string(page_no), {}};
  if (!j.is_object()) r.fail("block must be an object");
  r.block_id = r.str(j, "block_id");
  r.where += " block '" + r.block_id + "'";

  Block b;
  b.block_id = r.block_id;
  b.page_no = page_no;
  auto kind = parse_block_kind(r.str(j, "kind"));
  if (!kind) r.fail("unknown kind '" + r.str(j, "kind") + "'");
  b.kind = *kind;

  const json& bbox = r.field(j, "bbox");
  if (!bbox.is_array() || bbox.size() != 4) r.fail("bbox must be an array of 4 numbers");
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!bbox[i].is_number()) r.fail("bbox must be an array of 4 numbers");
    v[i] = bbox[i].get<double>();
  }
  b.bbox = {v[0], v[1], v[2], v[3]};
  b.text = r.str(j, "text");

  if (auto it = j.find("image_kind"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) r.fail("image_kind must be a string");
    auto ik = parse_image_kind(it->get<std::string>());
    if (!ik) r.fail("unknown image_kind '" + it->get<std::string>() + "'");
    b.image_kind = *ik;
  }
  if (auto it = j.find("table"); it != j.end() && !it->is_null()) b.table = read_table(*it, r);
  if (auto it = j.find("context"); it != j.end() && !it->is_null())
    b.context = read_context(*it, r);
  return b;
}

ojson write_table(const TableData& t) {
  ojson j = {{"header", t.header}, {"rows", t.rows}};
  if (t.caption) j["caption"] = *t.caption;
  return j;
}

ojson write_context(const ContextBundle& c) {
  ojson j = ojson::object();
  j["caption"] = c.caption ? ojson(*c.caption) : ojson(nullptr);
  j["ordinal"] = c.ordinal ? ojson(*c.ordinal) : ojson(nullptr);
  j["referring_paragraphs"] = c.referring_paragraphs;
  j["inner_text"] = c.inner_text;
  j["combined_text"] = c.combined_text;
  return j;
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view bytes, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < bytes.size(); ++i) {
    if (bytes[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

void validate(const ExtractedDocument& doc) {
  if (doc.doc_id.empty()) throw ValidationError("document has an empty doc_id");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.pages.size(); ++i) {
    const Page& page = doc.pages[i];
    if (page.page_no != static_cast<int>(i) + 1)
      throw ValidationError("document '" + doc.doc_id + "': page " + std::to_string(i + 1) +
                            " is numbered " + std::to_string(page.page_no) +
                            "; pages must be consecutive from 1");
    for (const Block& b : page.blocks) {
      auto fail = [&](const std::string& msg) {
        throw ValidationError(
            "document '" + doc.doc_id + "' block '" + b.block_id + "': " + msg, b.block_id);
      };
      if (b.block_id.empty()) fail("empty block_id");
      if (!seen.insert(b.block_id).second) fail("duplicate block_id");
      if (b.page_no != page.page_no) fail("block page_no does not match its page");
      const BBox& r = b.bbox;
      if (r.x0 < 0 || r.y0 < 0 || r.x1 < 0 || r.y1 < 0) fail("bbox has negative coordinates");
      if (r.x0 > r.x1 || r.y0 > r.y1) fail("bbox requires x0 <= x1 and y0 <= y1");
      if (b.image_kind.has_value() != (b.kind == BlockKind::Image))
        fail(b.kind == BlockKind::Image ? "image block without image_kind"
                                        : "image_kind on a non-image block");
      if (b.table.has_value() != (b.kind == BlockKind::Table))
        fail(b.kind == BlockKind::Table ? "table block without table"
                                        : "table on a non-table block");
      if (b.context && b.kind == BlockKind::Text) fail("context on a text block");
    }
  }
}

ExtractedDocument parse_extraction_file(std::string_view bytes) {
  json root;
  try {
    root = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, col] = line_and_column(bytes, offset);
    throw ParseError("parse error at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what(),
                     line, col, offset);
  }

  Reader r{"document", {}};
  if (!root.is_object()) r.fail("top level must be an object");
  ExtractedDocument doc;
  doc.doc_id = r.str(root, "doc_id");
  r.where = "document '" + doc.doc_id + "'";
  doc.title = r.str(root, "title");
  doc.source_path = r.str(root, "source_path");

  const json& pages = r.field(root, "pages");
  if (!pages.is_array()) r.fail("field 'pages' must be an array");
  for (const auto& pj : pages) {
    if (!pj.is_object()) r.fail("page must be an object");
    const json& no = r.field(pj, "page_no");
    if (!no.is_number_integer() || no.get<long long>() < 1)
      r.fail("page_no must be a positive integer");
    Page page;
    page.page_no = no.get<int>();
    const json& blocks = r.field(pj, "blocks");
    if (!blocks.is_array()) r.fail("field 'blocks' must be an array");
    for (const auto& bj : blocks) page.blocks.push_back(read_block(bj, page.page_no, r.where));
    doc.pages.push_back(std::move(page));
  }
  validate(doc);
  return doc;
}

ExtractedDocument load_extraction_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open extraction file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_extraction_file(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line(), e.column(), e.offset());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what(), e.block_id());
  }
}

std::string serialize_extraction(const ExtractedDocument& doc, int indent) {
  ojson root = {{"doc_id", doc.doc_id}, {"title", doc.title}, {"source_path", doc.source_path}};
  ojson pages = ojson::array();
  for (const Page& p : doc.pages) {
    ojson blocks = ojson::array();
    for (const Block& b : p.blocks) {
      ojson bj = {{"block_id", b.block_id},
                 {"kind", to_string(b.kind)},
                 {"bbox", {b.bbox.x0, b.bbox.y0, b.bbox.x1, b.bbox.y1}},
                 {"text", b.text}};
      if (b.image_kind) bj["image_kind"] = to_string(*b.image_kind);
      if (b.table) bj["table"] = write_table(*b.table);
      if (b.context) bj["context"] = write_context(*b.context);
      blocks.push_back(std::move(bj));
    }
    pages.push_back({{"page_no", p.page_no}, {"blocks", std::move(blocks)}});
  }
  root["pages"] = std::move(pages);
  return root.dump(indent) + "\n";
}

CorpusManifest build_manifest(const std::vector<ExtractedDocument>& docs) {
  CorpusManifest m;
  std::set<std::string> ids;
  for (const auto& doc : docs) {
    if (!ids.insert(doc.doc_id).second)
      throw ValidationError("duplicate doc_id '" + doc.doc_id + "'");
    ManifestEntry e{doc.doc_id, doc.title, doc.pages.size(), 0, 0};
    for (const auto& page : doc.pages) {
      for (const auto& b : page.blocks) {
        if (b.kind == BlockKind::Image) ++e.num_images;
        if (b.kind == BlockKind::Table) ++e.num_tables;
      }
    }
    ++m.num_documents;
    m.num_pages += e.num_pages;
    m.num_images += e.num_images;
    m.num_tables += e.num_tables;
    m.documents.push_back(std::move(e));
  }
  return m;
}

}  // namespace sarch
