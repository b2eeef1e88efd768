#include "sarch/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sarch/text.hpp"

namespace sarch::index {

UnitId InvertedIndex::add_unit(IndexUnit unit, const std::vector<std::string>& tokens) {
  const auto id = static_cast<UnitId>(units.size());
  unit.unit_id = id;
  unit.token_count = static_cast<std::uint32_t>(tokens.size());

  std::map<std::string, std::uint32_t> tf;
  for (const auto& t : tokens) ++tf[t];
  Partition& part = partition(unit.modality);
  for (auto& [term, count] : tf) {
    PostingList& list = part.postings[term];
    if (list.term.empty()) list.term = term;
    list.entries.push_back({id, count});  // ids are assigned in increasing order
  }
  part.unit_ids.push_back(id);
  part.total_tokens += unit.token_count;
  units.push_back(std::move(unit));
  return id;
}

std::vector<float> VectorStore::vector(std::size_t row) const {
  return {data.begin() + static_cast<std::ptrdiff_t>(row * dim),
          data.begin() + static_cast<std::ptrdiff_t>((row + 1) * dim)};
}

void VectorStore::add(UnitId unit, const embed::Embedding& e) {
  if (unit_ids.empty() && dim == 0) dim = e.dim();
  if (e.dim() != dim)
    throw IndexError("embedding for unit " + std::to_string(unit) + " has dim " +
                     std::to_string(e.dim()) + ", store expects " + std::to_string(dim));
  unit_ids.push_back(unit);
  data.insert(data.end(), e.vector.begin(), e.vector.end());
}

const IndexUnit& CorpusIndex::unit(UnitId id) const {
  if (id >= inverted.units.size()) throw IndexError("unknown unit " + std::to_string(id));
  return inverted.units[id];
}

const VectorStore* CorpusIndex::store(Modality m) const {
  auto it = stores.find(m);
  return it == stores.end() ? nullptr : &it->second;
}

std::optional<UnitId> CorpusIndex::find_unit(const std::string& doc_id, int page_no,
                                             const std::string& block_id) const {
  for (const auto& u : inverted.units) {
    if (u.doc_id != doc_id || u.page_no != page_no) continue;
    if (block_id.empty() ? !u.block_id.has_value() : u.block_id == block_id) return u.unit_id;
  }
  return std::nullopt;
}

namespace {

struct PendingUnit {
  UnitId id;
  std::string text;
};

std::string describe(const IndexUnit& u) {
  std::string s = "unit " + std::to_string(u.unit_id) + " (" + u.doc_id + " page " +
                  std::to_string(u.page_no);
  if (u.block_id) s += " block " + *u.block_id;
  return s + ")";
}

void embed_pending(const std::vector<PendingUnit>& pending, Modality modality,
                   const embed::EmbeddingProvider& provider, const InvertedIndex& inv,
                   VectorStore& store) {
  constexpr std::size_t kChunk = embed::ExternalProvider::kMaxBatch;
  for (std::size_t start = 0; start < pending.size(); start += kChunk) {
    const std::size_t end = std::min(pending.size(), start + kChunk);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(pending[i].text);
    std::vector<embed::Embedding> vecs;
    try {
      vecs = provider.embed_batch(texts, modality);
    } catch (const std::exception&) {
      // Retry one by one to name the unit that fails.
      vecs.clear();
      for (std::size_t i = start; i < end; ++i) {
        try {
          vecs.push_back(provider.embed_text(pending[i].text, modality));
        } catch (const std::exception& e) {
          throw IndexError("indexing aborted at " + describe(inv.units[pending[i].id]) + ": " +
                           e.what());
        }
      }
    }
    for (std::size_t i = start; i < end; ++i) store.add(pending[i].id, vecs[i - start]);
  }
}

}  // namespace

CorpusIndex index_corpus(const std::vector<ExtractedDocument>& docs,
                         const embed::EmbeddingProvider& provider, const IndexOptions& options) {
  CorpusIndex out;
  out.manifest = build_manifest(docs);
  out.provider = provider.config();
  for (Modality m : kAllModalities) {
    out.stores[m].modality = m;
    out.stores[m].dim = out.provider.kind == embed::ProviderKind::DeterministicHash ? out.provider.dim : 0;
  }

  std::array<std::vector<PendingUnit>, 3> pending;
  std::vector<std::pair<UnitId, std::string>> to_classify;

  for (const auto& doc : docs) {
    for (const auto& page : doc.pages) {
      std::vector<std::string> lines;
      for (const auto& b : page.blocks)
        if (b.kind == BlockKind::Text && !b.text.empty()) lines.push_back(b.text);
      std::string page_text = text::join(lines, "\n");
      auto tokens = text::tokenize(page_text);
      if (!tokens.empty()) {
        UnitId id = out.inverted.add_unit({0, Modality::Text, doc.doc_id, page.page_no, {}, 0}, tokens);
        out.payloads.push_back({doc.title, page_text, {}, {}, {}});
        pending[0].push_back({id, std::move(page_text)});
      }

      for (const auto& b : page.blocks) {
        if (b.kind == BlockKind::Text) continue;
        if (!b.context)
          throw IndexError("block '" + b.block_id + "' in " + doc.doc_id +
                           " has no context bundle; contextualize before indexing");
        const std::string& ctx = b.context->combined_text;
        auto ctx_tokens = text::tokenize(ctx);
        if (ctx_tokens.empty()) continue;
        const Modality m = modality_of(b.kind);
        UnitId id = out.inverted.add_unit({0, m, doc.doc_id, page.page_no, b.block_id, 0}, ctx_tokens);
        out.payloads.push_back({doc.title, ctx, b.context->caption, b.image_kind, b.table});
        pending[static_cast<std::size_t>(m)].push_back({id, ctx});
        if (b.kind == BlockKind::Image && options.classify_images) to_classify.emplace_back(id, ctx);
      }
    }
  }

  if (!to_classify.empty()) {
    std::vector<std::string> contexts;
    for (const auto& [id, ctx] : to_classify) contexts.push_back(ctx);
    std::vector<ImageKind> kinds;
    try {
      kinds = provider.classify_batch(contexts);
    } catch (const std::exception& e) {
      throw IndexError(std::string("image classification failed: ") + e.what());
    }
    for (std::size_t i = 0; i < to_classify.size(); ++i)
      out.payloads[to_classify[i].first].image_kind = kinds[i];
  }

  for (Modality m : kAllModalities)
    embed_pending(pending[static_cast<std::size_t>(m)], m, provider, out.inverted, out.stores[m]);
  return out;
}

namespace {

std::uint32_t term_frequency(const PostingList& list, UnitId unit) {
  auto it = std::lower_bound(list.entries.begin(), list.entries.end(), unit,
                             [](const Posting& p, UnitId u) { return p.unit_id < u; });
  return (it != list.entries.end() && it->unit_id == unit) ? it->tf : 0;
}

}  // namespace

double bm25_score(const std::vector<std::string>& query_terms, UnitId unit_id,
                  const InvertedIndex& index, const Bm25Params& p) {
  if (unit_id >= index.units.size()) throw IndexError("unknown unit " + std::to_string(unit_id));
  const IndexUnit& unit = index.units[unit_id];
  const Partition& part = index.partition(unit.modality);
  const double n_units = double(part.unit_ids.size());
  const double avg_len = part.avg_len();
  const double len_norm = avg_len > 0 ? double(unit.token_count) / avg_len : 0.0;

  double score = 0.0;
  for (const auto& term : query_terms) {
    auto it = part.postings.find(term);
    if (it == part.postings.end()) continue;
    const double tf = term_frequency(it->second, unit_id);
    if (tf == 0) continue;
    const double n_t = double(it->second.entries.size());
    const double idf = std::log(1.0 + (n_units - n_t + 0.5) / (n_t + 0.5));
    score += idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * len_norm));
  }
  return score;
}

namespace {

bool ranks_before(const ScoredUnit& a, const ScoredUnit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.unit_id < b.unit_id;
}

void keep_top(std::vector<ScoredUnit>& v, std::size_t k) {
  if (v.size() > k) {
    std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), ranks_before);
    v.resize(k);
  } else {
    std::sort(v.begin(), v.end(), ranks_before);
  }
}

}  // namespace

std::vector<ScoredUnit> keyword_topk(const std::vector<std::string>& query_terms,
                                     Modality modality, std::size_t k, const InvertedIndex& index,
                                     const Bm25Params& params) {
  if (k == 0) throw std::invalid_argument("keyword_topk: k must be at least 1");
  const Partition& part = index.partition(modality);
  std::vector<UnitId> candidates;
  for (const auto& term : query_terms) {
    auto it = part.postings.find(term);
    if (it == part.postings.end()) continue;
    for (const auto& p : it->second.entries) candidates.push_back(p.unit_id);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<ScoredUnit> scored;
  scored.reserve(candidates.size());
  for (UnitId u : candidates) {
    const double s = bm25_score(query_terms, u, index, params);
    if (s > 0) scored.push_back({u, s});
  }
  keep_top(scored, k);
  return scored;
}

std::vector<ScoredUnit> vector_topk(const embed::Embedding& query, std::size_t k,
                                    const VectorStore& store) {
  if (k == 0) throw std::invalid_argument("vector_topk: k must be at least 1");
  if (store.size() == 0) return {};
  if (query.dim() != store.dim)
    throw IndexError("query dim " + std::to_string(query.dim()) + " does not match store dim " +
                     std::to_string(store.dim));
  std::vector<ScoredUnit> scored(store.size());
  for (std::size_t r = 0; r < store.size(); ++r) {
    const float* row = store.data.data() + r * store.dim;
    double s = 0.0;
    for (std::size_t i = 0; i < store.dim; ++i) s += double(query.vector[i]) * double(row[i]);
    scored[r] = {store.unit_ids[r], s};
  }
  keep_top(scored, k);
  return scored;
}

// ---------------------------------------------------------------------------
// Persistence: "SARCHIDX", u32 version, u32 section count, then sections of
// (u32 tag, u64 length, bytes), then a u64 FNV-1a checksum of all prior bytes.
// Integers and floats are little-endian.

namespace {

constexpr char kMagic[8] = {'S', 'A', 'R', 'C', 'H', 'I', 'D', 'X'};
enum SectionTag : std::uint32_t { kMeta = 1, kUnits = 2, kPostings = 3, kVectors = 4 };

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void opt_str(const std::optional<std::string>& s) {
    u8(s ? 1 : 0);
    if (s) str(*s);
  }
  void str_list(const std::vector<std::string>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (const auto& s : v) str(s);
  }
  void section(std::uint32_t tag, const Writer& body) {
    u32(tag);
    u64(body.buf_.size());
    buf_.append(body.buf_);
  }
  void raw(std::string_view s) { buf_.append(s); }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes, std::string what = "index")
      : data_(bytes), what_(std::move(what)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(take(u32())); }
  std::optional<std::string> opt_str() {
    if (!flag()) return std::nullopt;
    return str();
  }
  std::vector<std::string> str_list() {
    const std::uint32_t n = u32();
    need(std::size_t(n) * 4);  // every string carries at least its length prefix
    std::vector<std::string> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(str());
    return out;
  }
  bool flag() {
    const auto v = u8();
    if (v > 1) fail("invalid flag byte");
    return v == 1;
  }
  Modality modality() {
    const auto v = u8();
    if (v > 2) fail("invalid modality byte " + std::to_string(v));
    return static_cast<Modality>(v);
  }
  bool done() const { return pos_ == data_.size(); }
  void expect_done() const {
    if (!done()) fail("trailing bytes");
  }
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("unexpected end of data");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw CorruptIndexError("corrupt " + what_ + ": " + msg + " at offset " + std::to_string(pos_));
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

void write_manifest(Writer& w, const CorpusManifest& m) {
  w.u64(m.num_documents);
  w.u64(m.num_pages);
  w.u64(m.num_images);
  w.u64(m.num_tables);
  w.u32(static_cast<std::uint32_t>(m.documents.size()));
  for (const auto& e : m.documents) {
    w.str(e.doc_id);
    w.str(e.title);
    w.u64(e.num_pages);
    w.u64(e.num_images);
    w.u64(e.num_tables);
  }
}

CorpusManifest read_manifest(Reader& r) {
  CorpusManifest m;
  m.num_documents = r.u64();
  m.num_pages = r.u64();
  m.num_images = r.u64();
  m.num_tables = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    ManifestEntry e;
    e.doc_id = r.str();
    e.title = r.str();
    e.num_pages = r.u64();
    e.num_images = r.u64();
    e.num_tables = r.u64();
    m.documents.push_back(std::move(e));
  }
  return m;
}

}  // namespace

std::string serialize(const CorpusIndex& idx) {
  Writer meta;
  meta.str(idx.provider.to_json());
  write_manifest(meta, idx.manifest);

  Writer units;
  units.u32(static_cast<std::uint32_t>(idx.inverted.units.size()));
  for (std::size_t i = 0; i < idx.inverted.units.size(); ++i) {
    const IndexUnit& u = idx.inverted.units[i];
    const UnitPayload& p = idx.payloads.at(i);
    units.u8(static_cast<std::uint8_t>(u.modality));
    units.str(u.doc_id);
    units.i32(u.page_no);
    units.opt_str(u.block_id);
    units.u32(u.token_count);
    units.str(p.title);
    units.str(p.text);
    units.opt_str(p.caption);
    units.u8(p.image_kind ? static_cast<std::uint8_t>(*p.image_kind) : 0xFF);
    units.u8(p.table ? 1 : 0);
    if (p.table) {
      units.str_list(p.table->header);
      units.u32(static_cast<std::uint32_t>(p.table->rows.size()));
      for (const auto& row : p.table->rows) units.str_list(row);
      units.opt_str(p.table->caption);
    }
  }

  Writer postings;
  for (Modality m : kAllModalities) {
    const Partition& part = idx.inverted.partition(m);
    postings.u8(static_cast<std::uint8_t>(m));
    postings.u32(static_cast<std::uint32_t>(part.postings.size()));
    for (const auto& [term, list] : part.postings) {
      postings.str(term);
      postings.u32(static_cast<std::uint32_t>(list.entries.size()));
      for (const auto& e : list.entries) {
        postings.u32(e.unit_id);
        postings.u32(e.tf);
      }
    }
  }

  Writer vectors;
  vectors.u32(static_cast<std::uint32_t>(idx.stores.size()));
  for (const auto& [m, store] : idx.stores) {
    vectors.u8(static_cast<std::uint8_t>(m));
    vectors.u32(static_cast<std::uint32_t>(store.dim));
    vectors.u32(static_cast<std::uint32_t>(store.size()));
    for (std::size_t r = 0; r < store.size(); ++r) {
      vectors.u32(store.unit_ids[r]);
      for (std::size_t i = 0; i < store.dim; ++i) vectors.f32(store.data[r * store.dim + i]);
    }
  }

  Writer out;
  out.raw(std::string_view(kMagic, sizeof kMagic));
  out.u32(kFormatVersion);
  out.u32(4);
  out.section(kMeta, meta);
  out.section(kUnits, units);
  out.section(kPostings, postings);
  out.section(kVectors, vectors);
  const std::uint64_t checksum = embed::fnv1a64(out.bytes());
  out.u64(checksum);
  return std::move(out.bytes());
}

CorpusIndex deserialize(std::string_view bytes) {
  Reader head(bytes);
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw CorruptIndexError("not a sarch index file (bad magic)");
  head.take(sizeof kMagic);
  const std::uint32_t version = head.u32();
  if (version != kFormatVersion)
    throw CorruptIndexError("unsupported index format version " + std::to_string(version) +
                            " (this build reads version " + std::to_string(kFormatVersion) + ")");
  if (bytes.size() < sizeof kMagic + 16) head.fail("file too short");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  Reader trailer(bytes.substr(bytes.size() - 8));
  if (trailer.u64() != embed::fnv1a64(body))
    throw CorruptIndexError("corrupt index: checksum mismatch (file truncated or damaged)");

  Reader r(body);
  r.take(sizeof kMagic + 4);
  const std::uint32_t sections = r.u32();
  std::map<std::uint32_t, std::string_view> found;
  for (std::uint32_t s = 0; s < sections; ++s) {
    const std::uint32_t tag = r.u32();
    const std::uint64_t len = r.u64();
    found[tag] = r.take(len);
  }
  r.expect_done();
  for (auto tag : {kMeta, kUnits, kPostings, kVectors})
    if (!found.contains(tag)) r.fail("missing section " + std::to_string(tag));

  CorpusIndex idx;
  {
    Reader m(found[kMeta], "meta section");
    try {
      idx.provider = embed::ProviderConfig::from_json(m.str());
    } catch (const std::exception& e) {
      m.fail(std::string("bad provider config: ") + e.what());
    }
    idx.manifest = read_manifest(m);
    m.expect_done();
  }
  {
    Reader u(found[kUnits], "unit table");
    const std::uint32_t n = u.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      IndexUnit unit;
      unit.unit_id = i;
      unit.modality = u.modality();
      unit.doc_id = u.str();
      unit.page_no = u.i32();
      unit.block_id = u.opt_str();
      unit.token_count = u.u32();
      UnitPayload p;
      p.title = u.str();
      p.text = u.str();
      p.caption = u.opt_str();
      const std::uint8_t kind = u.u8();
      if (kind != 0xFF) {
        if (kind > 3) u.fail("invalid image kind");
        p.image_kind = static_cast<ImageKind>(kind);
      }
      if (u.flag()) {
        TableData t;
        t.header = u.str_list();
        const std::uint32_t rows = u.u32();
        for (std::uint32_t k = 0; k < rows; ++k) t.rows.push_back(u.str_list());
        t.caption = u.opt_str();
        p.table = std::move(t);
      }
      Partition& part = idx.inverted.partition(unit.modality);
      part.unit_ids.push_back(i);
      part.total_tokens += unit.token_count;
      idx.inverted.units.push_back(std::move(unit));
      idx.payloads.push_back(std::move(p));
    }
    u.expect_done();
  }
  {
    Reader p(found[kPostings], "postings section");
    for (int k = 0; k < 3; ++k) {
      const Modality m = p.modality();
      Partition& part = idx.inverted.partition(m);
      const std::uint32_t terms = p.u32();
      for (std::uint32_t t = 0; t < terms; ++t) {
        PostingList list;
        list.term = p.str();
        const std::uint32_t n = p.u32();
        p.need(std::size_t(n) * 8);
        for (std::uint32_t e = 0; e < n; ++e) {
          Posting post{p.u32(), p.u32()};
          if (post.unit_id >= idx.inverted.units.size() ||
              idx.inverted.units[post.unit_id].modality != m || post.tf == 0 ||
              (!list.entries.empty() && post.unit_id <= list.entries.back().unit_id))
            p.fail("invalid posting for term '" + list.term + "'");
          list.entries.push_back(post);
        }
        part.postings.emplace(list.term, std::move(list));
      }
    }
    p.expect_done();
  }
  {
    Reader v(found[kVectors], "vector section");
    const std::uint32_t n = v.u32();
    for (std::uint32_t s = 0; s < n; ++s) {
      VectorStore store;
      store.modality = v.modality();
      store.dim = v.u32();
      const std::uint32_t count = v.u32();
      v.need(std::size_t(count) * (4 + 4 * store.dim));
      store.unit_ids.reserve(count);
      store.data.reserve(std::size_t(count) * store.dim);
      for (std::uint32_t r = 0; r < count; ++r) {
        const UnitId id = v.u32();
        if (id >= idx.inverted.units.size() || idx.inverted.units[id].modality != store.modality)
          v.fail("vector record references invalid unit " + std::to_string(id));
        store.unit_ids.push_back(id);
        for (std::size_t i = 0; i < store.dim; ++i) store.data.push_back(v.f32());
      }
      idx.stores[store.modality] = std::move(store);
    }
    v.expect_done();
  }
  return idx;
}

void persist(const CorpusIndex& index, const std::string& path) {
  const std::string bytes = serialize(index);
  // Sibling temp file, then rename into place.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IndexError("cannot write index to '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IndexError("write failed for '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IndexError("cannot move index into place at '" + path + "'");
}

CorpusIndex load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IndexError("no index found at '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize(ss.str());
  } catch (const CorruptIndexError& e) {
    throw CorruptIndexError(path + ": " + e.what());
  }
}

}  // namespace sarch::index
