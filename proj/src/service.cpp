#include "sarch/service.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "sarch/text.hpp"

namespace sarch::service {

using nlohmann::json;

void ServiceConfig::validate() const {
  if (default_k < 1) throw std::invalid_argument("default_k must be at least 1");
  if (port < 0 || port > 65535) throw std::invalid_argument("listen port out of range");
  if (index_path.empty()) throw std::invalid_argument("index path is not set");
  if (!stopwords_path.empty() && !std::filesystem::is_regular_file(stopwords_path))
    throw std::invalid_argument("stopword file '" + stopwords_path + "' does not exist");
  if (!static_dir.empty() && !std::filesystem::is_directory(static_dir))
    throw std::invalid_argument("static directory '" + static_dir + "' does not exist");
  if (provider) provider->validate();
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

namespace {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> kKeys = {
      "listen",           "index",       "stopwords",       "default_k",
      "static_dir",       "cors_origin", "provider",        "provider.dim",
      "provider.endpoint", "provider.text_model", "provider.image_model", "provider.table_model"};
  return kKeys;
}

std::string env_name(const std::string& key) {
  std::string out = "SARCH_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("config key '" + key + "' expects a non-negative integer, got '" +
                                value + "'");
  }
}

}  // namespace

ServiceConfig parse_service_config(const std::string& content, const EnvLookup& env) {
  std::map<std::string, std::string> kv;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (text::trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = text::trim(line.substr(0, eq));
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    kv[key] = text::trim(line.substr(eq + 1));
  }
  for (const auto& key : config_keys())
    if (auto v = env(env_name(key))) kv[key] = *v;

  ServiceConfig c;
  if (auto it = kv.find("listen"); it != kv.end()) {
    auto colon = it->second.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("listen expects host:port");
    c.host = it->second.substr(0, colon);
    c.port = static_cast<int>(parse_size("listen", it->second.substr(colon + 1)));
  }
  if (auto it = kv.find("index"); it != kv.end()) c.index_path = it->second;
  if (auto it = kv.find("stopwords"); it != kv.end()) c.stopwords_path = it->second;
  if (auto it = kv.find("default_k"); it != kv.end()) c.default_k = parse_size("default_k", it->second);
  if (auto it = kv.find("static_dir"); it != kv.end()) c.static_dir = it->second;
  if (auto it = kv.find("cors_origin"); it != kv.end()) c.cors_origin = it->second;
  if (auto it = kv.find("provider"); it != kv.end()) {
    if (it->second == "hash") {
      c.provider = embed::ProviderConfig::hash(
          kv.contains("provider.dim") ? parse_size("provider.dim", kv["provider.dim"]) : 256);
    } else if (it->second == "external") {
      c.provider = embed::ProviderConfig::external(kv["provider.endpoint"]);
      c.provider->text_model = kv["provider.text_model"];
      c.provider->image_model = kv["provider.image_model"];
      c.provider->table_model = kv["provider.table_model"];
    } else {
      throw std::invalid_argument("provider must be 'hash' or 'external'");
    }
  }
  c.validate();
  return c;
}

ServiceConfig load_service_config(const std::string& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_service_config(ss.str(), env);
}

std::shared_ptr<const retrieval::Engine> make_engine(
    std::shared_ptr<const index::CorpusIndex> corpus,
    const std::optional<embed::ProviderConfig>& provider_override,
    const retrieval::Stopwords& stopwords) {
  auto engine = std::make_shared<retrieval::Engine>();
  engine->provider = embed::make_provider(provider_override.value_or(corpus->provider));
  engine->corpus = std::move(corpus);
  engine->stopwords = stopwords;
  return engine;
}

std::string make_snippet(const std::string& text, const std::vector<std::string>& keywords,
                         std::size_t width) {
  if (text.size() <= width) return text;
  const std::string lower = text::to_lower(text);
  std::size_t hit = std::string::npos;
  for (const auto& kw : keywords) {
    for (std::size_t pos = lower.find(kw); pos != std::string::npos; pos = lower.find(kw, pos + 1)) {
      const bool left = pos == 0 || !text::is_word_byte(static_cast<unsigned char>(lower[pos - 1]));
      const std::size_t end = pos + kw.size();
      const bool right = end >= lower.size() || !text::is_word_byte(static_cast<unsigned char>(lower[end]));
      if (left && right) {
        hit = std::min(hit, pos);
        break;
      }
    }
  }
  std::size_t start = hit == std::string::npos || hit < width / 3 ? 0 : hit - width / 3;
  while (start > 0 && !std::isspace(static_cast<unsigned char>(text[start - 1]))) --start;
  std::size_t end = std::min(text.size(), start + width);
  if (end < text.size())
    while (end > start && !std::isspace(static_cast<unsigned char>(text[end]))) --end;
  if (end == start) end = std::min(text.size(), start + width);
  std::string out = text::trim(std::string_view(text).substr(start, end - start));
  if (start > 0) out = "... " + out;
  if (end < text.size()) out += " ...";
  return out;
}

std::string manifest_json(const CorpusManifest& m) {
  json docs = json::array();
  for (const auto& d : m.documents)
    docs.push_back({{"doc_id", d.doc_id},
                    {"title", d.title},
                    {"num_pages", d.num_pages},
                    {"num_images", d.num_images},
                    {"num_tables", d.num_tables}});
  return json{{"num_documents", m.num_documents},
              {"num_pages", m.num_pages},
              {"num_images", m.num_images},
              {"num_tables", m.num_tables},
              {"documents", docs}}
      .dump();
}

std::string result_payload_json(const retrieval::Engine& engine, const retrieval::Query& q,
                                const retrieval::RankedList& ranked) {
  constexpr std::size_t kPreviewRows = 5;
  constexpr std::size_t kExcerpt = 300;
  const auto keywords = retrieval::extract_keywords(q.text, engine.stopwords);
  json results = json::array();
  for (const auto& e : ranked.entries) {
    const auto& unit = engine.corpus->unit(e.unit_id);
    const auto& payload = engine.corpus->payloads.at(e.unit_id);
    json r = {{"unit_id", e.unit_id},
              {"doc_id", unit.doc_id},
              {"title", payload.title},
              {"page_no", unit.page_no},
              {"modality", to_string(unit.modality)},
              {"score", e.score},
              {"rank", e.rank}};
    if (unit.block_id) r["block_id"] = *unit.block_id;
    switch (unit.modality) {
      case Modality::Text:
        r["snippet"] = make_snippet(payload.text, keywords);
        break;
      case Modality::Image:
        r["caption"] = payload.caption ? json(*payload.caption) : json(nullptr);
        r["image_kind"] = to_string(payload.image_kind.value_or(ImageKind::Figure));
        r["context"] = make_snippet(payload.text, keywords, kExcerpt);
        break;
      case Modality::Table: {
        json rows = json::array();
        if (payload.table)
          for (std::size_t i = 0; i < payload.table->rows.size() && i < kPreviewRows; ++i)
            rows.push_back(payload.table->rows[i]);
        r["header"] = payload.table ? json(payload.table->header) : json::array();
        r["rows"] = rows;
        r["total_rows"] = payload.table ? payload.table->rows.size() : 0;
        r["caption"] = payload.caption ? json(*payload.caption) : json(nullptr);
        break;
      }
    }
    results.push_back(std::move(r));
  }
  json body = {{"query",
                {{"q", q.text},
                 {"modality", to_string(q.modality)},
                 {"pipeline", retrieval::to_string(q.pipeline)},
                 {"k", q.k}}},
               {"pipeline", retrieval::to_string(q.pipeline)},
               {"keywords", keywords},
               {"total", ranked.size()},
               {"results", std::move(results)}};
  return body.dump();
}

namespace {

Response error(int status, const std::string& msg) {
  return {status, json{{"error", msg}}.dump()};
}

std::optional<std::string> param(const Params& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) return std::nullopt;
  return it->second;
}

}  // namespace

SearchService::SearchService(ServiceConfig config) : config_(std::move(config)) {}

SearchService::~SearchService() {
  if (loader_.joinable()) loader_.join();
}

void SearchService::install(std::shared_ptr<const retrieval::Engine> engine) {
  std::lock_guard lock(mu_);
  engine_ = std::move(engine);
  load_error_.reset();
}

std::shared_ptr<const retrieval::Engine> SearchService::snapshot() const {
  std::lock_guard lock(mu_);
  return engine_;
}

std::optional<std::string> SearchService::load_error() const {
  std::lock_guard lock(mu_);
  return load_error_;
}

void SearchService::load_in_background() {
  if (loader_.joinable()) loader_.join();
  loader_ = std::thread([this] {
    try {
      auto corpus = std::make_shared<const index::CorpusIndex>(index::load(config_.index_path));
      auto stopwords = config_.stopwords_path.empty() ? retrieval::default_stopwords()
                                                      : retrieval::load_stopwords(config_.stopwords_path);
      install(make_engine(std::move(corpus), config_.provider, stopwords));
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      load_error_ = e.what();
    }
  });
}

Response SearchService::search(const Params& params) const {
  retrieval::Query q;
  auto text = param(params, "q");
  if (!text || text::trim(*text).empty()) return error(400, "query parameter 'q' is required");
  q.text = *text;

  const std::string modality = param(params, "modality").value_or("text");
  auto m = parse_modality(modality);
  if (!m) return error(400, "unknown modality '" + modality + "' (expected text, image or table)");
  q.modality = *m;

  const std::string pipeline = param(params, "pipeline").value_or("hybrid");
  auto p = retrieval::parse_pipeline(pipeline);
  if (!p) return error(400, "unknown pipeline '" + pipeline + "' (expected keyword, embedding or hybrid)");
  q.pipeline = *p;

  q.k = config_.default_k;
  if (auto k = param(params, "k")) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(*k, &used);
      if (used != k->size() || v < 1) return error(400, "k must be an integer >= 1");
      q.k = static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      return error(400, "k must be an integer >= 1");
    }
  }

  auto engine = snapshot();
  if (!engine) return error(503, "index is loading");
  try {
    return {200, result_payload_json(*engine, q, retrieval::run_query(q, *engine))};
  } catch (const embed::ProviderError& e) {
    return error(502, e.what());
  } catch (const retrieval::MissingStoreError& e) {
    return error(404, e.what());
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

Response SearchService::stats() const {
  auto engine = snapshot();
  if (!engine) return error(503, "index is loading");
  return {200, manifest_json(engine->corpus->manifest)};
}

Response SearchService::healthz() const {
  auto engine = snapshot();
  json body = {{"status", "ok"}, {"index_loaded", engine != nullptr}};
  if (auto err = load_error()) body["load_error"] = *err;
  return {200, body.dump()};
}

void SearchService::bind(httplib::Server& server) const {
  const std::string origin = config_.cors_origin;
  auto reply = [origin](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_content(r.body, r.content_type);
  };
  server.Get("/search", [this, reply](const httplib::Request& req, httplib::Response& res) {
    Params params(req.params.begin(), req.params.end());
    reply(res, search(params));
  });
  server.Get("/stats", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, stats());
  });
  server.Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, healthz());
  });
  server.Options(R"(/.*)", [origin](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  if (!config_.static_dir.empty()) server.set_mount_point("/", config_.static_dir);
}

}  // namespace sarch::service
