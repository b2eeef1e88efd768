#include "sarch/embedding.hpp"

#include <array>
#include <cmath>
#include <regex>
#include <set>

#include "httplib.h"
#include "json.hpp"
#include "sarch/text.hpp"

namespace sarch::embed {

using nlohmann::json;

double l2_norm(const std::vector<float>& v) { return std::sqrt(dot(v, v)); }

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

ProviderError::ProviderError(const std::string& what, std::string endpoint, int status,
                             bool retriable)
    : std::runtime_error(what),
      endpoint_(std::move(endpoint)),
      status_(status),
      retriable_(retriable) {}

ProviderConfig ProviderConfig::hash(std::size_t dim) {
  ProviderConfig c;
  c.kind = ProviderKind::DeterministicHash;
  c.dim = dim;
  return c;
}

ProviderConfig ProviderConfig::external(std::string endpoint) {
  ProviderConfig c;
  c.kind = ProviderKind::ExternalService;
  c.dim = 0;
  c.endpoint = std::move(endpoint);
  return c;
}

void ProviderConfig::validate() const {
  const bool has_models = !text_model.empty() || !image_model.empty() || !table_model.empty();
  if (kind == ProviderKind::DeterministicHash) {
    if (dim == 0) throw std::invalid_argument("hash provider needs a positive dim");
    if (!endpoint.empty() || has_models)
      throw std::invalid_argument("hash provider takes no endpoint or model names");
  } else {
    if (endpoint.empty()) throw std::invalid_argument("external provider needs an endpoint");
    if (dim != 0) throw std::invalid_argument("external provider dim comes from the service");
  }
}

std::string ProviderConfig::to_json() const {
  json j;
  if (kind == ProviderKind::DeterministicHash) {
    j = {{"kind", "hash"}, {"dim", dim}};
  } else {
    j = {{"kind", "external"},
         {"endpoint", endpoint},
         {"models", {{"text", text_model}, {"image", image_model}, {"table", table_model}}}};
  }
  return j.dump();
}

ProviderConfig ProviderConfig::from_json(std::string_view s) {
  json j = json::parse(s.begin(), s.end());
  ProviderConfig c;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "hash") {
    c = hash(j.at("dim").get<std::size_t>());
  } else if (kind == "external") {
    c = external(j.at("endpoint").get<std::string>());
    if (auto m = j.find("models"); m != j.end()) {
      c.text_model = m->value("text", "");
      c.image_model = m->value("image", "");
      c.table_model = m->value("table", "");
    }
  } else {
    throw std::invalid_argument("unknown provider kind '" + kind + "'");
  }
  c.validate();
  return c;
}

Embedding EmbeddingProvider::embed_text(std::string_view text, Modality modality) const {
  auto out = embed_batch({std::string(text)}, modality);
  return std::move(out.at(0));
}

ImageKind EmbeddingProvider::classify_image_kind(std::string_view image_context) const {
  return classify_batch({std::string(image_context)}).at(0);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint8_t modality_tag(Modality modality) {
  return static_cast<std::uint8_t>(static_cast<std::uint8_t>(modality) + 1);
}

ImageKind keyword_image_kind(std::string_view image_context) {
  static const std::array<std::set<std::string, std::less<>>, 3> kKeywords = {{
      {"map", "maps", "sites", "scale", "river", "rivers", "region", "regions", "location",
       "locations", "route", "routes", "distribution"},
      {"photograph", "photographs", "photo", "photos", "view", "views", "closeup"},
      {"plan", "plans", "layout", "layouts", "trench", "trenches", "excavated", "section",
       "sections", "stratigraphy"},
  }};
  static constexpr std::array<ImageKind, 3> kOrder = {ImageKind::Map, ImageKind::Photograph,
                                                      ImageKind::SiteLayout};
  std::array<int, 3> hits{};
  for (const auto& tok : text::tokenize(image_context))
    for (std::size_t k = 0; k < 3; ++k)
      if (kKeywords[k].contains(tok)) ++hits[k];
  std::size_t best = 0;
  for (std::size_t k = 1; k < 3; ++k)
    if (hits[k] > hits[best]) best = k;
  return hits[best] == 0 ? ImageKind::Figure : kOrder[best];
}

HashProvider::HashProvider(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("HashProvider dim must be positive");
}

Embedding HashProvider::embed_text(std::string_view input, Modality modality) const {
  if (text::trim(input).empty()) throw std::invalid_argument("cannot embed empty text");
  std::vector<double> acc(dim_, 0.0);
  std::string buf;
  for (const auto& tok : text::tokenize(input)) {
    buf.assign(1, static_cast<char>(modality_tag(modality)));
    buf += tok;
    const std::uint64_t h = fnv1a64(buf);
    acc[h % dim_] += (h & 1U) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0)
    throw std::invalid_argument("text has no indexable tokens: '" + std::string(input) + "'");
  Embedding e;
  e.modality = modality;
  e.vector.resize(dim_);
  for (std::size_t i = 0; i < dim_; ++i) e.vector[i] = static_cast<float>(acc[i] / norm);
  return e;
}

std::vector<Embedding> HashProvider::embed_batch(const std::vector<std::string>& texts,
                                                 Modality modality) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t, modality));
  return out;
}

ImageKind HashProvider::classify_image_kind(std::string_view image_context) const {
  return keyword_image_kind(image_context);
}

std::vector<ImageKind> HashProvider::classify_batch(const std::vector<std::string>& contexts) const {
  std::vector<ImageKind> out;
  out.reserve(contexts.size());
  for (const auto& c : contexts) out.push_back(keyword_image_kind(c));
  return out;
}

// cpp-httplib clients are not safe for concurrent use, so each request borrows one.
class HttpClientPool {
 public:
  HttpClientPool(std::string scheme_host_port, std::string base_path)
      : origin_(std::move(scheme_host_port)), base_path_(std::move(base_path)) {}

  struct Lease {
    HttpClientPool* pool;
    std::unique_ptr<httplib::Client> client;
    ~Lease() {
      if (client) pool->release(std::move(client));
    }
  };

  Lease acquire() {
    std::lock_guard lock(mu_);
    if (!idle_.empty()) {
      auto c = std::move(idle_.back());
      idle_.pop_back();
      return {this, std::move(c)};
    }
    auto c = std::make_unique<httplib::Client>(origin_);
    c->set_connection_timeout(5);
    c->set_read_timeout(60);
    c->set_keep_alive(true);
    return {this, std::move(c)};
  }

  const std::string& base_path() const { return base_path_; }

 private:
  void release(std::unique_ptr<httplib::Client> c) {
    std::lock_guard lock(mu_);
    if (idle_.size() < 8) idle_.push_back(std::move(c));
  }

  std::string origin_;
  std::string base_path_;
  std::mutex mu_;
  std::vector<std::unique_ptr<httplib::Client>> idle_;
};

ExternalProvider::ExternalProvider(ProviderConfig config) : config_(std::move(config)) {
  config_.validate();
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, kUrl))
    throw std::invalid_argument("malformed endpoint URL '" + config_.endpoint + "'");
  std::string base = m[2].matched ? m[2].str() : std::string();
  while (!base.empty() && base.back() == '/') base.pop_back();
  pool_ = std::make_unique<HttpClientPool>(m[1].str(), base);
}

ExternalProvider::~ExternalProvider() = default;

std::string ExternalProvider::post(const std::string& path, const std::string& body) const {
  auto lease = pool_->acquire();
  const std::string url = config_.endpoint + path;
  auto res = lease.client->Post(pool_->base_path() + path, body, "application/json");
  if (!res)
    throw ProviderError("request to " + url + " failed: " + httplib::to_string(res.error()),
                        config_.endpoint, 0, true);
  if (res->status != 200)
    throw ProviderError("request to " + url + " returned HTTP " + std::to_string(res->status),
                        config_.endpoint, res->status, res->status >= 500 || res->status == 429);
  return res->body;
}

std::vector<Embedding> ExternalProvider::embed_batch(const std::vector<std::string>& texts,
                                                     Modality modality) const {
  for (const auto& t : texts)
    if (text::trim(t).empty()) throw std::invalid_argument("cannot embed empty text");

  const std::string& model = modality == Modality::Text    ? config_.text_model
                             : modality == Modality::Image ? config_.image_model
                                                           : config_.table_model;
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += kMaxBatch) {
    const std::size_t end = std::min(texts.size(), start + kMaxBatch);
    json req = {{"modality", to_string(modality)},
                {"texts", std::vector<std::string>(texts.begin() + start, texts.begin() + end)}};
    if (!model.empty()) req["model"] = model;

    json reply;
    try {
      reply = json::parse(post("/embed", req.dump()));
      const std::size_t dim = reply.at("dim").get<std::size_t>();
      const auto& vectors = reply.at("vectors");
      if (dim == 0 || vectors.size() != end - start)
        throw std::runtime_error("expected " + std::to_string(end - start) + " vectors");
      for (const auto& v : vectors) {
        if (v.size() != dim) throw std::runtime_error("vector length does not match dim");
        std::vector<double> raw = v.get<std::vector<double>>();
        double norm = 0.0;
        for (double x : raw) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) throw std::runtime_error("service returned a zero vector");
        Embedding e;
        e.modality = modality;
        e.vector.reserve(dim);
        for (double x : raw) e.vector.push_back(static_cast<float>(x / norm));
        out.push_back(std::move(e));
      }
    } catch (const ProviderError&) {
      throw;
    } catch (const std::exception& e) {
      throw ProviderError(std::string("malformed /embed reply: ") + e.what(), config_.endpoint,
                          200, false);
    }
  }
  return out;
}

std::vector<ImageKind> ExternalProvider::classify_batch(
    const std::vector<std::string>& contexts) const {
  std::vector<ImageKind> out;
  out.reserve(contexts.size());
  for (std::size_t start = 0; start < contexts.size(); start += kMaxBatch) {
    const std::size_t end = std::min(contexts.size(), start + kMaxBatch);
    json req = {{"texts", std::vector<std::string>(contexts.begin() + start,
                                                   contexts.begin() + end)}};
    try {
      json reply = json::parse(post("/classify", req.dump()));
      const auto& labels = reply.at("labels");
      if (labels.size() != end - start)
        throw std::runtime_error("expected " + std::to_string(end - start) + " labels");
      for (const auto& l : labels) {
        std::string label = text::to_lower(l.get<std::string>());
        if (label == "photo") label = "photograph";
        if (label == "site layout" || label == "layout") label = "site_layout";
        auto kind = parse_image_kind(label);
        if (!kind) throw std::runtime_error("unknown label '" + label + "'");
        out.push_back(*kind);
      }
    } catch (const ProviderError&) {
      throw;
    } catch (const std::exception& e) {
      throw ProviderError(std::string("malformed /classify reply: ") + e.what(),
                          config_.endpoint, 200, false);
    }
  }
  return out;
}

std::shared_ptr<const EmbeddingProvider> make_provider(const ProviderConfig& config) {
  config.validate();
  if (config.kind == ProviderKind::DeterministicHash)
    return std::make_shared<HashProvider>(config.dim);
  return std::make_shared<ExternalProvider>(config);
}

}  // namespace sarch::embed
