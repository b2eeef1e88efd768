#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "sarch/retrieval.hpp"

namespace httplib {
class Server;
}

namespace sarch::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string index_path = "sarch.idx";
  // Unset means: use the provider recorded in the index.
  std::optional<embed::ProviderConfig> provider;
  std::string stopwords_path;  // empty -> built-in list
  std::size_t default_k = 10;
  std::string static_dir;  // empty -> no UI assets
  std::string cors_origin = "*";

  /// Checks k and that configured files and directories exist.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// `key = value` lines ('#' comments). Every key may be overridden by the
/// environment variable SARCH_<KEY>, upper-cased with '.' mapped to '_'
/// (e.g. provider.endpoint -> SARCH_PROVIDER_ENDPOINT).
ServiceConfig parse_service_config(const std::string& content, const EnvLookup& env = process_env);
ServiceConfig load_service_config(const std::string& path, const EnvLookup& env = process_env);

/// Builds a query engine for a loaded corpus.
std::shared_ptr<const retrieval::Engine> make_engine(
    std::shared_ptr<const index::CorpusIndex> corpus,
    const std::optional<embed::ProviderConfig>& provider_override,
    const retrieval::Stopwords& stopwords);

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using Params = std::multimap<std::string, std::string>;

/// HTTP handlers over an atomically swappable engine snapshot. Requests that
/// arrive before an engine is installed get 503.
class SearchService {
 public:
  explicit SearchService(ServiceConfig config);
  ~SearchService();

  void install(std::shared_ptr<const retrieval::Engine> engine);
  std::shared_ptr<const retrieval::Engine> snapshot() const;

  /// Loads the configured index on a background thread and installs it.
  void load_in_background();
  /// Message of the last failed background load, if any.
  std::optional<std::string> load_error() const;

  Response search(const Params& params) const;
  Response stats() const;
  Response healthz() const;

  /// Registers /search, /stats, /healthz, CORS handling and static assets.
  void bind(httplib::Server& server) const;

  const ServiceConfig& config() const { return config_; }

 private:
  ServiceConfig config_;
  mutable std::mutex mu_;
  std::shared_ptr<const retrieval::Engine> engine_;
  std::optional<std::string> load_error_;
  std::thread loader_;
};

/// JSON for one ranked result, with modality-specific fields.
std::string result_payload_json(const retrieval::Engine& engine, const retrieval::Query& q,
                                const retrieval::RankedList& ranked);

std::string manifest_json(const CorpusManifest& manifest);

/// Window of page text around the first keyword hit, at most `width` bytes.
std::string make_snippet(const std::string& text, const std::vector<std::string>& keywords,
                         std::size_t width = 240);

}  // namespace sarch::service
