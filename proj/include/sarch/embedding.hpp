#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sarch/model.hpp"

namespace sarch::embed {

struct Embedding {
  std::vector<float> vector;
  Modality modality = Modality::Text;

  std::size_t dim() const { return vector.size(); }
  bool operator==(const Embedding&) const = default;
};

double l2_norm(const std::vector<float>& v);

/// Dot product accumulated in double, index order.
double dot(const std::vector<float>& a, const std::vector<float>& b);

/// Provider failure. Transport problems are retriable; malformed replies are not.
class ProviderError : public std::runtime_error {
 public:
  ProviderError(const std::string& what, std::string endpoint, int status, bool retriable);
  const std::string& endpoint() const noexcept { return endpoint_; }
  int status() const noexcept { return status_; }
  bool retriable() const noexcept { return retriable_; }

 private:
  std::string endpoint_;
  int status_;
  bool retriable_;
};

enum class ProviderKind { DeterministicHash, ExternalService };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::DeterministicHash;
  std::size_t dim = 256;  // DeterministicHash only
  std::string endpoint;   // ExternalService only, e.g. "http://127.0.0.1:8090"
  std::string text_model;
  std::string image_model;
  std::string table_model;

  static ProviderConfig hash(std::size_t dim);
  static ProviderConfig external(std::string endpoint);

  /// Throws std::invalid_argument unless exactly the fields for `kind` are set.
  void validate() const;

  std::string to_json() const;
  static ProviderConfig from_json(std::string_view json);
  bool operator==(const ProviderConfig&) const = default;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual Embedding embed_text(std::string_view text, Modality modality) const;
  virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts,
                                             Modality modality) const = 0;
  virtual ImageKind classify_image_kind(std::string_view image_context) const;
  virtual std::vector<ImageKind> classify_batch(const std::vector<std::string>& contexts) const = 0;
  virtual ProviderConfig config() const = 0;
};

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Tag byte that seeds the token hash for each modality.
std::uint8_t modality_tag(Modality modality);

/// Keyword-count image classifier. Zero hits -> Figure; ties resolve in the
/// order Map, Photograph, SiteLayout.
ImageKind keyword_image_kind(std::string_view image_context);

/// Signed feature hashing: each lowercase token lands at hash % dim with sign
/// +1 for even hashes, -1 for odd, then the vector is L2-normalized.
class HashProvider : public EmbeddingProvider {
 public:
  explicit HashProvider(std::size_t dim);

  Embedding embed_text(std::string_view text, Modality modality) const override;
  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts,
                                     Modality modality) const override;
  ImageKind classify_image_kind(std::string_view image_context) const override;
  std::vector<ImageKind> classify_batch(const std::vector<std::string>& contexts) const override;
  ProviderConfig config() const override { return ProviderConfig::hash(dim_); }

 private:
  std::size_t dim_;
};

class HttpClientPool;

/// Client for a remote embedding/classification service:
///   POST {endpoint}/embed    {"modality", "texts"} -> {"dim", "vectors"}
///   POST {endpoint}/classify {"texts"}             -> {"labels"}
/// Requests carry at most kMaxBatch texts.
class ExternalProvider final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kMaxBatch = 64;

  explicit ExternalProvider(ProviderConfig config);
  ~ExternalProvider() override;

  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts,
                                     Modality modality) const override;
  std::vector<ImageKind> classify_batch(const std::vector<std::string>& contexts) const override;
  ProviderConfig config() const override { return config_; }

 private:
  std::string post(const std::string& path, const std::string& body) const;

  ProviderConfig config_;
  std::unique_ptr<HttpClientPool> pool_;
};

std::shared_ptr<const EmbeddingProvider> make_provider(const ProviderConfig& config);

}  // namespace sarch::embed
