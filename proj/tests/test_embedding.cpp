#include <cmath>

#include "doctest.h"
#include "fake_provider.hpp"
#include "sarch/embedding.hpp"

using namespace sarch;
using namespace sarch::embed;

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv1a64(std::string("\x01harappan", 9)) == 0x2350a6927a716c8dULL);
  CHECK(modality_tag(Modality::Text) == 1);
  CHECK(modality_tag(Modality::Image) == 2);
  CHECK(modality_tag(Modality::Table) == 3);
}

TEST_CASE("hash embeddings are deterministic and unit norm") {
  HashProvider p(64);
  for (auto m : kAllModalities) {
    auto a = p.embed_text("Dancing girl from Mohenjo-daro", m);
    auto b = p.embed_text("Dancing girl from Mohenjo-daro", m);
    CHECK(a == b);
    CHECK(a.modality == m);
    CHECK(a.dim() == 64);
    CHECK(l2_norm(a.vector) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS(p.embed_text("", Modality::Text));
  CHECK_THROWS(p.embed_text(" ,;! ", Modality::Text));
  CHECK_THROWS(HashProvider(0));
}

TEST_CASE("hash embeddings single token lands at hash % dim with parity sign") {
  HashProvider p(64);
  const std::uint64_t h = 0x2350a6927a716c8dULL;  // fnv1a64("\x01harappan")
  auto e = p.embed_text("Harappan", Modality::Text);
  for (std::size_t i = 0; i < 64; ++i) CHECK(e.vector[i] == (i == h % 64 ? -1.0f : 0.0f));
}

TEST_CASE("modality tag separates spaces") {
  HashProvider p(256);
  auto t = p.embed_text("harappan seal", Modality::Text);
  auto i = p.embed_text("harappan seal", Modality::Image);
  CHECK(t.vector != i.vector);
}

TEST_CASE("cosine ordering matches the independent oracle") {
  // Oracle (separate script, dim 64): cos(a,b) = sqrt(2/3), cos(a,c) = 0.
  HashProvider p(64);
  auto a = p.embed_text("harappan seal", Modality::Text);
  auto b = p.embed_text("harappan seal pottery", Modality::Text);
  auto c = p.embed_text("copper arrowhead", Modality::Text);
  CHECK(dot(a.vector, b.vector) == doctest::Approx(0.8164965522993128).epsilon(1e-7));
  CHECK(dot(a.vector, c.vector) == doctest::Approx(0.0));
  CHECK(dot(a.vector, b.vector) > dot(a.vector, c.vector));
}

TEST_CASE("keyword image classifier") {
  CHECK(keyword_image_kind("map showing sites discovered") == ImageKind::Map);
  CHECK(keyword_image_kind("") == ImageKind::Figure);
  CHECK(keyword_image_kind("general view of the excavated trench, photograph") == ImageKind::Photograph);
  CHECK(keyword_image_kind("trench plan") == ImageKind::SiteLayout);
  CHECK(keyword_image_kind("plan of the river sites") == ImageKind::Map);
  CHECK(keyword_image_kind("map photo") == ImageKind::Map);
  CHECK(keyword_image_kind("bronze statuette") == ImageKind::Figure);
  HashProvider p(8);
  CHECK(p.classify_batch({"map", "photo", "layout", "x"}) ==
        std::vector<ImageKind>{ImageKind::Map, ImageKind::Photograph, ImageKind::SiteLayout,
                               ImageKind::Figure});
}

TEST_CASE("provider config validation and json") {
  CHECK_NOTHROW(ProviderConfig::hash(16).validate());
  CHECK_THROWS(ProviderConfig::hash(0).validate());
  CHECK_THROWS(ProviderConfig::external("").validate());
  auto ext = ProviderConfig::external("http://h:1");
  ext.text_model = "text-encoder-v1";
  CHECK(ProviderConfig::from_json(ext.to_json()) == ext);
  CHECK(ProviderConfig::from_json(ProviderConfig::hash(48).to_json()) == ProviderConfig::hash(48));
  CHECK_THROWS(ProviderConfig::from_json(R"({"kind":"magic"})"));
  CHECK_THROWS(ExternalProvider(ProviderConfig::external("not a url")));
}

TEST_CASE("external provider batches, normalizes and matches the hash vectors") {
  testsupport::FakeEmbeddingServer server(32);
  auto cfg = ProviderConfig::external(server.endpoint());
  cfg.image_model = "vision-x";
  auto p = make_provider(cfg);
  std::vector<std::string> texts;
  for (int i = 0; i < 150; ++i) texts.push_back("seal number " + std::to_string(i));
  auto out = p->embed_batch(texts, Modality::Image);
  REQUIRE(out.size() == 150);
  CHECK(server.batch_sizes() == std::vector<std::size_t>{64, 64, 22});
  CHECK(server.last_model() == "vision-x");
  HashProvider h(32);
  for (std::size_t i = 0; i < texts.size(); i += 37) {
    CHECK(l2_norm(out[i].vector) == doctest::Approx(1.0).epsilon(1e-6));
    auto ref = h.embed_text(texts[i], Modality::Image);
    CHECK(dot(out[i].vector, ref.vector) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(p->classify_image_kind("map showing sites") == ImageKind::Map);
  CHECK_THROWS_AS(p->embed_batch({""}, Modality::Text), std::invalid_argument);
}

TEST_CASE("external provider errors carry endpoint, status and retriability") {
  testsupport::FakeEmbeddingServer server;
  auto p = make_provider(ProviderConfig::external(server.endpoint()));
  server.fail_with(503);
  try {
    p->embed_text("seal", Modality::Text);
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status() == 503);
    CHECK(e.retriable());
    CHECK(e.endpoint() == server.endpoint());
  }
  server.fail_with(400);
  try {
    p->classify_image_kind("map");
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status() == 400);
    CHECK_FALSE(e.retriable());
  }

  auto dead = make_provider(ProviderConfig::external("http://127.0.0.1:1"));
  try {
    dead->embed_text("seal", Modality::Text);
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.retriable());
    CHECK(e.status() == 0);
  }
}
