#include <chrono>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fake_provider.hpp"
#include "fixture_engine.hpp"
#include "httplib.h"
#include "json.hpp"
#include "sarch/service.hpp"

using namespace sarch;
using namespace sarch::service;
using namespace testsupport;
using nlohmann::json;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

const EnvLookup kNoEnv = env_of({});

std::filesystem::path tmp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "sarch_service_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::unique_ptr<SearchService> ready_service() {
  auto svc = std::make_unique<SearchService>(parse_service_config("", kNoEnv));
  svc->install(fixture_engine());
  return svc;
}

}  // namespace

TEST_CASE("config parsing and environment overrides") {
  auto c = parse_service_config(
      "# comment\nlisten = 0.0.0.0:9001\nindex = /tmp/x.idx\ndefault_k = 7\n"
      "provider = hash\nprovider.dim = 64\n",
      kNoEnv);
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9001);
  CHECK(c.index_path == "/tmp/x.idx");
  CHECK(c.default_k == 7);
  CHECK(c.provider == embed::ProviderConfig::hash(64));

  auto o = parse_service_config("default_k = 7\n",
                                env_of({{"SARCH_DEFAULT_K", "3"},
                                        {"SARCH_PROVIDER", "external"},
                                        {"SARCH_PROVIDER_ENDPOINT", "http://h:1"},
                                        {"SARCH_PROVIDER_TEXT_MODEL", "m"}}));
  CHECK(o.default_k == 3);
  REQUIRE(o.provider);
  CHECK(o.provider->endpoint == "http://h:1");
  CHECK(o.provider->text_model == "m");

  auto d = parse_service_config("", kNoEnv);
  CHECK(d.port == 8080);
  CHECK_FALSE(d.provider);

  CHECK_THROWS(parse_service_config("default_k = 0\n", kNoEnv));
  CHECK_THROWS(parse_service_config("colour = blue\n", kNoEnv));
  CHECK_THROWS(parse_service_config("no equals sign\n", kNoEnv));
  CHECK_THROWS(parse_service_config("listen = nohost\n", kNoEnv));
  CHECK_THROWS(parse_service_config("static_dir = /definitely/not/here\n", kNoEnv));
  CHECK_THROWS(parse_service_config("provider = magic\n", kNoEnv));
  CHECK_THROWS(parse_service_config("provider = external\n", kNoEnv));

  auto path = (tmp_dir() / "sarch.conf").string();
  std::ofstream(path) << "index = a.idx\n";
  CHECK(load_service_config(path, kNoEnv).index_path == "a.idx");
  CHECK_NOTHROW(load_service_config(data_path("sarch.conf"), kNoEnv));
}

TEST_CASE("503 before an index is installed") {
  SearchService svc(parse_service_config("", kNoEnv));
  CHECK(svc.search({{"q", "seal"}}).status == 503);
  CHECK(svc.stats().status == 503);
  auto h = svc.healthz();
  CHECK(h.status == 200);
  CHECK(json::parse(h.body)["index_loaded"] == false);
}

TEST_CASE("request validation") {
  auto owner = ready_service();
  auto& svc = *owner;
  CHECK(svc.search({}).status == 400);
  CHECK(svc.search({{"q", "  "}}).status == 400);
  CHECK(svc.search({{"q", "seal"}, {"modality", "video"}}).status == 400);
  CHECK(svc.search({{"q", "seal"}, {"pipeline", "semantic"}}).status == 400);
  CHECK(svc.search({{"q", "seal"}, {"k", "0"}}).status == 400);
  CHECK(svc.search({{"q", "seal"}, {"k", "-2"}}).status == 400);
  CHECK(svc.search({{"q", "seal"}, {"k", "3x"}}).status == 400);
  CHECK(svc.search({{"q", "seal"}, {"k", "3"}}).status == 200);
}

TEST_CASE("search payload by modality") {
  auto owner = ready_service();
  auto& svc = *owner;
  auto r = svc.search({{"q", "Dancing Girl"}, {"modality", "image"}, {"pipeline", "hybrid"}});
  REQUIRE(r.status == 200);
  auto body = json::parse(r.body);
  CHECK(body["query"]["q"] == "Dancing Girl");
  CHECK(body["pipeline"] == "hybrid");
  CHECK(body["keywords"] == json::array({"dancing", "girl"}));
  REQUIRE(body["results"].size() >= 1);
  const auto& top = body["results"][0];
  CHECK(top["block_id"] == "b-p2-img1");
  CHECK(top["image_kind"] == "photograph");
  CHECK(top["rank"] == 1);
  CHECK(top.contains("caption"));
  CHECK(top.contains("context"));
  for (const auto& res : body["results"]) CHECK(res["modality"] == "image");

  auto t = json::parse(svc.search({{"q", "steatite beads"}, {"modality", "table"}}).body);
  REQUIRE(t["results"].size() == 1);
  CHECK(t["results"][0]["header"] == json::array({"Site", "Material", "Count"}));
  CHECK(t["results"][0]["total_rows"] == 4);
  CHECK(t["results"][0]["rows"][1][2] == "NaN");

  auto x = json::parse(svc.search({{"q", "primary crops"}, {"modality", "text"}, {"k", "2"}}).body);
  CHECK(x["results"].size() == 2);
  CHECK(x["results"][0]["doc_id"] == "harappan_survey");
  CHECK(x["results"][0]["page_no"] == 1);
  CHECK_FALSE(x["results"][0].contains("block_id"));
  CHECK(x["results"][0]["snippet"].get<std::string>().find("rimary crops") != std::string::npos);

  // Every result's (doc_id, page_no) is in the manifest.
  auto manifest = json::parse(svc.stats().body);
  for (auto m : {"text", "image", "table"})
    for (auto p : {"keyword", "embedding", "hybrid"})
      for (const auto& res : json::parse(svc.search({{"q", "harappan"}, {"modality", m}, {"pipeline", p}}).body)["results"]) {
        bool found = false;
        for (const auto& d : manifest["documents"])
          found |= d["doc_id"] == res["doc_id"] && res["page_no"].get<int>() <= d["num_pages"].get<int>();
        CHECK(found);
      }
}

TEST_CASE("stats reports manifest counts and is stable") {
  auto owner = ready_service();
  auto& svc = *owner;
  auto a = svc.stats(), b = svc.stats();
  CHECK(a.status == 200);
  CHECK(a.body == b.body);
  auto m = json::parse(a.body);
  CHECK(m["num_documents"] == 3);
  CHECK(m["num_pages"] == 7);
  CHECK(m["num_images"] == 2);
  CHECK(m["num_tables"] == 1);

  SearchService empty(parse_service_config("", kNoEnv));
  auto e = std::make_shared<retrieval::Engine>();
  embed::HashProvider p(8);
  e->corpus = std::make_shared<index::CorpusIndex>(index::index_corpus({}, p));
  e->provider = std::make_shared<embed::HashProvider>(8);
  empty.install(e);
  auto z = json::parse(empty.stats().body);
  CHECK(z["num_documents"] == 0);
  CHECK(z["num_pages"] == 0);
}

TEST_CASE("provider failures map to 502 and missing stores to 404") {
  FakeEmbeddingServer fake(256);
  auto corpus = fixture_corpus();
  SearchService svc(parse_service_config("", kNoEnv));
  svc.install(make_engine(corpus, embed::ProviderConfig::external(fake.endpoint()), retrieval::default_stopwords()));
  CHECK(svc.search({{"q", "seal"}, {"pipeline", "embedding"}}).status == 200);
  fake.fail_with(500);
  CHECK(svc.search({{"q", "seal"}, {"pipeline", "embedding"}}).status == 502);
  CHECK(svc.search({{"q", "seal"}, {"pipeline", "hybrid"}}).status == 502);
  CHECK(svc.search({{"q", "seal"}, {"pipeline", "keyword"}}).status == 200);

  auto trimmed = std::make_shared<index::CorpusIndex>(*corpus);
  trimmed->stores.erase(Modality::Image);
  svc.install(make_engine(trimmed, std::nullopt, retrieval::default_stopwords()));
  CHECK(svc.search({{"q", "seal"}, {"modality", "image"}, {"pipeline", "embedding"}}).status == 404);
}

TEST_CASE("background load installs the index or records the error") {
  auto dir = tmp_dir();
  auto idx = (dir / "svc.idx").string();
  index::persist(*fixture_corpus(64), idx);

  SearchService ok(parse_service_config("index = " + idx + "\n", kNoEnv));
  ok.load_in_background();
  for (int i = 0; i < 500 && !ok.snapshot(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  REQUIRE(ok.snapshot());
  CHECK(ok.search({{"q", "seal"}}).status == 200);

  SearchService bad(parse_service_config("index = " + (dir / "missing.idx").string() + "\n", kNoEnv));
  bad.load_in_background();
  for (int i = 0; i < 500 && !bad.load_error(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  REQUIRE(bad.load_error());
  CHECK(bad.load_error()->find("no index found") != std::string::npos);
  CHECK(bad.search({{"q", "seal"}}).status == 503);
}

TEST_CASE("live HTTP server with CORS and static assets") {
  auto dir = tmp_dir() / "static";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>sarch</html>";

  auto cfg = parse_service_config("static_dir = " + dir.string() + "\ncors_origin = http://ui.local\n", kNoEnv);
  SearchService svc(cfg);
  httplib::Server server;
  svc.bind(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto loading = client.Get("/search?q=seal");
  REQUIRE(loading);
  CHECK(loading->status == 503);

  svc.install(fixture_engine());
  auto res = client.Get("/search?q=Dancing%20Girl&modality=image&pipeline=hybrid&k=5");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://ui.local");
  CHECK(json::parse(res->body)["results"][0]["block_id"] == "b-p2-img1");

  CHECK(client.Get("/search?q=x&modality=video")->status == 400);
  CHECK(client.Get("/healthz")->status == 200);
  CHECK(json::parse(client.Get("/stats")->body)["num_tables"] == 1);

  auto pre = client.Options("/search");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("GET") != std::string::npos);

  auto page = client.Get("/index.html");
  REQUIRE(page);
  CHECK(page->status == 200);
  CHECK(page->body == "<html>sarch</html>");

  server.stop();
  t.join();
}

TEST_CASE("make_snippet windows around the first keyword") {
  std::string text(400, 'x');
  for (std::size_t i = 0; i < text.size(); i += 10) text[i] = ' ';
  text.replace(300, 10, " bricks   ");
  auto s = make_snippet(text, {"bricks"}, 100);
  CHECK(s.find("bricks") != std::string::npos);
  CHECK(s.rfind("... ", 0) == 0);
  CHECK(make_snippet("short text", {"x"}) == "short text");
}
