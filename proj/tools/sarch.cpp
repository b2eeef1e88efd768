// Command-line front end: ingest, contextualize, search, eval, serve, enhance.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "httplib.h"
#include "sarch/context.hpp"
#include "sarch/eval.hpp"
#include "sarch/image.hpp"
#include "sarch/pipeline.hpp"
#include "sarch/retrieval.hpp"
#include "sarch/service.hpp"

namespace {

using namespace sarch;

// Error tagged with the pipeline stage that raised it.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& msg)
      : std::runtime_error(stage + ": " + msg) {}
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string default_index_path() {
  if (const char* v = std::getenv("SARCH_INDEX")) return v;
  return "sarch.idx";
}

retrieval::Stopwords stopwords_from(const std::string& path) {
  return path.empty() ? retrieval::default_stopwords() : retrieval::load_stopwords(path);
}

std::shared_ptr<const retrieval::Engine> open_engine(const std::string& index_path,
                                                     const std::string& stopwords_path) {
  auto corpus = stage("load index", [&] {
    return std::make_shared<const index::CorpusIndex>(index::load(index_path));
  });
  auto stopwords = stage("load stopwords", [&] { return stopwords_from(stopwords_path); });
  return stage("provider", [&] { return service::make_engine(corpus, std::nullopt, stopwords); });
}

void print_manifest(const CorpusManifest& m) {
  std::printf("documents: %zu\npages:     %zu\nimages:    %zu\ntables:    %zu\n", m.num_documents,
              m.num_pages, m.num_images, m.num_tables);
}

std::string one_line(std::string s, std::size_t max) {
  for (char& c : s)
    if (c == '\n' || c == '\t') c = ' ';
  if (s.size() > max) s = s.substr(0, max - 3) + "...";
  return s;
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sarch: multimodal search over layout-parsed scanned archives"};
  app.require_subcommand(1);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Contextualize, embed and index a corpus directory");
  std::string corpus_dir, out_path = default_index_path(), lexicon_path, endpoint;
  std::size_t dim = 256;
  bool keep_kinds = false;
  ingest_cmd->add_option("dir", corpus_dir, "Directory of extraction files (*.json)")->required();
  ingest_cmd->add_option("--out", out_path, "Index file to write")->capture_default_str();
  ingest_cmd->add_option("--dim", dim, "Embedding dimension of the built-in hash provider")
      ->capture_default_str();
  ingest_cmd->add_option("--endpoint", endpoint, "Use an external embedding service at this URL");
  ingest_cmd->add_option("--lexicon", lexicon_path, "Lexicon for spell correction (one word per line)");
  ingest_cmd->add_flag("--keep-image-kinds", keep_kinds,
                       "Keep upstream image kinds instead of reclassifying");

  // contextualize
  auto* ctx_cmd = app.add_subcommand("contextualize", "Print an extraction file with context bundles");
  std::string ctx_file;
  ctx_cmd->add_option("file", ctx_file, "Extraction file")->required();
  ctx_cmd->add_option("--lexicon", lexicon_path, "Lexicon for spell correction");

  // search
  auto* search_cmd = app.add_subcommand("search", "Query an index");
  std::string query, modality = "text", pipeline = "hybrid", index_path = default_index_path(),
                     stopwords_path;
  std::size_t k = 10;
  bool as_json = false;
  search_cmd->add_option("query", query, "Natural-language query")->required();
  search_cmd->add_option("--modality", modality, "text | image | table")->capture_default_str();
  search_cmd->add_option("--pipeline", pipeline, "keyword | embedding | hybrid")->capture_default_str();
  search_cmd->add_option("--k", k, "Number of results")->capture_default_str();
  search_cmd->add_option("--index", index_path, "Index file")->capture_default_str();
  search_cmd->add_option("--stopwords", stopwords_path, "Stopword file");
  search_cmd->add_flag("--json", as_json, "Print the service's JSON payload");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Run the benchmark and report P@5, P@3, P@1, MRR");
  std::string benchmark_path, judgments_path, report_out;
  eval_cmd->add_option("--benchmark", benchmark_path, "Benchmark TSV (default: built-in 30 queries)");
  eval_cmd->add_option("--judgments", judgments_path, "Judgments TSV (default: none)");
  eval_cmd->add_option("--index", index_path, "Index file")->capture_default_str();
  eval_cmd->add_option("--stopwords", stopwords_path, "Stopword file");
  eval_cmd->add_option("--report-out", report_out, "Write the JSON report here");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API and UI assets");
  std::string config_path;
  serve_cmd->add_option("--config", config_path, "Key-value config file");

  // enhance
  auto* enhance_cmd = app.add_subcommand("enhance", "Grayscale, bilateral filter and Otsu-binarize a scan");
  std::string in_path, enhanced_path;
  double sigma_spatial = 2.0, sigma_range = 25.0;
  int radius = 0;
  enhance_cmd->add_option("in", in_path, "Input image (.png or .pgm)")->required();
  enhance_cmd->add_option("out", enhanced_path, "Output image (.png or .pgm)")->required();
  enhance_cmd->add_option("--sigma-spatial", sigma_spatial)->capture_default_str();
  enhance_cmd->add_option("--sigma-range", sigma_range)->capture_default_str();
  enhance_cmd->add_option("--radius", radius, "Window half-width (default ceil(3*sigma-spatial))");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) {
      std::optional<context::Lexicon> lexicon;
      if (!lexicon_path.empty())
        lexicon = stage("lexicon", [&] { return context::Lexicon::from_file(lexicon_path); });
      auto docs = stage("parse", [&] { return load_corpus_dir(corpus_dir); });
      auto provider = stage("provider", [&] {
        return embed::make_provider(endpoint.empty() ? embed::ProviderConfig::hash(dim)
                                                     : embed::ProviderConfig::external(endpoint));
      });
      std::vector<ExtractedDocument> contextualized;
      for (const auto& d : docs)
        contextualized.push_back(stage("contextualize " + d.doc_id, [&] {
          return context::contextualize(d, lexicon ? &*lexicon : nullptr);
        }));
      index::IndexOptions opts;
      opts.classify_images = !keep_kinds;
      auto corpus = stage("index", [&] { return index::index_corpus(contextualized, *provider, opts); });
      stage("persist", [&] {
        index::persist(corpus, out_path);
        return 0;
      });
      print_manifest(corpus.manifest);
      std::printf("units:     %zu\nindex:     %s\n", corpus.inverted.units.size(), out_path.c_str());
    } else if (*ctx_cmd) {
      std::optional<context::Lexicon> lexicon;
      if (!lexicon_path.empty())
        lexicon = stage("lexicon", [&] { return context::Lexicon::from_file(lexicon_path); });
      auto doc = stage("parse", [&] { return load_extraction_file(ctx_file); });
      auto out = stage("contextualize", [&] {
        return context::contextualize(doc, lexicon ? &*lexicon : nullptr);
      });
      std::cout << serialize_extraction(out);
    } else if (*search_cmd) {
      auto m = parse_modality(modality);
      if (!m) throw StageError("arguments", "unknown modality '" + modality + "'");
      auto p = retrieval::parse_pipeline(pipeline);
      if (!p) throw StageError("arguments", "unknown pipeline '" + pipeline + "'");
      if (k < 1) throw StageError("arguments", "--k must be at least 1");
      auto engine = open_engine(index_path, stopwords_path);
      retrieval::Query q{query, *m, *p, k};
      auto ranked = stage("search", [&] { return retrieval::run_query(q, *engine); });
      if (as_json) {
        std::cout << service::result_payload_json(*engine, q, ranked) << "\n";
      } else {
        std::printf("%-4s  %-10s  %-24s  %-4s  %-10s  %s\n", "rank", "score", "doc_id", "page",
                    "block", "title / caption");
        for (const auto& e : ranked.entries) {
          const auto& u = engine->corpus->unit(e.unit_id);
          const auto& pl = engine->corpus->payloads.at(e.unit_id);
          std::string label = pl.caption ? *pl.caption : pl.title;
          if (pl.image_kind) label = "[" + std::string(to_string(*pl.image_kind)) + "] " + label;
          std::printf("%-4zu  %-10.6f  %-24s  %-4d  %-10s  %s\n", e.rank, e.score, u.doc_id.c_str(),
                      u.page_no, u.block_id.value_or("-").c_str(), one_line(label, 70).c_str());
        }
        if (ranked.empty()) std::printf("(no results)\n");
      }
    } else if (*eval_cmd) {
      auto engine = open_engine(index_path, stopwords_path);
      auto queries = benchmark_path.empty()
                         ? eval::default_benchmark()
                         : stage("benchmark", [&] { return eval::load_benchmark(benchmark_path); });
      std::vector<std::string> warnings;
      eval::Judgments judgments;
      if (!judgments_path.empty()) {
        auto records = stage("judgments", [&] { return eval::load_judgment_records(judgments_path); });
        judgments = stage("judgments", [&] {
          return eval::resolve_judgments(records, *engine->corpus, &warnings);
        });
      }
      auto report = stage("eval", [&] { return eval::run_benchmark(queries, judgments, *engine); });
      report.warnings.insert(report.warnings.begin(), warnings.begin(), warnings.end());
      std::cout << eval::format_report(report);
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!out) throw StageError("report", "cannot write '" + report_out + "'");
        out << eval::report_to_json(report);
      }
    } else if (*serve_cmd) {
      auto config = stage("config", [&] {
        return config_path.empty() ? service::parse_service_config("")
                                   : service::load_service_config(config_path);
      });
      service::SearchService svc(config);
      httplib::Server server;
      svc.bind(server);
      svc.load_in_background();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "listening on http://%s:%d (index %s)\n", config.host.c_str(), config.port,
                   config.index_path.c_str());
      if (!server.listen(config.host, config.port))
        throw StageError("serve", "cannot listen on " + config.host + ":" + std::to_string(config.port));
      g_server = nullptr;
    } else if (*enhance_cmd) {
      image::BilateralParams params = radius > 0
                                          ? image::BilateralParams{sigma_spatial, sigma_range, radius}
                                          : image::BilateralParams::with_default_radius(sigma_spatial, sigma_range);
      auto rgb = stage("read", [&] { return image::read_raster(in_path); });
      auto result = stage("enhance", [&] { return image::enhance(rgb, params); });
      stage("write", [&] {
        image::write_raster(result.binary, enhanced_path);
        return 0;
      });
      std::printf("otsu threshold: %d\n", result.threshold);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
