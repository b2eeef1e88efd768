#include "sarch/eval.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sarch/text.hpp"

namespace sarch::eval {

void Judgments::add(const Judgment& j) {
  if (!labels_.emplace(std::make_pair(j.query_id, j.unit_id), j.relevant).second)
    throw std::invalid_argument("duplicate judgment for query '" + j.query_id + "' unit " +
                                std::to_string(j.unit_id));
}

bool Judgments::relevant(const std::string& query_id, UnitId unit) const {
  auto it = labels_.find({query_id, unit});
  return it != labels_.end() && it->second;
}

double precision_at_k(const RankedList& ranked, const Judgments& judgments,
                      const std::string& query_id, std::size_t k) {
  if (k == 0) throw std::invalid_argument("precision_at_k: k must be at least 1");
  const std::size_t n = std::min(k, ranked.entries.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (judgments.relevant(query_id, ranked.entries[i].unit_id)) ++hits;
  return double(hits) / double(k);
}

double reciprocal_rank(const RankedList& ranked, const Judgments& judgments,
                       const std::string& query_id) {
  for (const auto& e : ranked.entries)
    if (judgments.relevant(query_id, e.unit_id)) return 1.0 / double(e.rank);
  return 0.0;
}

const PipelineRow& MetricsReport::row(Pipeline p) const {
  for (const auto& r : rows)
    if (r.pipeline == p) return r;
  throw std::out_of_range("no report row for pipeline " + std::string(retrieval::to_string(p)));
}

MetricsReport run_benchmark(const std::vector<BenchmarkQuery>& queries, const Judgments& judgments,
                            const retrieval::Engine& engine) {
  constexpr std::size_t kDepth = 5;
  MetricsReport report;
  for (Pipeline pipeline : retrieval::kAllPipelines) {
    PipelineRow row{pipeline, queries.size()};
    for (const auto& bq : queries) {
      QueryMetrics m;
      m.query_id = bq.query_id;
      m.pipeline = pipeline;
      RankedList ranked;
      try {
        ranked = retrieval::run_query({bq.text, bq.modality, pipeline, kDepth}, engine);
      } catch (const retrieval::MissingStoreError& e) {
        report.warnings.push_back("query '" + bq.query_id + "' (" +
                                  std::string(retrieval::to_string(pipeline)) +
                                  "): " + e.what() + "; scored as zero");
      }
      m.p_at_5 = precision_at_k(ranked, judgments, bq.query_id, 5);
      m.p_at_3 = precision_at_k(ranked, judgments, bq.query_id, 3);
      m.p_at_1 = precision_at_k(ranked, judgments, bq.query_id, 1);
      m.mrr = reciprocal_rank(ranked, judgments, bq.query_id);
      for (const auto& e : ranked.entries) m.results.push_back(e.unit_id);
      row.p_at_5 += m.p_at_5;
      row.p_at_3 += m.p_at_3;
      row.p_at_1 += m.p_at_1;
      row.mrr += m.mrr;
      report.per_query.push_back(std::move(m));
    }
    if (!queries.empty()) {
      const double n = double(queries.size());
      row.p_at_5 /= n;
      row.p_at_3 /= n;
      row.p_at_1 /= n;
      row.mrr /= n;
    }
    report.rows.push_back(row);
  }
  return report;
}

const std::vector<BenchmarkQuery>& default_benchmark() {
  static const std::vector<BenchmarkQuery> kQueries = {
      {"image-01", "Dancing girl image in Mohenjo-daro", Modality::Image},
      {"image-02", "Major monuments from Harappan civilization", Modality::Image},
      {"image-03", "What kind of vessels did Indus people use for their food", Modality::Image},
      {"image-04", "Show the map for Rigvedic era of Harappan civilization", Modality::Image},
      {"image-05", "Workmen's quarters in Harappan civilization", Modality::Image},
      {"image-06", "Urban planning of Harappan civilization", Modality::Image},
      {"image-07", "Map for sites in Gujarat as part of Harappan tradition", Modality::Image},
      {"image-08", "Top sites of excavation at Lothal", Modality::Image},
      {"image-09", "Bricks used for building the houses in Harappan civilization", Modality::Image},
      {"image-10", "Major artworks from Harappan civilization", Modality::Image},
      {"image-11", "Top sites of excavation at Kalibangan", Modality::Image},
      {"text-01", "Primary crops of the Harappan civilization", Modality::Text},
      {"text-02", "What were the religious beliefs of Harappan people", Modality::Text},
      {"text-03", "Where were the workmen's quarters discovered in Harappa", Modality::Text},
      {"text-04", "Major crafts and trade in Harappan civilization", Modality::Text},
      {"text-05", "What are the important features of Harappan culture", Modality::Text},
      {"text-06", "What are the ornaments and jewellery in Harappa", Modality::Text},
      {"text-07", "Chief source of copper for Harappan people", Modality::Text},
      {"text-08", "Urban planning of Harappan civilization", Modality::Text},
      {"text-09", "Scriptures from Harappan civilization", Modality::Text},
      {"text-10", "Animals in Harappan civilization", Modality::Text},
      {"text-11", "Major artworks from Harappan civilization", Modality::Text},
      {"text-12", "What kind of vessels did Indus people use for their food", Modality::Text},
      {"text-13",
       "Major agricultural crops for Harappan civilization,  Primary crops of the Harappan "
       "civilization",
       Modality::Text},
      {"text-14", "Give the evidence of fire worships in Harappan civilization", Modality::Text},
      {"text-15", "Weapons used in Harappan civilization", Modality::Text},
      {"table-01", "Description of Lubbock in the New Stone Age?", Modality::Table},
      {"table-02", "Which ancient settlements have produced steatite bead artifacts in excavations?",
       Modality::Table},
      {"table-03",
       "How are nails and knives distributed in Sub-period IIB vs. IIA at Bharadvaja Ashrama?",
       Modality::Table},
      {"table-04", "What is the dominant life in the Holocene epoch?", Modality::Table},
  };
  return kQueries;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
void for_each_record(const std::string& content, Fn&& fn) {
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line[0] == '#') continue;
    fn(split_tabs(line), line_no);
  }
}

}  // namespace

std::vector<BenchmarkQuery> load_benchmark(const std::string& path) {
  std::vector<BenchmarkQuery> out;
  for_each_record(read_file(path, "benchmark file"), [&](const auto& f, std::size_t line) {
    auto modality = f.size() == 3 ? parse_modality(text::trim(f[1])) : std::nullopt;
    if (!modality || text::trim(f[0]).empty() || text::trim(f[2]).empty())
      throw std::runtime_error(path + ":" + std::to_string(line) +
                               ": expected query_id<TAB>text|image|table<TAB>query text");
    out.push_back({text::trim(f[0]), text::trim(f[2]), *modality});
  });
  return out;
}

std::vector<JudgmentRecord> parse_judgment_records(const std::string& content) {
  std::vector<JudgmentRecord> out;
  for_each_record(content, [&](const auto& f, std::size_t line) {
    auto fail = [line] {
      throw std::runtime_error("judgments line " + std::to_string(line) +
                               ": expected query_id<TAB>doc_id<TAB>page_no<TAB>block_id<TAB>0|1");
    };
    if (f.size() != 5) fail();
    JudgmentRecord r;
    r.query_id = text::trim(f[0]);
    r.doc_id = text::trim(f[1]);
    r.block_id = text::trim(f[3]);
    const std::string rel = text::trim(f[4]);
    try {
      std::size_t used = 0;
      r.page_no = std::stoi(f[2], &used);
      if (text::trim(f[2].substr(used)) != "") fail();
    } catch (const std::logic_error&) {
      fail();
    }
    if (rel != "0" && rel != "1") fail();
    r.relevant = rel == "1";
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<JudgmentRecord> load_judgment_records(const std::string& path) {
  try {
    return parse_judgment_records(read_file(path, "judgments file"));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

Judgments resolve_judgments(const std::vector<JudgmentRecord>& records,
                            const index::CorpusIndex& corpus, std::vector<std::string>* warnings) {
  Judgments out;
  for (const auto& r : records) {
    auto unit = corpus.find_unit(r.doc_id, r.page_no, r.block_id);
    if (!unit) {
      if (warnings)
        warnings->push_back("judgment for query '" + r.query_id + "' names unknown unit (" +
                            r.doc_id + ", page " + std::to_string(r.page_no) +
                            (r.block_id.empty() ? "" : ", block " + r.block_id) + "); ignored");
      continue;
    }
    out.add({r.query_id, *unit, r.relevant});
  }
  return out;
}

std::string format_report(const MetricsReport& report) {
  auto label = [](Pipeline p) {
    switch (p) {
      case Pipeline::Keyword: return "Keyword-Based Search";
      case Pipeline::Embedding: return "Embedding-Based Search";
      case Pipeline::Hybrid: return "Hybrid search";
    }
    return "";
  };
  std::string out = "Search Type              P@5     P@3     P@1     MRR\n";
  char line[128];
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-24s %-7.3f %-7.3f %-7.3f %.3f\n", label(r.pipeline),
                  r.p_at_5, r.p_at_3, r.p_at_1, r.mrr);
    out += line;
  }
  for (const auto& w : report.warnings) out += "warning: " + w + "\n";
  return out;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["k"] = 5;
  j["pipelines"] = nlohmann::json::array();
  for (const auto& r : report.rows)
    j["pipelines"].push_back({{"pipeline", retrieval::to_string(r.pipeline)},
                              {"queries", r.num_queries},
                              {"p_at_5", r.p_at_5},
                              {"p_at_3", r.p_at_3},
                              {"p_at_1", r.p_at_1},
                              {"mrr", r.mrr}});
  j["per_query"] = nlohmann::json::array();
  for (const auto& m : report.per_query)
    j["per_query"].push_back({{"query_id", m.query_id},
                              {"pipeline", retrieval::to_string(m.pipeline)},
                              {"p_at_5", m.p_at_5},
                              {"p_at_3", m.p_at_3},
                              {"p_at_1", m.p_at_1},
                              {"mrr", m.mrr},
                              {"results", m.results}});
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace sarch::eval
