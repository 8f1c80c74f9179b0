#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "xmodal/corpus.hpp"
#include "xmodal/error.hpp"
#include "xmodal/geometry.hpp"
#include "xmodal/metrics.hpp"
#include "xmodal/retrieval.hpp"
#include "xmodal/scorer.hpp"
#include "xmodal/serialize.hpp"
#include "xmodal/stats.hpp"
#include "xmodal/trainer.hpp"

namespace xmodal::cli {
namespace {

using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  std::string output = "json";
  bool quiet = false;
  std::string report;
};

struct CorpusArgs {
  std::string text;
  std::string image;
  std::string manifest;
  std::string captions = "all";
  bool normalize = false;
};

void add_corpus_options(CLI::App* cmd, CorpusArgs& args, const std::string& captions_default) {
  args.captions = captions_default;
  cmd->add_option("--text", args.text, "text-side XEB1 file")->required();
  cmd->add_option("--image", args.image, "image-side XEB1 file")->required();
  cmd->add_option("--manifest", args.manifest, "pairing manifest (default: pair rows by index)");
  cmd->add_option("--captions", args.captions, "caption policy for one-to-many corpora")
      ->check(CLI::IsMember({"first", "all"}))
      ->capture_default_str();
  cmd->add_flag("--normalize", args.normalize, "L2-normalize every row before use");
}

EmbeddingSet load_side(const std::string& path, Modality expected, bool normalize) {
  auto set = load_embeddings(path);
  if (set.modality() != expected) {
    throw Error(ErrorCode::kInvalidArgument,
                "'" + path + "' holds " + std::string(modality_name(set.modality())) +
                    " embeddings, expected " + std::string(modality_name(expected)));
  }
  return normalize ? set.l2_normalized() : set;
}

PairedCorpus load_corpus(const std::string& text_path, const std::string& image_path,
                         const std::string& manifest_path, const std::string& captions,
                         bool normalize) {
  auto text = load_side(text_path, Modality::kText, normalize);
  auto image = load_side(image_path, Modality::kImage, normalize);
  auto corpus = manifest_path.empty()
                    ? pair_by_row(std::move(text), std::move(image))
                    : build_corpus(std::move(text), std::move(image), read_manifest(manifest_path));
  return captions == "first" ? first_caption_only(corpus) : corpus;
}

PairedCorpus load_corpus(const CorpusArgs& a) {
  return load_corpus(a.text, a.image, a.manifest, a.captions, a.normalize);
}

std::vector<std::string> corpus_inputs(const CorpusArgs& a) {
  std::vector<std::string> inputs{a.text, a.image};
  if (!a.manifest.empty()) inputs.push_back(a.manifest);
  return inputs;
}

json corpus_parameters(const CorpusArgs& a) {
  return {{"captions", a.captions}, {"normalize", a.normalize}};
}

RunManifest make_manifest(const Globals& g, std::string command, std::vector<std::string> inputs,
                          json parameters) {
  RunManifest m;
  m.command = std::move(command);
  m.inputs = std::move(inputs);
  parameters["seed"] = g.seed;
  parameters["output"] = g.output;
  m.parameters = std::move(parameters);
  return m;
}

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

std::vector<Metric> parse_metric_list(const std::vector<std::string>& names) {
  std::vector<Metric> metrics;
  for (const auto& name : names) {
    auto m = parse_metric(name);
    if (!m) throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + name + "'");
    metrics.push_back(*m);
  }
  return metrics;
}

std::vector<Direction> parse_directions(const std::string& name) {
  if (name == "both") return {Direction::kTextToImage, Direction::kImageToText};
  auto d = parse_direction(name);
  if (!d) throw Error(ErrorCode::kInvalidArgument, "unknown direction '" + name + "'");
  return {*d};
}

std::filesystem::path suffixed(const std::filesystem::path& path, const std::string& tag) {
  auto out = path;
  out.replace_filename(path.stem().string() + "." + tag + path.extension().string());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---- ingest-check ---------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> files;
  std::string manifest;
};

std::string run_ingest_check(const Globals& g, const IngestArgs& a, std::ostream& err) {
  json files = json::array();
  std::vector<EmbeddingSet> sets;
  std::ostringstream csv;
  csv << "path,modality,count,dim\n";
  for (const auto& path : a.files) {
    sets.push_back(load_embeddings(path));
    const auto& s = sets.back();
    files.push_back({{"path", path},
                     {"modality", modality_name(s.modality())},
                     {"count", s.count()},
                     {"dim", s.dim()},
                     {"version", kXebVersion}});
    csv << csv_field(path) << ',' << modality_name(s.modality()) << ',' << s.count() << ','
        << s.dim() << '\n';
    if (!g.quiet) {
      err << "ok " << path << ": " << modality_name(s.modality()) << ", " << s.count() << " x "
          << s.dim() << '\n';
    }
  }

  json doc;
  std::vector<std::string> inputs = a.files;
  if (!a.manifest.empty()) {
    inputs.push_back(a.manifest);
    const EmbeddingSet* text = nullptr;
    const EmbeddingSet* image = nullptr;
    for (const auto& s : sets) {
      auto& slot = s.modality() == Modality::kText ? text : image;
      if (slot != nullptr) {
        throw Error(ErrorCode::kInvalidArgument,
                    "manifest check needs exactly one text file and one image file");
      }
      slot = &s;
    }
    if (text == nullptr || image == nullptr) {
      throw Error(ErrorCode::kInvalidArgument,
                  "manifest check needs exactly one text file and one image file");
    }
    const auto corpus = build_corpus(*text, *image, read_manifest(a.manifest));
    std::size_t paired_texts = 0;
    std::size_t paired_images = 0;
    for (std::size_t t = 0; t < corpus.text.count(); ++t) {
      paired_texts += !corpus.text_to_image.relevant(t).empty();
    }
    for (std::size_t i = 0; i < corpus.image.count(); ++i) {
      paired_images += !corpus.image_to_text.relevant(i).empty();
    }
    doc["pairing"] = {{"relation", corpus.relation == Relation::kOneToOne ? "one-to-one"
                                                                           : "one-to-many"},
                      {"captions_per_item", corpus.captions_per_item},
                      {"paired_texts", paired_texts},
                      {"paired_images", paired_images},
                      {"unpaired_texts", corpus.text.count() - paired_texts},
                      {"unpaired_images", corpus.image.count() - paired_images}};
    if (!g.quiet) {
      err << "ok " << a.manifest << ": " << paired_texts << " texts paired with "
          << paired_images << " images\n";
    }
  }
  if (g.output == "csv") return csv.str();
  doc["manifest"] = to_json(make_manifest(g, "ingest-check", inputs, json::object()));
  doc["files"] = std::move(files);
  doc["ok"] = true;
  return doc.dump(2) + "\n";
}

// ---- retrieve -------------------------------------------------------------

struct RetrieveArgs {
  CorpusArgs corpus;
  std::vector<std::string> metrics;
  std::string model;
  std::string direction = "both";
  std::vector<std::size_t> ks = kDefaultKs;
  std::optional<std::size_t> subset;
  std::string rankings;
};

std::string run_retrieve(const Globals& g, const RetrieveArgs& a, std::ostream& err) {
  if (a.metrics.empty() && a.model.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "retrieve needs --metric or --model");
  }
  auto corpus = load_corpus(a.corpus);
  if (a.subset) corpus = sample_items(corpus, *a.subset, g.seed);
  const auto directions = parse_directions(a.direction);
  const std::size_t max_k = *std::max_element(a.ks.begin(), a.ks.end());

  struct Source {
    std::string name;
    ScoreMatrix matrix;
  };
  std::vector<Source> sources;
  std::optional<ScorerModel> model;
  if (!a.model.empty()) {
    model = load_model(a.model);
    sources.push_back({"scorer", score_matrix(*model, corpus.text, corpus.image)});
  } else {
    for (auto m : parse_metric_list(a.metrics)) {
      sources.push_back({std::string(metric_name(m)), score_matrix(m, corpus.text, corpus.image)});
    }
  }

  std::vector<RetrievalReport> reports;
  const bool many = sources.size() * directions.size() > 1;
  for (const auto& src : sources) {
    for (auto dir : directions) {
      auto report = evaluate(corpus, src.matrix, dir, a.ks);
      report.metric = src.name;
      reports.push_back(report);
      if (!a.rankings.empty()) {
        const std::size_t k = std::min(max_k, report.candidate_count);
        std::filesystem::path path = a.rankings;
        if (many) path = suffixed(path, src.name + "." + std::string(direction_name(dir)));
        write_text(path, rankings_tsv(rank(src.matrix, dir, k)));
      }
      if (!g.quiet) {
        err << src.name << ' ' << direction_name(dir) << ':';
        for (std::size_t i = 0; i < report.k_values.size(); ++i) {
          err << " hit@" << report.k_values[i] << '=' << fixed4(report.hit_rate[i]) << " P@"
              << report.k_values[i] << '=' << fixed4(report.precision[i]);
        }
        err << '\n';
      }
    }
  }

  if (g.output == "csv") {
    std::string csv = retrieval_csv_header();
    for (const auto& r : reports) csv += to_csv_rows(r);
    return csv;
  }
  json params = corpus_parameters(a.corpus);
  params["direction"] = a.direction;
  params["k"] = a.ks;
  if (model) {
    params["model"] = a.model;
  } else {
    params["metrics"] = a.metrics;
  }
  params["subset"] = a.subset ? json(*a.subset) : json(nullptr);
  auto inputs = corpus_inputs(a.corpus);
  if (model) inputs.push_back(a.model);
  json doc;
  doc["manifest"] = to_json(make_manifest(g, "retrieve", inputs, params));
  doc["reports"] = json::array();
  for (const auto& r : reports) doc["reports"].push_back(to_json(r));
  return doc.dump(2) + "\n";
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  CorpusArgs corpus;
  std::string val_text;
  std::string val_image;
  std::string val_manifest;
  std::vector<double> split{0.8, 0.1, 0.1};
  std::string loss = "contrastive";
  std::vector<std::size_t> arch{500, 300, 100};
  bool search = false;
  std::size_t budget = 10;
  double lr = 5e-5;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::string negatives = "in_batch";
  std::string model_out;
  std::string history_out;
};

std::string run_train(const Globals& g, const TrainArgs& a, std::ostream& err) {
  if (a.split.size() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "--split takes three ratios: train,val,test");
  }
  auto corpus = load_corpus(a.corpus);
  std::optional<PairedCorpus> train_opt, val_opt, test_opt;
  const bool explicit_val = !a.val_text.empty();
  if (explicit_val) {
    train_opt = std::move(corpus);
    val_opt = load_corpus(a.val_text, a.val_image, a.val_manifest, a.corpus.captions,
                          a.corpus.normalize);
  } else {
    auto splits = split_corpus(corpus, SplitSpec{{a.split[0], a.split[1], a.split[2]}, g.seed});
    train_opt = std::move(splits.train);
    val_opt = std::move(splits.validation);
    test_opt = std::move(splits.test);
  }
  const auto& train_split = *train_opt;
  const auto& val_split = *val_opt;
  if (val_split.image.count() == 0) {
    throw Error(ErrorCode::kEmptyInput, "validation split is empty");
  }

  TrainConfig config;
  config.base_lr = a.lr;
  config.max_epochs = a.epochs;
  config.batch_size = a.batch_size;
  config.loss = parse_loss(a.loss);
  config.negative_mode =
      a.negatives == "full_dataset" ? NegativeMode::kFullDataset : NegativeMode::kInBatch;
  config.seed = g.seed;

  json search_json = nullptr;
  TrainResult result;
  if (a.search) {
    auto found = search_architectures(SearchSpace{}, a.budget, train_split, val_split, config);
    search_json = json::array();
    for (const auto& t : found.trials) {
      search_json.push_back({{"hidden_sizes", t.hidden_sizes},
                             {"seed", t.seed},
                             {"val_loss", t.val_loss},
                             {"stopped_epoch", t.stopped_epoch}});
    }
    result = TrainResult{std::move(found.model), std::move(found.history)};
  } else {
    result = train(train_split, val_split, config, a.arch);
  }

  const std::filesystem::path model_path = a.model_out;
  const std::filesystem::path history_path =
      a.history_out.empty() ? suffixed(model_path, "history").replace_extension(".csv")
                            : std::filesystem::path(a.history_out);
  save_model(result.model, model_path);
  write_text(history_path, history_csv(result.history));

  const auto& h = result.history;
  if (!g.quiet) {
    err << "trained [";
    for (std::size_t i = 0; i < result.model.hidden_sizes().size(); ++i) {
      err << (i ? "," : "") << result.model.hidden_sizes()[i];
    }
    err << "] for " << h.epochs.size() << " epochs, best epoch " << h.best_epoch
        << ", val loss " << fixed4(h.best_val_loss) << ", train loss "
        << fixed4(h.initial_train_loss) << " -> " << fixed4(h.final_train_loss) << '\n';
  }

  json test_json = nullptr;
  if (test_opt && test_opt->image.count() > 0) {
    const auto& test_split = *test_opt;
    test_json = json::array();
    for (auto dir : {Direction::kTextToImage, Direction::kImageToText}) {
      std::vector<std::size_t> ks;
      for (auto k : kDefaultKs) {
        if (k <= test_split.image.count() && k <= test_split.text.count()) ks.push_back(k);
      }
      auto report = evaluate(test_split, result.model, dir, ks);
      report.metric = "scorer";
      test_json.push_back(to_json(report));
    }
  }

  if (g.output == "csv") return history_csv(h);

  json params = corpus_parameters(a.corpus);
  params["loss"] = a.loss;
  params["search"] = a.search;
  if (a.search) {
    params["budget"] = a.budget;
  } else {
    params["arch"] = a.arch;
  }
  params["lr"] = a.lr;
  params["epochs"] = a.epochs;
  params["batch_size"] = a.batch_size;
  params["negatives"] = a.negatives;
  params["split"] = explicit_val ? json(nullptr) : json(a.split);
  params["model_out"] = model_path.string();
  params["history_out"] = history_path.string();
  auto inputs = corpus_inputs(a.corpus);
  if (explicit_val) {
    inputs.push_back(a.val_text);
    inputs.push_back(a.val_image);
    if (!a.val_manifest.empty()) inputs.push_back(a.val_manifest);
  }

  json doc;
  doc["manifest"] = to_json(make_manifest(g, "train", inputs, params));
  doc["hidden_sizes"] = result.model.hidden_sizes();
  doc["split_items"] = {{"train", train_split.image.count()},
                        {"validation", val_split.image.count()},
                        {"test", test_opt ? test_opt->image.count() : 0}};
  doc["history"] = {{"epochs", h.epochs.size()},
                    {"stopped_epoch", h.stopped_epoch},
                    {"best_epoch", h.best_epoch},
                    {"best_val_loss", h.best_val_loss},
                    {"early_stopped", h.early_stopped},
                    {"initial_train_loss", h.initial_train_loss},
                    {"final_train_loss", h.final_train_loss}};
  doc["search"] = std::move(search_json);
  doc["test"] = std::move(test_json);
  return doc.dump(2) + "\n";
}

// ---- heatmap --------------------------------------------------------------

struct HeatmapArgs {
  CorpusArgs corpus;
  std::string metric = "cosine";
  std::string model;
  std::size_t samples = 10;
};

std::string run_heatmap(const Globals& g, const HeatmapArgs& a, std::ostream& err) {
  auto corpus = load_corpus(a.corpus);
  const auto sample = first_caption_only(sample_items(corpus, a.samples, g.seed));
  ScoreMatrix matrix;
  std::string scorer_name;
  if (!a.model.empty()) {
    matrix = score_matrix(load_model(a.model), sample.text, sample.image);
    scorer_name = "scorer";
  } else {
    const auto m = parse_metric_list({a.metric}).front();
    matrix = score_matrix(m, sample.text, sample.image);
    scorer_name = std::string(metric_name(m));
  }
  if (!g.quiet) {
    err << "heatmap: " << matrix.rows << " x " << matrix.cols << ' ' << scorer_name << '\n';
  }
  if (g.output == "csv") return to_csv(matrix);

  json params = corpus_parameters(a.corpus);
  params["samples"] = a.samples;
  auto inputs = corpus_inputs(a.corpus);
  if (a.model.empty()) {
    params["metric"] = a.metric;
  } else {
    params["model"] = a.model;
    inputs.push_back(a.model);
  }
  json doc;
  doc["manifest"] = to_json(make_manifest(g, "heatmap", inputs, params));
  doc["matrix"] = to_json(matrix);
  doc["matrix"]["scorer"] = scorer_name;
  return doc.dump(2) + "\n";
}

// ---- compare --------------------------------------------------------------

struct CompareArgs {
  std::vector<std::string> reports;
  std::vector<std::string> labels;
  bool any_metric = false;
};

// One (direction, metric, k) cell of a retrieval report.
struct Cell {
  std::size_t hits = 0;
  std::size_t queries = 0;
};
using FamilyKey = std::tuple<std::string, std::string, std::size_t>;

// With `any_metric` the metric is left out of the key, so reports scored by
// different metrics (say cosine against a learned scorer) are compared.
std::map<FamilyKey, Cell> report_cells(const json& doc, const std::string& path,
                                       bool any_metric) {
  std::vector<RetrievalReport> reports;
  try {
    if (doc.contains("reports")) {
      for (const auto& r : doc.at("reports")) reports.push_back(retrieval_report_from_json(r));
    } else {
      reports.push_back(retrieval_report_from_json(doc));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "'" + path + "' is not a retrieval report: " + e.what());
  }
  std::map<FamilyKey, Cell> cells;
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.k_values.size(); ++i) {
      const FamilyKey key{std::string(direction_name(r.direction)), any_metric ? "*" : r.metric,
                          r.k_values[i]};
      if (!cells.emplace(key, Cell{r.hits[i], r.query_count}).second) {
        throw Error(ErrorCode::kIncompatibleReports,
                    "'" + path + "' repeats " + std::get<0>(key) + "/" + std::get<1>(key) +
                        "@" + std::to_string(std::get<2>(key)));
      }
    }
  }
  return cells;
}

std::string run_compare(const Globals& g, const CompareArgs& a, std::ostream& err) {
  if (a.reports.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "compare needs at least two reports");
  }
  std::vector<std::string> labels = a.labels;
  if (labels.empty()) {
    for (const auto& p : a.reports) labels.push_back(std::filesystem::path(p).stem().string());
  } else if (labels.size() != a.reports.size()) {
    throw Error(ErrorCode::kInvalidArgument, "--labels needs one label per report");
  }

  std::vector<std::map<FamilyKey, Cell>> docs;
  for (const auto& path : a.reports) {
    json doc;
    try {
      doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, "'" + path + "' is not valid JSON: " + e.what());
    }
    docs.push_back(report_cells(doc, path, a.any_metric));
  }
  for (std::size_t d = 1; d < docs.size(); ++d) {
    for (const auto& [key, cell] : docs[0]) {
      auto it = docs[d].find(key);
      if (it == docs[d].end() || it->second.queries != cell.queries) {
        throw Error(ErrorCode::kIncompatibleReports,
                    "'" + a.reports[d] + "' does not match '" + a.reports[0] + "' on " +
                        std::get<0>(key) + "/" + std::get<1>(key) + "@" +
                        std::to_string(std::get<2>(key)));
      }
    }
    if (docs[d].size() != docs[0].size()) {
      throw Error(ErrorCode::kIncompatibleReports,
                  "'" + a.reports[d] + "' covers different metrics or K values than '" +
                      a.reports[0] + "'");
    }
  }

  const std::size_t n = docs.size();
  json families = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "direction,metric,k,a,b,hits_a,hits_b,queries,statistic,p_value,p_adjusted\n";
  for (const auto& [key, first] : docs[0]) {
    struct Pair {
      std::size_t i, j;
      ChiSquareResult test;
    };
    std::vector<Pair> pairs;
    std::vector<double> raw;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& ci = docs[i].at(key);
        const auto& cj = docs[j].at(key);
        auto test = two_proportion_chisq({ci.hits, ci.queries, labels[i]},
                                         {cj.hits, cj.queries, labels[j]});
        pairs.push_back({i, j, test});
        raw.push_back(test.p_value);
      }
    }
    const auto adjusted = holm_adjust(raw);
    std::vector<std::vector<double>> matrix(n, std::vector<double>(n, 1.0));
    json pair_json = json::array();
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& [i, j, test] = pairs[p];
      matrix[i][j] = matrix[j][i] = adjusted[p];
      const auto& ci = docs[i].at(key);
      const auto& cj = docs[j].at(key);
      pair_json.push_back({{"a", labels[i]},
                           {"b", labels[j]},
                           {"hits_a", ci.hits},
                           {"hits_b", cj.hits},
                           {"queries", ci.queries},
                           {"statistic", test.statistic},
                           {"p_value", test.p_value},
                           {"p_adjusted", adjusted[p]}});
      csv << std::get<0>(key) << ',' << csv_field(std::get<1>(key)) << ',' << std::get<2>(key)
          << ',' << csv_field(labels[i]) << ',' << csv_field(labels[j]) << ',' << ci.hits << ','
          << cj.hits << ',' << ci.queries << ',' << test.statistic << ',' << test.p_value << ','
          << adjusted[p] << '\n';
      if (!g.quiet) {
        err << std::get<0>(key) << ' ' << std::get<1>(key) << " @" << std::get<2>(key) << ": "
            << labels[i] << " vs " << labels[j] << " p_adj=" << adjusted[p] << '\n';
      }
    }
    families.push_back({{"direction", std::get<0>(key)},
                        {"metric", std::get<1>(key)},
                        {"k", std::get<2>(key)},
                        {"labels", labels},
                        {"pairs", std::move(pair_json)},
                        {"p_adjusted_matrix", matrix}});
  }
  if (g.output == "csv") return csv.str();
  json doc;
  doc["manifest"] = to_json(make_manifest(g, "compare", a.reports,
                                             {{"labels", labels}, {"any_metric", a.any_metric}}));
  doc["families"] = std::move(families);
  return doc.dump(2) + "\n";
}

// ---- gap ------------------------------------------------------------------

struct GapArgs {
  std::vector<std::string> files;
  std::vector<std::string> labels;
  std::optional<std::size_t> batch_size;
  bool normalize = false;
};

std::string run_gap(const Globals& g, const GapArgs& a, std::ostream& err) {
  if (a.files.size() < 2 || a.files.size() % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "gap takes embedding files in pairs: A B [A B ...]");
  }
  const std::size_t pairs = a.files.size() / 2;
  if (!a.labels.empty() && a.labels.size() != pairs) {
    throw Error(ErrorCode::kInvalidArgument, "--labels needs one label per file pair");
  }
  json results = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "label,centroid_gap,w2_mean,w2_batches,batch_size,dropped_rows\n";
  for (std::size_t p = 0; p < pairs; ++p) {
    auto load = [&](const std::string& path) {
      auto s = load_embeddings(path);
      return a.normalize ? s.l2_normalized() : s;
    };
    const auto first = load(a.files[2 * p]);
    const auto second = load(a.files[2 * p + 1]);
    const std::string label = a.labels.empty() ? std::filesystem::path(a.files[2 * p]).stem().string() +
                                                     "~" +
                                                     std::filesystem::path(a.files[2 * p + 1]).stem().string()
                                               : a.labels[p];
    // Without an explicit size, small inputs fall back to one full batch.
    const std::size_t batch =
        a.batch_size.value_or(std::min(kDefaultW2BatchSize, std::max<std::size_t>(1, first.count())));
    const auto report = gap_report(first, second, batch, g.seed);
    auto entry = to_json(report);
    entry["label"] = label;
    entry["a"] = a.files[2 * p];
    entry["b"] = a.files[2 * p + 1];
    results.push_back(entry);
    csv << csv_field(label) << ',' << report.centroid_gap << ',' << report.w2_mean << ','
        << report.w2_batches << ',' << report.batch_size << ',' << report.dropped_rows << '\n';
    if (!g.quiet) {
      err << label << ": centroid_gap=" << fixed4(report.centroid_gap)
          << " w2=" << fixed4(report.w2_mean) << " (" << report.w2_batches << " x "
          << report.batch_size << ", dropped " << report.dropped_rows << ")\n";
    }
  }
  if (g.output == "csv") return csv.str();
  json params{{"normalize", a.normalize}, {"labels", a.labels}};
  params["batch_size"] = a.batch_size ? json(*a.batch_size) : json(nullptr);
  json doc;
  doc["manifest"] = to_json(make_manifest(g, "gap", a.files, params));
  doc["results"] = std::move(results);
  return doc.dump(2) + "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-modal embedding analysis: retrieval, modality gap, learned scorers"};
  app.name("xmodal");
  app.set_version_flag("--version", XMODAL_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "seed for every random choice")->capture_default_str();
  app.add_option("--output", g.output, "report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_flag("--quiet", g.quiet, "suppress the summary on stderr");
  app.add_option("--report", g.report, "write the report to this file instead of stdout");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest-check", "validate XEB1 files and a manifest");
  ingest_cmd->add_option("files", ingest.files, "XEB1 files")->required();
  ingest_cmd->add_option("--manifest", ingest.manifest, "pairing manifest to resolve");

  RetrieveArgs retrieve;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "rank candidates and report hit rate/precision");
  add_corpus_options(retrieve_cmd, retrieve.corpus, "all");
  auto* metric_opt = retrieve_cmd->add_option("--metric", retrieve.metrics,
                                              "comma-separated metrics (cosine,euclidean,manhattan,chi_square)")
                         ->delimiter(',');
  auto* model_opt = retrieve_cmd->add_option("--model", retrieve.model, "learned scorer file");
  metric_opt->excludes(model_opt);
  retrieve_cmd->add_option("--direction", retrieve.direction, "text_to_image, image_to_text or both")
      ->check(CLI::IsMember({"both", "text_to_image", "image_to_text", "t2i", "i2t"}))
      ->capture_default_str();
  retrieve_cmd->add_option("--k", retrieve.ks, "comma-separated K values")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  retrieve_cmd->add_option("--subset", retrieve.subset, "evaluate a seeded random subset of N items");
  retrieve_cmd->add_option("--rankings", retrieve.rankings, "write top-K rankings as TSV");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a learned scorer");
  add_corpus_options(train_cmd, tr.corpus, "first");
  auto* val_text = train_cmd->add_option("--val-text", tr.val_text, "validation text file");
  auto* val_image = train_cmd->add_option("--val-image", tr.val_image, "validation image file");
  auto* val_manifest = train_cmd->add_option("--val-manifest", tr.val_manifest, "validation manifest");
  val_text->needs(val_image);
  val_image->needs(val_text);
  val_manifest->needs(val_text);
  train_cmd->add_option("--split", tr.split, "train,val,test ratios when no validation files are given")
      ->delimiter(',')
      ->expected(3);
  train_cmd->add_option("--loss", tr.loss)->check(CLI::IsMember({"mse", "contrastive"}))->capture_default_str();
  auto* arch_opt = train_cmd->add_option("--arch", tr.arch, "hidden layer widths")->delimiter(',');
  auto* search_opt = train_cmd->add_flag("--search", tr.search, "random architecture search");
  search_opt->excludes(arch_opt);
  train_cmd->add_option("--budget", tr.budget, "search candidates")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "base learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--negatives", tr.negatives)
      ->check(CLI::IsMember({"in_batch", "full_dataset"}))
      ->capture_default_str();
  train_cmd->add_option("--model-out", tr.model_out, "model file to write")->required();
  train_cmd->add_option("--history", tr.history_out, "history CSV (default: next to the model)");

  HeatmapArgs heat;
  auto* heat_cmd = app.add_subcommand("heatmap", "cross score matrix of sampled pairs");
  add_corpus_options(heat_cmd, heat.corpus, "all");
  auto* heat_metric = heat_cmd->add_option("--metric", heat.metric)->capture_default_str();
  auto* heat_model = heat_cmd->add_option("--model", heat.model, "learned scorer file");
  heat_model->excludes(heat_metric);
  heat_cmd->add_option("--samples", heat.samples, "paired items to sample")->capture_default_str();

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "pairwise significance of retrieval hit counts");
  cmp_cmd->add_option("reports", cmp.reports, "retrieve JSON reports, one per model")->required();
  cmp_cmd->add_option("--labels", cmp.labels, "comma-separated labels")->delimiter(',');
  cmp_cmd->add_flag("--any-metric", cmp.any_metric,
                    "group by direction and K only; each report must hold one metric");

  GapArgs gap;
  auto* gap_cmd = app.add_subcommand("gap", "centroid gap and batched Wasserstein-2");
  gap_cmd->add_option("files", gap.files, "embedding files in pairs: A B [A B ...]")->required();
  gap_cmd->add_option("--labels", gap.labels, "comma-separated label per pair")->delimiter(',');
  gap_cmd->add_option("--batch-size", gap.batch_size, "W2 batch size (default 256)")
      ->check(CLI::PositiveNumber);
  gap_cmd->add_flag("--normalize", gap.normalize, "L2-normalize rows first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    std::string text;
    if (ingest_cmd->parsed()) {
      text = run_ingest_check(g, ingest, err);
    } else if (retrieve_cmd->parsed()) {
      text = run_retrieve(g, retrieve, err);
    } else if (train_cmd->parsed()) {
      text = run_train(g, tr, err);
    } else if (heat_cmd->parsed()) {
      text = run_heatmap(g, heat, err);
    } else if (cmp_cmd->parsed()) {
      text = run_compare(g, cmp, err);
    } else {
      text = run_gap(g, gap, err);
    }
    if (g.report.empty()) {
      out << text;
    } else {
      write_text(g.report, text);
    }
    return 0;
  } catch (const Error& e) {
    err << "error[" << error_code_name(e.code()) << "]: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace xmodal::cli
