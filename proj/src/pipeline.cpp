#include "clignet/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "clignet/attribution.hpp"
#include "clignet/baseline.hpp"
#include "clignet/calibration.hpp"
#include "clignet/checkpoint.hpp"
#include "clignet/csv.hpp"
#include "clignet/embedding_io.hpp"
#include "clignet/errors.hpp"
#include "clignet/hashing.hpp"
#include "clignet/labelgraph.hpp"
#include "clignet/text.hpp"
#include "clignet/trainer.hpp"

namespace clignet {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCorpusFile = "corpus.csv";
constexpr const char* kSplitFile = "split.csv";
constexpr const char* kStatsFile = "stats.txt";
constexpr const char* kConfigFile = "config.txt";
constexpr const char* kManifestFile = "manifest.txt";
constexpr const char* kCheckpointFile = "checkpoint.ckpt";
constexpr const char* kValLogitsFile = "val_logits.lgemb";
constexpr const char* kCalibrationFile = "calibration.csv";
constexpr const char* kPredictionsFile = "test_predictions.csv";

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifactError(path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string f6(double v) { return fmt("%.6f", v); }

std::vector<int> labels_of(const Corpus& corpus, const std::vector<std::size_t>& ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (const auto id : ids) out.push_back(corpus.records[id].label);
  return out;
}

EmbeddingTable rows_with_ids(const Eigen::MatrixXd& m, const std::vector<std::size_t>& ids) {
  EmbeddingTable t = matrix_to_table(m);
  for (std::size_t i = 0; i < ids.size(); ++i) t.records[i].id = ids[i];
  return t;
}

// Rows of `table` reordered to `ids`.
Eigen::MatrixXd rows_by_id(const EmbeddingTable& table, const std::vector<std::size_t>& ids, const std::string& what) {
  std::map<std::uint64_t, const EmbeddingRecord*> by_id;
  for (const auto& r : table.records) by_id[r.id] = &r;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(table.dim));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = by_id.find(ids[i]);
    if (it == by_id.end()) throw InputError(what + " lacks record " + std::to_string(ids[i]));
    for (std::uint32_t c = 0; c < table.dim; ++c) m(static_cast<Eigen::Index>(i), c) = it->second->values[c];
  }
  return m;
}

std::vector<std::vector<std::string>> token_lists(const Corpus& corpus, const std::vector<std::size_t>& ids) {
  std::vector<std::vector<std::string>> out;
  out.reserve(ids.size());
  for (const auto id : ids) out.push_back(tokenize(corpus.records[id].transcription));
  return out;
}

std::string bin_name(const BinSummary& b) {
  const auto lo = std::to_string(static_cast<long long>(b.lower));
  if (std::isinf(b.upper)) return lo + "+";
  return lo + "-" + std::to_string(static_cast<long long>(b.upper));
}

// Logits of the mode's model for the given records, from its checkpoint.
Eigen::MatrixXd checkpoint_logits(const Workspace& ws, const std::vector<std::size_t>& ids) {
  const fs::path ckpt_path = ws.mode_dir / kCheckpointFile;
  require_file(ckpt_path);
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  if (ckpt.labels != ws.corpus.labels.names) throw InputError("checkpoint labels differ from the corpus labels");
  if (ws.config.mode == Mode::B1) {
    const OvrModel model = baseline_from_checkpoint(ckpt);
    return baseline_logits(model, transform_tfidf(model.tfidf, token_lists(ws.corpus, ids)));
  }
  const Network net = network_from_checkpoint(ckpt, network_config(ws.config, ws.corpus.num_labels()));
  const ModelInputs inputs = build_inputs(ws.config, ws.corpus);
  return predict_logits(net, inputs.docs, ids);
}

void train_baseline(const Workspace& ws) {
  const auto& cfg = ws.config;
  const auto train_ids = ws.split.ids(Split::train);
  const auto val_ids = ws.split.ids(Split::val);
  const TfidfModel tfidf = fit_tfidf(token_lists(ws.corpus, train_ids), cfg.max_features);
  const SparseRows x = transform_tfidf(tfidf, token_lists(ws.corpus, train_ids));
  OvrModel model = fit_ovr_logreg(tfidf, x, labels_of(ws.corpus, train_ids), ws.corpus.num_labels(),
                                  {cfg.baseline_l2, cfg.baseline_max_iter, cfg.baseline_tol});
  for (std::size_t k = 0; k < model.converged.size(); ++k) {
    if (!model.converged[k]) {
      std::fprintf(stderr, "warning: logistic regression for label %zu stopped before convergence\n", k);
    }
  }
  const fs::path ckpt_path = ws.mode_dir / kCheckpointFile;
  write_checkpoint(baseline_checkpoint(model, cfg.serialize(), ws.corpus.labels.names), ckpt_path);
  const Eigen::MatrixXd val_logits = checkpoint_logits(ws, val_ids);
  write_embeddings(ws.mode_dir / kValLogitsFile, rows_with_ids(val_logits, val_ids));
}

void train_network(const Workspace& ws) {
  const auto& cfg = ws.config;
  const std::size_t k = ws.corpus.num_labels();
  const ModelInputs inputs = build_inputs(cfg, ws.corpus);
  const NetworkConfig nc = network_config(cfg, k);

  // Parameters are drawn first; node features come from the initial encoder.
  Rng init_rng(cfg.seed);
  Network seed_net(nc, Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)),
                   Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(nc.input_dim)));
  seed_net.initialize(init_rng, cfg.precomputed() ? 0 : cfg.hash_buckets);
  const auto embedding_of = [&](std::size_t id) { return seed_net.embed(inputs.docs[id]); };
  Eigen::MatrixXd h0 = build_node_features(ws.corpus, ws.split, embedding_of, cfg.per_label_cap, cfg.seed);
  const ChapterMap chapters = cfg.chapters.empty() ? default_chapter_map(ws.corpus.labels.names)
                                                   : read_chapter_map(cfg.chapters, ws.corpus.labels.names);
  LabelGraph graph = build_label_graph(round_to_storage(h0), chapters, {cfg.graph_tau, cfg.graph_bonus, cfg.per_label_cap});
  graph.normalized = round_to_storage(graph.normalized);

  Network net(nc, graph.normalized, graph.node_features);
  net.params() = seed_net.params();

  TrainConfig tc;
  tc.lr_encoder = cfg.lr_encoder;
  tc.lr_head = cfg.lr_head;
  tc.weight_decay = cfg.weight_decay;
  tc.warmup_fraction = cfg.warmup_fraction;
  tc.clip_norm = cfg.clip_norm;
  tc.batch_size = cfg.batch_size;
  tc.accumulation_steps = cfg.accumulation_steps;
  tc.max_epochs = cfg.max_epochs;
  tc.patience = cfg.patience;
  tc.seed = cfg.seed;
  tc.record_time = cfg.record_time;
  if (cfg.plain_bce) {
    tc.focal = {0.0, ClassWeights::uniform(k)};
  } else {
    tc.focal = {cfg.gamma, ClassWeights::inverse_frequency(train_label_counts(ws.corpus, ws.split), cfg.weight_min,
                                                           cfg.weight_max)};
  }

  std::vector<int> labels(ws.corpus.size());
  for (const auto& r : ws.corpus.records) labels[r.id] = r.label;
  const auto train_ids = ws.split.ids(Split::train);
  const auto val_ids = ws.split.ids(Split::val);
  const TrainResult result = train(net, {inputs.docs, labels, train_ids, val_ids}, tc);
  round_to_storage(net.params());

  write_checkpoint(network_checkpoint(net, cfg.serialize(), ws.corpus.labels.names, graph.hash()),
                   ws.mode_dir / kCheckpointFile);
  write_training_log(result.log, ws.mode_dir / "train_log.csv");
  write_edge_list(graph, ws.corpus.labels.names, ws.mode_dir / "graph_edges.csv");
  write_embeddings(ws.mode_dir / "graph_norm.lgemb", matrix_to_table(graph.normalized));
  const Eigen::MatrixXd val_logits = checkpoint_logits(ws, val_ids);
  write_embeddings(ws.mode_dir / kValLogitsFile, rows_with_ids(val_logits, val_ids));
}

const char* removed_component(Mode m) {
  switch (m) {
    case Mode::A1: return "label graph and gating";
    case Mode::A2: return "focal loss and class weights";
    case Mode::A4: return "sliding-window chunking";
    case Mode::A5: return "threshold optimization";
    default: return "";
  }
}

RunOptions with_mode(RunOptions o, Mode m) {
  o.mode = m;
  return o;
}

}  // namespace

RunConfig resolve_config(const RunOptions& options) {
  RunConfig cfg;
  if (options.config_path) {
    cfg = read_config(*options.config_path);
  } else if (fs::exists(options.run_dir / kConfigFile)) {
    cfg = read_config(options.run_dir / kConfigFile);
  }
  if (options.seed) cfg.seed = *options.seed;
  cfg = cfg.for_mode(options.mode.value_or(cfg.mode));
  cfg.validate();
  return cfg;
}

Workspace load_workspace(const RunOptions& options) {
  Workspace ws;
  ws.config = resolve_config(options);
  ws.corpus = read_corpus_store(options.run_dir / kCorpusFile);
  ws.split = read_split_manifest(options.run_dir / kSplitFile, ws.corpus.size());
  ws.mode_dir = options.run_dir / std::string(to_string(ws.config.mode));
  return ws;
}

ModelInputs build_inputs(const RunConfig& config, const Corpus& corpus) {
  ModelInputs in{{}, {}, config.chunk_params(),
                 FeatureHasher(static_cast<std::uint32_t>(config.precomputed() ? 1 : config.hash_buckets))};
  in.docs.resize(corpus.size());
  if (config.precomputed()) {
    std::string path = config.embeddings;
    if (config.no_sliding_window) {
      if (config.a4_embeddings.empty()) {
        throw InputError("mode A4 with precomputed embeddings needs ablation.a4_embeddings");
      }
      path = config.a4_embeddings;
    }
    if (path.empty()) throw InputError("encoder.kind=precomputed needs encoder.embeddings");
    if (!fs::exists(path)) throw MissingArtifactError(path);
    const auto table = load_precomputed(path);
    for (const auto& r : corpus.records) {
      const auto it = table.find(r.id);
      if (it == table.end()) throw InputError(path + " lacks an embedding for record " + std::to_string(r.id));
      if (it->second.size() != static_cast<Eigen::Index>(config.dim)) {
        throw InputError(path + ": embedding dimension differs from encoder.dim");
      }
      in.docs[r.id].embedding = it->second;
    }
    return in;
  }
  in.tokens.resize(corpus.size());
  for (const auto& r : corpus.records) {
    in.tokens[r.id] = to_sequence(r.transcription);
    in.docs[r.id].features = document_features(in.tokens[r.id], in.chunks, in.hasher).pooled;
  }
  return in;
}

NetworkConfig network_config(const RunConfig& config, std::size_t num_labels) {
  NetworkConfig nc;
  nc.input_dim = config.dim;
  nc.hidden_dim = config.d1;
  nc.output_dim = config.d2;
  nc.num_labels = num_labels;
  nc.dropout = config.dropout;
  nc.use_gcn = !config.no_gcn;
  return nc;
}

void cmd_ingest(const fs::path& csv_path, const RunOptions& options) {
  const RunConfig cfg = resolve_config(options);
  const fs::path source = csv_path.empty() ? fs::path(cfg.csv) : csv_path;
  if (source.empty()) throw InputError("no input CSV given");
  const Corpus corpus = clean(load_csv(source));
  const SplitAssignment split = stratified_split(corpus, cfg.split, cfg.seed);
  fs::create_directories(options.run_dir);
  write_corpus_store(corpus, options.run_dir / kCorpusFile);
  write_split_manifest(split, options.run_dir / kSplitFile);
  write_text(options.run_dir / kStatsFile, format_stats(corpus, corpus_stats(corpus, split, cfg.window)));
  write_text(options.run_dir / kConfigFile, cfg.serialize());
  write_manifest(options.run_dir);
}

void cmd_train(const RunOptions& options) {
  const Workspace ws = load_workspace(options);
  fs::create_directories(ws.mode_dir);
  write_text(ws.mode_dir / "config.resolved.txt", ws.config.serialize());
  if (ws.config.mode == Mode::B1) train_baseline(ws);
  else train_network(ws);
  write_manifest(options.run_dir);
}

void cmd_calibrate(const RunOptions& options) {
  const Workspace ws = load_workspace(options);
  require_file(ws.mode_dir / kCheckpointFile);
  require_file(ws.mode_dir / kValLogitsFile);
  const auto val_ids = ws.split.ids(Split::val);
  const Eigen::MatrixXd logits = rows_by_id(read_embeddings(ws.mode_dir / kValLogitsFile), val_ids, kValLogitsFile);
  if (static_cast<std::size_t>(logits.cols()) != ws.corpus.num_labels()) {
    throw InputError("validation logits have the wrong number of labels");
  }
  const auto labels = labels_of(ws.corpus, val_ids);

  Calibration cal = Calibration::identity(ws.corpus.num_labels());
  Eigen::MatrixXd probs;
  if (ws.config.mode == Mode::B8) {
    const Calibration fitted = fit_calibration(logits, labels);
    cal.a = fitted.a;
    cal.b = fitted.b;
    probs = apply_calibration(logits, cal);
  } else {
    probs = sigmoid_matrix(logits);
  }
  if (!ws.config.fixed_threshold) cal.tau = optimize_thresholds(probs, labels);
  write_calibration(cal, ws.mode_dir / kCalibrationFile);
  write_manifest(options.run_dir);
}

EvalReport cmd_evaluate(const RunOptions& options, const std::vector<Mode>& compare) {
  const Workspace ws = load_workspace(options);
  const auto& cfg = ws.config;
  require_file(ws.mode_dir / kCheckpointFile);
  require_file(ws.mode_dir / kCalibrationFile);
  Calibration cal = read_calibration(ws.mode_dir / kCalibrationFile);
  if (cal.size() != ws.corpus.num_labels()) throw InputError("calibration file covers the wrong number of labels");
  if (cfg.fixed_threshold) cal.tau.setConstant(0.5);

  const auto test_ids = ws.split.ids(Split::test);
  const auto labels = labels_of(ws.corpus, test_ids);
  const Eigen::MatrixXd logits = checkpoint_logits(ws, test_ids);
  const Eigen::MatrixXd probs = cfg.mode == Mode::B8 ? apply_calibration(logits, cal) : sigmoid_matrix(logits);

  const auto train_counts = train_label_counts(ws.corpus, ws.split);
  std::vector<std::size_t> words;
  for (const auto id : test_ids) words.push_back(word_count(ws.corpus.records[id].transcription));
  const EvalReport report =
      evaluate({probs, cal.tau, labels, ws.corpus.labels.names, train_counts, words, cfg.ece_bins});

  const std::string mode(to_string(cfg.mode));
  std::ostringstream rep;
  rep << "mode: " << mode << '\n'
      << "model: " << (cfg.mode == Mode::B1 ? "tf-idf one-vs-rest logistic regression (smoothed idf, l2-normalized rows)"
                                            : "label-graph network") << '\n'
      << "probabilities: " << (cfg.mode == Mode::B8 ? "per-label platt scaling" : "raw sigmoid") << '\n'
      << "thresholds: " << (cfg.fixed_threshold ? "fixed 0.5" : "per-label grid search on validation (step 0.01)")
      << '\n'
      << "micro_f1_and_accuracy: argmax over labels\n"
      << "macro_f1_and_hamming: thresholded decisions over all labels\n"
      << "ece_bins: " << cfg.ece_bins << " equal-width, pooled over all document-label pairs\n"
      << "documents: " << test_ids.size() << '\n'
      << "labels: " << ws.corpus.num_labels() << '\n'
      << "absent_labels: " << report.absent_labels << '\n'
      << "macro_f1: " << f6(report.macro_f1) << '\n'
      << "micro_f1: " << f6(report.micro_f1) << '\n'
      << "accuracy: " << f6(report.accuracy) << '\n'
      << "hamming_loss: " << f6(report.hamming) << '\n'
      << "ece: " << f6(report.ece) << '\n';
  write_text(ws.mode_dir / "eval_report.txt", rep.str());

  write_text(ws.mode_dir / "metrics.csv", "method,macro_f1,micro_f1,accuracy,hamming_loss,ece\n" + mode + "," +
                                              f6(report.macro_f1) + "," + f6(report.micro_f1) + "," +
                                              f6(report.accuracy) + "," + f6(report.hamming) + "," +
                                              f6(report.ece) + "\n");

  std::ostringstream per_label;
  csv::write_row(per_label, {"label_id", "label", "train_count", "tp", "fp", "fn", "f1", "tau"});
  for (std::size_t k = 0; k < ws.corpus.num_labels(); ++k) {
    const auto& c = report.per_label_counts[k];
    const auto i = static_cast<Eigen::Index>(k);
    csv::write_row(per_label, {std::to_string(k), ws.corpus.labels.names[k], std::to_string(train_counts[k]),
                               std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.fn),
                               f6(report.per_label_f1[i]), fmt("%.2f", cal.tau[i])});
  }
  write_text(ws.mode_dir / "per_label.csv", per_label.str());

  std::ostringstream pairs;
  csv::write_row(pairs, {"true_label", "predicted_label", "count", "pct"});
  for (const auto& p : report.confusion_pairs) {
    csv::write_row(pairs, {ws.corpus.labels.names[static_cast<std::size_t>(p.true_label)],
                           ws.corpus.labels.names[static_cast<std::size_t>(p.predicted)], std::to_string(p.count),
                           fmt("%.1f", p.pct)});
  }
  write_text(ws.mode_dir / "confusion_pairs.csv", pairs.str());

  std::ostringstream sizes;
  sizes << "train_class_size,classes,mean_f1\n";
  for (const auto& b : report.class_size_bins) sizes << bin_name(b) << ',' << b.count << ',' << f6(b.mean) << '\n';
  write_text(ws.mode_dir / "class_size_bins.csv", sizes.str());

  std::ostringstream lengths;
  lengths << "word_count,documents,accuracy\n";
  for (const auto& b : report.length_bins) lengths << bin_name(b) << ',' << b.count << ',' << f6(b.mean) << '\n';
  write_text(ws.mode_dir / "length_bins.csv", lengths.str());

  std::ostringstream preds;
  preds << "record_id,label,predicted\n";
  for (std::size_t i = 0; i < test_ids.size(); ++i) {
    preds << test_ids[i] << ',' << labels[i] << ',' << report.predictions[i] << '\n';
  }
  write_text(ws.mode_dir / kPredictionsFile, preds.str());
  write_embeddings(ws.mode_dir / "test_logits.lgemb", rows_with_ids(logits, test_ids));

  if (!compare.empty()) {
    std::vector<std::vector<int>> predictions;
    for (const Mode m : compare) {
      const fs::path p = options.run_dir / std::string(to_string(m)) / kPredictionsFile;
      require_file(p);
      std::ifstream in(p, std::ios::binary);
      const auto rows = csv::parse(in);
      std::vector<int> pred;
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 3 || std::stoul(rows[r][0]) != test_ids.at(r - 1)) {
          throw InputError(p.string() + " does not cover the current test split");
        }
        pred.push_back(std::stoi(rows[r][2]));
      }
      if (pred.size() != test_ids.size()) throw InputError(p.string() + " does not cover the current test split");
      predictions.push_back(std::move(pred));
    }
    struct Row {
      std::size_t a, b;
      ContingencyTable t;
      McNemarResult r;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < compare.size(); ++i) {
      for (std::size_t j = i + 1; j < compare.size(); ++j) {
        const auto t = contingency(predictions[i], predictions[j], labels);
        rows.push_back({i, j, t, mcnemar(t)});
      }
    }
    if (rows.empty()) throw InputError("--compare needs at least two modes");
    std::vector<double> ps;
    for (const auto& r : rows) ps.push_back(r.r.p);
    const auto significant = bonferroni(ps, cfg.family_alpha);
    std::ostringstream sig;
    sig << "# bonferroni threshold " << fmt("%.4f", bonferroni_threshold(cfg.family_alpha, rows.size())) << '\n'
        << "comparison,n01,n10,chi2,p,significant\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      sig << to_string(compare[r.a]) << " vs " << to_string(compare[r.b]) << ',' << r.t.n01 << ',' << r.t.n10 << ','
          << fmt("%.2f", r.r.chi2) << ',' << format_p_value(r.r.p) << ',' << (significant[i] ? "yes" : "ns") << '\n';
    }
    write_text(options.run_dir / "significance.csv", sig.str());
  }
  write_manifest(options.run_dir);
  return report;
}

void cmd_attribute(const RunOptions& options, const std::vector<std::size_t>& records) {
  const Workspace ws = load_workspace(options);
  const auto& cfg = ws.config;
  if (cfg.mode == Mode::B1) throw InputError("attribution applies to the label-graph network, not B1");
  const fs::path ckpt_path = ws.mode_dir / kCheckpointFile;
  require_file(ckpt_path);
  const Network net = network_from_checkpoint(read_checkpoint(ckpt_path), network_config(cfg, ws.corpus.num_labels()));
  const ModelInputs inputs = build_inputs(cfg, ws.corpus);

  std::vector<std::size_t> ids = records;
  if (ids.empty()) {
    const auto test_ids = ws.split.ids(Split::test);
    ids.assign(test_ids.begin(), test_ids.begin() + static_cast<std::ptrdiff_t>(std::min(cfg.ig_documents, test_ids.size())));
  }
  const fs::path out_dir = ws.mode_dir / "attributions";
  fs::create_directories(out_dir);
  std::ostringstream summary;
  summary << "record_id,label,logit,baseline_logit,attribution_sum,completeness_gap,granularity\n";
  for (const auto id : ids) {
    if (id >= ws.corpus.size()) throw InputError("record id " + std::to_string(id) + " is out of range");
    const int label = ws.corpus.records[id].label;
    const bool tokens = !cfg.precomputed();
    const auto r = integrated_gradients(net, inputs.docs[id], label, cfg.ig_steps,
                                        tokens ? &inputs.tokens[id] : nullptr, tokens ? &inputs.chunks : nullptr,
                                        tokens ? &inputs.hasher : nullptr);
    std::ostringstream rows;
    csv::write_row(rows, {"label", "token", "score"});
    for (const auto& [token, score] : top_tokens(r, r.token_scores.size())) {
      csv::write_row(rows, {ws.corpus.labels.names[static_cast<std::size_t>(label)], token, fmt("%+.6f", score)});
    }
    write_text(out_dir / (std::to_string(id) + ".csv"), rows.str());
    summary << id << ',' << label << ',' << fmt("%.9g", r.logit) << ',' << fmt("%.9g", r.baseline_logit) << ','
            << fmt("%.9g", r.total) << ',' << fmt("%.3e", r.completeness_gap) << ','
            << (r.token_level ? "token" : "embedding_dimension") << '\n';
  }
  write_text(out_dir / "completeness.csv", summary.str());
  write_manifest(options.run_dir);
}

void cmd_ablate(const RunOptions& options) {
  const auto full_pipeline = [&](Mode m) {
    const RunOptions o = with_mode(options, m);
    cmd_train(o);
    cmd_calibrate(o);
    return cmd_evaluate(o);
  };
  const EvalReport reference = full_pipeline(Mode::B6);
  std::ostringstream out;
  out << "id,removed_component,macro_f1,micro_f1,delta_macro_f1,delta_micro_f1,reference_macro_f1,"
         "reference_micro_f1\n";
  for (const Mode m : {Mode::A1, Mode::A2, Mode::A4, Mode::A5}) {
    const EvalReport r = full_pipeline(m);
    out << to_string(m) << ',' << removed_component(m) << ',' << f6(r.macro_f1) << ',' << f6(r.micro_f1) << ','
        << fmt("%+.6f", r.macro_f1 - reference.macro_f1) << ',' << fmt("%+.6f", r.micro_f1 - reference.micro_f1)
        << ',' << f6(reference.macro_f1) << ',' << f6(reference.micro_f1) << '\n';
  }
  write_text(options.run_dir / "ablation.csv", out.str());
  write_manifest(options.run_dir);
}

void write_manifest(const fs::path& run_dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), run_dir).generic_string();
    if (rel != kManifestFile) files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  std::ostringstream out;
  for (const auto& f : files) out << f << ' ' << sha256_file(run_dir / f) << '\n';
  write_text(run_dir / kManifestFile, out.str());
}

int exit_code_for(const std::exception& error) noexcept {
  if (dynamic_cast<const MissingArtifactError*>(&error) != nullptr) return 3;
  if (dynamic_cast<const InputError*>(&error) != nullptr) return 2;
  if (dynamic_cast<const NumericError*>(&error) != nullptr) return 4;
  return 1;
}

}  // namespace clignet
