#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "framebits/csv.hpp"
#include "framebits/errors.hpp"
#include "framebits/media_io.hpp"
#include "framebits/metrics.hpp"
#include "framebits/ratecontrol.hpp"
#include "framebits/rng.hpp"

namespace framebits::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string resolve_near(const std::string& anchor_file, const std::string& rel) {
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(anchor_file).parent_path() / p).string();
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::FileNotFound, std::string("cannot open ") + what + " '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const std::exception& e) {
    raise(ErrorKind::CorruptFile, std::string(what) + " '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << body;
  if (!out) raise(ErrorKind::IoError, "short write to '" + path + "'");
}

}  // namespace

Manifest load_manifest(const std::string& path) {
  json j = read_json_file(path, "manifest");
  try {
    if (j.value("schema_version", 0) != 1)
      raise(ErrorKind::VersionMismatch, "manifest '" + path + "' has an unsupported schema version");
    Manifest m;
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.frame_rate = j.at("frame_rate").get<double>();
    const json& g = j.at("gop");
    m.gop.gop_size = g.at("gop_size").get<int>();
    m.gop.intra_period = g.at("intra_period").get<int>();
    m.gop.level_qp_offsets = g.at("level_qp_offsets").get<std::vector<int>>();
    for (const json& e : j.at("sequences")) {
      Manifest::Entry entry;
      entry.id = e.at("id").get<std::string>();
      entry.frames = e.at("frames").get<int64_t>();
      entry.features = e.at("features").get<std::string>();
      entry.log = e.value("log", std::string());
      m.entries.push_back(std::move(entry));
    }
    m.gop.validate();
    return m;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorKind::CorruptFile, "manifest '" + path + "' is malformed: " + e.what());
  }
}

void write_manifest(const std::string& path, const Manifest& m) {
  json j;
  j["schema_version"] = 1;
  j["width"] = m.width;
  j["height"] = m.height;
  j["frame_rate"] = m.frame_rate;
  j["gop"] = json{{"gop_size", m.gop.gop_size},
                  {"intra_period", m.gop.intra_period},
                  {"level_qp_offsets", m.gop.level_qp_offsets}};
  json seqs = json::array();
  for (const auto& e : m.entries) {
    json je{{"id", e.id}, {"frames", e.frames}, {"features", e.features}};
    if (!e.log.empty()) je["log"] = e.log;
    seqs.push_back(std::move(je));
  }
  j["sequences"] = std::move(seqs);
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<SequenceData> load_corpus(const std::string& manifest_path, const Manifest& m) {
  std::vector<SequenceData> corpus;
  for (const auto& e : m.entries) {
    SequenceData seq;
    seq.id = e.id;
    seq.features = read_features_csv(resolve_near(manifest_path, e.features));
    if (static_cast<int64_t>(seq.features.size()) != e.frames)
      raise(ErrorKind::Misalignment, "sequence '" + e.id + "' declares " +
                                         std::to_string(e.frames) + " frames but its feature file has " +
                                         std::to_string(seq.features.size()));
    seq.roles = classify_frames(e.frames, m.gop);
    if (!e.log.empty()) seq.log = ingest_log(resolve_near(manifest_path, e.log));
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

namespace {

// ---------------------------------------------------------------------------
// Shared command plumbing

struct Common {
  RunConfig cfg;
  std::string config_path;
};

void add_common_flags(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path,
                  "JSON config file (applied before flags; unknown keys rejected)");
  sub->add_option("--threads", c.cfg.threads, "Worker thread cap")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.cfg.seed, "Master RNG seed");
}

void save_snapshot_for(const RunConfig& cfg, const std::string& primary_output) {
  cfg.save_snapshot(primary_output + ".config.json");
}

std::vector<double> column(const std::vector<std::pair<double, double>>& v, bool second) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& p : v) out.push_back(second ? p.second : p.first);
  return out;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
  std::string input;
  std::string output;
};

int run_analyze(const AnalyzeOpts& o, const RunConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0)
    raise(ErrorKind::UsageError, "--width and --height are required for raw input");
  auto reader = open_sequence(o.input, cfg.width, cfg.height, cfg.frame_rate);
  auto records = analyze_sequence(*reader, cfg.analyzer_config());
  write_features_csv(o.output, records);
  save_snapshot_for(cfg, o.output);
  std::printf("analyzed %zu frames of %dx%d into %s\n", records.size(), cfg.width, cfg.height,
              o.output.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// gop

struct GopOpts {
  int64_t frames = 0;
  std::string output;
};

int run_gop(const GopOpts& o, const RunConfig& cfg) {
  auto roles = classify_frames(o.frames, cfg.gop);
  write_roles_csv(o.output, roles);
  save_snapshot_for(cfg, o.output);
  int64_t ni = 0, np = 0, nb = 0;
  for (const auto& r : roles) {
    if (r.frame_type == FrameType::I) ++ni;
    else if (r.frame_type == FrameType::P) ++np;
    else ++nb;
  }
  std::printf("%lld frames: %lld I, %lld P, %lld B -> %s\n",
              static_cast<long long>(o.frames), static_cast<long long>(ni),
              static_cast<long long>(np), static_cast<long long>(nb), o.output.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  std::string outdir;
  int sequences = 50;
  int frames = 97;
  std::vector<int> base_qps = {20, 25, 30, 35, 40, 45, 50};
  bool emit_yuv = false;
};

int run_synth(const SynthOpts& o, const RunConfig& cfg) {
  fs::create_directories(o.outdir);
  CorpusSpec spec;
  spec.sequences = o.sequences;
  spec.frames = o.frames;
  spec.width = cfg.width > 0 ? cfg.width : 96;
  spec.height = cfg.height > 0 ? cfg.height : 64;
  spec.base_qps = o.base_qps;
  spec.seed = cfg.seed;
  spec.gop = cfg.gop;
  spec.oracle = cfg.oracle;
  spec.analyzer = cfg.analyzer_config();
  auto corpus = build_synthetic_corpus(spec);

  Manifest m;
  m.width = spec.width;
  m.height = spec.height;
  m.frame_rate = cfg.frame_rate;
  m.gop = cfg.gop;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const auto& seq = corpus[i];
    std::string features_rel = seq.id + ".features.csv";
    std::string log_rel = seq.id + ".log.csv";
    write_features_csv((fs::path(o.outdir) / features_rel).string(), seq.features);
    write_log_csv((fs::path(o.outdir) / log_rel).string(), seq.log);
    if (o.emit_yuv) {
      SynthParams params = draw_synth_params(spec.seed, i, spec.width, spec.height, spec.frames);
      std::vector<FramePlanes> frames;
      for (int64_t t = 0; t < spec.frames; ++t) frames.push_back(render_synth_frame(params, t));
      write_sequence((fs::path(o.outdir) / (seq.id + ".yuv")).string(), frames);
    }
    m.entries.push_back({seq.id, static_cast<int64_t>(spec.frames), features_rel, log_rel});
  }
  std::string manifest_path = (fs::path(o.outdir) / "manifest.json").string();
  write_manifest(manifest_path, m);
  cfg.save_snapshot((fs::path(o.outdir) / "resolved_config.json").string());
  std::printf("wrote %d sequences (%d frames each, base QPs", o.sequences, o.frames);
  for (int q : o.base_qps) std::printf(" %d", q);
  std::printf(") to %s\n", manifest_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string manifest;
  std::string frame_type;
  std::string model = "forest";
  bool no_chroma = false;
  int folds = 5;
  std::string output;
  std::string report;
  std::string export_matrix;
};

int run_train(const TrainOpts& o, const RunConfig& cfg) {
  Manifest m = load_manifest(o.manifest);
  auto corpus = load_corpus(o.manifest, m);
  FrameType type = frame_type_from_name(o.frame_type);
  ModelKind kind = model_kind_from_name(o.model);
  bool use_chroma = !o.no_chroma;

  if (!o.export_matrix.empty())
    write_matrix_csv(o.export_matrix, pooled_matrix(corpus, type, use_chroma));

  CvResult cv;
  if (o.folds >= 2) {
    cv = cross_validate(corpus, type, kind, use_chroma, o.folds, cfg.forest, cfg.seed, cfg.threads);
    for (size_t f = 0; f < cv.folds.size(); ++f)
      std::printf("fold %zu: MAPE %.2f%%  R2 %.4f  (%zu train rows, %zu test rows)\n", f + 1,
                  cv.folds[f].mape, cv.folds[f].r2, cv.folds[f].train_rows, cv.folds[f].test_rows);
    std::printf("%s %s (%s): mean MAPE %.2f%%  mean R2 %.4f over %d folds\n", o.model.c_str(),
                o.frame_type.c_str(), use_chroma ? "with chroma" : "no chroma", cv.mean_mape,
                cv.mean_r2, o.folds);
  }

  AnyModel model = train_pooled(corpus, type, kind, use_chroma, cfg.forest, cfg.seed, cfg.threads);
  save_model(model, o.output);
  save_snapshot_for(cfg, o.output);

  std::string report_path = o.report.empty() ? o.output + ".report.json" : o.report;
  json rep;
  rep["frame_type"] = o.frame_type;
  rep["model"] = o.model;
  rep["use_chroma"] = use_chroma;
  rep["folds"] = json::array();
  for (const auto& f : cv.folds)
    rep["folds"].push_back({{"mape_percent", f.mape},
                            {"r2", f.r2},
                            {"train_rows", f.train_rows},
                            {"test_rows", f.test_rows}});
  rep["mean_mape_percent"] = cv.folds.empty() ? json() : json(cv.mean_mape);
  rep["mean_r2"] = cv.folds.empty() ? json() : json(cv.mean_r2);
  write_text_file(report_path, rep.dump(2) + "\n");
  std::printf("model -> %s\n", o.output.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOpts {
  std::string model;
  std::string manifest;
  std::string sequence;  // empty = all
  std::string output;
};

int run_predict(const PredictOpts& o, const RunConfig& cfg) {
  (void)cfg;
  AnyModel model = load_model(o.model);
  FrameType type = model_frame_type(model);
  bool use_chroma = false;
  for (const auto& n : model_feature_names(model))
    if (n == "E_U") use_chroma = true;

  Manifest m = load_manifest(o.manifest);
  auto corpus = load_corpus(o.manifest, m);

  std::ofstream out(o.output, std::ios::binary);
  if (!out) raise(ErrorKind::IoError, "cannot open '" + o.output + "' for writing");
  out << "sequence_id,frame_index,frame_type,q,bits,predicted_bits\n";
  size_t rows = 0;
  for (const auto& seq : corpus) {
    if (!o.sequence.empty() && seq.id != o.sequence) continue;
    if (seq.log.empty())
      raise(ErrorKind::UsageError, "sequence '" + seq.id + "' has no coding log to predict against");
    TrainingMatrix mx = build_matrix(seq.features, seq.roles, seq.log, type, use_chroma);
    std::vector<double> pred = predict(model, mx.x);
    for (size_t r = 0; r < mx.x.rows; ++r) {
      const FrameCodingRecord& rec = seq.log[mx.truth_rows[r]];
      out << seq.id << ',' << rec.frame_index << ',' << frame_type_name(rec.frame_type) << ','
          << rec.q << ',' << format_double(rec.bits) << ',' << format_double(pred[r]) << '\n';
      ++rows;
    }
  }
  if (!out) raise(ErrorKind::IoError, "short write to '" + o.output + "'");
  if (rows == 0) raise(ErrorKind::UsageError, "no rows matched the requested sequence/frame type");
  std::printf("%zu predictions -> %s\n", rows, o.output.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// simulate-rc

struct SimulateOpts {
  std::string manifest;
  std::string sequence;
  std::string model_i, model_p, model_b;
  double target_bitrate = 0.0;
  double frame_rate = 0.0;  // 0 = manifest value
  int height_for_chigh = 0;
  std::string backend = "oracle";
  std::string report;
  int base_qp = -1;
  bool c_high_set = false;
};

int run_simulate(const SimulateOpts& o, const RunConfig& cfg) {
  Manifest m = load_manifest(o.manifest);
  auto corpus = load_corpus(o.manifest, m);

  size_t index = 0;
  const SequenceData* seq = nullptr;
  for (size_t i = 0; i < corpus.size(); ++i)
    if (o.sequence.empty() || corpus[i].id == o.sequence) {
      seq = &corpus[i];
      index = i;
      break;
    }
  if (!seq) raise(ErrorKind::UsageError, "sequence '" + o.sequence + "' not in the manifest");

  PredictorSet models{load_model(o.model_i), load_model(o.model_p), load_model(o.model_b)};

  RcConstants constants = cfg.rc;
  if (!o.c_high_set && o.height_for_chigh > 0) constants.c_high = c_high_for_height(o.height_for_chigh);
  RcBehavior behavior;
  behavior.strength = cfg.rc_strength;
  behavior.per_frame_compensation = cfg.rc_per_frame;
  behavior.base_qp = o.base_qp;

  double frame_rate = o.frame_rate > 0.0 ? o.frame_rate : m.frame_rate;

  std::unique_ptr<EncodeBackend> backend;
  if (o.backend == "oracle") {
    SyntheticOracleParams oracle = cfg.oracle;
    oracle.seed = mix_seed(cfg.oracle.seed, static_cast<uint64_t>(index));
    backend = std::make_unique<OracleBackend>(oracle, seq->features);
  } else if (o.backend == "replay") {
    if (seq->log.empty())
      raise(ErrorKind::UsageError, "replay backend needs a coding log for sequence '" + seq->id + "'");
    backend = std::make_unique<ReplayBackend>(seq->log);
  } else {
    raise(ErrorKind::UsageError, "unknown backend '" + o.backend + "' (oracle, replay)");
  }

  RcSessionReport rep = simulate_session(seq->features, seq->roles, models, o.target_bitrate,
                                         frame_rate, constants, cfg.gop, *backend, behavior);
  write_report_json(o.report, rep);
  save_snapshot_for(cfg, o.report);
  std::printf("sequence %s, base QP %d: target %.0f bits, achieved %.0f bits, deviation %+.3f%%\n",
              seq->id.c_str(), rep.base_qp, rep.total_target_bits, rep.total_achieved_bits,
              rep.deviation_percent);
  std::printf("%lld clamped, %lld interpolated of %zu frames -> %s\n",
              static_cast<long long>(rep.clamped_frames),
              static_cast<long long>(rep.interpolated_frames), rep.decisions.size(),
              o.report.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::string predictions;
  std::string anchor_rd, test_rd;
  std::string bd_method = "pchip";
  std::string output;
};

int run_evaluate(const EvaluateOpts& o, const RunConfig& cfg) {
  (void)cfg;
  json out;
  if (!o.predictions.empty()) {
    std::ifstream in(o.predictions);
    if (!in) raise(ErrorKind::FileNotFound, "cannot open '" + o.predictions + "'");
    std::string line;
    if (!std::getline(in, line)) raise(ErrorKind::SchemaError, o.predictions + ": empty file");
    auto header = split_csv_line(line);
    const std::vector<std::string> expect = {"sequence_id", "frame_index", "frame_type",
                                             "q",           "bits",        "predicted_bits"};
    if (std::vector<std::string>(header.begin(), header.end()) != expect)
      raise(ErrorKind::SchemaError, o.predictions + ": unexpected header");
    std::map<std::string, std::vector<std::pair<double, double>>> by_type;  // (bits, pred)
    size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto cells = split_csv_line(line);
      std::string ctx = o.predictions + ":" + std::to_string(lineno);
      if (cells.size() != expect.size()) raise(ErrorKind::SchemaError, ctx + ": wrong cell count");
      double bits = parse_double(cells[4], ctx);
      double pred = parse_double(cells[5], ctx);
      by_type[cells[2]].push_back({bits, pred});
      by_type["overall"].push_back({bits, pred});
    }
    if (by_type.empty()) raise(ErrorKind::SchemaError, o.predictions + ": no data rows");
    for (const auto& [type, pairs] : by_type) {
      json cell;
      cell["rows"] = pairs.size();
      cell["mape_percent"] = mape(column(pairs, false), column(pairs, true));
      if (pairs.size() >= 2) cell["r2"] = r2(column(pairs, false), column(pairs, true));
      out["prediction_metrics"][type] = std::move(cell);
    }
  }
  if (!o.anchor_rd.empty() || !o.test_rd.empty()) {
    if (o.anchor_rd.empty() || o.test_rd.empty())
      raise(ErrorKind::UsageError, "--anchor-rd and --test-rd must be given together");
    BdMethod method;
    if (o.bd_method == "pchip") method = BdMethod::MonotonePchip;
    else if (o.bd_method == "cubic") method = BdMethod::ClassicCubic;
    else raise(ErrorKind::UsageError, "unknown BD method '" + o.bd_method + "' (pchip, cubic)");
    double bd = bd_rate(read_rd_csv(o.anchor_rd), read_rd_csv(o.test_rd), method);
    out["bd_rate_percent"] = bd;
    out["bd_method"] = o.bd_method;
    std::printf("BD-rate (test vs anchor): %+.3f%%\n", bd);
  }
  if (out.empty()) raise(ErrorKind::UsageError, "nothing to evaluate; pass --predictions or RD curves");
  write_text_file(o.output, out.dump(2) + "\n");
  std::printf("metrics -> %s\n", o.output.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// importance

struct ImportanceOpts {
  std::string model;
  std::string manifest;
  std::string method = "permutation";
  std::string output;
};

int run_importance(const ImportanceOpts& o, const RunConfig& cfg) {
  AnyModel any = load_model(o.model);
  const ForestModel* forest = std::get_if<ForestModel>(&any);
  if (!forest) raise(ErrorKind::UsageError, "importance needs a forest model");
  bool use_chroma = false;
  for (const auto& n : forest->feature_names)
    if (n == "E_U") use_chroma = true;

  Manifest m = load_manifest(o.manifest);
  auto corpus = load_corpus(o.manifest, m);
  TrainingMatrix val = pooled_matrix(corpus, forest->frame_type, use_chroma);

  ImportanceMethod method;
  if (o.method == "impurity") method = ImportanceMethod::Impurity;
  else if (o.method == "permutation") method = ImportanceMethod::Permutation;
  else raise(ErrorKind::UsageError, "unknown method '" + o.method + "' (impurity, permutation)");

  ImportanceReport rep = importance(*forest, val.x, val.y, method, cfg.seed);

  std::vector<size_t> order(rep.scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (rep.scores[a] != rep.scores[b]) return rep.scores[a] > rep.scores[b];
    return a < b;
  });
  for (size_t i : order)
    std::printf("%-8s %.4f\n", rep.feature_names[i].c_str(), rep.scores[i]);

  json j;
  j["method"] = o.method;
  j["frame_type"] = frame_type_name(forest->frame_type);
  j["features"] = rep.feature_names;
  j["scores"] = rep.scores;
  j["top_feature"] = rep.feature_names[rep.top_feature()];
  write_text_file(o.output, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOpts {
  std::string manifest;
  std::string log;
};

int run_calibrate(const CalibrateOpts& o, const RunConfig& cfg) {
  (void)cfg;
  std::vector<FrameCodingRecord> records;
  if (!o.log.empty()) {
    records = ingest_log(o.log);
  } else if (!o.manifest.empty()) {
    Manifest m = load_manifest(o.manifest);
    for (const auto& seq : load_corpus(o.manifest, m))
      records.insert(records.end(), seq.log.begin(), seq.log.end());
  } else {
    raise(ErrorKind::UsageError, "pass --log or --manifest");
  }
  double c = calibrate_c_low(records);
  std::printf("c_low = %.6f (fit over %zu log rows)\n", c, records.size());
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Top-level dispatch

int run_cli(int argc, char** argv) {
  Common common;

  // The config file must be applied before flag binding so that explicit
  // flags override it; scan for it ahead of the real parse.
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) common.config_path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) common.config_path = arg.substr(9);
  }
  if (!common.config_path.empty()) common.cfg.overlay_file(common.config_path);

  CLI::App app{"Frame-level bit prediction and two-pass rate control toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  auto* analyze = app.add_subcommand("analyze", "Extract per-frame texture features from raw YUV420p");
  AnalyzeOpts ao;
  analyze->add_option("--input", ao.input, "Raw YUV420p file")->required();
  analyze->add_option("--width", common.cfg.width, "Luma width");
  analyze->add_option("--height", common.cfg.height, "Luma height");
  analyze->add_option("--fps", common.cfg.frame_rate, "Frame rate");
  analyze->add_option("--block-size", common.cfg.block_size, "DCT block size");
  analyze->add_option("--gaps", common.cfg.gaps, "Temporal gaps")->delimiter(',');
  analyze->add_option("--weighting", [&](const CLI::results_t& r) {
    common.cfg.weighting = weighting_from_name(r[0]);
    return true;
  }, "AC weighting: hf-exp or uniform");
  analyze->add_option("--output", ao.output, "Feature CSV path")->required();
  add_common_flags(analyze, common);
  analyze->callback([&]() { rc = run_analyze(ao, common.cfg); });

  auto* gop = app.add_subcommand("gop", "Dump the hierarchical GOP structure");
  GopOpts go;
  gop->add_option("--frames", go.frames, "Frame count")->required();
  gop->add_option("--gop-size", common.cfg.gop.gop_size, "GOP size");
  gop->add_option("--intra-period", common.cfg.gop.intra_period, "Intra period");
  gop->add_option("--output", go.output, "Roles CSV path")->required();
  add_common_flags(gop, common);
  gop->callback([&]() { rc = run_gop(go, common.cfg); });

  auto* synth = app.add_subcommand("synth", "Generate a synthetic training corpus with oracle logs");
  SynthOpts so;
  synth->add_option("--outdir", so.outdir, "Output directory")->required();
  synth->add_option("--sequences", so.sequences, "Sequence count");
  synth->add_option("--frames", so.frames, "Frames per sequence");
  synth->add_option("--width", common.cfg.width, "Luma width");
  synth->add_option("--height", common.cfg.height, "Luma height");
  synth->add_option("--base-qps", so.base_qps, "Sweep base QPs")->delimiter(',');
  synth->add_option("--noise", common.cfg.oracle.noise, "Oracle noise amplitude in [0,1)");
  synth->add_flag("--emit-yuv", so.emit_yuv, "Also write raw .yuv files");
  add_common_flags(synth, common);
  synth->callback([&]() { rc = run_synth(so, common.cfg); });

  auto* train = app.add_subcommand("train", "Cross-validate and fit a bit predictor");
  TrainOpts to;
  train->add_option("--manifest", to.manifest, "Corpus manifest")->required();
  train->add_option("--frame-type", to.frame_type, "I, P, or B")->required();
  train->add_option("--model", to.model, "linear or forest");
  train->add_flag("--no-chroma", to.no_chroma, "Drop chroma feature columns");
  train->add_option("--folds", to.folds, "CV folds (0/1 skips CV)");
  train->add_option("--output", to.output, "Model JSON path")->required();
  train->add_option("--report", to.report, "CV report JSON path");
  train->add_option("--export-matrix", to.export_matrix, "Dump the pooled training matrix CSV");
  add_common_flags(train, common);
  train->callback([&]() { rc = run_train(to, common.cfg); });

  auto* predict = app.add_subcommand("predict", "Predict per-frame bits against a coding log");
  PredictOpts po;
  predict->add_option("--model", po.model, "Model JSON")->required();
  predict->add_option("--manifest", po.manifest, "Corpus manifest")->required();
  predict->add_option("--sequence", po.sequence, "Restrict to one sequence id");
  predict->add_option("--output", po.output, "Prediction CSV path")->required();
  add_common_flags(predict, common);
  predict->callback([&]() { rc = run_predict(po, common.cfg); });

  auto* sim = app.add_subcommand("simulate-rc", "Run the two-pass rate-control loop");
  SimulateOpts mo;
  sim->add_option("--manifest", mo.manifest, "Corpus manifest")->required();
  sim->add_option("--sequence", mo.sequence, "Sequence id (default: first)");
  sim->add_option("--model-i", mo.model_i, "I-frame model JSON")->required();
  sim->add_option("--model-p", mo.model_p, "P-frame model JSON")->required();
  sim->add_option("--model-b", mo.model_b, "B-frame model JSON")->required();
  sim->add_option("--target-bitrate", mo.target_bitrate, "Target bits per second")->required();
  sim->add_option("--frame-rate", mo.frame_rate, "Override manifest frame rate");
  auto* chigh = sim->add_option("--c-high", common.cfg.rc.c_high, "Refinement pull constant");
  sim->add_option("--height", mo.height_for_chigh, "Derive c_high from a display height");
  sim->add_option("--c-low", common.cfg.rc.c_low, "Refinement scale constant");
  sim->add_option("--q-start", common.cfg.rc.q_start, "Refinement pivot QP");
  sim->add_option("--strength", common.cfg.rc_strength, "Deficit feedback strength (0,1]");
  sim->add_flag("--per-frame", common.cfg.rc_per_frame, "Compensate per frame instead of per GOP");
  sim->add_option("--base-qp", mo.base_qp, "First-pass base QP (default: invert the backend)");
  sim->add_option("--backend", mo.backend, "oracle or replay");
  sim->add_option("--report", mo.report, "Session report JSON path")->required();
  add_common_flags(sim, common);
  sim->callback([&]() {
    mo.c_high_set = chigh->count() > 0;
    rc = run_simulate(mo, common.cfg);
  });

  auto* eval = app.add_subcommand("evaluate", "Compute MAPE/R2 and optional BD-rate");
  EvaluateOpts eo;
  eval->add_option("--predictions", eo.predictions, "Prediction CSV from `predict`");
  eval->add_option("--anchor-rd", eo.anchor_rd, "Anchor RD curve CSV (rate,quality)");
  eval->add_option("--test-rd", eo.test_rd, "Test RD curve CSV (rate,quality)");
  eval->add_option("--bd-method", eo.bd_method, "pchip or cubic");
  eval->add_option("--output", eo.output, "Metrics JSON path")->required();
  add_common_flags(eval, common);
  eval->callback([&]() { rc = run_evaluate(eo, common.cfg); });

  auto* imp = app.add_subcommand("importance", "Rank forest features by importance");
  ImportanceOpts io;
  imp->add_option("--model", io.model, "Forest model JSON")->required();
  imp->add_option("--manifest", io.manifest, "Validation corpus manifest")->required();
  imp->add_option("--method", io.method, "impurity or permutation");
  imp->add_option("--output", io.output, "Importance JSON path")->required();
  add_common_flags(imp, common);
  imp->callback([&]() { rc = run_importance(io, common.cfg); });

  auto* cal = app.add_subcommand("calibrate", "Fit c_low from logged (q, bits) pairs");
  CalibrateOpts co;
  cal->add_option("--manifest", co.manifest, "Corpus manifest");
  cal->add_option("--log", co.log, "Single coding log CSV");
  add_common_flags(cal, common);
  cal->callback([&]() { rc = run_calibrate(co, common.cfg); });

  auto* demo = app.add_subcommand("demo", "End-to-end synthetic pipeline demonstration");
  DemoOptions deo;
  demo->add_option("--outdir", deo.outdir, "Output directory")->required();
  demo->add_option("--sequences", deo.sequences, "Corpus size");
  demo->add_option("--frames", deo.frames, "Frames per training sequence");
  demo->add_option("--eval-frames", deo.eval_frames, "Frames in the held-out simulation sequence");
  demo->add_option("--width", deo.width, "Luma width");
  demo->add_option("--height", deo.height, "Luma height");
  demo->add_option("--noise", deo.noise, "Oracle noise amplitude");
  demo->add_option("--target-bitrate", deo.target_bitrate, "Simulation target (default: auto)");
  add_common_flags(demo, common);
  demo->callback([&]() { rc = run_demo(deo, common.cfg); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return rc;
}

}  // namespace framebits::cli
