#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <memory>

#include "framebits/metrics.hpp"
#include "framebits/ratecontrol.hpp"
#include "framebits/rng.hpp"

namespace framebits::cli {

namespace fs = std::filesystem;

namespace {

struct SessionSummary {
  double target_rate = 0.0;
  RcSessionReport report;
  double mean_qp = 0.0;
};

double mean_second_pass_qp(const RcSessionReport& rep) {
  double s = 0.0;
  for (const auto& d : rep.decisions) s += d.q_prime;
  return s / static_cast<double>(rep.decisions.size());
}

// Stand-in quality score for the synthetic encoder: linear in mean QP, which
// is the right shape for BD comparisons even without a real decoder.
double quality_proxy(double mean_qp) { return 60.0 - 0.6 * mean_qp; }

}  // namespace

int run_demo(const DemoOptions& opts, const RunConfig& base_cfg) {
  RunConfig cfg = base_cfg;
  cfg.width = opts.width;
  cfg.height = opts.height;
  cfg.oracle.noise = opts.noise;
  fs::create_directories(opts.outdir);

  CorpusSpec spec;
  spec.sequences = opts.sequences;
  spec.frames = opts.frames;
  spec.width = opts.width;
  spec.height = opts.height;
  spec.seed = cfg.seed;
  spec.gop = cfg.gop;
  spec.oracle = cfg.oracle;
  spec.analyzer = cfg.analyzer_config();

  std::printf("== corpus ==\n");
  std::printf("generating %d sequences of %d frames at %dx%d, oracle noise %.2f\n", spec.sequences,
              spec.frames, spec.width, spec.height, spec.oracle.noise);
  auto corpus = build_synthetic_corpus(spec);

  Manifest m;
  m.width = spec.width;
  m.height = spec.height;
  m.frame_rate = cfg.frame_rate;
  m.gop = cfg.gop;
  fs::path corpus_dir = fs::path(opts.outdir) / "corpus";
  fs::create_directories(corpus_dir);
  for (const auto& seq : corpus) {
    write_features_csv((corpus_dir / (seq.id + ".features.csv")).string(), seq.features);
    write_log_csv((corpus_dir / (seq.id + ".log.csv")).string(), seq.log);
    m.entries.push_back({seq.id, static_cast<int64_t>(seq.features.size()),
                         seq.id + ".features.csv", seq.id + ".log.csv"});
  }
  write_manifest((corpus_dir / "manifest.json").string(), m);

  int folds = std::min(5, opts.sequences);
  std::printf("\n== model comparison (%d-fold CV over sequences) ==\n", folds);
  std::printf("%-5s %-8s %-12s %10s %10s\n", "type", "model", "chroma", "MAPE%", "R2");
  const FrameType types[] = {FrameType::I, FrameType::P, FrameType::B};
  for (FrameType type : types) {
    for (ModelKind kind : {ModelKind::Linear, ModelKind::Forest}) {
      for (bool use_chroma : {true, false}) {
        CvResult cv =
            cross_validate(corpus, type, kind, use_chroma, folds, cfg.forest, cfg.seed, cfg.threads);
        std::printf("%-5s %-8s %-12s %10.2f %10.4f\n", frame_type_name(type),
                    model_kind_name(kind), use_chroma ? "with" : "without", cv.mean_mape,
                    cv.mean_r2);
      }
    }
  }

  std::printf("\n== final forest models ==\n");
  PredictorSet models;
  fs::path model_dir = fs::path(opts.outdir) / "models";
  fs::create_directories(model_dir);
  for (FrameType type : types) {
    AnyModel model =
        train_pooled(corpus, type, ModelKind::Forest, true, cfg.forest, cfg.seed, cfg.threads);
    std::string path = (model_dir / (std::string(frame_type_name(type)) + ".model.json")).string();
    save_model(model, path);
    std::printf("%s model -> %s\n", frame_type_name(type), path.c_str());
    if (type == FrameType::I) models.i_model = std::move(model);
    else if (type == FrameType::P) models.p_model = std::move(model);
    else models.b_model = std::move(model);
  }

  std::printf("\n== feature importance (permutation, validation = training pool) ==\n");
  for (FrameType type : types) {
    const ForestModel& forest = std::get<ForestModel>(
        type == FrameType::I ? models.i_model
                             : (type == FrameType::P ? models.p_model : models.b_model));
    TrainingMatrix val = pooled_matrix(corpus, type, true);
    ImportanceReport rep =
        importance(forest, val.x, val.y, ImportanceMethod::Permutation, cfg.seed);
    std::printf("%s: top feature %s  (", frame_type_name(type),
                rep.feature_names[rep.top_feature()].c_str());
    for (size_t i = 0; i < rep.scores.size(); ++i)
      std::printf("%s%s=%.3f", i ? ", " : "", rep.feature_names[i].c_str(), rep.scores[i]);
    std::printf(")\n");
  }

  // Held-out sequence: one index past the training draw, so its texture
  // parameters and oracle noise stream are unseen by every model above.
  CorpusSpec eval_spec = spec;
  eval_spec.frames = opts.eval_frames;
  uint64_t eval_index = static_cast<uint64_t>(spec.sequences);
  SequenceData eval_seq = build_synthetic_sequence(eval_spec, eval_index);
  SyntheticOracleParams eval_oracle = cfg.oracle;
  eval_oracle.seed = mix_seed(cfg.oracle.seed, eval_index);
  OracleBackend backend(eval_oracle, eval_seq.features);

  std::printf("\n== two-pass rate control on a held-out %d-frame sequence ==\n", opts.eval_frames);
  const int anchor_bases[] = {44, 36, 28, 20};  // low rate to high rate
  std::vector<RdPoint> anchor_rd, test_rd;
  double frames_per_second = cfg.frame_rate;
  double seconds = static_cast<double>(opts.eval_frames) / frames_per_second;
  std::vector<double> anchor_rates;
  for (int base : anchor_bases) {
    double total = 0.0, qp_sum = 0.0;
    bool interpolated = false;
    for (const auto& role : eval_seq.roles) {
      int q = first_pass_qp(cfg.gop, base, role);
      total += backend.bits_for(role, q, interpolated);
      qp_sum += q;
    }
    double rate = total / seconds;
    anchor_rates.push_back(rate);
    anchor_rd.push_back({rate, quality_proxy(qp_sum / static_cast<double>(opts.eval_frames))});
  }

  double headline_target = opts.target_bitrate > 0.0 ? opts.target_bitrate : anchor_rates[1];
  std::printf("%12s %12s %12s %10s %8s\n", "target b/s", "achieved", "deviation", "mean QP",
              "clamped");
  std::vector<SessionSummary> sessions;
  for (double rate : anchor_rates) {
    RcBehavior behavior;
    behavior.strength = cfg.rc_strength;
    behavior.per_frame_compensation = cfg.rc_per_frame;
    RcSessionReport rep = simulate_session(eval_seq.features, eval_seq.roles, models, rate,
                                           frames_per_second, cfg.rc, cfg.gop, backend, behavior);
    double mean_qp = mean_second_pass_qp(rep);
    std::printf("%12.0f %12.0f %+11.3f%% %10.2f %8lld\n", rate,
                rep.total_achieved_bits / seconds, rep.deviation_percent, mean_qp,
                static_cast<long long>(rep.clamped_frames));
    test_rd.push_back({rep.total_achieved_bits / seconds, quality_proxy(mean_qp)});
    sessions.push_back({rate, std::move(rep), mean_qp});
  }
  for (const auto& s : sessions)
    if (s.target_rate == headline_target)
      write_report_json((fs::path(opts.outdir) / "rc_session.json").string(), s.report);

  write_rd_csv((fs::path(opts.outdir) / "anchor_rd.csv").string(), anchor_rd);
  write_rd_csv((fs::path(opts.outdir) / "rc_rd.csv").string(), test_rd);
  double bd = bd_rate(anchor_rd, test_rd, BdMethod::MonotonePchip);
  std::printf("\nBD-rate of rate-controlled vs fixed-QP anchor: %+.3f%%\n", bd);

  cfg.save_snapshot((fs::path(opts.outdir) / "resolved_config.json").string());
  std::printf("artifacts in %s\n", opts.outdir.c_str());
  return 0;
}

}  // namespace framebits::cli
