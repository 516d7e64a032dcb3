#include "framebits/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "framebits/errors.hpp"

namespace framebits {

using json = nlohmann::json;

const char* weighting_name(AcWeighting w) {
  return w == AcWeighting::HighFrequencyExponential ? "hf-exp" : "uniform";
}

AcWeighting weighting_from_name(const std::string& s) {
  if (s == "hf-exp") return AcWeighting::HighFrequencyExponential;
  if (s == "uniform") return AcWeighting::Uniform;
  raise(ErrorKind::InvalidConfig, "unknown weighting '" + s + "' (hf-exp, uniform)");
}

AnalyzerConfig RunConfig::analyzer_config() const {
  AnalyzerConfig cfg;
  cfg.block_size = block_size;
  cfg.gaps = std::set<int>(gaps.begin(), gaps.end());
  cfg.weighting = weighting;
  cfg.threads = threads;
  return cfg;
}

namespace {

// Rejects keys the schema does not define; typos in config files should fail
// loudly, not silently fall back to defaults.
void check_keys(const json& j, const std::string& scope, const std::set<std::string>& known) {
  if (!j.is_object()) raise(ErrorKind::InvalidConfig, scope + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (known.find(key) == known.end())
      raise(ErrorKind::InvalidConfig, "unknown config key '" + scope + key + "'");
  }
}

template <typename T>
void take(const json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const std::exception& e) {
    raise(ErrorKind::InvalidConfig, "config key '" + scope + key + "': " + e.what());
  }
}

void apply_coeffs(const json& j, const std::string& scope, OracleCoeffs& c) {
  check_keys(j, scope, {"alpha", "beta_e", "beta_h", "gamma"});
  take(j, "alpha", c.alpha, scope);
  take(j, "beta_e", c.beta_e, scope);
  take(j, "beta_h", c.beta_h, scope);
  take(j, "gamma", c.gamma, scope);
}

void apply_document(const json& j, RunConfig& cfg) {
  check_keys(j, "", {"width", "height", "frame_rate", "block_size", "gaps", "weighting", "gop",
                     "forest", "oracle", "rc", "seed", "threads"});
  take(j, "width", cfg.width, "");
  take(j, "height", cfg.height, "");
  take(j, "frame_rate", cfg.frame_rate, "");
  take(j, "block_size", cfg.block_size, "");
  take(j, "gaps", cfg.gaps, "");
  if (j.contains("weighting")) cfg.weighting = weighting_from_name(j.at("weighting").get<std::string>());
  if (j.contains("gop")) {
    const json& g = j.at("gop");
    check_keys(g, "gop.", {"gop_size", "intra_period", "level_qp_offsets"});
    take(g, "gop_size", cfg.gop.gop_size, "gop.");
    take(g, "intra_period", cfg.gop.intra_period, "gop.");
    take(g, "level_qp_offsets", cfg.gop.level_qp_offsets, "gop.");
  }
  if (j.contains("forest")) {
    const json& f = j.at("forest");
    check_keys(f, "forest.",
               {"n_estimators", "max_depth", "min_samples_split", "min_samples_leaf", "max_features"});
    take(f, "n_estimators", cfg.forest.n_estimators, "forest.");
    take(f, "max_depth", cfg.forest.max_depth, "forest.");
    take(f, "min_samples_split", cfg.forest.min_samples_split, "forest.");
    take(f, "min_samples_leaf", cfg.forest.min_samples_leaf, "forest.");
    take(f, "max_features", cfg.forest.max_features, "forest.");
  }
  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    check_keys(o, "oracle.", {"i", "p", "b", "noise", "seed"});
    if (o.contains("i")) apply_coeffs(o.at("i"), "oracle.i.", cfg.oracle.i_coeffs);
    if (o.contains("p")) apply_coeffs(o.at("p"), "oracle.p.", cfg.oracle.p_coeffs);
    if (o.contains("b")) apply_coeffs(o.at("b"), "oracle.b.", cfg.oracle.b_coeffs);
    take(o, "noise", cfg.oracle.noise, "oracle.");
    take(o, "seed", cfg.oracle.seed, "oracle.");
  }
  if (j.contains("rc")) {
    const json& r = j.at("rc");
    check_keys(r, "rc.", {"c_low", "c_high", "q_start", "strength", "per_frame"});
    take(r, "c_low", cfg.rc.c_low, "rc.");
    take(r, "c_high", cfg.rc.c_high, "rc.");
    take(r, "q_start", cfg.rc.q_start, "rc.");
    take(r, "strength", cfg.rc_strength, "rc.");
    take(r, "per_frame", cfg.rc_per_frame, "rc.");
  }
  take(j, "seed", cfg.seed, "");
  take(j, "threads", cfg.threads, "");
}

json coeffs_json(const OracleCoeffs& c) {
  return json{{"alpha", c.alpha}, {"beta_e", c.beta_e}, {"beta_h", c.beta_h}, {"gamma", c.gamma}};
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  RunConfig cfg;
  cfg.overlay_file(path);
  return cfg;
}

void RunConfig::overlay_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::FileNotFound, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const std::exception& e) {
    raise(ErrorKind::InvalidConfig, "config '" + path + "' is not valid JSON: " + e.what());
  }
  apply_document(j, *this);
}

std::string RunConfig::to_json_string() const {
  json j;
  j["width"] = width;
  j["height"] = height;
  j["frame_rate"] = frame_rate;
  j["block_size"] = block_size;
  j["gaps"] = gaps;
  j["weighting"] = weighting_name(weighting);
  j["gop"] = json{{"gop_size", gop.gop_size},
                  {"intra_period", gop.intra_period},
                  {"level_qp_offsets", gop.level_qp_offsets}};
  j["forest"] = json{{"n_estimators", forest.n_estimators},
                     {"max_depth", forest.max_depth},
                     {"min_samples_split", forest.min_samples_split},
                     {"min_samples_leaf", forest.min_samples_leaf},
                     {"max_features", forest.max_features}};
  j["oracle"] = json{{"i", coeffs_json(oracle.i_coeffs)},
                     {"p", coeffs_json(oracle.p_coeffs)},
                     {"b", coeffs_json(oracle.b_coeffs)},
                     {"noise", oracle.noise},
                     {"seed", oracle.seed}};
  j["rc"] = json{{"c_low", rc.c_low},
                 {"c_high", rc.c_high},
                 {"q_start", rc.q_start},
                 {"strength", rc_strength},
                 {"per_frame", rc_per_frame}};
  j["seed"] = seed;
  j["threads"] = threads;
  return j.dump(2);
}

void RunConfig::save_snapshot(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << to_json_string() << '\n';
  if (!out) raise(ErrorKind::IoError, "short write to '" + path + "'");
}

}  // namespace framebits
