#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "framebits/complexity.hpp"
#include "framebits/dataset.hpp"
#include "framebits/gop.hpp"
#include "framebits/models.hpp"
#include "framebits/ratecontrol.hpp"

namespace framebits {

// Every tunable of the pipeline in one declarative document. Commands start
// from defaults, overlay an optional JSON config file (unknown keys are
// rejected), then apply explicit CLI flags; the fully resolved result is
// written next to the outputs so any run can be replayed from its snapshot.
struct RunConfig {
  int width = 0;
  int height = 0;
  double frame_rate = 30.0;

  int block_size = 32;
  std::vector<int> gaps = {1, 2, 4, 8, 16, 32};
  AcWeighting weighting = AcWeighting::HighFrequencyExponential;

  GopConfig gop;
  ForestHyperparams forest;
  SyntheticOracleParams oracle;

  RcConstants rc;
  double rc_strength = 1.0;
  bool rc_per_frame = false;

  uint64_t seed = 0;
  int threads = 1;

  AnalyzerConfig analyzer_config() const;

  // Strict parse: any key the schema does not define is an error.
  static RunConfig load(const std::string& path);
  void overlay_file(const std::string& path);

  std::string to_json_string() const;
  void save_snapshot(const std::string& path) const;
};

const char* weighting_name(AcWeighting w);
AcWeighting weighting_from_name(const std::string& s);

}  // namespace framebits
