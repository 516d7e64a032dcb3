#pragma once

#include <string>
#include <vector>

#include "framebits/config.hpp"
#include "framebits/evaluation.hpp"

namespace framebits::cli {

// Corpus manifest written by `synth` and consumed by the training and
// simulation commands. File paths inside are relative to the manifest.
struct Manifest {
  int width = 0;
  int height = 0;
  double frame_rate = 30.0;
  GopConfig gop;

  struct Entry {
    std::string id;
    int64_t frames = 0;
    std::string features;
    std::string log;  // empty when no coding log exists
  };
  std::vector<Entry> entries;
};

Manifest load_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& m);
std::vector<SequenceData> load_corpus(const std::string& manifest_path, const Manifest& m);

struct DemoOptions {
  std::string outdir;
  int sequences = 12;
  int frames = 97;
  int width = 96;
  int height = 64;
  int eval_frames = 321;
  double noise = 0.1;
  double target_bitrate = 0.0;  // 0 picks a mid-sweep rate automatically
};

int run_demo(const DemoOptions& opts, const RunConfig& cfg);

int run_cli(int argc, char** argv);

}  // namespace framebits::cli
