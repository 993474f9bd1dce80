#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dann/checkpoint.hpp"
#include "dann/data.hpp"
#include "dann/model.hpp"
#include "dann/optim.hpp"

namespace dann {

/// Everything one experiment needs: corpus recipe, framing, architecture
/// and training schedule. Loaded from a flat `key = value` text file.
struct ExperimentConfig {
  CorpusSpec corpus;
  double window_ms = 10.0;
  std::size_t context_frames = 31;
  ArchConfig arch;  // input_length is derived, not a config key
  TrainConfig train;
  std::size_t log_interval = 10;

  std::size_t frame_samples() const;  // context_frames * window samples
  void finalize();                    // derive arch.input_length, validate

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_map(const std::map<std::string, std::string>& kv);
};

extern const char kMetricsHeader[];

struct EvalReport {
  double source_acc = 0.0;
  double target_acc = 0.0;
  std::size_t source_frames = 0;
  std::size_t target_frames = 0;
};

struct CompareReport {
  EvalReport baseline;
  EvalReport dann;
  double target_delta = 0.0;  // dann.target_acc - baseline.target_acc
};

// Commands. Each prints a human-readable report to `out` and writes any
// artifacts under the given directories. They throw on failure; the CLI
// maps exception types to exit codes.

void cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir,
                  std::ostream& out);

void cmd_train(const ExperimentConfig& cfg, const std::string& corpus_dir,
               TrainMode mode, const std::string& out_dir, std::ostream& out);

EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& corpus_dir,
                    const std::string& split, std::ostream& out);

/// Returns false when any layer fails the finite-difference check.
bool cmd_gradcheck(std::uint64_t seed, std::ostream& out);

CompareReport cmd_compare(const std::string& baseline_ckpt, const std::string& dann_ckpt,
                          const std::string& corpus_dir, std::ostream& out);

// Pieces shared with tests.

/// Model weights plus normalization stats and the architecture /
/// framing constants, in a fixed order.
std::vector<NamedTensor> checkpoint_tensors(DannModel& model, const NormStats& stats,
                                            double window_ms, std::size_t context_frames);

struct LoadedModel {
  ArchConfig arch;
  NormStats stats;
  double window_ms;
  std::size_t context_frames;
  std::vector<NamedTensor> weights;
};

LoadedModel parse_checkpoint(const std::string& path);
void apply_weights(DannModel& model, const std::vector<NamedTensor>& weights);

EvalReport evaluate_frames(DannModel& model, const FrameSet& frames,
                           std::size_t eval_batch = 64);

}  // namespace dann
