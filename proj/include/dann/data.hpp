#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dann/tensor.hpp"

namespace dann {

/// Class label sentinel for unlabeled (target-domain) data.
constexpr int kAbsentLabel = -1;

struct Utterance {
  std::vector<double> samples;
  int class_label = kAbsentLabel;  // kAbsentLabel iff unlabeled
  std::uint8_t domain = 0;         // 0 source, 1 target
};

struct Batch {
  Tensor frames;  // [B x 1 x T]
  std::vector<int> class_labels;          // kAbsentLabel where unlabeled
  std::vector<std::uint8_t> domain_labels;

  std::size_t size() const { return domain_labels.size(); }
};

struct ClassTemplate {
  std::vector<double> formants_hz;
};

/// Synthetic two-domain corpus: each utterance is a harmonic stack at a
/// per-utterance fundamental plus class-specific formant tones. Domain 1
/// applies a fundamental-frequency scale, extra spectral tilt, and
/// additive noise.
struct CorpusSpec {
  std::uint32_t sample_rate = 16000;
  std::vector<ClassTemplate> classes;

  double base_f0_hz = 120.0;
  double f0_jitter = 0.1;     // per-utterance relative F0 spread
  double spectral_tilt = 0.3; // shared harmonic rolloff per harmonic index

  // Domain-shift knobs, applied to domain 1 only.
  double f0_scale = 1.6;
  double target_tilt = 0.0;
  double noise_level = 0.0;

  std::size_t train_per_domain = 50;
  std::size_t eval_per_domain = 20;
  double utterance_seconds = 0.5;
  std::uint64_t seed = 1;
};

/// Evenly spread two-formant templates below 0.45 * sample_rate.
std::vector<ClassTemplate> default_class_templates(std::size_t num_classes,
                                                   std::uint32_t sample_rate);

struct CorpusSplits {
  std::uint32_t sample_rate;
  std::vector<Utterance> train;  // source (labeled) + target (unlabeled)
  std::vector<Utterance> eval;   // both domains, labels kept for scoring
};

CorpusSplits generate_corpus(const CorpusSpec& spec);

/// Slices a signal into context windows: non-overlapping rectangular
/// frames of window_ms, each output covering context_frames consecutive
/// frames centered on one frame. Returns one [1 x T] tensor per fully
/// covered center frame; empty when the signal is too short.
std::vector<Tensor> frame_signal(const std::vector<double>& samples,
                                 std::uint32_t sample_rate, double window_ms = 10.0,
                                 double shift_ms = 10.0, std::size_t context_frames = 31);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Per-dimension (x - mean) / max(std, 1e-8) over [N x T]. With no stats
/// given they are computed from the frames and returned for reuse.
std::pair<Tensor, NormStats> normalize(const Tensor& frames,
                                       const std::optional<NormStats>& stats);

/// Frames with per-frame labels, ready for batching.
struct FrameSet {
  Tensor frames;  // [N x T]
  std::vector<int> class_labels;
  std::vector<std::uint8_t> domain_labels;

  std::size_t size() const { return domain_labels.size(); }
};

/// Frames every utterance and applies the given normalization stats.
FrameSet build_frame_set(const std::vector<Utterance>& utterances,
                         std::uint32_t sample_rate, const NormStats& stats,
                         double window_ms, std::size_t context_frames);

/// Raw (unnormalized) frames of the source-domain utterances only; used
/// to fit NormStats.
Tensor source_frames(const std::vector<Utterance>& utterances,
                     std::uint32_t sample_rate, double window_ms,
                     std::size_t context_frames);

enum class BatchMode { Baseline, Dann };

/// Cyclic batch stream. Dann mode: ceil(B/2) source + floor(B/2) target
/// per batch, each half reshuffled per epoch. Baseline mode: source only.
class BatchStream {
 public:
  BatchStream(const FrameSet& source, const FrameSet& target, std::size_t batch_size,
              std::uint64_t seed, BatchMode mode);

  Batch next();

 private:
  std::size_t draw(const FrameSet& set, std::vector<std::size_t>& order,
                   std::size_t& cursor);

  const FrameSet& source_;
  const FrameSet& target_;
  std::size_t batch_size_;
  BatchMode mode_;
  Rng rng_;
  std::vector<std::size_t> source_order_;
  std::vector<std::size_t> target_order_;
  std::size_t source_cursor_ = 0;
  std::size_t target_cursor_ = 0;
};

// ------------------------------------------------------------ file formats

/// Corpus container: magic "DCRP", version, sample rate, then per
/// utterance domain/class/length and float32 samples.
constexpr std::uint32_t kCorpusVersion = 1;

void save_corpus(const std::string& path, std::uint32_t sample_rate,
                 const std::vector<Utterance>& utterances);
std::pair<std::uint32_t, std::vector<Utterance>> load_corpus(const std::string& path);

void save_stats(const std::string& path, const NormStats& stats);
NormStats load_stats(const std::string& path);

}  // namespace dann
