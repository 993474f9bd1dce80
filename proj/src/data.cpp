#include "dann/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "dann/errors.hpp"

namespace dann {

namespace {

Rng stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{seed, stream, index};
  return Rng(seq);
}

std::vector<double> synthesize(const CorpusSpec& spec, std::uint8_t domain,
                               const ClassTemplate& cls, Rng& rng) {
  const double rate = static_cast<double>(spec.sample_rate);
  const std::size_t n = static_cast<std::size_t>(spec.utterance_seconds * rate);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  double f0 = spec.base_f0_hz * (1.0 + spec.f0_jitter * unit(rng));
  double tilt = spec.spectral_tilt;
  if (domain == 1) {
    f0 *= spec.f0_scale;
    tilt += spec.target_tilt;
  }
  const double nyq_margin = 0.45 * rate;

  struct Tone {
    double freq, amp, phase;
  };
  std::vector<Tone> tones;
  for (std::size_t h = 1; h * f0 < nyq_margin; ++h) {
    const double amp = std::exp(-tilt * static_cast<double>(h - 1)) /
                       static_cast<double>(h);
    tones.push_back({f0 * static_cast<double>(h), amp, phase(rng)});
  }
  for (double formant : cls.formants_hz) {
    const double freq = formant * (1.0 + 0.01 * unit(rng));
    if (freq >= nyq_margin) continue;
    tones.push_back({freq, 0.9 * (1.0 + 0.2 * unit(rng)), phase(rng)});
  }

  const double gain = 1.0 + 0.3 * unit(rng);
  std::vector<double> samples(n, 0.0);
  for (const Tone& tone : tones) {
    const double w = 2.0 * std::numbers::pi * tone.freq / rate;
    for (std::size_t t = 0; t < n; ++t)
      samples[t] += tone.amp * std::sin(w * static_cast<double>(t) + tone.phase);
  }
  const double noise = domain == 1 ? spec.noise_level : 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    samples[t] *= gain;
    if (noise > 0.0) samples[t] += noise * gauss(rng);
  }
  return samples;
}

void check_spec(const CorpusSpec& spec) {
  if (spec.classes.size() < 2) throw ArgumentError("corpus needs at least 2 classes");
  if (spec.sample_rate == 0) throw ArgumentError("sample_rate must be positive");
  if (!std::isfinite(spec.f0_scale) || !std::isfinite(spec.target_tilt) ||
      !std::isfinite(spec.noise_level)) {
    throw ArgumentError("domain shift parameters must be finite");
  }
  for (std::size_t a = 0; a < spec.classes.size(); ++a)
    for (std::size_t b = a + 1; b < spec.classes.size(); ++b)
      if (spec.classes[a].formants_hz == spec.classes[b].formants_hz)
        throw ArgumentError("class formant templates must be distinct");
}

}  // namespace

std::vector<ClassTemplate> default_class_templates(std::size_t num_classes,
                                                   std::uint32_t sample_rate) {
  if (num_classes < 2) throw ArgumentError("corpus needs at least 2 classes");
  const double lo = 0.08 * sample_rate;
  const double hi = 0.42 * sample_rate;
  const double band = (hi - lo) / static_cast<double>(num_classes);
  std::vector<ClassTemplate> out(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    // two tones inside the class band, offset so neighbours do not touch
    const double f1 = lo + band * (static_cast<double>(k) + 0.25);
    const double f2 = lo + band * (static_cast<double>(k) + 0.65);
    out[k].formants_hz = {f1, f2};
  }
  return out;
}

CorpusSplits generate_corpus(const CorpusSpec& spec) {
  check_spec(spec);
  const std::size_t num_classes = spec.classes.size();
  CorpusSplits out;
  out.sample_rate = spec.sample_rate;

  // stream ids: 0 source-train, 1 target-train, 2 source-eval, 3 target-eval
  auto emit = [&](std::uint8_t domain, std::uint64_t stream, std::size_t count,
                  bool keep_labels, std::vector<Utterance>& sink) {
    for (std::size_t i = 0; i < count; ++i) {
      const int cls = static_cast<int>(i % num_classes);  // balanced within +-1
      Rng rng = stream_rng(spec.seed, stream, i);
      Utterance utt;
      utt.domain = domain;
      utt.class_label = keep_labels ? cls : kAbsentLabel;
      utt.samples = synthesize(spec, domain, spec.classes[static_cast<std::size_t>(cls)], rng);
      sink.push_back(std::move(utt));
    }
  };

  emit(0, 0, spec.train_per_domain, true, out.train);
  emit(1, 1, spec.train_per_domain, false, out.train);  // unlabeled target
  emit(0, 2, spec.eval_per_domain, true, out.eval);
  emit(1, 3, spec.eval_per_domain, true, out.eval);  // labels kept for scoring
  return out;
}

std::vector<Tensor> frame_signal(const std::vector<double>& samples,
                                 std::uint32_t sample_rate, double window_ms,
                                 double shift_ms, std::size_t context_frames) {
  const std::size_t window =
      static_cast<std::size_t>(std::lround(window_ms * sample_rate / 1000.0));
  const std::size_t shift =
      static_cast<std::size_t>(std::lround(shift_ms * sample_rate / 1000.0));
  if (window == 0 || shift == 0 || context_frames == 0) {
    throw ArgumentError("frame_signal: window, shift and context must be positive");
  }
  const std::size_t out_len = context_frames * window;

  std::vector<Tensor> out;
  if (samples.size() < window) return out;
  const std::size_t num_frames = (samples.size() - window) / shift + 1;
  const std::size_t left = (context_frames - 1) / 2;
  const std::size_t right = context_frames - 1 - left;
  for (std::size_t center = left; center + right < num_frames; ++center) {
    const std::size_t start = (center - left) * shift;
    if (start + out_len > samples.size()) break;
    Tensor frame({1, out_len});
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(start), out_len,
                frame.data.begin());
    out.push_back(std::move(frame));
  }
  return out;
}

std::pair<Tensor, NormStats> normalize(const Tensor& frames,
                                       const std::optional<NormStats>& stats) {
  if (frames.rank() != 2 || frames.dim(0) < 1) {
    throw DimensionError("normalize expects a non-empty [N x T] tensor");
  }
  const std::size_t n = frames.dim(0), width = frames.dim(1);

  NormStats used;
  if (stats.has_value()) {
    if (stats->mean.size() != width || stats->stddev.size() != width) {
      throw DimensionError("normalization stats width does not match frames");
    }
    used = *stats;
  } else {
    used.mean.assign(width, 0.0);
    used.stddev.assign(width, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < width; ++j) used.mean[j] += frames.at(i, j);
    for (std::size_t j = 0; j < width; ++j) used.mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < width; ++j) {
        const double d = frames.at(i, j) - used.mean[j];
        used.stddev[j] += d * d;
      }
    for (std::size_t j = 0; j < width; ++j)
      used.stddev[j] = std::sqrt(used.stddev[j] / static_cast<double>(n));
  }

  Tensor out(frames.shape);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < width; ++j)
      out.at(i, j) = (frames.at(i, j) - used.mean[j]) / std::max(used.stddev[j], 1e-8);
  return {std::move(out), std::move(used)};
}

namespace {

Tensor stack_frames(const std::vector<Tensor>& frames) {
  if (frames.empty()) throw ArgumentError("no frames produced; signals too short?");
  const std::size_t width = frames[0].dim(1);
  Tensor out({frames.size(), width});
  for (std::size_t i = 0; i < frames.size(); ++i)
    std::copy(frames[i].data.begin(), frames[i].data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(i * width));
  return out;
}

}  // namespace

Tensor source_frames(const std::vector<Utterance>& utterances,
                     std::uint32_t sample_rate, double window_ms,
                     std::size_t context_frames) {
  std::vector<Tensor> frames;
  for (const Utterance& utt : utterances) {
    if (utt.domain != 0) continue;
    for (Tensor& f : frame_signal(utt.samples, sample_rate, window_ms, window_ms,
                                  context_frames))
      frames.push_back(std::move(f));
  }
  return stack_frames(frames);
}

FrameSet build_frame_set(const std::vector<Utterance>& utterances,
                         std::uint32_t sample_rate, const NormStats& stats,
                         double window_ms, std::size_t context_frames) {
  std::vector<Tensor> frames;
  std::vector<int> labels;
  std::vector<std::uint8_t> domains;
  for (const Utterance& utt : utterances) {
    for (Tensor& f : frame_signal(utt.samples, sample_rate, window_ms, window_ms,
                                  context_frames)) {
      frames.push_back(std::move(f));
      labels.push_back(utt.class_label);
      domains.push_back(utt.domain);
    }
  }
  FrameSet set;
  set.frames = normalize(stack_frames(frames), stats).first;
  set.class_labels = std::move(labels);
  set.domain_labels = std::move(domains);
  return set;
}

// ------------------------------------------------------------- BatchStream

BatchStream::BatchStream(const FrameSet& source, const FrameSet& target,
                         std::size_t batch_size, std::uint64_t seed, BatchMode mode)
    : source_(source), target_(target), batch_size_(batch_size), mode_(mode), rng_(seed) {
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (source_.size() == 0) throw ArgumentError("source split is empty");
  for (std::uint8_t d : source_.domain_labels)
    if (d != 0) throw ArgumentError("source frame set contains target-domain frames");
  if (mode_ == BatchMode::Dann) {
    if (target_.size() == 0) throw ArgumentError("dann mode needs a target split");
    for (std::uint8_t d : target_.domain_labels)
      if (d != 1) throw ArgumentError("target frame set contains source-domain frames");
  }
  source_order_.resize(source_.size());
  for (std::size_t i = 0; i < source_order_.size(); ++i) source_order_[i] = i;
  target_order_.resize(target_.size());
  for (std::size_t i = 0; i < target_order_.size(); ++i) target_order_[i] = i;
  std::shuffle(source_order_.begin(), source_order_.end(), rng_);
  if (mode_ == BatchMode::Dann) std::shuffle(target_order_.begin(), target_order_.end(), rng_);
}

std::size_t BatchStream::draw(const FrameSet& set, std::vector<std::size_t>& order,
                              std::size_t& cursor) {
  if (cursor == order.size()) {
    std::shuffle(order.begin(), order.end(), rng_);
    cursor = 0;
  }
  return order[cursor++];
}

Batch BatchStream::next() {
  const std::size_t width = source_.frames.dim(1);
  const std::size_t from_source =
      mode_ == BatchMode::Dann ? (batch_size_ + 1) / 2 : batch_size_;
  const std::size_t from_target = mode_ == BatchMode::Dann ? batch_size_ / 2 : 0;

  Batch batch;
  batch.frames = Tensor({from_source + from_target, 1, width});
  auto put = [&](std::size_t row, const FrameSet& set, std::size_t idx) {
    std::copy_n(set.frames.data.begin() + static_cast<std::ptrdiff_t>(idx * width), width,
                batch.frames.data.begin() + static_cast<std::ptrdiff_t>(row * width));
    batch.class_labels.push_back(set.class_labels[idx]);
    batch.domain_labels.push_back(set.domain_labels[idx]);
  };
  for (std::size_t i = 0; i < from_source; ++i)
    put(i, source_, draw(source_, source_order_, source_cursor_));
  for (std::size_t i = 0; i < from_target; ++i)
    put(from_source + i, target_, draw(target_, target_order_, target_cursor_));
  return batch;
}

// ------------------------------------------------------------ file formats

namespace {

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!is) throw FormatError("truncated file: " + path);
  return value;
}

void write_magic(std::ostream& os, const char magic[4]) { os.write(magic, 4); }

void expect_magic(std::istream& is, const char magic[4], const std::string& path) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError("bad magic in " + path + ", expected " + std::string(magic, 4));
  }
}

}  // namespace

void save_corpus(const std::string& path, std::uint32_t sample_rate,
                 const std::vector<Utterance>& utterances) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_magic(os, "DCRP");
  write_pod<std::uint32_t>(os, kCorpusVersion);
  write_pod<std::uint32_t>(os, sample_rate);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(utterances.size()));
  for (const Utterance& utt : utterances) {
    write_pod<std::uint8_t>(os, utt.domain);
    write_pod<std::int32_t>(os, static_cast<std::int32_t>(utt.class_label));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(utt.samples.size()));
    for (double s : utt.samples) write_pod<float>(os, static_cast<float>(s));
  }
  if (!os) throw IoError("write failed: " + path);
}

std::pair<std::uint32_t, std::vector<Utterance>> load_corpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open corpus: " + path);
  expect_magic(is, "DCRP", path);
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != kCorpusVersion) {
    throw FormatError("corpus " + path + " has version " + std::to_string(version) +
                      ", expected " + std::to_string(kCorpusVersion));
  }
  const auto sample_rate = read_pod<std::uint32_t>(is, path);
  const auto count = read_pod<std::uint32_t>(is, path);
  std::vector<Utterance> utterances(count);
  for (Utterance& utt : utterances) {
    utt.domain = read_pod<std::uint8_t>(is, path);
    utt.class_label = static_cast<int>(read_pod<std::int32_t>(is, path));
    const auto n = read_pod<std::uint32_t>(is, path);
    utt.samples.resize(n);
    for (double& s : utt.samples) s = static_cast<double>(read_pod<float>(is, path));
  }
  return {sample_rate, std::move(utterances)};
}

void save_stats(const std::string& path, const NormStats& stats) {
  if (stats.mean.size() != stats.stddev.size())
    throw ArgumentError("stats mean/std lengths differ");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_magic(os, "DSTA");
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(stats.mean.size()));
  for (double v : stats.mean) write_pod<double>(os, v);
  for (double v : stats.stddev) write_pod<double>(os, v);
  if (!os) throw IoError("write failed: " + path);
}

NormStats load_stats(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open stats: " + path);
  expect_magic(is, "DSTA", path);
  const auto width = read_pod<std::uint32_t>(is, path);
  NormStats stats;
  stats.mean.resize(width);
  stats.stddev.resize(width);
  for (double& v : stats.mean) v = read_pod<double>(is, path);
  for (double& v : stats.stddev) v = read_pod<double>(is, path);
  return stats;
}

}  // namespace dann
