#include "dann/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dann/errors.hpp"
#include "dann/gradcheck.hpp"

namespace fs = std::filesystem;

namespace dann {

const char kMetricsHeader[] =
    "step,p,mu,lambda,label_loss,domain_loss_raw,domain_loss_scaled,"
    "source_train_acc,domain_acc";

// ----------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has non-numeric value '" + value + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v < 0.0 || v != std::floor(v)) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<ClassTemplate> parse_formants(const std::string& value) {
  // "700:1220;530:1840" -> two classes of two formants each
  std::vector<ClassTemplate> out;
  std::stringstream classes(value);
  std::string cls;
  while (std::getline(classes, cls, ';')) {
    cls = trim(cls);
    if (cls.empty()) continue;
    ClassTemplate tpl;
    std::stringstream tones(cls);
    std::string tone;
    while (std::getline(tones, tone, ':'))
      tpl.formants_hz.push_back(to_double("class_formants", trim(tone)));
    if (tpl.formants_hz.empty()) throw ConfigError("class_formants entry is empty");
    out.push_back(std::move(tpl));
  }
  return out;
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::size_t ExperimentConfig::frame_samples() const {
  const auto window = static_cast<std::size_t>(
      std::lround(window_ms * corpus.sample_rate / 1000.0));
  return context_frames * window;
}

void ExperimentConfig::finalize() {
  if (corpus.classes.empty())
    corpus.classes = default_class_templates(arch.num_classes, corpus.sample_rate);
  arch.num_classes = corpus.classes.size();
  arch.input_length = frame_samples();
  arch.validate();
  train.validate();
  if (log_interval < 1) throw ConfigError("log_interval must be >= 1");
}

ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  std::size_t num_classes = 0;
  for (const auto& [key, value] : kv) {
    if (key == "sample_rate") cfg.corpus.sample_rate = static_cast<std::uint32_t>(to_uint(key, value));
    else if (key == "num_classes") num_classes = to_uint(key, value);
    else if (key == "class_formants") cfg.corpus.classes = parse_formants(value);
    else if (key == "base_f0_hz") cfg.corpus.base_f0_hz = to_double(key, value);
    else if (key == "f0_jitter") cfg.corpus.f0_jitter = to_double(key, value);
    else if (key == "spectral_tilt") cfg.corpus.spectral_tilt = to_double(key, value);
    else if (key == "f0_scale") cfg.corpus.f0_scale = to_double(key, value);
    else if (key == "target_tilt") cfg.corpus.target_tilt = to_double(key, value);
    else if (key == "noise_level") cfg.corpus.noise_level = to_double(key, value);
    else if (key == "train_per_domain") cfg.corpus.train_per_domain = to_uint(key, value);
    else if (key == "eval_per_domain") cfg.corpus.eval_per_domain = to_uint(key, value);
    else if (key == "utterance_seconds") cfg.corpus.utterance_seconds = to_double(key, value);
    else if (key == "window_ms") cfg.window_ms = to_double(key, value);
    else if (key == "context_frames") cfg.context_frames = to_uint(key, value);
    else if (key == "conv1_width") cfg.arch.conv1_width = to_uint(key, value);
    else if (key == "conv1_maps") cfg.arch.conv1_maps = to_uint(key, value);
    else if (key == "conv1_stride") cfg.arch.conv1_stride = to_uint(key, value);
    else if (key == "conv2_width") cfg.arch.conv2_width = to_uint(key, value);
    else if (key == "conv2_maps") cfg.arch.conv2_maps = to_uint(key, value);
    else if (key == "conv2_stride") cfg.arch.conv2_stride = to_uint(key, value);
    else if (key == "pool") cfg.arch.pool = to_uint(key, value);
    else if (key == "head_depth") cfg.arch.head_depth = to_uint(key, value);
    else if (key == "head_width") cfg.arch.head_width = to_uint(key, value);
    else if (key == "mu0") cfg.train.mu0 = to_double(key, value);
    else if (key == "alpha") cfg.train.alpha = to_double(key, value);
    else if (key == "beta") cfg.train.beta = to_double(key, value);
    else if (key == "gamma") cfg.train.gamma = to_double(key, value);
    else if (key == "momentum") cfg.train.momentum = to_double(key, value);
    else if (key == "flip_prob") cfg.train.flip_prob = to_double(key, value);
    else if (key == "total_steps") cfg.train.total_steps = to_uint(key, value);
    else if (key == "batch_size") cfg.train.batch_size = to_uint(key, value);
    else if (key == "lambda_override") cfg.train.lambda_override = to_double(key, value);
    else if (key == "log_interval") cfg.log_interval = to_uint(key, value);
    else if (key == "seed") {
      cfg.train.seed = to_uint(key, value);
      cfg.corpus.seed = cfg.train.seed;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (num_classes != 0) {
    if (!cfg.corpus.classes.empty() && cfg.corpus.classes.size() != num_classes)
      throw ConfigError("num_classes disagrees with class_formants");
    cfg.arch.num_classes = num_classes;
  } else if (!cfg.corpus.classes.empty()) {
    cfg.arch.num_classes = cfg.corpus.classes.size();
  }
  cfg.finalize();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return from_map(kv);
}

// ------------------------------------------------------------- checkpoint

std::vector<NamedTensor> checkpoint_tensors(DannModel& model, const NormStats& stats,
                                            double window_ms, std::size_t context_frames) {
  const ArchConfig& a = model.config();
  std::vector<NamedTensor> out;
  out.push_back({"arch", Tensor({11}, {static_cast<double>(a.input_length),
                                       static_cast<double>(a.conv1_width),
                                       static_cast<double>(a.conv1_maps),
                                       static_cast<double>(a.conv1_stride),
                                       static_cast<double>(a.conv2_width),
                                       static_cast<double>(a.conv2_maps),
                                       static_cast<double>(a.conv2_stride),
                                       static_cast<double>(a.pool),
                                       static_cast<double>(a.head_depth),
                                       static_cast<double>(a.head_width),
                                       static_cast<double>(a.num_classes)})});
  out.push_back({"framing", Tensor({2}, {window_ms, static_cast<double>(context_frames)})});
  out.push_back({"norm.mean", Tensor({stats.mean.size()}, stats.mean)});
  out.push_back({"norm.std", Tensor({stats.stddev.size()}, stats.stddev)});
  for (const ParamRef& p : model.all_params()) out.push_back({p.name, *p.value});
  return out;
}

LoadedModel parse_checkpoint(const std::string& path) {
  std::vector<NamedTensor> tensors = load_checkpoint(path);
  LoadedModel loaded;
  bool have_arch = false, have_framing = false, have_mean = false, have_std = false;
  for (NamedTensor& t : tensors) {
    if (t.name == "arch") {
      if (t.value.numel() != 11) throw FormatError("checkpoint arch tensor malformed");
      const auto& d = t.value.data;
      loaded.arch.input_length = static_cast<std::size_t>(d[0]);
      loaded.arch.conv1_width = static_cast<std::size_t>(d[1]);
      loaded.arch.conv1_maps = static_cast<std::size_t>(d[2]);
      loaded.arch.conv1_stride = static_cast<std::size_t>(d[3]);
      loaded.arch.conv2_width = static_cast<std::size_t>(d[4]);
      loaded.arch.conv2_maps = static_cast<std::size_t>(d[5]);
      loaded.arch.conv2_stride = static_cast<std::size_t>(d[6]);
      loaded.arch.pool = static_cast<std::size_t>(d[7]);
      loaded.arch.head_depth = static_cast<std::size_t>(d[8]);
      loaded.arch.head_width = static_cast<std::size_t>(d[9]);
      loaded.arch.num_classes = static_cast<std::size_t>(d[10]);
      have_arch = true;
    } else if (t.name == "framing") {
      if (t.value.numel() != 2) throw FormatError("checkpoint framing tensor malformed");
      loaded.window_ms = t.value.data[0];
      loaded.context_frames = static_cast<std::size_t>(t.value.data[1]);
      have_framing = true;
    } else if (t.name == "norm.mean") {
      loaded.stats.mean = t.value.data;
      have_mean = true;
    } else if (t.name == "norm.std") {
      loaded.stats.stddev = t.value.data;
      have_std = true;
    } else {
      loaded.weights.push_back(std::move(t));
    }
  }
  if (!have_arch || !have_framing || !have_mean || !have_std) {
    throw FormatError("checkpoint " + path + " is missing metadata tensors");
  }
  return loaded;
}

void apply_weights(DannModel& model, const std::vector<NamedTensor>& weights) {
  std::map<std::string, ParamRef> by_name;
  for (ParamRef& p : model.all_params()) by_name.emplace(p.name, p);
  if (weights.size() != by_name.size())
    throw FormatError("checkpoint holds " + std::to_string(weights.size()) +
                      " weight tensors, model expects " + std::to_string(by_name.size()));
  for (const NamedTensor& w : weights) {
    auto it = by_name.find(w.name);
    if (it == by_name.end()) throw FormatError("unexpected checkpoint tensor " + w.name);
    if (!it->second.value->same_shape(w.value)) {
      throw ConfigError("checkpoint tensor " + w.name + " has shape " +
                        shape_to_string(w.value.shape) + ", model expects " +
                        shape_to_string(it->second.value->shape));
    }
    *it->second.value = w.value;
  }
}

// ------------------------------------------------------------ evaluation

EvalReport evaluate_frames(DannModel& model, const FrameSet& frames,
                           std::size_t eval_batch) {
  EvalReport report;
  std::size_t source_hits = 0, target_hits = 0;
  const std::size_t width = frames.frames.dim(1);
  for (std::size_t start = 0; start < frames.size(); start += eval_batch) {
    const std::size_t n = std::min(eval_batch, frames.size() - start);
    Tensor x({n, 1, width});
    std::copy_n(frames.frames.data.begin() + static_cast<std::ptrdiff_t>(start * width),
                n * width, x.data.begin());
    const std::vector<int> pred = model.predict(x);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t row = start + i;
      if (frames.class_labels[row] == kAbsentLabel) continue;
      const bool hit = pred[i] == frames.class_labels[row];
      if (frames.domain_labels[row] == 0) {
        ++report.source_frames;
        source_hits += hit;
      } else {
        ++report.target_frames;
        target_hits += hit;
      }
    }
  }
  if (report.source_frames)
    report.source_acc = static_cast<double>(source_hits) / static_cast<double>(report.source_frames);
  if (report.target_frames)
    report.target_acc = static_cast<double>(target_hits) / static_cast<double>(report.target_frames);
  return report;
}

namespace {

struct CorpusOnDisk {
  std::uint32_t sample_rate;
  std::vector<Utterance> utterances;
};

CorpusOnDisk load_split(const std::string& corpus_dir, const std::string& split) {
  if (split != "train" && split != "eval")
    throw ArgumentError("split must be 'train' or 'eval', got '" + split + "'");
  auto [rate, utts] = load_corpus((fs::path(corpus_dir) / (split + ".dcrp")).string());
  return {rate, std::move(utts)};
}

std::vector<Utterance> filter_domain(const std::vector<Utterance>& utts, std::uint8_t domain) {
  std::vector<Utterance> out;
  for (const Utterance& u : utts)
    if (u.domain == domain) out.push_back(u);
  return out;
}

}  // namespace

// -------------------------------------------------------------- commands

void cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir,
                  std::ostream& out) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  CorpusSplits splits = generate_corpus(cfg.corpus);
  const Tensor raw = source_frames(splits.train, splits.sample_rate, cfg.window_ms,
                                   cfg.context_frames);
  const NormStats stats = normalize(raw, std::nullopt).second;

  save_corpus((fs::path(out_dir) / "train.dcrp").string(), splits.sample_rate, splits.train);
  save_corpus((fs::path(out_dir) / "eval.dcrp").string(), splits.sample_rate, splits.eval);
  save_stats((fs::path(out_dir) / "stats.dsta").string(), stats);

  out << "corpus written to " << out_dir << "\n"
      << "  train utterances: " << splits.train.size() << " (half per domain)\n"
      << "  eval utterances:  " << splits.eval.size() << "\n"
      << "  frame length:     " << stats.mean.size() << " samples\n";
}

void cmd_train(const ExperimentConfig& cfg, const std::string& corpus_dir, TrainMode mode,
               const std::string& out_dir, std::ostream& out) {
  CorpusOnDisk corpus = load_split(corpus_dir, "train");
  if (corpus.sample_rate != cfg.corpus.sample_rate) {
    throw ConfigError("corpus sample rate " + std::to_string(corpus.sample_rate) +
                      " does not match config " + std::to_string(cfg.corpus.sample_rate));
  }

  NormStats stats;
  const fs::path stats_path = fs::path(corpus_dir) / "stats.dsta";
  if (fs::exists(stats_path)) {
    stats = load_stats(stats_path.string());
  } else {
    stats = normalize(source_frames(corpus.utterances, corpus.sample_rate, cfg.window_ms,
                                    cfg.context_frames),
                      std::nullopt)
                .second;
  }
  if (stats.mean.size() != cfg.frame_samples()) {
    throw ConfigError("corpus frame length " + std::to_string(stats.mean.size()) +
                      " does not match configured " + std::to_string(cfg.frame_samples()));
  }

  const FrameSet source = build_frame_set(filter_domain(corpus.utterances, 0),
                                          corpus.sample_rate, stats, cfg.window_ms,
                                          cfg.context_frames);
  FrameSet target;
  if (mode == TrainMode::Dann) {
    target = build_frame_set(filter_domain(corpus.utterances, 1), corpus.sample_rate,
                             stats, cfg.window_ms, cfg.context_frames);
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  DannModel model(cfg.arch, cfg.train.seed);
  Trainer trainer(model, cfg.train, mode);
  BatchStream batches(source, target, cfg.train.batch_size, cfg.train.seed * 7919 + 1,
                      mode == TrainMode::Dann ? BatchMode::Dann : BatchMode::Baseline);

  std::ofstream csv((fs::path(out_dir) / "metrics.csv").string());
  if (!csv) throw IoError("cannot write metrics in " + out_dir);
  csv << kMetricsHeader << "\n";

  for (std::size_t step = 0; step < cfg.train.total_steps; ++step) {
    const StepMetrics m = trainer.train_step(batches.next(), step);
    if (!std::isfinite(m.label_loss) || !std::isfinite(m.domain_loss_raw)) {
      throw NumericalError("non-finite loss at step " + std::to_string(step));
    }
    if (step % cfg.log_interval == 0) {
      csv << step << "," << fmt_g17(m.p) << "," << fmt_g17(m.mu) << ",";
      if (mode == TrainMode::Dann) {
        csv << fmt_g17(m.lambda) << "," << fmt_g17(m.label_loss) << ","
            << fmt_g17(m.domain_loss_raw) << "," << fmt_g17(m.domain_loss_scaled) << ","
            << fmt_g17(m.source_train_acc) << "," << fmt_g17(m.domain_acc) << "\n";
      } else {
        csv << "," << fmt_g17(m.label_loss) << ",,," << fmt_g17(m.source_train_acc)
            << ",\n";
      }
    }
  }
  csv.close();
  if (!csv) throw IoError("metrics write failed in " + out_dir);

  save_checkpoint((fs::path(out_dir) / "checkpoint.dann").string(),
                  checkpoint_tensors(model, stats, cfg.window_ms, cfg.context_frames));
  out << "trained " << cfg.train.total_steps << " steps ("
      << (mode == TrainMode::Dann ? "dann" : "baseline") << "); artifacts in " << out_dir
      << "\n";
}

EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& corpus_dir,
                    const std::string& split, std::ostream& out) {
  LoadedModel loaded = parse_checkpoint(checkpoint_path);
  CorpusOnDisk corpus = load_split(corpus_dir, split);

  const auto window = static_cast<std::size_t>(
      std::lround(loaded.window_ms * corpus.sample_rate / 1000.0));
  if (loaded.context_frames * window != loaded.arch.input_length ||
      loaded.stats.mean.size() != loaded.arch.input_length) {
    throw ConfigError("checkpoint input length " + std::to_string(loaded.arch.input_length) +
                      " does not match corpus framing");
  }

  DannModel model(loaded.arch, 0);
  apply_weights(model, loaded.weights);

  const FrameSet frames = build_frame_set(corpus.utterances, corpus.sample_rate,
                                          loaded.stats, loaded.window_ms,
                                          loaded.context_frames);
  const EvalReport report = evaluate_frames(model, frames);
  out << "source accuracy: " << fmt_g17(report.source_acc) << " ("
      << report.source_frames << " frames)\n"
      << "target accuracy: " << fmt_g17(report.target_acc) << " ("
      << report.target_frames << " frames)\n";
  return report;
}

bool cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  bool all_pass = true;
  for (const GradCheckEntry& e : run_gradcheck_suite(seed)) {
    out << e.name << ": worst relative error " << fmt_g17(e.worst_rel_err) << " "
        << (e.pass ? "PASS" : "FAIL") << "\n";
    all_pass = all_pass && e.pass;
  }
  return all_pass;
}

CompareReport cmd_compare(const std::string& baseline_ckpt, const std::string& dann_ckpt,
                          const std::string& corpus_dir, std::ostream& out) {
  LoadedModel base = parse_checkpoint(baseline_ckpt);
  LoadedModel adapted = parse_checkpoint(dann_ckpt);
  if (base.arch.input_length != adapted.arch.input_length ||
      base.arch.num_classes != adapted.arch.num_classes ||
      base.arch.conv1_maps != adapted.arch.conv1_maps ||
      base.arch.conv2_maps != adapted.arch.conv2_maps ||
      base.arch.head_depth != adapted.arch.head_depth ||
      base.arch.head_width != adapted.arch.head_width) {
    throw ConfigError("checkpoints were trained with different architectures");
  }

  CorpusOnDisk corpus = load_split(corpus_dir, "eval");
  CompareReport report;
  auto eval_one = [&](LoadedModel& loaded) {
    DannModel model(loaded.arch, 0);
    apply_weights(model, loaded.weights);
    const FrameSet frames = build_frame_set(corpus.utterances, corpus.sample_rate,
                                            loaded.stats, loaded.window_ms,
                                            loaded.context_frames);
    return evaluate_frames(model, frames);
  };
  report.baseline = eval_one(base);
  report.dann = eval_one(adapted);
  report.target_delta = report.dann.target_acc - report.baseline.target_acc;

  out << "model      source_acc  target_acc\n"
      << "baseline   " << fmt_g17(report.baseline.source_acc) << "  "
      << fmt_g17(report.baseline.target_acc) << "\n"
      << "dann       " << fmt_g17(report.dann.source_acc) << "  "
      << fmt_g17(report.dann.target_acc) << "\n"
      << "target-domain delta (dann - baseline): " << fmt_g17(report.target_delta) << "\n";
  return report;
}

}  // namespace dann
