// cli.cpp

// Copyright 2026  The derevb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "derevb/cli.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "derevb/analysis.hpp"
#include "derevb/checkpoint.hpp"
#include "derevb/errors.hpp"
#include "derevb/manifest.hpp"
#include "derevb/metrics.hpp"
#include "derevb/signal_model.hpp"
#include "derevb/table.hpp"
#include "derevb/waveform.hpp"

namespace derevb {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// worker pool

// Index-sharded fan-out: each index is processed exactly once and results
// are written to per-index slots, so the outcome is identical for any job
// count or interleaving.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  const int workers =
      std::max(1, std::min(jobs, static_cast<int>(std::min<std::size_t>(
                                     n, std::size_t{64}))));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int resolve_jobs(int jobs_flag) {
  if (jobs_flag > 0) return jobs_flag;
  if (const char* env = std::getenv("DEREVB_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw ConfigError("DEREVB_JOBS", "must be a positive integer, got '" +
                                           std::string(env) + "'");
    return static_cast<int>(v);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// config schema

void reject_unknown_keys(const json& j, const std::set<std::string>& keys,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!keys.count(key))
      throw ConfigError(where.empty() ? key : where + "." + key,
                        "unknown key (the schema rejects unrecognized "
                        "fields)");
  }
}

template <typename T>
void read_field(const json& j, const std::string& key, T& out,
                const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where.empty() ? key : where + "." + key, e.what());
  }
}

void apply_finalize(CliConfig& c) {
  const int freq = c.stft.n_bins - 1;
  c.s2s.freq_size = freq;
  c.ri2ri.freq_size = freq;
  if (c.training.crop_f <= 0) c.training.crop_f = freq;
  c.stft.validate();
  c.s2s.validate();
  c.ri2ri.validate();
}

}  // namespace

CliConfig default_cli_config() {
  CliConfig c;
  apply_finalize(c);
  return c;
}

CliConfig load_cli_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  reject_unknown_keys(j, {"version", "stft", "model", "training"}, "");
  if (!j.contains("version"))
    throw ConfigError("version", "missing (the schema is versioned)");
  int version = 0;
  read_field(j, "version", version, "");
  if (version != 1)
    throw ConfigError("version", "unsupported schema version " +
                                     std::to_string(version) +
                                     " (this build reads version 1)");

  CliConfig c;
  if (j.contains("stft")) {
    c.has_stft_section = true;
    const json& s = j.at("stft");
    if (!s.is_object()) throw ConfigError("stft", "expected an object");
    reject_unknown_keys(s, {"frame_len", "hop_len", "window"}, "stft");
    read_field(s, "frame_len", c.stft.frame_len, "stft");
    read_field(s, "hop_len", c.stft.hop_len, "stft");
    std::string window = "hamming";
    read_field(s, "window", window, "stft");
    if (window == "hamming")
      c.stft.window = Window::kHamming;
    else if (window == "hann")
      c.stft.window = Window::kHann;
    else
      throw ConfigError("stft.window", "expected 'hamming' or 'hann'");
    c.stft.n_bins = c.stft.frame_len / 2 + 1;
  }
  if (j.contains("model")) {
    c.has_model_section = true;
    const json& m = j.at("model");
    if (!m.is_object()) throw ConfigError("model", "expected an object");
    reject_unknown_keys(
        m, {"depth", "base_channels", "attn_dim", "kernel_f", "kernel_t"},
        "model");
    int depth = c.s2s.depth, base = c.s2s.base_channels;
    int attn = c.s2s.attn_dim;
    int kf = c.s2s.kernel_f, kt = c.s2s.kernel_t;
    read_field(m, "depth", depth, "model");
    read_field(m, "base_channels", base, "model");
    read_field(m, "attn_dim", attn, "model");
    read_field(m, "kernel_f", kf, "model");
    read_field(m, "kernel_t", kt, "model");
    c.s2s = s2s_config(depth, base, attn);
    c.ri2ri = ri2ri_config(depth, base);
    c.s2s.kernel_f = c.ri2ri.kernel_f = kf;
    c.s2s.kernel_t = c.ri2ri.kernel_t = kt;
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    if (!t.is_object()) throw ConfigError("training", "expected an object");
    reject_unknown_keys(t,
                        {"lr", "batch_size", "steps", "crop_f", "crop_t",
                         "freeze_s2s", "freeze_ri2ri", "spec_augment",
                         "checkpoint_every", "val_every"},
                        "training");
    TrainingConfig& tc = c.training;
    read_field(t, "lr", tc.lr, "training");
    read_field(t, "batch_size", tc.batch_size, "training");
    read_field(t, "steps", tc.steps, "training");
    tc.crop_f = 0;  // resolved against the stft geometry unless explicit
    read_field(t, "crop_f", tc.crop_f, "training");
    read_field(t, "crop_t", tc.crop_t, "training");
    read_field(t, "freeze_s2s", tc.freeze_s2s, "training");
    read_field(t, "freeze_ri2ri", tc.freeze_ri2ri, "training");
    read_field(t, "checkpoint_every", tc.checkpoint_every, "training");
    read_field(t, "val_every", tc.val_every, "training");
    if (t.contains("spec_augment")) {
      const json& a = t.at("spec_augment");
      if (!a.is_object())
        throw ConfigError("training.spec_augment", "expected an object");
      reject_unknown_keys(
          a, {"enabled", "n_time_masks", "n_freq_masks", "max_width"},
          "training.spec_augment");
      read_field(a, "enabled", tc.spec_augment.enabled,
                 "training.spec_augment");
      read_field(a, "n_time_masks", tc.spec_augment.n_time_masks,
                 "training.spec_augment");
      read_field(a, "n_freq_masks", tc.spec_augment.n_freq_masks,
                 "training.spec_augment");
      read_field(a, "max_width", tc.spec_augment.max_width,
                 "training.spec_augment");
    }
  } else {
    c.training.crop_f = 0;
  }
  apply_finalize(c);
  return c;
}

namespace {

// ---------------------------------------------------------------------------
// shared pieces

std::vector<ExampleTriple> load_corpus(const std::vector<ManifestEntry>& m,
                                       int jobs) {
  std::vector<ExampleTriple> triples(m.size());
  parallel_for(m.size(), jobs,
               [&](std::size_t i) { triples[i] = load_example(m[i]); });
  return triples;
}

int fail_json(const std::string& type, const std::string& message,
              const std::string& field = "") {
  json j;
  j["error"] = {{"type", type}, {"message", message}};
  if (!field.empty()) j["error"]["field"] = field;
  std::cerr << j.dump() << std::endl;
  return 1;
}

std::string pad_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "utt_%04d", i);
  return buf;
}

// ---------------------------------------------------------------------------
// subcommand options

struct SynthOpts {
  int n = 16;
  double rt60 = 0.5;
  double rt60_min = -1.0;  // <0: use the fixed value
  double rt60_max = -1.0;
  double snr_db = 20.0;
  std::string noise = "white";
  std::string source = "speech";
  double duration_s = 4.5;
  uint64_t seed = 0;
  std::string out;
  int jobs = 0;
};

struct AnalyzeOpts {
  std::string manifest;
  std::string out;
  bool dump_wavs = false;
  int jobs = 0;
};

struct TrainOpts {
  std::string stage;
  std::string config;
  std::string manifest;
  std::string out;
  std::string init;
  bool force_joint_from_scratch = false;
  uint64_t seed = 0;
  int jobs = 0;
};

struct AblateOpts {
  std::string config;
  std::string manifest;
  std::string init;
  std::string out;
  uint64_t seed = 0;
  int jobs = 0;
};

struct EnhanceOpts {
  std::string checkpoint;
  std::string in;
  std::string out;
};

struct EvaluateOpts {
  std::string manifest;
  std::string est_dir;
  std::string out;
  int jobs = 0;
};

// ---------------------------------------------------------------------------
// subcommands

int cmd_synth_data(const SynthOpts& o) {
  if (o.n < 1) throw ConfigError("--n", "must be >= 1");
  if (!(o.duration_s > 0.0)) throw ConfigError("--duration", "must be > 0");
  const bool ranged = o.rt60_min >= 0.0 || o.rt60_max >= 0.0;
  double lo = o.rt60, hi = o.rt60;
  if (ranged) {
    if (o.rt60_min < 0.0 || o.rt60_max < 0.0 || o.rt60_max < o.rt60_min)
      throw ConfigError("--rt60-min/--rt60-max",
                        "both bounds required with min <= max");
    lo = o.rt60_min;
    hi = o.rt60_max;
  }
  if (o.source != "speech" && o.source != "chirp")
    throw ConfigError("--source", "expected 'speech' or 'chirp'");
  std::string noise_path;
  const NoiseKind kind = parse_noise_kind(o.noise, &noise_path);
  const int jobs = resolve_jobs(o.jobs);

  fs::create_directories(o.out);
  std::vector<ManifestEntry> entries(static_cast<std::size_t>(o.n));
  std::vector<ExampleTriple> triples(static_cast<std::size_t>(o.n));
  parallel_for(static_cast<std::size_t>(o.n), jobs, [&](std::size_t i) {
    const uint64_t s = static_cast<uint64_t>(i);
    double rt = lo;
    if (hi > lo) rt = Rng::derive(o.seed, 3 * s).uniform(lo, hi);
    const uint64_t clean_seed = Rng::derive(o.seed, 3 * s + 1).next_u64();
    const uint64_t mix_seed = Rng::derive(o.seed, 3 * s + 2).next_u64();

    const std::string id = pad_id(static_cast<int>(i));
    ManifestEntry e;
    e.id = id;
    e.clean_path = id + "_clean.wav";  // relative: the manifest relocates
    e.rt60_s = rt;
    e.snr_db = o.snr_db;
    e.noise_kind = kind;
    e.noise_path = noise_path;
    e.seed = mix_seed;

    const Waveform clean =
        o.source == "chirp"
            ? make_chirp(o.duration_s, kReferenceSampleRate, clean_seed)
            : make_pseudo_speech(o.duration_s, kReferenceSampleRate,
                                 clean_seed);
    triples[i] = make_example(clean, e.to_spec());
    entries[i] = std::move(e);
  });

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const fs::path base = fs::path(o.out) / entries[i].id;
    write_wav(base.string() + "_clean.wav", triples[i].clean);
    write_wav(base.string() + "_reverb.wav", triples[i].reverberant);
    write_wav(base.string() + "_noisy.wav", triples[i].noisy);
  }
  write_manifest((fs::path(o.out) / "manifest.jsonl").string(), entries);
  std::cout << "wrote " << entries.size() << " utterances and manifest.jsonl"
            << " under " << o.out << "\n";
  return 0;
}

int cmd_analyze(const AnalyzeOpts& o) {
  const int jobs = resolve_jobs(o.jobs);
  const auto entries = read_manifest(o.manifest);
  if (entries.empty()) throw InvalidInput("analyze: empty manifest");
  const auto triples = load_corpus(entries, jobs);
  const StftConfig cfg;

  const SwapStudy study = run_swap_study(triples, cfg);
  const Table table = swap_study_table(study);
  fs::create_directories(o.out);
  write_table(table, o.out, "swap_study");
  std::cout << format_text(table);

  if (o.dump_wavs) {
    const fs::path vdir = fs::path(o.out) / "variants";
    fs::create_directories(vdir);
    for (std::size_t i = 0; i < triples.size(); ++i) {
      const auto v = swap_variants(triples[i].clean, triples[i].noisy, cfg);
      const std::string stem = (vdir / entries[i].id).string();
      write_wav(stem + "_noisy-mag_noisy-phase.wav", v.noisy_noisy);
      write_wav(stem + "_noisy-mag_clean-phase.wav", v.noisy_clean);
      write_wav(stem + "_clean-mag_noisy-phase.wav", v.clean_noisy);
      write_wav(stem + "_clean-mag_clean-phase.wav", v.clean_clean);
    }
  }
  return 0;
}

Stage parse_stage_flag(const std::string& s) {
  if (s == "s2s" || s == "pretrain_s2s") return Stage::kPretrainS2s;
  if (s == "ri2ri" || s == "pretrain_ri2ri") return Stage::kPretrainRi2ri;
  if (s == "finetune") return Stage::kFinetune;
  throw ConfigError("--stage", "expected s2s | ri2ri | finetune, got '" + s +
                                   "'");
}

void check_init_config_conflicts(const CliConfig& cfg,
                                 const ModelBundle<float>& bundle) {
  if (cfg.has_stft_section && !(bundle.stft_cfg == cfg.stft))
    throw ConfigError("stft",
                      "config stft section conflicts with the --init "
                      "checkpoint's geometry");
  if (cfg.has_model_section && (!(bundle.s2s.config() == cfg.s2s) ||
                                !(bundle.ri2ri.config() == cfg.ri2ri)))
    throw ConfigError("model",
                      "config model section conflicts with the --init "
                      "checkpoint's architecture");
}

int cmd_train(const TrainOpts& o) {
  const Stage stage = parse_stage_flag(o.stage);
  CliConfig cfg =
      o.config.empty() ? default_cli_config() : load_cli_config(o.config);
  TrainingConfig tc = cfg.training;
  tc.stage = stage;
  tc.seed = o.seed;
  const int jobs = resolve_jobs(o.jobs);

  if (o.init.empty() && stage == Stage::kFinetune &&
      !o.force_joint_from_scratch)
    throw ConfigError(
        "--init",
        "the fine-tune stage starts from a pre-trained checkpoint; "
        "--force-joint-from-scratch overrides this to replicate the "
        "known-unstable joint-from-scratch run");

  ModelBundle<float> bundle =
      o.init.empty()
          ? ModelBundle<float>(cfg.s2s, cfg.ri2ri, cfg.stft, o.seed)
          : load_bundle(o.init);
  if (!o.init.empty()) check_init_config_conflicts(cfg, bundle);

  const auto entries = read_manifest(o.manifest);
  if (entries.empty()) throw InvalidInput("train: empty manifest");
  const auto triples = load_corpus(entries, jobs);

  const StageResult res = run_stage(tc, bundle, triples, o.out);
  std::cout << "stage " << stage_name(stage) << ": " << tc.steps
            << " steps, loss " << fmt_fixed(res.initial_loss, 6) << " -> "
            << fmt_fixed(res.final_loss, 6) << "; checkpoint "
            << (fs::path(o.out) / "ckpt_final.bin").string() << "\n";
  return 0;
}

int cmd_ablate(const AblateOpts& o) {
  CliConfig cfg =
      o.config.empty() ? default_cli_config() : load_cli_config(o.config);
  TrainingConfig tc = cfg.training;
  tc.stage = Stage::kFinetune;
  tc.seed = o.seed;
  const int jobs = resolve_jobs(o.jobs);

  const ModelBundle<float> pretrained = load_bundle(o.init);
  check_init_config_conflicts(cfg, pretrained);

  const auto entries = read_manifest(o.manifest);
  if (entries.empty()) throw InvalidInput("ablate: empty manifest");
  const auto triples = load_corpus(entries, jobs);

  const AblationResult res = run_ablation(pretrained, triples, tc, o.out);
  const Table table = ablation_table(res);
  fs::create_directories(o.out);
  write_table(table, o.out, "ablation");

  json rows = json::array();
  for (const auto& r : res.rows)
    rows.push_back({{"label", r.label},
                    {"freeze_s2s", r.freeze_s2s},
                    {"freeze_ri2ri", r.freeze_ri2ri},
                    {"si_sdr_db", r.mean.si_sdr_db},
                    {"cd", r.mean.cd},
                    {"llr", r.mean.llr},
                    {"fw_snr_seg_db", r.mean.fw_snr_seg_db}});
  std::ofstream js((fs::path(o.out) / "ablation.json").string(),
                   std::ios::binary);
  js << json({{"rows", rows}}).dump(2) << "\n";
  std::cout << format_text(table);
  return 0;
}

int cmd_enhance(const EnhanceOpts& o) {
  const ModelBundle<float> bundle = load_bundle(o.checkpoint);
  const Waveform noisy = read_wav(o.in);
  const Waveform out = two_stage_enhance(noisy, bundle);
  const fs::path parent = fs::path(o.out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_wav(o.out, out);
  return 0;
}

int cmd_evaluate(const EvaluateOpts& o) {
  const int jobs = resolve_jobs(o.jobs);
  const auto entries = read_manifest(o.manifest);
  if (entries.empty()) throw InvalidInput("evaluate: empty manifest");

  std::vector<MetricsReport> reports(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const Waveform ref = read_wav(entries[i].clean_path);
    const fs::path est_path = fs::path(o.est_dir) / (entries[i].id + ".wav");
    const Waveform est = read_wav(est_path.string());
    reports[i] = evaluate_pair(ref, est);
  });

  fs::create_directories(o.out);
  std::ofstream jl((fs::path(o.out) / "per_utterance.jsonl").string(),
                   std::ios::binary);
  if (!jl) throw InvalidInput("evaluate: cannot write per_utterance.jsonl");
  MetricsReport mean;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const MetricsReport& r = reports[i];
    json j;
    j["id"] = entries[i].id;
    j["si_sdr_db"] = r.si_sdr_db;
    j["cd"] = r.cd;
    j["llr"] = r.llr;
    j["fw_snr_seg_db"] = r.fw_snr_seg_db;
    j["n_frames_scored"] = r.n_frames_scored;
    jl << j.dump() << "\n";
    mean.si_sdr_db += r.si_sdr_db;
    mean.cd += r.cd;
    mean.llr += r.llr;
    mean.fw_snr_seg_db += r.fw_snr_seg_db;
  }
  const double n = static_cast<double>(entries.size());
  mean.si_sdr_db /= n;
  mean.cd /= n;
  mean.llr /= n;
  mean.fw_snr_seg_db /= n;

  Table table;
  table.title =
      "evaluation (mean over " + std::to_string(entries.size()) +
      " utterances)";
  table.columns = {"statistic", "si_sdr_db", "cd", "llr", "fw_snr_seg_db"};
  table.add_row({"mean", fmt_fixed(mean.si_sdr_db, 2), fmt_fixed(mean.cd, 4),
                 fmt_fixed(mean.llr, 4), fmt_fixed(mean.fw_snr_seg_db, 2)});
  write_table(table, o.out, "evaluation");
  std::cout << format_text(table);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"decoupled magnitude/phase speech dereverberation workbench"};
  app.require_subcommand(1);

  SynthOpts so;
  CLI::App* synth = app.add_subcommand(
      "synth-data", "synthesize a clean/reverb/noisy corpus plus manifest");
  synth->add_option("--n", so.n, "number of utterances");
  synth->add_option("--rt60", so.rt60, "reverberation time (s)");
  synth->add_option("--rt60-min", so.rt60_min, "lower RT60 bound (s)");
  synth->add_option("--rt60-max", so.rt60_max, "upper RT60 bound (s)");
  synth->add_option("--snr", so.snr_db, "mixture SNR (dB), inf for none");
  synth->add_option("--noise", so.noise,
                    "white | pink | none | recorded:<path>");
  synth->add_option("--source", so.source, "clean source: speech | chirp");
  synth->add_option("--duration", so.duration_s, "utterance length (s)");
  synth->add_option("--seed", so.seed, "master seed");
  synth->add_option("--out", so.out, "output directory")->required();
  synth->add_option("--jobs", so.jobs, "worker count (DEREVB_JOBS fallback)");

  AnalyzeOpts ao;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "magnitude/phase swap study over a manifest");
  analyze->add_option("--manifest", ao.manifest, "manifest JSONL")->required();
  analyze->add_option("--out", ao.out, "output directory")->required();
  analyze->add_flag("--dump-wavs", ao.dump_wavs,
                    "also write the recombined variant WAVs");
  analyze->add_option("--jobs", ao.jobs,
                      "worker count (DEREVB_JOBS fallback)");

  TrainOpts to;
  CLI::App* train =
      app.add_subcommand("train", "run one training stage on a manifest");
  train->add_option("--stage", to.stage, "s2s | ri2ri | finetune")
      ->required();
  train->add_option("--config", to.config, "JSON config (versioned schema)");
  train->add_option("--manifest", to.manifest, "manifest JSONL")->required();
  train->add_option("--out", to.out, "output directory")->required();
  train->add_option("--init", to.init, "checkpoint to start from");
  train->add_flag("--force-joint-from-scratch", to.force_joint_from_scratch,
                  "allow fine-tune without a pre-trained checkpoint "
                  "(replicates the known-unstable joint run)");
  train->add_option("--seed", to.seed, "master seed");
  train->add_option("--jobs", to.jobs, "worker count (DEREVB_JOBS fallback)");

  AblateOpts bo;
  CLI::App* ablate = app.add_subcommand(
      "ablate", "fine-tune freeze ablation grid from one checkpoint");
  ablate->add_option("--config", bo.config, "JSON config (versioned schema)");
  ablate->add_option("--manifest", bo.manifest, "manifest JSONL")->required();
  ablate->add_option("--init", bo.init, "pre-trained checkpoint")->required();
  ablate->add_option("--out", bo.out, "output directory")->required();
  ablate->add_option("--seed", bo.seed, "master seed");
  ablate->add_option("--jobs", bo.jobs, "worker count (DEREVB_JOBS fallback)");

  EnhanceOpts eo;
  CLI::App* enhance =
      app.add_subcommand("enhance", "dereverberate one WAV file");
  enhance->add_option("--checkpoint", eo.checkpoint, "model checkpoint")
      ->required();
  enhance->add_option("--in", eo.in, "input noisy WAV")->required();
  enhance->add_option("--out", eo.out, "output WAV path")->required();

  EvaluateOpts vo;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "score enhanced WAVs against a manifest's clean sources");
  evaluate->add_option("--manifest", vo.manifest, "manifest JSONL")
      ->required();
  evaluate->add_option("--est-dir", vo.est_dir,
                       "directory of enhanced WAVs named <id>.wav")
      ->required();
  evaluate->add_option("--out", vo.out, "output directory")->required();
  evaluate->add_option("--jobs", vo.jobs,
                       "worker count (DEREVB_JOBS fallback)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    json j;
    j["error"] = {{"type", "usage"}, {"message", e.what()}};
    std::cerr << j.dump() << std::endl;
    return e.get_exit_code();
  }

  try {
    if (synth->parsed()) return cmd_synth_data(so);
    if (analyze->parsed()) return cmd_analyze(ao);
    if (train->parsed()) return cmd_train(to);
    if (ablate->parsed()) return cmd_ablate(bo);
    if (enhance->parsed()) return cmd_enhance(eo);
    if (evaluate->parsed()) return cmd_evaluate(vo);
    return fail_json("usage", "no subcommand given");
  } catch (const ConfigError& e) {
    return fail_json("config", e.what(), e.field);
  } catch (const InvalidInput& e) {
    return fail_json("invalid_input", e.what());
  } catch (const ShapeError& e) {
    return fail_json("shape", e.what());
  } catch (const NumericalError& e) {
    return fail_json("numerical", e.what());
  } catch (const GraphError& e) {
    return fail_json("graph", e.what());
  } catch (const std::exception& e) {
    return fail_json("internal", e.what());
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("derevb");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace derevb
