// training.cpp

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

#include "derevb/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "derevb/checkpoint.hpp"
#include "json.hpp"

namespace derevb {

namespace {

using json = nlohmann::json;

// Everything a training step needs about one utterance, precomputed once.
struct UtteranceData {
  std::size_t f = 0;  // n_bins - 1 (Nyquist dropped)
  std::size_t t = 0;  // frame count
  float sigma = 1.0f;
  std::vector<float> noisy_norm;   // F x T noisy log-mag / sigma
  std::vector<float> clean_lm;     // F x T clean log-mag
  std::vector<float> noisy_phase;  // F x T noisy phase
  std::vector<float> clean_samples;
};

UtteranceData prep_utterance(const ExampleTriple& ex, const StftConfig& cfg) {
  const auto noisy_mp = decompose(stft(ex.noisy, cfg));
  const auto clean_mp = decompose(stft(ex.clean, cfg));
  if (clean_mp.n_frames != noisy_mp.n_frames)
    throw InvalidInput("run_stage: clean/noisy frame counts differ");

  UtteranceData u;
  const std::size_t bins = static_cast<std::size_t>(cfg.n_bins);
  u.f = bins - 1;
  u.t = noisy_mp.n_frames;
  auto noisy_lm = log_mag_plane<float>(noisy_mp);
  u.sigma = static_cast<float>(plane_std(noisy_lm));
  u.noisy_norm = std::move(noisy_lm);
  for (auto& v : u.noisy_norm) v /= u.sigma;
  u.clean_lm = log_mag_plane<float>(clean_mp);
  u.noisy_phase.resize(u.f * u.t);
  for (std::size_t k = 0; k < u.f; ++k)
    for (std::size_t l = 0; l < u.t; ++l)
      u.noisy_phase[k * u.t + l] =
          static_cast<float>(noisy_mp.phase[l * bins + k]);
  u.clean_samples.assign(ex.clean.samples.begin(), ex.clean.samples.end());
  return u;
}

// Clean samples covered by the crop's synthesis span, truncated at the
// utterance end.  The frames in [t0, t0+crop_t) window exactly these
// samples, so overlap-add over the crop reconstructs them bit-for-bit.
std::vector<float> clean_segment(const UtteranceData& u, const StftConfig& cfg,
                                 std::size_t t0, std::size_t crop_t) {
  const std::size_t start = t0 * static_cast<std::size_t>(cfg.hop_len);
  const std::size_t span = static_cast<std::size_t>(cfg.frame_len) +
                           (crop_t - 1) * static_cast<std::size_t>(cfg.hop_len);
  if (start >= u.clean_samples.size())
    throw InvalidInput("run_stage: crop starts past the utterance end");
  const std::size_t n = std::min(span, u.clean_samples.size() - start);
  return std::vector<float>(u.clean_samples.begin() + start,
                            u.clean_samples.begin() + start + n);
}

double segment_energy(const std::vector<float>& seg) {
  double e = 0.0;
  for (float v : seg) e += static_cast<double>(v) * v;
  return e;
}

// The synthesis loss is undefined on silence; fall back to the utterance
// head if the drawn window is all-zero (possible only on degenerate data).
std::size_t nonsilent_crop_start(const UtteranceData& u, const StftConfig& cfg,
                                 std::size_t t0, std::size_t crop_t) {
  if (segment_energy(clean_segment(u, cfg, t0, crop_t)) > 0.0) return t0;
  return 0;
}

// 2 x F x crop_t real/imaginary crop from a magnitude donor plane (full
// F x T) and the utterance's noisy phase; columns past the end repeat the
// final frame, matching crop_plane.
std::vector<float> ri_crop(const UtteranceData& u,
                           const std::vector<float>& lm_plane, std::size_t t0,
                           std::size_t crop_t) {
  std::vector<float> ri(2 * u.f * crop_t);
  for (std::size_t k = 0; k < u.f; ++k)
    for (std::size_t j = 0; j < crop_t; ++j) {
      const std::size_t l = std::min(t0 + j, u.t - 1);
      const double m = std::exp(static_cast<double>(lm_plane[k * u.t + l]));
      const double ph = static_cast<double>(u.noisy_phase[k * u.t + l]);
      ri[k * crop_t + j] = static_cast<float>(m * std::cos(ph));
      ri[u.f * crop_t + k * crop_t + j] = static_cast<float>(m * std::sin(ph));
    }
  return ri;
}

// RI crop where the magnitude donor is already crop-sized (the live stage-1
// output); phase still comes from the full utterance plane.
std::vector<float> ri_crop_from_cropped_mag(const UtteranceData& u,
                                            const std::vector<float>& lm_crop,
                                            std::size_t t0,
                                            std::size_t crop_t) {
  std::vector<float> ri(2 * u.f * crop_t);
  for (std::size_t k = 0; k < u.f; ++k)
    for (std::size_t j = 0; j < crop_t; ++j) {
      const std::size_t l = std::min(t0 + j, u.t - 1);
      const double m = std::exp(static_cast<double>(lm_crop[k * crop_t + j]));
      const double ph = static_cast<double>(u.noisy_phase[k * u.t + l]);
      ri[k * crop_t + j] = static_cast<float>(m * std::cos(ph));
      ri[u.f * crop_t + k * crop_t + j] = static_cast<float>(m * std::sin(ph));
    }
  return ri;
}

// One batch item's loss graph for the current stage.
ad::Tensor<float> item_loss(const TrainingConfig& cfg,
                            ModelBundle<float>& bundle, const UtteranceData& u,
                            std::size_t t0, Rng& rng) {
  const std::size_t f = u.f;
  const std::size_t ct = static_cast<std::size_t>(cfg.crop_t);
  const StftConfig& scfg = bundle.stft_cfg;

  switch (cfg.stage) {
    case Stage::kPretrainS2s: {
      auto in = crop_plane(u.noisy_norm, f, u.t, t0, ct);
      if (cfg.spec_augment.enabled)
        spec_augment(in, f, ct, cfg.spec_augment, rng);
      auto x = ad::make_tensor<float>({1, f, ct}, std::move(in));
      auto est = ad::scale(bundle.s2s.forward(x), u.sigma);
      auto tgt = ad::make_tensor<float>({1, f, ct},
                                        crop_plane(u.clean_lm, f, u.t, t0, ct));
      return loss_s2s(est, tgt);
    }

    case Stage::kPretrainRi2ri: {
      t0 = nonsilent_crop_start(u, scfg, t0, ct);
      auto x =
          ad::make_tensor<float>({2, f, ct}, ri_crop(u, u.clean_lm, t0, ct));
      auto frames = ri_plane_to_frames(bundle.ri2ri.forward(x));
      return loss_ri2ri(frames, clean_segment(u, scfg, t0, ct), scfg);
    }

    case Stage::kFinetune: {
      t0 = nonsilent_crop_start(u, scfg, t0, ct);
      auto x = ad::make_tensor<float>(
          {1, f, ct}, crop_plane(u.noisy_norm, f, u.t, t0, ct));
      auto y = bundle.s2s.forward(x);

      ad::Tensor<float> l_s2s;
      if (!cfg.freeze_s2s) {
        auto est = ad::scale(y, u.sigma);
        auto tgt = ad::make_tensor<float>(
            {1, f, ct}, crop_plane(u.clean_lm, f, u.t, t0, ct));
        l_s2s = loss_s2s(est, tgt);
      }
      // Active magnitude net with frozen synthesis net: its own loss alone
      // drives the step, so skip building the synthesis branch.
      if (!cfg.freeze_s2s && cfg.freeze_ri2ri) return l_s2s;

      // Gradients stop here: the RI input is rebuilt from stage-1 values.
      std::vector<float> enh(f * ct);
      for (std::size_t i = 0; i < enh.size(); ++i)
        enh[i] = y->value[i] * u.sigma;
      auto xr = ad::make_tensor<float>({2, f, ct},
                                       ri_crop_from_cropped_mag(u, enh, t0, ct));
      auto frames = ri_plane_to_frames(bundle.ri2ri.forward(xr));
      auto l_ri = loss_ri2ri(frames, clean_segment(u, scfg, t0, ct), scfg);
      if (l_s2s) return ad::add(l_s2s, l_ri);
      return l_ri;
    }
  }
  throw InvalidInput("run_stage: unknown stage");
}

ValSnapshot take_snapshot(Stage stage, const ModelBundle<float>& bundle,
                          const std::vector<ExampleTriple>& val) {
  MetricsReport r;
  switch (stage) {
    case Stage::kPretrainS2s:
      r = evaluate_s2s_stage(bundle, val);
      break;
    case Stage::kPretrainRi2ri:
      r = evaluate_ri2ri_stage(bundle, val);
      break;
    case Stage::kFinetune:
      r = evaluate_bundle(bundle, val);
      break;
  }
  ValSnapshot s;
  s.present = true;
  s.si_sdr_db = r.si_sdr_db;
  s.cd = r.cd;
  s.llr = r.llr;
  return s;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw InvalidInput("evaluate: empty corpus");
  MetricsReport mean;
  for (const auto& r : reports) {
    mean.si_sdr_db += r.si_sdr_db;
    mean.cd += r.cd;
    mean.llr += r.llr;
    mean.fw_snr_seg_db += r.fw_snr_seg_db;
    mean.n_frames_scored += r.n_frames_scored;
  }
  const double n = static_cast<double>(reports.size());
  mean.si_sdr_db /= n;
  mean.cd /= n;
  mean.llr /= n;
  mean.fw_snr_seg_db /= n;
  return mean;
}

Waveform synth_with_rate(const Spectrogram& spec, int sample_rate_hz) {
  Waveform out = istft(spec);
  out.sample_rate_hz = sample_rate_hz;
  return out;
}

}  // namespace

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::kPretrainS2s:
      return "pretrain_s2s";
    case Stage::kPretrainRi2ri:
      return "pretrain_ri2ri";
    case Stage::kFinetune:
      return "finetune";
  }
  throw InvalidInput("stage_name: unknown stage");
}

Stage stage_from_name(const std::string& name) {
  if (name == "pretrain_s2s") return Stage::kPretrainS2s;
  if (name == "pretrain_ri2ri") return Stage::kPretrainRi2ri;
  if (name == "finetune") return Stage::kFinetune;
  throw InvalidInput("unknown stage '" + name +
                     "' (expected pretrain_s2s | pretrain_ri2ri | finetune)");
}

void TrainingConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr))
    throw ConfigError("lr", "must be positive and finite");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (steps < 1) throw ConfigError("steps", "must be >= 1");
  if (crop_f < 1 || crop_t < 1)
    throw ConfigError("crop", "both extents must be >= 1");
  if (spec_augment.enabled) {
    if (stage != Stage::kPretrainS2s)
      throw ConfigError("spec_augment",
                        "only supported in the pretrain_s2s stage (it does "
                        "not help the RI net)");
    if (spec_augment.n_time_masks < 0 || spec_augment.n_freq_masks < 0)
      throw ConfigError("spec_augment", "mask counts must be >= 0");
    if (spec_augment.max_width < 1)
      throw ConfigError("spec_augment", "max_width must be >= 1");
  }
  if (checkpoint_every < 0)
    throw ConfigError("checkpoint_every", "must be >= 0");
  if (val_every < 0) throw ConfigError("val_every", "must be >= 0");
}

void write_train_log(const std::string& path,
                     const std::vector<TrainRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open train log for writing: " + path);
  for (const auto& r : records) {
    json j;
    j["step"] = r.step;
    j["stage"] = r.stage;
    j["loss"] = r.loss;
    j["wall_time_s"] = r.wall_time_s;
    if (r.val.present)
      j["val"] = {{"si_sdr_db", r.val.si_sdr_db},
                  {"cd", r.val.cd},
                  {"llr", r.val.llr}};
    else
      j["val"] = nullptr;
    out << j.dump() << "\n";
  }
}

void spec_augment(std::vector<float>& plane, std::size_t f, std::size_t t,
                  const SpecAugmentConfig& cfg, Rng& rng) {
  if (plane.size() != f * t || f == 0 || t == 0)
    throw ShapeError("spec_augment: plane size mismatch");
  if (!cfg.enabled) return;

  double mean = 0.0;
  for (float v : plane) mean += static_cast<double>(v);
  const float fill = static_cast<float>(mean / static_cast<double>(f * t));

  // Frequency stripes first, then time stripes; widths are uniform on
  // [1, max_width] clamped to the axis.
  for (int m = 0; m < cfg.n_freq_masks; ++m) {
    const std::size_t w = std::min<std::size_t>(
        static_cast<std::size_t>(rng.uniform_int(1, cfg.max_width)), f);
    const std::size_t start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int64_t>(f - w)));
    for (std::size_t k = start; k < start + w; ++k)
      for (std::size_t l = 0; l < t; ++l) plane[k * t + l] = fill;
  }
  for (int m = 0; m < cfg.n_time_masks; ++m) {
    const std::size_t w = std::min<std::size_t>(
        static_cast<std::size_t>(rng.uniform_int(1, cfg.max_width)), t);
    const std::size_t start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int64_t>(t - w)));
    for (std::size_t k = 0; k < f; ++k)
      for (std::size_t l = start; l < start + w; ++l) plane[k * t + l] = fill;
  }
}

std::size_t pick_crop_start(std::size_t n_frames, std::size_t crop_t,
                            Rng& rng) {
  if (n_frames == 0) throw InvalidInput("pick_crop_start: empty utterance");
  if (n_frames <= crop_t) return 0;
  return static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int64_t>(n_frames - crop_t)));
}

std::vector<float> crop_plane(const std::vector<float>& plane, std::size_t f,
                              std::size_t t, std::size_t start,
                              std::size_t crop_t) {
  if (plane.size() != f * t || f == 0 || t == 0)
    throw ShapeError("crop_plane: plane size mismatch");
  if (crop_t == 0) throw InvalidInput("crop_plane: empty window");
  std::vector<float> out(f * crop_t);
  for (std::size_t k = 0; k < f; ++k)
    for (std::size_t j = 0; j < crop_t; ++j)
      out[k * crop_t + j] = plane[k * t + std::min(start + j, t - 1)];
  return out;
}

StageResult run_stage(const TrainingConfig& cfg, ModelBundle<float>& bundle,
                      const std::vector<ExampleTriple>& data,
                      const std::string& out_dir) {
  cfg.validate();
  if (data.empty()) throw InvalidInput("run_stage: empty training set");
  if (cfg.crop_f != bundle.s2s.config().freq_size)
    throw ConfigError("crop_f", "must match the model frequency extent");

  switch (cfg.stage) {
    case Stage::kPretrainS2s:
      bundle.s2s.set_frozen(false);
      bundle.ri2ri.set_frozen(true);
      break;
    case Stage::kPretrainRi2ri:
      bundle.s2s.set_frozen(true);
      bundle.ri2ri.set_frozen(false);
      break;
    case Stage::kFinetune:
      bundle.s2s.set_frozen(cfg.freeze_s2s);
      bundle.ri2ri.set_frozen(cfg.freeze_ri2ri);
      break;
  }

  // Last 10% of the corpus is held out for validation snapshots (only when
  // there is enough data to spare).
  const std::size_t n_val = data.size() >= 10 ? data.size() / 10 : 0;
  const std::size_t n_train = data.size() - n_val;
  std::vector<UtteranceData> utts;
  utts.reserve(n_train);
  for (std::size_t i = 0; i < n_train; ++i)
    utts.push_back(prep_utterance(data[i], bundle.stft_cfg));
  const std::vector<ExampleTriple> val_slice(data.begin() + n_train,
                                             data.end());

  // The optimizer only ever sees the stage's own net(s); frozen parameters
  // are skipped inside the step itself.
  std::vector<ad::Parameter<float>> params;
  if (cfg.stage != Stage::kPretrainRi2ri)
    for (auto& p : bundle.s2s.parameters()) params.push_back(p);
  if (cfg.stage != Stage::kPretrainS2s)
    for (auto& p : bundle.ri2ri.parameters()) params.push_back(p);
  ad::AdamState<float> opt_state;
  ad::AdamConfig<float> opt_cfg;
  opt_cfg.lr = static_cast<float>(cfg.lr);

  std::filesystem::path dir;
  std::string latest_ckpt;
  if (!out_dir.empty()) {
    dir = out_dir;
    std::filesystem::create_directories(dir);
  }
  StageResult result;
  const auto t_start = std::chrono::steady_clock::now();

  for (int step = 1; step <= cfg.steps; ++step) {
    Rng rng = Rng::derive(cfg.seed, static_cast<uint64_t>(step));

    std::vector<ad::Tensor<float>> losses;
    losses.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const std::size_t ui =
          utts.size() == 1
              ? 0
              : static_cast<std::size_t>(rng.uniform_int(
                    0, static_cast<int64_t>(utts.size()) - 1));
      const UtteranceData& u = utts[ui];
      const std::size_t t0 =
          pick_crop_start(u.t, static_cast<std::size_t>(cfg.crop_t), rng);
      losses.push_back(item_loss(cfg, bundle, u, t0, rng));
    }
    ad::Tensor<float> loss = losses[0];
    for (std::size_t i = 1; i < losses.size(); ++i)
      loss = ad::add(loss, losses[i]);
    if (cfg.batch_size > 1)
      loss = ad::scale(loss, 1.0f / static_cast<float>(cfg.batch_size));

    const double loss_value = static_cast<double>(loss->value[0]);
    if (!std::isfinite(loss_value)) {
      if (!out_dir.empty())
        write_train_log((dir / "train_log.jsonl").string(), result.records);
      std::string msg = "run_stage: non-finite loss (" +
                        std::to_string(loss_value) + ") at step " +
                        std::to_string(step);
      if (!latest_ckpt.empty())
        msg += "; last good checkpoint: " + latest_ckpt;
      throw NumericalError(msg);
    }

    // All-frozen fine-tuning is a deliberate no-op: nothing requires
    // gradients, so the parameters stay bit-identical.
    if (loss->requires_grad) {
      ad::zero_grad(params);
      ad::backward(loss);
      ad::adam_step(params, opt_state, opt_cfg);
    }

    TrainRecord rec;
    rec.step = step;
    rec.stage = stage_name(cfg.stage);
    rec.loss = loss_value;
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    if (!val_slice.empty() && cfg.val_every > 0 && step % cfg.val_every == 0)
      rec.val = take_snapshot(cfg.stage, bundle, val_slice);
    result.records.push_back(rec);
    if (step == 1) result.initial_loss = loss_value;
    result.final_loss = loss_value;

    if (!out_dir.empty() && cfg.checkpoint_every > 0 &&
        step % cfg.checkpoint_every == 0) {
      latest_ckpt = (dir / "ckpt_latest.bin").string();
      save_bundle(bundle, latest_ckpt);
    }
  }

  if (!out_dir.empty()) {
    save_bundle(bundle, (dir / "ckpt_final.bin").string());
    write_train_log((dir / "train_log.jsonl").string(), result.records);
  }
  return result;
}

MetricsReport evaluate_bundle(const ModelBundle<float>& bundle,
                              const std::vector<ExampleTriple>& data,
                              const LpcFrameConfig& metric_cfg) {
  std::vector<MetricsReport> reports;
  reports.reserve(data.size());
  for (const auto& ex : data) {
    const Waveform out = two_stage_enhance(ex.noisy, bundle);
    reports.push_back(evaluate_pair(ex.clean, out, metric_cfg));
  }
  return mean_report(reports);
}

MetricsReport evaluate_s2s_stage(const ModelBundle<float>& bundle,
                                 const std::vector<ExampleTriple>& data,
                                 const LpcFrameConfig& metric_cfg) {
  std::vector<MetricsReport> reports;
  reports.reserve(data.size());
  for (const auto& ex : data) {
    const auto stage1 = s2s_enhance(ex.noisy, bundle.s2s, bundle.stft_cfg);
    const auto ri = ri_plane<float>(stage1.enhanced_log_mag, stage1.noisy);
    const auto spec = spectrogram_from_ri_plane<float>(
        ri, bundle.stft_cfg, stage1.noisy.n_frames, stage1.noisy.source_len);
    const Waveform out = synth_with_rate(spec, ex.noisy.sample_rate_hz);
    reports.push_back(evaluate_pair(ex.clean, out, metric_cfg));
  }
  return mean_report(reports);
}

MetricsReport evaluate_ri2ri_stage(const ModelBundle<float>& bundle,
                                   const std::vector<ExampleTriple>& data,
                                   const LpcFrameConfig& metric_cfg) {
  std::vector<MetricsReport> reports;
  reports.reserve(data.size());
  for (const auto& ex : data) {
    const auto clean_mp = decompose(stft(ex.clean, bundle.stft_cfg));
    const auto noisy_mp = decompose(stft(ex.noisy, bundle.stft_cfg));
    const auto lm = log_mag_plane<float>(clean_mp);
    const auto ri = ri_plane<float>(lm, noisy_mp);
    const std::size_t f =
        static_cast<std::size_t>(bundle.stft_cfg.n_bins) - 1;
    auto x = ad::make_tensor<float>({2, f, noisy_mp.n_frames}, ri);
    auto y = bundle.ri2ri.forward(x);
    const auto spec = spectrogram_from_ri_plane<float>(
        y->value, bundle.stft_cfg, noisy_mp.n_frames, noisy_mp.source_len);
    const Waveform out = synth_with_rate(spec, ex.noisy.sample_rate_hz);
    reports.push_back(evaluate_pair(ex.clean, out, metric_cfg));
  }
  return mean_report(reports);
}

AblationResult run_ablation(const ModelBundle<float>& pretrained,
                            const std::vector<ExampleTriple>& data,
                            const TrainingConfig& finetune_cfg,
                            const std::string& out_dir) {
  TrainingConfig base = finetune_cfg;
  base.stage = Stage::kFinetune;

  struct Combo {
    bool freeze_s2s;
    bool freeze_ri2ri;
    const char* label;
    const char* slug;
  };
  // Fixed grid, fixed order; every row fine-tunes from the same weights
  // with the same seed, so rows differ only in what is allowed to move.
  const Combo combos[4] = {
      {true, true, "freeze both", "freeze_both"},
      {true, false, "freeze s2s, tune ri2ri", "tune_ri2ri"},
      {false, true, "tune s2s, freeze ri2ri", "tune_s2s"},
      {false, false, "tune both", "tune_both"},
  };

  AblationResult result;
  for (const Combo& combo : combos) {
    ModelBundle<float> bundle = pretrained.clone();
    TrainingConfig cfg = base;
    cfg.freeze_s2s = combo.freeze_s2s;
    cfg.freeze_ri2ri = combo.freeze_ri2ri;
    const std::string row_dir =
        out_dir.empty() ? "" : out_dir + "/" + combo.slug;
    run_stage(cfg, bundle, data, row_dir);

    AblationRow row;
    row.label = combo.label;
    row.freeze_s2s = combo.freeze_s2s;
    row.freeze_ri2ri = combo.freeze_ri2ri;
    row.mean = evaluate_bundle(bundle, data);
    result.rows.push_back(std::move(row));
  }
  return result;
}

Table ablation_table(const AblationResult& result) {
  Table t;
  t.title = "fine-tune freeze ablation";
  t.columns = {"configuration", "llr", "cd", "si_sdr_db"};
  for (const auto& row : result.rows)
    t.add_row({row.label, fmt_fixed(row.mean.llr, 4), fmt_fixed(row.mean.cd, 4),
               fmt_fixed(row.mean.si_sdr_db, 2)});
  return t;
}

}  // namespace derevb
