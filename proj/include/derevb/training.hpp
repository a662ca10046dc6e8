// derevb/training.hpp

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

// Staged training: the magnitude net and the RI net are pre-trained on
// their own objectives, then jointly fine-tuned with (by default) the
// magnitude net frozen.  Joint training from scratch is deliberately not a
// first-class path — it does not converge — but an explicitly labeled
// escape hatch exists in the CLI for replicating that failure.

#ifndef DEREVB_TRAINING_HPP
#define DEREVB_TRAINING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "derevb/autodiff.hpp"
#include "derevb/errors.hpp"
#include "derevb/manifest.hpp"
#include "derevb/metrics.hpp"
#include "derevb/models.hpp"
#include "derevb/rng.hpp"
#include "derevb/table.hpp"

namespace derevb {

enum class Stage { kPretrainS2s, kPretrainRi2ri, kFinetune };

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);

struct SpecAugmentConfig {
  bool enabled = false;
  int n_time_masks = 2;
  int n_freq_masks = 2;
  int max_width = 32;
};

struct TrainingConfig {
  Stage stage = Stage::kPretrainS2s;
  // Fine-tune defaults follow the winning ablation row: magnitude net
  // frozen, RI net tuned.
  bool freeze_s2s = true;
  bool freeze_ri2ri = false;
  double lr = 1e-3;
  int batch_size = 4;
  int steps = 500;
  int crop_f = 256;
  int crop_t = 256;
  SpecAugmentConfig spec_augment;
  uint64_t seed = 0;
  int checkpoint_every = 100;
  int val_every = 100;

  void validate() const;
};

struct ValSnapshot {
  bool present = false;
  double si_sdr_db = 0.0;
  double cd = 0.0;
  double llr = 0.0;
};

struct TrainRecord {
  int step = 0;
  std::string stage;
  double loss = 0.0;
  double wall_time_s = 0.0;
  ValSnapshot val;
};

void write_train_log(const std::string& path,
                     const std::vector<TrainRecord>& records);

// ---------------------------------------------------------------------------
// objectives (templated so gradient checks can run in double)

// Mean squared error over all cells of two equal-shape log-magnitude
// tensors.
template <typename T>
ad::Tensor<T> loss_s2s(const ad::Tensor<T>& est_log_mag,
                       const ad::Tensor<T>& clean_log_mag) {
  if (est_log_mag->shape != clean_log_mag->shape)
    throw ShapeError("loss_s2s: shape mismatch");
  auto d = ad::sub(est_log_mag, clean_log_mag);
  return ad::mean(ad::mul(d, d));
}

// Negative scale-invariant SDR of the synthesized estimate against the
// clean samples; the synthesis sits inside the graph so gradients reach the
// RI planes.
template <typename T>
ad::Tensor<T> loss_ri2ri(const ad::Tensor<T>& est_ri_frames,
                         const std::vector<T>& clean_samples,
                         const StftConfig& cfg) {
  if (clean_samples.empty())
    throw InvalidInput("loss_ri2ri: empty clean reference");
  double clean_e = 0.0;
  for (T v : clean_samples) clean_e += static_cast<double>(v) * v;
  if (clean_e <= 0.0) throw InvalidInput("loss_ri2ri: silent clean reference");

  auto est = ad::istft_layer(est_ri_frames, cfg, clean_samples.size());
  auto s = ad::make_tensor<T>({clean_samples.size()},
                              std::vector<T>(clean_samples));
  auto dot = ad::sum(ad::mul(est, s));
  auto alpha = ad::scale(dot, static_cast<T>(1.0 / clean_e));
  auto target = ad::scale_by(s, alpha);
  auto resid = ad::sub(est, target);
  const T eps = static_cast<T>(1e-12);
  auto te = ad::add_const(ad::sum(ad::mul(target, target)), eps);
  auto re = ad::add_const(ad::sum(ad::mul(resid, resid)), eps);
  // -10*log10(te/re) == (10/ln10) * (ln re - ln te)
  return ad::scale(ad::sub(ad::log_op(re), ad::log_op(te)),
                   static_cast<T>(10.0 / std::log(10.0)));
}

// ---------------------------------------------------------------------------
// augmentation and cropping (host-side plane helpers)

// Masks random time and frequency stripes of an F x T plane in place,
// filling with the plane mean.  Deterministic given the RNG state.
void spec_augment(std::vector<float>& plane, std::size_t f, std::size_t t,
                  const SpecAugmentConfig& cfg, Rng& rng);

// Uniformly random crop start for a crop_t-frame window; 0 when the
// utterance is shorter than the window.
std::size_t pick_crop_start(std::size_t n_frames, std::size_t crop_t,
                            Rng& rng);

// Fixed-width window [start, start+crop_t) of an F x T plane; columns past
// the end repeat the final frame (edge padding for short utterances).
std::vector<float> crop_plane(const std::vector<float>& plane, std::size_t f,
                              std::size_t t, std::size_t start,
                              std::size_t crop_t);

// ---------------------------------------------------------------------------
// stage loop and ablation harness

struct StageResult {
  std::vector<TrainRecord> records;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Runs one training stage in place.  When out_dir is nonempty, checkpoints
// land there every checkpoint_every steps plus a final one, and the
// TrainRecord log is written as JSONL.  A non-finite loss aborts with the
// last periodic checkpoint intact.
StageResult run_stage(const TrainingConfig& cfg, ModelBundle<float>& bundle,
                      const std::vector<ExampleTriple>& data,
                      const std::string& out_dir = "");

// Mean metrics of the full two-stage pipeline against the clean reference.
MetricsReport evaluate_bundle(const ModelBundle<float>& bundle,
                              const std::vector<ExampleTriple>& data,
                              const LpcFrameConfig& metric_cfg = {});

// RI-net-only evaluation on clean-magnitude/noisy-phase inputs (the
// pre-training feed): mean metrics of its synthesized outputs against
// clean.
MetricsReport evaluate_ri2ri_stage(const ModelBundle<float>& bundle,
                                   const std::vector<ExampleTriple>& data,
                                   const LpcFrameConfig& metric_cfg = {});

// Magnitude-net-only evaluation: enhanced magnitude recombined with the
// noisy phase, synthesized, scored against clean.
MetricsReport evaluate_s2s_stage(const ModelBundle<float>& bundle,
                                 const std::vector<ExampleTriple>& data,
                                 const LpcFrameConfig& metric_cfg = {});

struct AblationRow {
  std::string label;
  bool freeze_s2s = false;
  bool freeze_ri2ri = false;
  MetricsReport mean;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // fixed 4-row grid
};

// Fine-tunes the four freeze combinations from the same pre-trained bundle
// with identical seeds and evaluates each with the full pipeline.
AblationResult run_ablation(const ModelBundle<float>& pretrained,
                            const std::vector<ExampleTriple>& data,
                            const TrainingConfig& finetune_cfg,
                            const std::string& out_dir = "");

Table ablation_table(const AblationResult& result);

}  // namespace derevb

#endif  // DEREVB_TRAINING_HPP
