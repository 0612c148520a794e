#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "spin/manifest.hpp"
#include "spin/metrics.hpp"
#include "spin/model.hpp"
#include "spin/volume.hpp"

namespace spin {

class KeyValue;

enum class LossKind { bce, soft_dice };

std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 60;
  int batch_size = 8;
  int steps_per_epoch = 0;  // 0 = ceil(dataset windows / batch_size)
  uint64_t seed = 42;
  LossKind loss = LossKind::bce;
  // Piecewise-constant (epoch_start, value) schedules. The desk-scale default
  // keeps the shape of the 1600-epoch schedule: learning-rate drops at 25%
  // and 87.5% of training, augmentation probability halved at 87.5%.
  std::vector<std::pair<int, double>> lr_schedule = {{0, 3e-4}, {15, 1e-4}, {52, 5e-5}};
  std::vector<std::pair<int, double>> aug_schedule = {{0, 1.0}, {52, 0.5}};
  int checkpoint_every = 0;  // epochs between intermediate checkpoints, 0 = final only
  ModelConfig model;

  // The published 1600-epoch schedule.
  static TrainConfig paper();

  void validate() const;
  KeyValue to_kv() const;
  static TrainConfig from_kv(const KeyValue& kv);
};

// Value of the last schedule entry whose epoch_start is <= epoch.
double lr_at(const std::vector<std::pair<int, double>>& schedule, int epoch);

// Model configuration as stored next to checkpoints: architecture fields plus
// the training-split padding mean and the seed.
KeyValue model_config_kv(const ModelConfig& cfg, float pad_mean, uint64_t seed);
ModelConfig model_config_from_kv(const KeyValue& kv, float* pad_mean = nullptr);

struct TrainResult {
  std::vector<std::pair<long long, double>> loss_curve;  // (step, loss)
  long long steps = 0;
  float pad_mean = 0.0f;
};

// Returning false stops training after the current epoch.
using EpochCallback = std::function<bool(int epoch, SpinModel<float>& model)>;

// Train `model` on the given volumes (normalized internally; all volumes must
// share H x W). Windows are sampled with the 95% lesion-center bias and
// augmented per the schedule; one Adam step per batch. Fully reproducible
// under a fixed seed. When `checkpoint_dir` is non-empty, intermediate and
// final checkpoints (with optimizer state) are written there.
TrainResult train(SpinModel<float>& model, const std::vector<Volume>& train_volumes,
                  const TrainConfig& cfg, const std::string& checkpoint_dir = "",
                  const EpochCallback& on_epoch = nullptr);

struct VolumePrediction {
  std::vector<float> confidence;  // C*H*W in (0,1)
  std::vector<uint8_t> binary;    // confidence > 0.5
};

// Slide the window over every slice (t = 0..C-1) of a volume and stack the
// per-window confidence maps; each output slice comes from exactly one
// window. The volume is normalized internally; `mu` is the training-split
// mean used for boundary padding.
VolumePrediction predict_volume(SpinModel<float>& model, const Volume& v, float mu,
                                int batch = 8);

struct MetricsReport {
  std::string method = "spin";
  MetricValues per_image, per_volume, aggregate, small_lesion;
  ConfusionCounts aggregate_counts, small_lesion_counts;
  long long images = 0, volumes = 0, small_lesion_images = 0;
  std::vector<std::pair<std::string, std::string>> config_echo;

  // Tab-separated table (method, granularity, dsc, iou, precision, recall).
  std::string to_tsv() const;
  // Machine-readable key=value block.
  std::string to_kv_text() const;
};

// Confusion aggregated at image, volume and whole-set granularity over the
// labeled test volumes; small-lesion metrics cover only the listed
// (volume id, slice) pairs.
MetricsReport evaluate(SpinModel<float>& model, const std::vector<Volume>& test_volumes,
                       const std::vector<std::pair<std::string, int>>& small_lesion_images,
                       float mu, const std::string& method_name = "spin");

struct AblationArm {
  std::string label;
  Guidance guidance = Guidance::spg;
  Downsampler downsampler = Downsampler::learnable;
  LossKind loss = LossKind::bce;
};

// Arms in the published ablation-table row order (the "additional
// convolutions" row is not part of the harness).
std::vector<AblationArm> ablation_arms();

// Train and evaluate every arm on identical data and seed. When `out_dir` is
// non-empty, per-arm checkpoints land in subdirectories there.
std::vector<MetricsReport> run_ablation(const std::vector<Volume>& all_volumes,
                                        const SplitManifest& manifest, const TrainConfig& base,
                                        const std::string& out_dir = "");

// One combined table, one row block per arm.
std::string ablation_table(const std::vector<MetricsReport>& reports);

}  // namespace spin
