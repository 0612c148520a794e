#include "spin/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "spin/augment.hpp"
#include "spin/checkpoint.hpp"
#include "spin/config.hpp"
#include "spin/losses.hpp"
#include "spin/window.hpp"

namespace spin {

std::string to_string(LossKind k) { return k == LossKind::bce ? "bce" : "soft_dice"; }

LossKind loss_from_string(const std::string& s) {
  if (s == "bce") return LossKind::bce;
  if (s == "soft_dice") return LossKind::soft_dice;
  fail("unknown loss '" + s + "' (expected bce|soft_dice)");
}

TrainConfig TrainConfig::paper() {
  TrainConfig cfg;
  cfg.epochs = 1600;
  cfg.lr_schedule = {{0, 3e-4}, {400, 1e-4}, {1400, 5e-5}};
  cfg.aug_schedule = {{0, 1.0}, {1400, 0.5}};
  return cfg;
}

void TrainConfig::validate() const {
  check(epochs >= 1, "train config: epochs must be positive");
  check(batch_size >= 1, "train config: batch_size must be positive");
  check(steps_per_epoch >= 0, "train config: steps_per_epoch must be non-negative");
  check(!lr_schedule.empty(), "train config: empty lr_schedule");
  for (size_t i = 0; i < lr_schedule.size(); ++i) {
    check(lr_schedule[i].second > 0.0, "train config: learning rates must be positive");
    if (i) {
      check(lr_schedule[i].first > lr_schedule[i - 1].first,
            "train config: lr_schedule epochs must be strictly increasing");
    }
  }
  check(!aug_schedule.empty(), "train config: empty aug_schedule");
  for (size_t i = 0; i < aug_schedule.size(); ++i) {
    check(aug_schedule[i].second >= 0.0 && aug_schedule[i].second <= 1.0,
          "train config: augmentation probabilities must be in [0,1]");
    if (i) {
      check(aug_schedule[i].first > aug_schedule[i - 1].first,
            "train config: aug_schedule epochs must be strictly increasing");
    }
  }
  check(checkpoint_every >= 0, "train config: checkpoint_every must be non-negative");
  model.validate();
}

KeyValue TrainConfig::to_kv() const {
  KeyValue kv;
  kv.set_int("epochs", epochs);
  kv.set_int("batch_size", batch_size);
  kv.set_int("steps_per_epoch", steps_per_epoch);
  kv.set_int("seed", static_cast<long long>(seed));
  kv.set("loss", to_string(loss));
  kv.set("lr_schedule", format_schedule(lr_schedule));
  kv.set("aug_schedule", format_schedule(aug_schedule));
  kv.set_int("checkpoint_every", checkpoint_every);
  kv.set_int("input_slices", model.input_slices);
  kv.set("encoder_channels", format_int_list(model.encoder_channels));
  kv.set_int("final2x_channels", model.final2x_channels);
  kv.set("guidance", to_string(model.guidance));
  kv.set("downsampler", to_string(model.downsampler));
  kv.set_int("output_classes", model.output_classes);
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValue& kv) {
  TrainConfig cfg;
  for (const auto& [key, value] : kv.items()) {
    if (key == "epochs") cfg.epochs = static_cast<int>(kv.get_int(key));
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(kv.get_int(key));
    else if (key == "steps_per_epoch") cfg.steps_per_epoch = static_cast<int>(kv.get_int(key));
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(kv.get_int(key));
    else if (key == "loss") cfg.loss = loss_from_string(value);
    else if (key == "lr_schedule") cfg.lr_schedule = parse_schedule(value);
    else if (key == "aug_schedule") cfg.aug_schedule = parse_schedule(value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = static_cast<int>(kv.get_int(key));
    else if (key == "input_slices") cfg.model.input_slices = static_cast<int>(kv.get_int(key));
    else if (key == "encoder_channels") cfg.model.encoder_channels = parse_int_list(value);
    else if (key == "final2x_channels")
      cfg.model.final2x_channels = static_cast<int>(kv.get_int(key));
    else if (key == "guidance") cfg.model.guidance = guidance_from_string(value);
    else if (key == "downsampler") cfg.model.downsampler = downsampler_from_string(value);
    else if (key == "output_classes")
      cfg.model.output_classes = static_cast<int>(kv.get_int(key));
    else if (key == "pad_mean" || key == "init_seed") continue;  // provenance extras
    else fail("train config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

double lr_at(const std::vector<std::pair<int, double>>& schedule, int epoch) {
  check(!schedule.empty(), "lr_at: empty schedule");
  check(epoch >= 0, "lr_at: negative epoch");
  double v = schedule.front().second;
  for (const auto& [start, value] : schedule) {
    if (start <= epoch) v = value;
  }
  return v;
}

KeyValue model_config_kv(const ModelConfig& cfg, float pad_mean, uint64_t seed) {
  KeyValue kv;
  kv.set_int("input_slices", cfg.input_slices);
  kv.set("encoder_channels", format_int_list(cfg.encoder_channels));
  kv.set_int("final2x_channels", cfg.final2x_channels);
  kv.set("guidance", to_string(cfg.guidance));
  kv.set("downsampler", to_string(cfg.downsampler));
  kv.set_int("output_classes", cfg.output_classes);
  kv.set_double("pad_mean", pad_mean);
  kv.set_int("seed", static_cast<long long>(seed));
  return kv;
}

ModelConfig model_config_from_kv(const KeyValue& kv, float* pad_mean) {
  ModelConfig cfg;
  for (const auto& [key, value] : kv.items()) {
    if (key == "input_slices") cfg.input_slices = static_cast<int>(kv.get_int(key));
    else if (key == "encoder_channels") cfg.encoder_channels = parse_int_list(value);
    else if (key == "final2x_channels") cfg.final2x_channels = static_cast<int>(kv.get_int(key));
    else if (key == "guidance") cfg.guidance = guidance_from_string(value);
    else if (key == "downsampler") cfg.downsampler = downsampler_from_string(value);
    else if (key == "output_classes") cfg.output_classes = static_cast<int>(kv.get_int(key));
    else if (key == "pad_mean") {
      if (pad_mean) *pad_mean = static_cast<float>(kv.get_double(key));
    } else if (key == "seed" || key == "init_seed") {
      continue;
    } else {
      fail("model config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

namespace {

// Stack augmented windows into (B, c, H, W) input and (B, 1, H, W) target.
void stack_batch(const std::vector<SliceWindow>& windows, Tensor<float>& x,
                 Tensor<float>& ybar) {
  const int B = static_cast<int>(windows.size());
  const int c = windows[0].c, H = windows[0].H, W = windows[0].W;
  x = Tensor<float>::zeros({B, c, H, W});
  ybar = Tensor<float>::zeros({B, 1, H, W});
  const long long se = static_cast<long long>(H) * W;
  for (int b = 0; b < B; ++b) {
    const SliceWindow& w = windows[b];
    check(w.c == c && w.H == H && w.W == W, "train: mixed window shapes in one batch");
    std::copy(w.x.begin(), w.x.end(), x.data().begin() + static_cast<long long>(b) * c * se);
    check(!w.ybar.empty(), "train: window without labels");
    float* yb = ybar.data().data() + static_cast<long long>(b) * se;
    for (long long i = 0; i < se; ++i) yb[i] = static_cast<float>(w.ybar[i]);
  }
}

std::string input_stats(const Tensor<float>& x) {
  float lo = x.data()[0], hi = x.data()[0];
  double mean = 0.0;
  for (const float v : x.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= static_cast<double>(x.numel());
  std::ostringstream os;
  os << "min=" << lo << " max=" << hi << " mean=" << mean;
  return os.str();
}

}  // namespace

TrainResult train(SpinModel<float>& model, const std::vector<Volume>& train_volumes,
                  const TrainConfig& cfg, const std::string& checkpoint_dir,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  check(!train_volumes.empty(), "train: no training volumes");
  std::vector<Volume> normed;
  normed.reserve(train_volumes.size());
  for (const Volume& v : train_volumes) {
    check(v.has_labels(), "train: volume '" + v.id + "' has no labels");
    check(v.H == train_volumes[0].H && v.W == train_volumes[0].W,
          "train: volumes must share spatial extents ('" + v.id + "' differs)");
    normed.push_back(normalize_volume(v));
  }
  Dataset ds = Dataset::build(std::move(normed), cfg.model.input_slices);

  TrainResult result;
  result.pad_mean = ds.pad_mean;

  Rng rng(cfg.seed);
  auto params = model.parameters();
  AdamState<float> adam;
  adam.init(params);

  const long long steps_per_epoch =
      cfg.steps_per_epoch > 0
          ? cfg.steps_per_epoch
          : (ds.total_windows() + cfg.batch_size - 1) / cfg.batch_size;

  long long gstep = 0;
  bool stopped = false;
  for (int epoch = 0; epoch < cfg.epochs && !stopped; ++epoch) {
    const float lr = static_cast<float>(lr_at(cfg.lr_schedule, epoch));
    const double aug_p = lr_at(cfg.aug_schedule, epoch);
    for (long long s = 0; s < steps_per_epoch; ++s) {
      std::vector<SliceWindow> batch;
      batch.reserve(static_cast<size_t>(cfg.batch_size));
      for (int b = 0; b < cfg.batch_size; ++b)
        batch.push_back(augment(sample_training_window(ds, rng), rng, aug_p));
      Tensor<float> x, ybar;
      stack_batch(batch, x, ybar);

      auto fwd = model.forward_full(x);
      Tensor<float> loss = cfg.loss == LossKind::bce ? bce_loss(fwd.f, ybar)
                                                     : soft_dice_loss(fwd.f, ybar);
      const double lv = static_cast<double>(loss.scalar());
      if (!std::isfinite(lv)) {
        throw std::runtime_error("train: non-finite loss at step " + std::to_string(gstep + 1) +
                                 " (epoch " + std::to_string(epoch) + "); input " +
                                 input_stats(x));
      }
      model.zero_grad();
      loss.backward();
      adam_step(params, adam, lr);
      ++gstep;
      result.loss_curve.emplace_back(gstep, lv);
    }
    if (!checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d.ckpt", epoch + 1);
      save_checkpoint((std::filesystem::path(checkpoint_dir) / name).string(),
                      model.named_parameters(), &adam);
    }
    if (on_epoch && !on_epoch(epoch, model)) stopped = true;
  }
  result.steps = gstep;
  if (!checkpoint_dir.empty()) {
    save_checkpoint((std::filesystem::path(checkpoint_dir) / "checkpoint_final.ckpt").string(),
                    model.named_parameters(), &adam);
  }
  return result;
}

VolumePrediction predict_volume(SpinModel<float>& model, const Volume& v, float mu, int batch) {
  check(batch >= 1, "predict_volume: batch must be positive");
  const Volume normed = normalize_volume(v);
  const int c = model.config().input_slices;
  const PaddedVolume padded = mean_pad(normed, c, mu);
  const long long se = normed.slice_elems();

  VolumePrediction out;
  out.confidence.assign(static_cast<size_t>(normed.voxels()), 0.0f);

  NoGradGuard ng;
  for (int t0 = 0; t0 < normed.C; t0 += batch) {
    const int bsz = std::min(batch, normed.C - t0);
    Tensor<float> x = Tensor<float>::zeros({bsz, c, normed.H, normed.W});
    for (int b = 0; b < bsz; ++b) {
      const SliceWindow w = extract_window(padded, normed, t0 + b);
      std::copy(w.x.begin(), w.x.end(),
                x.data().begin() + static_cast<long long>(b) * c * se);
    }
    auto fwd = model.forward_full(x);
    for (int b = 0; b < bsz; ++b) {
      std::copy_n(fwd.f.data().begin() + static_cast<long long>(b) * se, se,
                  out.confidence.begin() + static_cast<long long>(t0 + b) * se);
    }
  }
  // f is a convex combination of sigmoid outputs; float rounding of the
  // softmax weights can push a saturated pixel one ulp outside [0,1]
  for (auto& v : out.confidence) v = std::min(1.0f, std::max(0.0f, v));
  out.binary = threshold(out.confidence, 0.5);
  return out;
}

namespace {

std::string tsv_row(const std::string& method, const std::string& granularity,
                    const MetricValues& m) {
  std::ostringstream os;
  os << method << '\t' << granularity << '\t' << format_double(m.dsc) << '\t'
     << format_double(m.iou) << '\t' << format_double(m.precision) << '\t'
     << format_double(m.recall);
  return os.str();
}

}  // namespace

std::string MetricsReport::to_tsv() const {
  std::ostringstream os;
  os << "method\tgranularity\tdsc\tiou\tprecision\trecall\n";
  os << tsv_row(method, "per_image", per_image) << "\n";
  os << tsv_row(method, "per_volume", per_volume) << "\n";
  os << tsv_row(method, "aggregate", aggregate) << "\n";
  os << tsv_row(method, "small_lesion", small_lesion) << "\n";
  return os.str();
}

std::string MetricsReport::to_kv_text() const {
  KeyValue kv;
  kv.set("method", method);
  kv.set_int("images", images);
  kv.set_int("volumes", volumes);
  kv.set_int("small_lesion_images", small_lesion_images);
  kv.set_int("aggregate_tp", static_cast<long long>(aggregate_counts.tp));
  kv.set_int("aggregate_fp", static_cast<long long>(aggregate_counts.fp));
  kv.set_int("aggregate_fn", static_cast<long long>(aggregate_counts.fn));
  kv.set_int("aggregate_tn", static_cast<long long>(aggregate_counts.tn));
  kv.set_double("per_image_dsc", per_image.dsc);
  kv.set_double("per_image_iou", per_image.iou);
  kv.set_double("per_image_precision", per_image.precision);
  kv.set_double("per_image_recall", per_image.recall);
  kv.set_double("per_volume_dsc", per_volume.dsc);
  kv.set_double("per_volume_iou", per_volume.iou);
  kv.set_double("per_volume_precision", per_volume.precision);
  kv.set_double("per_volume_recall", per_volume.recall);
  kv.set_double("aggregate_dsc", aggregate.dsc);
  kv.set_double("aggregate_iou", aggregate.iou);
  kv.set_double("aggregate_precision", aggregate.precision);
  kv.set_double("aggregate_recall", aggregate.recall);
  kv.set_double("small_lesion_dsc", small_lesion.dsc);
  kv.set_double("small_lesion_iou", small_lesion.iou);
  kv.set_double("small_lesion_precision", small_lesion.precision);
  kv.set_double("small_lesion_recall", small_lesion.recall);
  for (const auto& [k, v] : config_echo) kv.set("config." + k, v);
  return kv.serialize();
}

MetricsReport evaluate(SpinModel<float>& model, const std::vector<Volume>& test_volumes,
                       const std::vector<std::pair<std::string, int>>& small_lesion_images,
                       float mu, const std::string& method_name) {
  check(!test_volumes.empty(), "evaluate: no test volumes");
  MetricsReport report;
  report.method = method_name;

  MetricValues image_sum, volume_sum;
  for (const Volume& v : test_volumes) {
    check(v.has_labels(), "evaluate: volume '" + v.id + "' has no labels");
    const VolumePrediction pred = predict_volume(model, v, mu);
    ConfusionCounts volume_counts;
    const long long se = v.slice_elems();
    for (int t = 0; t < v.C; ++t) {
      std::vector<uint8_t> p(pred.binary.begin() + t * se, pred.binary.begin() + (t + 1) * se);
      std::vector<uint8_t> g(v.labels.begin() + t * se, v.labels.begin() + (t + 1) * se);
      const ConfusionCounts cc = confusion(p, g);
      volume_counts += cc;
      const MetricValues m = metrics(cc);
      image_sum.dsc += m.dsc;
      image_sum.iou += m.iou;
      image_sum.precision += m.precision;
      image_sum.recall += m.recall;
      ++report.images;

      for (const auto& [id, slice] : small_lesion_images) {
        if (id == v.id && slice == t) {
          report.small_lesion_counts += cc;
          ++report.small_lesion_images;
        }
      }
    }
    report.aggregate_counts += volume_counts;
    const MetricValues vm = metrics(volume_counts);
    volume_sum.dsc += vm.dsc;
    volume_sum.iou += vm.iou;
    volume_sum.precision += vm.precision;
    volume_sum.recall += vm.recall;
    ++report.volumes;
  }

  const double ni = static_cast<double>(report.images);
  const double nv = static_cast<double>(report.volumes);
  report.per_image = {image_sum.dsc / ni, image_sum.iou / ni, image_sum.precision / ni,
                      image_sum.recall / ni};
  report.per_volume = {volume_sum.dsc / nv, volume_sum.iou / nv, volume_sum.precision / nv,
                       volume_sum.recall / nv};
  report.aggregate = metrics(report.aggregate_counts);
  report.small_lesion = metrics(report.small_lesion_counts);
  return report;
}

std::vector<AblationArm> ablation_arms() {
  return {
      {"baseline_no_spg_no_ld", Guidance::none, Downsampler::bilinear, LossKind::bce},
      {"no_spg", Guidance::none, Downsampler::learnable, LossKind::bce},
      {"spg_bilinear_upsampling", Guidance::bilinear_input, Downsampler::learnable,
       LossKind::bce},
      {"spg_nearest_upsampling", Guidance::nearest_input, Downsampler::learnable,
       LossKind::bce},
      {"ld_fixed_downsampling", Guidance::spg, Downsampler::bilinear, LossKind::bce},
      {"full_soft_dice", Guidance::spg, Downsampler::learnable, LossKind::soft_dice},
      {"full", Guidance::spg, Downsampler::learnable, LossKind::bce},
  };
}

std::vector<MetricsReport> run_ablation(const std::vector<Volume>& all_volumes,
                                        const SplitManifest& manifest, const TrainConfig& base,
                                        const std::string& out_dir) {
  const std::vector<Volume> train_vols = select_volumes(all_volumes, manifest.train_ids);
  const std::vector<Volume> test_vols = select_volumes(all_volumes, manifest.test_ids);

  std::vector<MetricsReport> reports;
  for (const AblationArm& arm : ablation_arms()) {
    TrainConfig cfg = base;
    cfg.loss = arm.loss;
    cfg.model.guidance = arm.guidance;
    cfg.model.downsampler = arm.downsampler;
    SpinModel<float> model(cfg.model, cfg.seed);
    std::string arm_dir;
    if (!out_dir.empty()) {
      arm_dir = (std::filesystem::path(out_dir) / arm.label).string();
      std::filesystem::create_directories(arm_dir);
    }
    const TrainResult tr = train(model, train_vols, cfg, arm_dir);
    const KeyValue kv = cfg.to_kv();
    if (!arm_dir.empty()) {
      kv.save((std::filesystem::path(arm_dir) / "train.cfg").string(),
              "ablation arm " + arm.label);
      model_config_kv(cfg.model, tr.pad_mean, cfg.seed)
          .save((std::filesystem::path(arm_dir) / "model.cfg").string(),
                "ablation arm " + arm.label);
    }
    MetricsReport report = evaluate(model, test_vols, manifest.small_lesion_images,
                                    tr.pad_mean, arm.label);
    for (const auto& [k, v] : kv.items()) report.config_echo.emplace_back(k, v);
    reports.push_back(std::move(report));
  }
  return reports;
}

std::string ablation_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << "method\tgranularity\tdsc\tiou\tprecision\trecall\n";
  for (const MetricsReport& r : reports) {
    os << tsv_row(r.method, "per_image", r.per_image) << "\n";
    os << tsv_row(r.method, "per_volume", r.per_volume) << "\n";
    os << tsv_row(r.method, "aggregate", r.aggregate) << "\n";
    os << tsv_row(r.method, "small_lesion", r.small_lesion) << "\n";
  }
  return os.str();
}

}  // namespace spin
