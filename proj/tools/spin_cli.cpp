// Command-line driver: synthetic data generation, splitting, training,
// prediction, evaluation, the ablation harness, gradient checking and
// parameter accounting.
//
// Exit codes: 0 success, 1 usage error (bad flags, missing files, malformed
// configs), 2 runtime failure (numeric errors, I/O mid-run).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spin/augment.hpp"
#include "spin/checkpoint.hpp"
#include "spin/config.hpp"
#include "spin/gradcheck.hpp"
#include "spin/image.hpp"
#include "spin/losses.hpp"
#include "spin/manifest.hpp"
#include "spin/model.hpp"
#include "spin/synth.hpp"
#include "spin/train.hpp"
#include "spin/volume.hpp"
#include "spin/window.hpp"

namespace fs = std::filesystem;
using namespace spin;

namespace {

// Thrown for problems the user can fix (missing files, malformed configs).
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw UsageError(what + " '" + path + "' does not exist");
}

KeyValue load_config_file(const std::string& path) {
  require_file(path, "config file");
  try {
    return KeyValue::load(path);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct ModelOptions {
  int input_slices = 5;
  std::string encoder_channels = "32,64,128,256";
  std::string guidance = "spg";
  std::string downsampler = "learnable";

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--input-slices", input_slices, "window width c (odd)");
    cmd->add_option("--encoder-channels", encoder_channels, "comma-separated encoder widths");
    cmd->add_option("--guidance", guidance, "spg|bilinear_input|nearest_input|none");
    cmd->add_option("--downsampler", downsampler, "learnable|bilinear|nearest");
  }

  ModelConfig to_config() const {
    ModelConfig cfg;
    cfg.input_slices = input_slices;
    cfg.encoder_channels = parse_int_list(encoder_channels);
    cfg.guidance = guidance_from_string(guidance);
    cfg.downsampler = downsampler_from_string(downsampler);
    cfg.validate();
    return cfg;
  }
};

// Model configuration stored next to a checkpoint, including the padding mean.
struct StoredModel {
  ModelConfig cfg;
  float pad_mean = 0.0f;
};

StoredModel load_model_config(const std::string& path) {
  const KeyValue kv = load_config_file(path);
  StoredModel sm;
  try {
    sm.cfg = model_config_from_kv(kv, &sm.pad_mean);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return sm;
}

void save_model_config(const std::string& path, const ModelConfig& cfg, float pad_mean,
                       uint64_t seed) {
  model_config_kv(cfg, pad_mean, seed).save(path, "spin model configuration");
}

void log_config(const KeyValue& kv) {
  std::cout << "resolved configuration:\n";
  for (const auto& [k, v] : kv.items()) std::cout << "  " << k << "=" << v << "\n";
}

std::vector<Volume> load_data_dir(const std::string& dir) {
  require_file(dir, "data directory");
  try {
    return load_volume_dir(dir);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// ---- subcommand implementations ---------------------------------------------

int cmd_synth(const std::string& out_dir, int volumes, const std::string& shape,
              int lesions_per_slice, double small_fraction, int lesion_min, int lesion_max,
              uint64_t seed) {
  const std::vector<int> cshw = parse_int_list(shape);
  if (cshw.size() != 3) throw UsageError("--shape expects C,H,W");
  SynthSpec spec;
  spec.C = cshw[0];
  spec.H = cshw[1];
  spec.W = cshw[2];
  spec.lesions_per_slice = lesions_per_slice;
  spec.small_lesion_fraction = small_fraction;
  spec.large_area_min = lesion_min;
  spec.large_area_max = lesion_max;
  spec.validate();

  KeyValue prov;
  prov.set("command", "synth");
  prov.set_int("volumes", volumes);
  prov.set("shape", shape);
  prov.set_int("lesions_per_slice", lesions_per_slice);
  prov.set_double("small_lesion_fraction", small_fraction);
  prov.set_int("lesion_area_min", lesion_min);
  prov.set_int("lesion_area_max", lesion_max);
  prov.set_int("seed", static_cast<long long>(seed));
  log_config(prov);

  Rng rng(seed);
  fs::create_directories(out_dir);
  const std::vector<Volume> vols = generate_synthetic_corpus(rng, spec, volumes);
  for (const Volume& v : vols) write_volume((fs::path(out_dir) / (v.id + ".spv")).string(), v);
  prov.save((fs::path(out_dir) / "provenance.txt").string(), "synth run configuration");
  std::cout << "wrote " << vols.size() << " volumes to " << out_dir << "\n";
  return 0;
}

int cmd_split(const std::string& data_dir, const std::string& out_path, double test_fraction,
              uint64_t seed) {
  KeyValue prov;
  prov.set("command", "split");
  prov.set("data", data_dir);
  prov.set_double("test_fraction", test_fraction);
  prov.set_int("seed", static_cast<long long>(seed));
  log_config(prov);
  const std::vector<Volume> vols = load_data_dir(data_dir);
  Rng rng(seed);
  const SplitManifest manifest = build_split(vols, rng, test_fraction);
  std::ostringstream header;
  header << "split data=" << data_dir << " test_fraction=" << format_double(test_fraction)
         << " seed=" << seed;
  manifest.save(out_path, header.str());
  std::cout << "manifest: " << manifest.train_ids.size() << " train / "
            << manifest.test_ids.size() << " test volumes, "
            << manifest.small_lesion_images.size() << " small-lesion images -> " << out_path
            << "\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& manifest_path,
              const std::string& out_dir, const std::string& config_path,
              const std::vector<std::string>& overrides) {
  KeyValue kv;
  if (!config_path.empty()) kv = load_config_file(config_path);
  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + ov + "'");
    kv.set(ov.substr(0, eq), ov.substr(eq + 1));
  }
  TrainConfig cfg;
  try {
    cfg = TrainConfig::from_kv(kv);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  log_config(cfg.to_kv());

  std::vector<Volume> train_vols = load_data_dir(data_dir);
  if (!manifest_path.empty()) {
    require_file(manifest_path, "manifest");
    const SplitManifest manifest = SplitManifest::load(manifest_path);
    train_vols = select_volumes(train_vols, manifest.train_ids);
  }
  std::cout << "training on " << train_vols.size() << " volumes\n";

  fs::create_directories(out_dir);
  SpinModel<float> model(cfg.model, cfg.seed);
  std::cout << "steps per epoch: "
            << (cfg.steps_per_epoch > 0 ? std::to_string(cfg.steps_per_epoch)
                                        : "auto (ceil(windows / batch))")
            << "\n";
  const TrainResult result = train(model, train_vols, cfg, out_dir);

  save_model_config((fs::path(out_dir) / "model.cfg").string(), cfg.model, result.pad_mean,
                    cfg.seed);
  const KeyValue train_kv = cfg.to_kv();
  train_kv.save((fs::path(out_dir) / "train.cfg").string(), "training configuration");
  std::ostringstream curve;
  curve << "# seed=" << cfg.seed << " loss=" << to_string(cfg.loss)
        << " batch_size=" << cfg.batch_size << "\n# step loss\n";
  for (const auto& [step, loss] : result.loss_curve)
    curve << step << " " << format_double(loss) << "\n";
  write_file_atomic((fs::path(out_dir) / "loss_curve.txt").string(), curve.str());
  std::cout << "trained " << result.steps << " steps; final loss "
            << format_double(result.loss_curve.empty() ? 0.0
                                                       : result.loss_curve.back().second)
            << "\ncheckpoint: " << (fs::path(out_dir) / "checkpoint_final.ckpt").string()
            << "\n";
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& config_path,
                const std::string& data_dir, const std::string& volume_path,
                const std::string& out_dir, bool overlay, const std::string& dump_features) {
  require_file(checkpoint, "checkpoint");
  const StoredModel sm = load_model_config(config_path);
  {
    KeyValue resolved = model_config_kv(sm.cfg, sm.pad_mean, 0);
    resolved.set("checkpoint", checkpoint);
    log_config(resolved);
  }
  SpinModel<float> model(sm.cfg, 0);
  load_checkpoint(checkpoint, model.named_parameters());

  std::vector<Volume> vols;
  if (!volume_path.empty()) {
    require_file(volume_path, "volume");
    vols.push_back(read_volume(volume_path));
  } else {
    vols = load_data_dir(data_dir);
  }
  fs::create_directories(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  long long images = 0;
  for (const Volume& v : vols) {
    const VolumePrediction pred = predict_volume(model, v, sm.pad_mean);
    images += v.C;
    Volume out;
    out.id = v.id + "_confidence";
    out.C = v.C;
    out.H = v.H;
    out.W = v.W;
    out.intensities = pred.confidence;
    out.labels = pred.binary;
    write_volume((fs::path(out_dir) / (out.id + ".spv")).string(), out);
    Volume mask;
    mask.id = v.id + "_mask";
    mask.C = v.C;
    mask.H = v.H;
    mask.W = v.W;
    mask.intensities.assign(pred.binary.begin(), pred.binary.end());
    mask.labels = pred.binary;
    write_volume((fs::path(out_dir) / (mask.id + ".spv")).string(), mask);
    if (overlay) {
      const Volume normed = normalize_volume(v);
      for (int t = 0; t < v.C; ++t) {
        char name[64];
        std::snprintf(name, sizeof(name), "_slice_%03d.ppm", t);
        write_overlay_ppm((fs::path(out_dir) / (v.id + name)).string(), normed.slice(t),
                          pred.binary.data() + t * v.slice_elems(), v.H, v.W);
      }
    }
    if (!dump_features.empty()) {
      // Diagnostic dump of the intermediate products for the center window.
      fs::create_directories(dump_features);
      const Volume normed = normalize_volume(v);
      const PaddedVolume padded = mean_pad(normed, sm.cfg.input_slices, sm.pad_mean);
      const SliceWindow w = extract_window(padded, normed, v.C / 2);
      NoGradGuard ng;
      Tensor<float> x = Tensor<float>::from_data({1, w.c, w.H, w.W}, std::vector<float>(w.x));
      const auto fwd = model.forward_full(x);
      auto dump = [&](const Tensor<float>& t, const std::string& name) {
        std::vector<const float*> planes;
        const long long plane = static_cast<long long>(t.dim(2)) * t.dim(3);
        for (int c = 0; c < t.dim(1); ++c) planes.push_back(t.data().data() + c * plane);
        write_feature_grid_pgm((fs::path(dump_features) / (v.id + "_" + name + ".pgm")).string(),
                               planes, t.dim(2), t.dim(3));
      };
      dump(fwd.g, "g");
      dump(fwd.f0, "f0");
      dump(fwd.h, "h");
      if (sm.cfg.guidance == Guidance::spg) {
        const int div = model.spatial_divisor();
        const int Hp = (w.H + div - 1) / div * div, Wp = (w.W + div - 1) / div * div;
        dump(model.spg_forward(pad_hw(x, Hp - w.H, Wp - w.W)).embed2x, "spg_embedding");
      }
    }
    std::cout << "predicted " << v.id << "\n";
  }

  const double el =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (images > 0)
    std::printf("inference: %lld images in %.2fs (%.1f ms/image)\n", images, el,
                1e3 * el / static_cast<double>(images));

  KeyValue prov;
  prov.set("command", "predict");
  prov.set("checkpoint", checkpoint);
  prov.set("model_config", config_path);
  prov.set_double("pad_mean", sm.pad_mean);
  prov.save((fs::path(out_dir) / "provenance.txt").string(), "predict run configuration");
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path,
             const std::string& data_dir, const std::string& manifest_path,
             const std::string& out_dir, const std::string& method) {
  require_file(checkpoint, "checkpoint");
  require_file(manifest_path, "manifest");
  const StoredModel sm = load_model_config(config_path);
  {
    KeyValue resolved = model_config_kv(sm.cfg, sm.pad_mean, 0);
    resolved.set("checkpoint", checkpoint);
    resolved.set("manifest", manifest_path);
    log_config(resolved);
  }
  SpinModel<float> model(sm.cfg, 0);
  load_checkpoint(checkpoint, model.named_parameters());

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Volume> all = load_data_dir(data_dir);
  const SplitManifest manifest = SplitManifest::load(manifest_path);
  const std::vector<Volume> test_vols = select_volumes(all, manifest.test_ids);

  MetricsReport report = evaluate(model, test_vols, manifest.small_lesion_images, sm.pad_mean,
                                  method);
  report.config_echo.emplace_back("checkpoint", checkpoint);
  report.config_echo.emplace_back("manifest", manifest_path);
  report.config_echo.emplace_back("pad_mean", format_double(sm.pad_mean));

  fs::create_directories(out_dir);
  write_file_atomic((fs::path(out_dir) / "metrics.tsv").string(), report.to_tsv());
  write_file_atomic((fs::path(out_dir) / "metrics.kv").string(), report.to_kv_text());
  std::cout << report.to_tsv();
  const double el =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (report.images > 0)
    std::printf("evaluated %lld images in %.2fs (%.1f ms/image)\n", report.images, el,
                1e3 * el / static_cast<double>(report.images));
  return 0;
}

int cmd_ablate(const std::string& data_dir, const std::string& manifest_path,
               const std::string& out_dir, const std::string& config_path,
               const std::vector<std::string>& overrides) {
  require_file(manifest_path, "manifest");
  KeyValue kv;
  if (!config_path.empty()) kv = load_config_file(config_path);
  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + ov + "'");
    kv.set(ov.substr(0, eq), ov.substr(eq + 1));
  }
  TrainConfig base;
  try {
    base = TrainConfig::from_kv(kv);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  log_config(base.to_kv());

  const std::vector<Volume> all = load_data_dir(data_dir);
  const SplitManifest manifest = SplitManifest::load(manifest_path);
  fs::create_directories(out_dir);
  const std::vector<MetricsReport> reports = run_ablation(all, manifest, base, out_dir);
  const std::string table = ablation_table(reports);
  write_file_atomic((fs::path(out_dir) / "ablation.tsv").string(), table);
  std::cout << table;
  return 0;
}

int cmd_gradcheck(const std::string& variant, double tolerance, int samples, uint64_t seed) {
  std::printf("gradcheck: variant=%s tolerance=%g samples=%d seed=%llu\n", variant.c_str(),
              tolerance, samples, static_cast<unsigned long long>(seed));
  struct VariantDef {
    std::string name;
    Guidance guidance;
    Downsampler downsampler;
  };
  const std::vector<VariantDef> all = {
      {"full", Guidance::spg, Downsampler::learnable},
      {"baseline", Guidance::none, Downsampler::bilinear},
      {"bilinear_guidance", Guidance::bilinear_input, Downsampler::learnable},
      {"nearest_guidance", Guidance::nearest_input, Downsampler::learnable},
  };
  std::vector<VariantDef> run;
  for (const auto& v : all)
    if (variant == "all" || variant == v.name) run.push_back(v);
  if (run.empty())
    throw UsageError("unknown variant '" + variant +
                     "' (expected all|full|baseline|bilinear_guidance|nearest_guidance)");

  bool ok = true;
  for (const auto& vd : run) {
    ModelConfig mc;
    mc.guidance = vd.guidance;
    mc.downsampler = vd.downsampler;
    SpinModel<double> model(mc, seed);
    // Jitter the biases away from zero: with zero biases some relu
    // pre-activations sit exactly on the kink, where central differences see
    // a one-sided slope that no subgradient choice can match.
    {
      Rng jitter(seed + 3);
      for (auto& [name, p] : model.named_parameters())
        if (p->rank() == 1)
          for (auto& v : p->data()) v = 0.02 * (jitter.uniform() - 0.5);
    }

    Rng rng(seed + 1);
    Tensor<double> x({1, mc.input_slices, 8, 8});
    for (auto& v : x.data()) v = rng.uniform();
    Tensor<double> ybar({1, 1, 8, 8});
    for (auto& v : ybar.data()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;

    auto forward = [&]() { return bce_loss(model.forward_full(x).f, ybar); };
    const GradCheckReport report =
        gradcheck<double>(forward, model.named_parameters(), 1e-6, samples, seed + 2);
    const bool pass = report.pass(tolerance);
    ok = ok && pass;
    std::printf("%-18s %s  max_rel_err=%.3e  (%zu parameter tensors)\n", vd.name.c_str(),
                pass ? "PASS" : "FAIL", report.max_err, report.entries.size());
    for (const auto& e : report.entries) {
      if (e.max_err >= tolerance || !e.finite) {
        std::printf("  %-28s err=%.3e analytic=%.6e numeric=%.6e index=%lld%s\n",
                    e.name.c_str(), e.max_err, e.analytic, e.numeric, e.worst_index,
                    e.finite ? "" : " NON-FINITE");
      }
    }
  }
  if (!ok) throw std::runtime_error("gradient check failed");
  return 0;
}

int cmd_param_count(const ModelOptions& opts) {
  ModelConfig cfg = opts.to_config();
  SpinModel<float> model(cfg, 0);
  const ParameterCount pc = model.count_parameters();
  for (const auto& [module, count] : pc.modules)
    std::printf("%-10s %lld\n", module.c_str(), count);
  std::printf("%-10s %lld\n", "total", pc.total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPiN: subpixel-embedding segmentation network"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic volume corpus");
  std::string synth_out = "data";
  int synth_volumes = 8;
  std::string synth_shape = "8,32,32";
  int synth_lesions = 1;
  double synth_small = 0.5;
  int synth_lesion_min = 100, synth_lesion_max = 200;
  uint64_t synth_seed = 1;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--volumes", synth_volumes, "number of volumes");
  synth->add_option("--shape", synth_shape, "volume extents C,H,W");
  synth->add_option("--lesions-per-slice", synth_lesions, "lesions per slice");
  synth->add_option("--small-lesion-fraction", synth_small,
                    "probability a lesion is drawn from the sub-100-pixel range");
  synth->add_option("--lesion-area-min", synth_lesion_min, "large-lesion minimum pixel count");
  synth->add_option("--lesion-area-max", synth_lesion_max, "large-lesion maximum pixel count");
  synth->add_option("--seed", synth_seed, "rng seed");

  // split
  auto* split = app.add_subcommand("split", "build a train/test manifest");
  std::string split_data, split_out = "manifest.txt";
  double split_fraction = 0.2;
  uint64_t split_seed = 1;
  split->add_option("--data", split_data, "volume directory")->required();
  split->add_option("--out", split_out, "manifest path");
  split->add_option("--test-fraction", split_fraction, "held-out fraction of volumes");
  split->add_option("--seed", split_seed, "rng seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string train_data, train_manifest, train_out = "run", train_config;
  std::vector<std::string> train_set;
  train_cmd->add_option("--data", train_data, "volume directory")->required();
  train_cmd->add_option("--manifest", train_manifest, "manifest (trains on its [train] ids)");
  train_cmd->add_option("--out", train_out, "output directory");
  train_cmd->add_option("--config", train_config, "key=value training config file");
  train_cmd->add_option("--set", train_set, "config override key=value (repeatable)");

  // predict
  auto* predict = app.add_subcommand("predict", "segment volumes with a trained model");
  std::string pred_ckpt, pred_cfg, pred_data, pred_volume, pred_out = "predictions",
                                                           pred_dump;
  bool pred_overlay = false;
  predict->add_option("--checkpoint", pred_ckpt, "checkpoint file")->required();
  predict->add_option("--model-config", pred_cfg, "model.cfg written by train")->required();
  predict->add_option("--data", pred_data, "volume directory");
  predict->add_option("--volume", pred_volume, "single volume file");
  predict->add_option("--out", pred_out, "output directory");
  predict->add_flag("--overlay", pred_overlay, "write contour overlay images (PPM)");
  predict->add_option("--dump-features", pred_dump,
                      "directory for diagnostic feature-map grids");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model on the test split");
  std::string eval_ckpt, eval_cfg, eval_data, eval_manifest, eval_out = "eval",
                                                             eval_method = "spin";
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--model-config", eval_cfg, "model.cfg written by train")->required();
  eval_cmd->add_option("--data", eval_data, "volume directory")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "manifest file")->required();
  eval_cmd->add_option("--out", eval_out, "output directory");
  eval_cmd->add_option("--method", eval_method, "method label for the report");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train and evaluate every ablation arm");
  std::string abl_data, abl_manifest, abl_out = "ablation", abl_config;
  std::vector<std::string> abl_set;
  ablate->add_option("--data", abl_data, "volume directory")->required();
  ablate->add_option("--manifest", abl_manifest, "manifest file")->required();
  ablate->add_option("--out", abl_out, "output directory");
  ablate->add_option("--config", abl_config, "base training config file");
  ablate->add_option("--set", abl_set, "config override key=value (repeatable)");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check (64-bit)");
  std::string gc_variant = "all";
  double gc_tol = 1e-5;
  int gc_samples = 6;
  uint64_t gc_seed = 5;
  gc->add_option("--variant", gc_variant, "all|full|baseline|bilinear_guidance|nearest_guidance");
  gc->add_option("--tolerance", gc_tol, "pass threshold on the max element error");
  gc->add_option("--samples", gc_samples, "probed elements per parameter tensor");
  gc->add_option("--seed", gc_seed, "rng seed");

  // param-count
  auto* pcount = app.add_subcommand("param-count", "per-submodule parameter counts");
  ModelOptions pc_opts;
  pc_opts.add_flags(pcount);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, synth_volumes, synth_shape, synth_lesions, synth_small,
                       synth_lesion_min, synth_lesion_max, synth_seed);
    if (split->parsed()) return cmd_split(split_data, split_out, split_fraction, split_seed);
    if (train_cmd->parsed())
      return cmd_train(train_data, train_manifest, train_out, train_config, train_set);
    if (predict->parsed()) {
      if (pred_data.empty() == pred_volume.empty())
        throw UsageError("predict: pass exactly one of --data or --volume");
      return cmd_predict(pred_ckpt, pred_cfg, pred_data, pred_volume, pred_out, pred_overlay,
                         pred_dump);
    }
    if (eval_cmd->parsed())
      return cmd_eval(eval_ckpt, eval_cfg, eval_data, eval_manifest, eval_out, eval_method);
    if (ablate->parsed()) return cmd_ablate(abl_data, abl_manifest, abl_out, abl_config, abl_set);
    if (gc->parsed()) return cmd_gradcheck(gc_variant, gc_tol, gc_samples, gc_seed);
    if (pcount->parsed()) return cmd_param_count(pc_opts);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
