#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "spin/config.hpp"
#include "spin/volume.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string log = (fs::temp_directory_path() / "spin_cli_out.txt").string();
  const std::string cmd = std::string(SPIN_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = spin::read_file(log);
  return r;
}

std::string work_dir() {
  const auto dir = fs::temp_directory_path() / "spin_cli_work";
  return dir.string();
}

}  // namespace

TEST_CASE("cli: unknown flags exit 1 without writing outputs") {
  const std::string dir = work_dir();
  fs::remove_all(dir);
  const CliResult r = run_cli("synth --out " + dir + "/data --bogus-flag 7");
  CHECK(r.exit_code == 1);
  CHECK_FALSE(fs::exists(dir + "/data"));
  const CliResult r2 = run_cli("frobnicate");
  CHECK(r2.exit_code == 1);
}

TEST_CASE("cli: end-to-end pipeline" * doctest::timeout(900)) {
  const std::string dir = work_dir();
  fs::remove_all(dir);
  fs::create_directories(dir);

  // synth
  CliResult r = run_cli("synth --out " + dir + "/data --volumes 4 --shape 4,16,16 " +
                        "--lesions-per-slice 1 --small-lesion-fraction 1 --seed 11");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir + "/data/vol_000.spv"));
  CHECK(fs::exists(dir + "/data/provenance.txt"));

  // split
  r = run_cli("split --data " + dir + "/data --out " + dir + "/manifest.txt " +
              "--test-fraction 0.25 --seed 12");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir + "/manifest.txt"));

  // train (tiny config through --set overrides)
  r = run_cli("train --data " + dir + "/data --manifest " + dir + "/manifest.txt --out " + dir +
              "/run --set epochs=2 --set batch_size=2 --set steps_per_epoch=2 " +
              "--set encoder_channels=8,16 --set lr_schedule=0:3e-4 --set aug_schedule=0:0 " +
              "--set seed=13");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir + "/run/checkpoint_final.ckpt"));
  CHECK(fs::exists(dir + "/run/model.cfg"));
  CHECK(fs::exists(dir + "/run/loss_curve.txt"));
  CHECK(r.output.find("resolved configuration") != std::string::npos);
  CHECK(r.output.find("seed=13") != std::string::npos);

  // predict with overlays
  r = run_cli("predict --checkpoint " + dir + "/run/checkpoint_final.ckpt --model-config " +
              dir + "/run/model.cfg --data " + dir + "/data --out " + dir +
              "/pred --overlay --dump-features " + dir + "/features");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir + "/pred/vol_000_confidence.spv"));
  CHECK(fs::exists(dir + "/pred/vol_000_slice_000.ppm"));
  CHECK(fs::exists(dir + "/features/vol_000_g.pgm"));
  const spin::Volume conf = spin::read_volume(dir + "/pred/vol_000_confidence.spv");
  CHECK(conf.C == 4);
  CHECK(conf.has_labels());
  for (const float v : conf.intensities) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }

  // eval
  r = run_cli("eval --checkpoint " + dir + "/run/checkpoint_final.ckpt --model-config " + dir +
              "/run/model.cfg --data " + dir + "/data --manifest " + dir + "/manifest.txt " +
              "--out " + dir + "/eval");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir + "/eval/metrics.tsv"));
  CHECK(fs::exists(dir + "/eval/metrics.kv"));
  CHECK(r.output.find("aggregate") != std::string::npos);

  // param-count
  r = run_cli("param-count");
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("ld         16804") != std::string::npos);
  CHECK(r.output.find("spg        11312") != std::string::npos);
  CHECK(r.output.find("total") != std::string::npos);
}

TEST_CASE("cli: predict then eval on oracle labels reports all-ones metrics" *
          doctest::timeout(900)) {
  // lesion-free corpus; a briefly trained model learns the all-negative
  // oracle exactly, so every metric lands on the degenerate-perfect 1.0
  const std::string dir = work_dir() + "_oracle";
  fs::remove_all(dir);
  fs::create_directories(dir);
  CliResult r = run_cli("synth --out " + dir + "/data --volumes 3 --shape 4,16,16 " +
                        "--lesions-per-slice 0 --seed 21");
  REQUIRE(r.exit_code == 0);
  r = run_cli("split --data " + dir + "/data --out " + dir + "/manifest.txt " +
              "--test-fraction 0.34 --seed 22");
  REQUIRE(r.exit_code == 0);
  r = run_cli("train --data " + dir + "/data --manifest " + dir + "/manifest.txt --out " + dir +
              "/run --set epochs=6 --set batch_size=2 --set steps_per_epoch=4 " +
              "--set encoder_channels=8,16 --set lr_schedule=0:1e-3 --set aug_schedule=0:0 " +
              "--set seed=23");
  REQUIRE(r.exit_code == 0);
  r = run_cli("predict --checkpoint " + dir + "/run/checkpoint_final.ckpt --model-config " +
              dir + "/run/model.cfg --data " + dir + "/data --out " + dir + "/pred");
  REQUIRE(r.exit_code == 0);
  r = run_cli("eval --checkpoint " + dir + "/run/checkpoint_final.ckpt --model-config " + dir +
              "/run/model.cfg --data " + dir + "/data --manifest " + dir + "/manifest.txt " +
              "--out " + dir + "/eval");
  REQUIRE(r.exit_code == 0);
  const spin::KeyValue kv = spin::KeyValue::load(dir + "/eval/metrics.kv");
  CHECK(kv.get_double("aggregate_dsc") == 1.0);
  CHECK(kv.get_double("per_image_recall") == 1.0);
  CHECK(kv.get_int("aggregate_tp") == 0);
  CHECK(kv.get_int("aggregate_fp") == 0);
}

TEST_CASE("cli: gradcheck subcommand passes at 64-bit" * doctest::timeout(900)) {
  const CliResult r = run_cli("gradcheck --variant full --samples 3");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("PASS") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 1 naming the problem") {
  const std::string dir = work_dir() + "_err";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SUBCASE("missing checkpoint file") {
    spin::write_file_atomic(dir + "/model.cfg", "input_slices=5\n");
    const CliResult r = run_cli("predict --checkpoint " + dir + "/nope.ckpt --model-config " +
                                dir + "/model.cfg --data " + dir);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("nope.ckpt") != std::string::npos);
  }
  SUBCASE("malformed training config names the offending key") {
    spin::write_file_atomic(dir + "/bad.cfg", "epochs=2\nwibble=1\n");
    const CliResult r = run_cli("train --data " + dir + " --config " + dir + "/bad.cfg");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("wibble") != std::string::npos);
  }
  SUBCASE("missing data directory") {
    const CliResult r = run_cli("split --data " + dir + "/ghost --out " + dir + "/m.txt");
    CHECK(r.exit_code == 1);
  }
}
