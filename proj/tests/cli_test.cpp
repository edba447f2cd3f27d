// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include "oracles.hpp"

namespace {

using namespace ofif;
namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;  // stdout and stderr
};

CliResult cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " OFIF_CLI_PATH " " + args + " 2>&1";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("ofif_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    save_config(oracle::small_config(), path("small.json"));
    save_weights(init_random_weights(oracle::small_config(), 5), path("small.ofn"));
    std::mt19937_64 rng(1);
    clean_ = oracle::uniform(rng, 16000, -0.5f, 0.5f);
    write_wav(path("clean.wav"), clean_);
    write_file_bytes(path("pcm.wav"), serialize_wav_pcm16(clean_));
    write_file_bytes(path("stereo.wav"), serialize_wav_pcm16(clean_, 2));
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::string model_args() {
    return " --weights " + path("small.ofn") + " --config " + path("small.json");
  }

  static inline fs::path dir_;
  static inline std::vector<float> clean_;
};

TEST_F(Cli, EnhanceWritesSameLengthFloatWav) {
  const CliResult r = cli("enhance --in " + path("pcm.wav") + " --out " + path("e.wav") + model_args());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("mask"), std::string::npos);
  EXPECT_NE(r.out.find("elapsed"), std::string::npos);
  const Wav w = read_wav(path("e.wav"));
  EXPECT_EQ(w.info.format, kWavFloat);
  EXPECT_EQ(w.samples.size(), 16000u);
}

TEST_F(Cli, QuietLogging) {
  const CliResult r = cli("enhance --in " + path("pcm.wav") + " --out " + path("q.wav") + model_args(),
                    "OFIF_LOG=quiet");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty()) << r.out;
}

TEST_F(Cli, StereoIsFormatError) {
  const CliResult r = cli("enhance --in " + path("stereo.wav") + " --out " + path("x.wav") + model_args());
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.out.rfind("ERR:format:", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("mono"), std::string::npos);
}

TEST_F(Cli, MissingTensorIsWeightsError) {
  WeightStore w = load_weights(path("small.ofn"));
  w.erase("tfsm.0.tgru.w_hh");
  save_weights(w, path("broken.ofn"));
  const CliResult r = cli("enhance --in " + path("pcm.wav") + " --out " + path("x.wav") +
                    " --weights " + path("broken.ofn") + " --config " + path("small.json"));
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.out.rfind("ERR:weights:", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("tfsm.0.tgru.w_hh"), std::string::npos);
}

TEST_F(Cli, MissingInputIsIoError) {
  const CliResult r = cli("enhance --in " + path("nope.wav") + " --out " + path("x.wav") + model_args());
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(r.out.rfind("ERR:io:", 0), 0u) << r.out;
}

TEST_F(Cli, StreamMatchesCumulativeEnhance) {
  CliResult r = cli("enhance --mode cumulative --in " + path("clean.wav") + " --out " +
              path("off.wav") + model_args());
  ASSERT_EQ(r.code, 0) << r.out;
  r = cli("stream --chunk-ms 8 --report-latency --in " + path("clean.wav") + " --out " +
          path("str.wav") + model_args());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("algorithmic delay: 32.0 ms"), std::string::npos) << r.out;
  EXPECT_EQ(read_file_bytes(path("off.wav")), read_file_bytes(path("str.wav")));
}

TEST_F(Cli, ZeroChunkIsUsageError) {
  const CliResult r = cli("stream --chunk-ms 0 --in " + path("clean.wav") + " --out " +
                    path("x.wav") + model_args());
  EXPECT_EQ(r.code, 64);
  EXPECT_EQ(r.out.rfind("ERR:usage:", 0), 0u) << r.out;
}

TEST_F(Cli, VerifyModes) {
  const std::string base = "verify --random-seed 3 --config " + path("small.json") +
                           " --frames 20 --trials 3";
  CliResult r = cli(base);
  EXPECT_EQ(r.code, 0) << r.out;
  r = cli(base + " --mode offline");
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("first divergence at sample"), std::string::npos) << r.out;
  r = cli("verify --random-seed 3 --trials 0");
  EXPECT_EQ(r.code, 64);
  r = cli("verify --trials 2");
  EXPECT_EQ(r.code, 64);
}

TEST_F(Cli, WeightsInitIsDeterministic) {
  ASSERT_EQ(cli("weights init --seed 9 --out " + path("a.ofn")).code, 0);
  ASSERT_EQ(cli("weights init --seed 9 --out " + path("b.ofn")).code, 0);
  EXPECT_EQ(read_file_bytes(path("a.ofn")), read_file_bytes(path("b.ofn")));
  const CliResult r = cli("weights param-count " + path("a.ofn"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("total 1720007"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("encoder "), std::string::npos);
  EXPECT_NE(r.out.find("tfsm "), std::string::npos);
}

TEST_F(Cli, InspectTruncatedFileNamesOffset) {
  const std::string bytes = read_file_bytes(path("small.ofn"));
  CliResult r = cli("weights inspect " + path("small.ofn"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("enc.0.conv.w [4, 4, 5, 2]"), std::string::npos) << r.out;
  write_file_bytes(path("cut.ofn"), bytes.substr(0, bytes.size() - 10));
  r = cli("weights inspect " + path("cut.ofn"));
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.out.rfind("ERR:weights:", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("offset"), std::string::npos) << r.out;
}

TEST_F(Cli, Metrics) {
  CliResult r = cli("metrics --est " + path("clean.wav") + " --ref " + path("clean.wav"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("si_snr_db 120.0000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("loss_total 0\n"), std::string::npos) << r.out;

  std::vector<float> twice(clean_);
  for (float& v : twice) v *= 2.0f;
  write_wav(path("twice.wav"), twice);
  r = cli("metrics --est " + path("twice.wav") + " --ref " + path("clean.wav") +
          " --noisy " + path("clean.wav"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("si_snr_db 120.0000"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("loss_total 0\n"), std::string::npos) << r.out;

  write_wav(path("short.wav"), std::span(clean_).first(1000));
  r = cli("metrics --est " + path("short.wav") + " --ref " + path("clean.wav"));
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(r.out.rfind("ERR:undefined_input:", 0), 0u) << r.out;
}

TEST_F(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(cli("frobnicate").code, 64);
  EXPECT_EQ(cli("").code, 64);
}

}  // namespace
