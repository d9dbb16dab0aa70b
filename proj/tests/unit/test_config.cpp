// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "leod/config.hpp"
#include "leod/error.hpp"

namespace leod {
namespace {

Errc code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << text;
  return Errc::invalid_input;
}

TEST(Config, Defaults) {
  const PipelineConfig c = parse_config("");
  EXPECT_EQ(c.tta_tau_nms, 0.45);
  EXPECT_EQ(c.tracker.tau_del, 0.55);
  EXPECT_EQ(c.t_trk, 6);
  EXPECT_EQ(c.soft_rule, SoftRule::all_below);
  EXPECT_EQ(c.strides, (std::vector<int>{8, 16, 32}));
  const auto th = thresholds_from(c);
  EXPECT_EQ(th.tau_hard, (std::vector<double>{0.6, 0.3}));
  EXPECT_EQ(iou_thresholds_from(c).size(), 10u);
  EXPECT_EQ(eval_filter_from(c).min_diagonal, 30.0);
  EXPECT_EQ(forge_options_from(c).tracker.tau_iou, 0.45);
  EXPECT_EQ(nms_options_from(c).tau_nms, 0.45);
}

TEST(Config, FullDocument) {
  const PipelineConfig c = parse_config(R"(
# pipeline settings
[tta]
tau_nms = 0.5
use_combined = false   # trailing comment

[tracker]
decay = 0.85
inpaint_rule = "bidirectional"

[thresholds]
profile = "1mpx"
tau_hard_car = 0.6

[thresholds.override.pedestrian]
hard = 0.5

[thresholds.override.two-wheeler]
hard = 0.5

[soft]
rule = "or"

[assign]
strategy = "center_topk"
strides = [8, 16]

[eval]
min_side = 4
profile = "1mpx"
iou_set = "0.5"

[protocol]
mode = "ssod"
ratio = 0.1
seed = 42
)");
  EXPECT_EQ(c.tta_tau_nms, 0.5);
  EXPECT_FALSE(c.tta_use_combined);
  EXPECT_EQ(c.tracker.decay, 0.85);
  EXPECT_EQ(c.inpaint_rule, InpaintRule::bidirectional);
  EXPECT_EQ(c.soft_rule, SoftRule::any_below);
  EXPECT_EQ(c.assign.strategy, AssignStrategy::center_topk);
  EXPECT_EQ(c.strides, (std::vector<int>{8, 16}));
  EXPECT_EQ(c.split_mode, SplitMode::ssod);
  EXPECT_EQ(c.split_seed, 42u);
  // The profile sets 60/20 and the explicit key wins regardless of order.
  EXPECT_EQ(c.min_diagonal, 60.0);
  EXPECT_EQ(c.min_side, 4.0);
  EXPECT_EQ(iou_thresholds_from(c), (std::vector<double>{0.5}));

  const auto th = thresholds_from(c);
  ASSERT_EQ(th.tau_hard.size(), 3u);
  EXPECT_EQ(th.tau_hard[0], 0.6);
  EXPECT_NEAR(th.tau_soft[0], 0.7, 1e-12);
  EXPECT_EQ(th.tau_hard[1], 0.5);
  EXPECT_NEAR(th.tau_soft[1], 0.55, 1e-12);
  EXPECT_NEAR(th.tau_soft[2], 0.55, 1e-12);
  EXPECT_EQ(th.soft_rule, SoftRule::any_below);
}

TEST(Config, Errors) {
  EXPECT_EQ(code_of("[tta]\nbogus = 1\n"), Errc::invalid_config);
  EXPECT_EQ(code_of("[nowhere]\n"), Errc::invalid_config);
  EXPECT_EQ(code_of("[tta]\ntau_nms = \"high\"\n"), Errc::invalid_config);
  EXPECT_EQ(code_of("[soft]\nrule = \"xor\"\n"), Errc::invalid_config);
  EXPECT_EQ(code_of("[tta]\ntau_nms 0.5\n"), Errc::invalid_config);
  EXPECT_EQ(code_of("[thresholds.override.car]\nmedium = 0.3\n"), Errc::invalid_config);
  EXPECT_EQ(code_of("[eval]\niou_set = \"fuzzy\"\n"), Errc::invalid_config);
  const auto bad = parse_config("[thresholds.override.car]\nhard = 0.6\nsoft = 0.5\n");
  try {
    thresholds_from(bad);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_thresholds);
  }
  EXPECT_THROW(load_config("/nonexistent/leod.toml"), Error);
}

TEST(Config, DigestIsStableAndSensitive) {
  const PipelineConfig a = parse_config("");
  const PipelineConfig b = parse_config("[tta]\ntau_nms = 0.45\n");
  EXPECT_EQ(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 64u);
  EXPECT_NE(config_digest(a), config_digest(parse_config("[tracker]\ndecay = 0.8\n")));
  const std::string json = canonical_config_json(a);
  EXPECT_EQ(json.find(' '), std::string::npos);
  EXPECT_LT(json.find("\"assign\""), json.find("\"tta\""));
}

TEST(Config, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "leod_config_test.toml";
  std::ofstream(path) << "[thresholds]\nt_trk = 4\n";
  EXPECT_EQ(load_config(path).t_trk, 4);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace leod
