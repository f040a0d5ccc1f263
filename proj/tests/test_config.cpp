#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "qpsde/config.hpp"

using namespace qpsde;

namespace {

const std::string kSourceDir = QPSDE_SOURCE_DIR;

const char* kMinimal = R"(task: pullback
output_dir: out/min
coefficients:
  dim: 1
  A: [[1.0]]
  Sigma0: [[0.5]]
  F0:
    - {amplitude: 1.0, n1: 1}
run:
  dt: 0.002
  seed: 9
)";

TEST(Config, BundledDefaultMatchesBuiltInSpec) {
    const auto cfg = load_config(kSourceDir + "/configs/ou_default.yaml");
    const auto expected = default_ou_spec();
    EXPECT_EQ(cfg.task, "acceptance");
    EXPECT_EQ(cfg.coefficients.dim, 1u);
    EXPECT_EQ(cfg.coefficients.A, expected.A);
    EXPECT_EQ(cfg.coefficients.Sigma0, expected.Sigma0);
    EXPECT_EQ(cfg.coefficients.tau2, expected.tau2);
    ASSERT_EQ(cfg.coefficients.F0.size(), expected.F0.size());
    for (std::size_t i = 0; i < expected.F0.size(); ++i) {
        EXPECT_EQ(cfg.coefficients.F0[i].amplitude, expected.F0[i].amplitude);
        EXPECT_EQ(cfg.coefficients.F0[i].n1, expected.F0[i].n1);
        EXPECT_EQ(cfg.coefficients.F0[i].n2, expected.F0[i].n2);
    }
    EXPECT_EQ(cfg.run.dt, 1e-3);
    EXPECT_EQ(cfg.pullback().tol, 1e-6);
    EXPECT_EQ(cfg.task_block("fokker-planck")["n_cells"].as<int>(), 400);
}

TEST(Config, OtherBundledConfigsParse) {
    EXPECT_EQ(load_config(kSourceDir + "/configs/saturating.yaml").coefficients.nonlinearity, Nonlinearity::tanh);
    EXPECT_EQ(load_config(kSourceDir + "/configs/anti_dissipative.yaml").coefficients.A, (std::vector<double>{-1.0}));
}

TEST(Config, DefaultsAndRunBlock) {
    const auto cfg = parse_config_text(kMinimal);
    EXPECT_EQ(cfg.task, "pullback");
    EXPECT_EQ(cfg.output_dir, "out/min");
    EXPECT_EQ(cfg.run.dt, 0.002);
    EXPECT_EQ(cfg.run.seed, 9u);
    EXPECT_EQ(cfg.coefficients.tau1, 1.0);
    EXPECT_EQ(cfg.coefficients.F0[0].n2, 0);
    EXPECT_EQ(cfg.coefficients.nonlinearity, Nonlinearity::none);
    EXPECT_EQ(cfg.pullback().dt, 0.002);
    EXPECT_TRUE(cfg.task_block("lift").IsMap());
}

TEST(Config, OverridesUseDottedPaths) {
    const auto cfg = parse_config_text(kMinimal, {"run.seed=42", "run.tolerances.pullback=1e-8", "task=oracle",
                                                  "coefficients.A=[[2.0]]", "measure.t=0.75"});
    EXPECT_EQ(cfg.run.seed, 42u);
    EXPECT_EQ(cfg.run.pullback_tol, 1e-8);
    EXPECT_EQ(cfg.task, "oracle");
    EXPECT_EQ(cfg.coefficients.A, (std::vector<double>{2.0}));
    EXPECT_EQ(cfg.task_block("measure")["t"].as<double>(), 0.75);
    EXPECT_THROW(parse_config_text(kMinimal, {"run.seed"}), ConfigError);
    EXPECT_THROW(parse_config_text(kMinimal, {"run..seed=3"}), ConfigError);
}

TEST(Config, ErrorsCarryPathAndLine) {
    const std::string bad = std::string(kMinimal) + "  tolerances: {pullback: -1.0}\n";
    try {
        parse_config_text(bad);
        FAIL() << "expected a config error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "run.tolerances.pullback");
        EXPECT_EQ(e.line(), 12);
    }
    try {
        parse_config_text(kMinimal, {"run.dt=-0.1"});
        FAIL() << "expected a config error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "run.dt");
    }
}

TEST(Config, RejectsMalformedDocuments) {
    EXPECT_THROW(parse_config_text("task: validate\n"), ConfigError);
    EXPECT_THROW(parse_config_text(kMinimal, {"task=dance"}), ConfigError);
    EXPECT_THROW(parse_config_text(kMinimal, {"coefficients.F0=[{amplitude: 1.0, freq: 2}]"}), ConfigError);
    EXPECT_THROW(parse_config_text(kMinimal, {"coefficients.A=[[1.0, 0.0]]"}), ConfigError);
    EXPECT_THROW(parse_config_text(kMinimal, {"coefficients.nonlinearity=relu"}), ConfigError);
    EXPECT_THROW(parse_config_text(kMinimal, {"coefficients.Sigma0=[[abc]]"}), ConfigError);
    EXPECT_THROW(parse_config_text(kMinimal, {"coefficients.F0=[{amplitude: 1.0, component: 3}]"}), ConfigError);
    EXPECT_THROW(parse_config_text("a: [1, 2\n"), ConfigError);
    EXPECT_THROW(load_config(kSourceDir + "/configs/does_not_exist.yaml"), ConfigError);
}

TEST(Config, ReferencedFilesMustExist) {
    const auto dir = std::filesystem::temp_directory_path() / "qpsde_config_test";
    std::filesystem::create_directories(dir);
    const auto cfg_path = dir / "cfg.yaml";
    std::ofstream(cfg_path) << kMinimal << "measure:\n  entrance_from_file: missing.csv\n";
    try {
        load_config(cfg_path.string());
        FAIL() << "expected a config error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "measure.entrance_from_file");
        EXPECT_EQ(e.line(), 13);
    }
    std::ofstream(dir / "missing.csv") << "x_1,weight\n0,1\n";
    EXPECT_NO_THROW(load_config(cfg_path.string()));
    std::filesystem::remove_all(dir);
}

TEST(Config, EffectiveDocumentEchoesOverridesAndRoundTrips) {
    const auto cfg = parse_config_text(kMinimal, {"run.seed=77"});
    const std::string text = emit_yaml(cfg.document);
    EXPECT_NE(text.find("seed: 77"), std::string::npos);
    const auto again = parse_config_text(text);
    EXPECT_EQ(again.run.seed, 77u);
    EXPECT_EQ(again.coefficients.A, cfg.coefficients.A);
    EXPECT_EQ(emit_yaml(again.document), text);
}

}  // namespace
