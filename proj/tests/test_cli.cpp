#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "plapflow/error.hpp"

using namespace plapflow;
using namespace plapflow::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("plapflow_test_" + name);
    fs::remove_all(dir);
    return dir;
}

nlohmann::json read_manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    return nlohmann::json::parse(in);
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
    auto c = RunConfig::defaults(Scenario::Tc6Sweep);
    c.n = 17;
    c.p_values = {5.0, 7.5};
    c.line_search = "none";
    const auto back = from_json(to_json(c), RunConfig::defaults(Scenario::Plap));
    EXPECT_EQ(back.scenario, Scenario::Tc6Sweep);
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(RunConfig, UnknownKeyAndWrongTypeAreRejected) {
    const auto base = RunConfig::defaults(Scenario::Plap);
    EXPECT_THROW(from_json({{"mesh_size", 4}}, base), InvalidParameter);
    EXPECT_THROW(from_json({{"n", "four"}}, base), InvalidParameter);
    EXPECT_THROW(from_json({{"n", 4.5}}, base), InvalidParameter);
    EXPECT_THROW(from_json(nlohmann::json::array(), base), InvalidParameter);
    EXPECT_EQ(from_json({{"t_max", 3}}, base).t_max, 3.0);
}

TEST(RunConfig, EveryKeyAppearsInJson) {
    const auto j = to_json(RunConfig::defaults(Scenario::NetworkFormation));
    for (const auto& k : config_keys()) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j.size(), config_keys().size());
}

TEST(RunConfig, ScenarioDefaultsAndFullScale) {
    auto nf = RunConfig::defaults(Scenario::NetworkFormation);
    EXPECT_EQ(nf.n, 64);
    EXPECT_DOUBLE_EQ(nf.gamma, 0.75);
    EXPECT_DOUBLE_EQ(nf.nu, 0.05);
    nf.apply_paper_scale();
    EXPECT_EQ(nf.n, 512);
    EXPECT_DOUBLE_EQ(nf.t_max, 200.0);
    auto tc6 = RunConfig::defaults(Scenario::Tc6Sweep);
    EXPECT_EQ(tc6.case_name, "TC6");
    EXPECT_EQ(tc6.n, 32);
    EXPECT_EQ(scenario_from_string(to_string(Scenario::DiscreteStudy)), Scenario::DiscreteStudy);
    EXPECT_THROW(scenario_from_string("nope"), InvalidParameter);
}

TEST(RunConfig, ValidationErrors) {
    auto c = RunConfig::defaults(Scenario::Tc6Sweep);
    c.p_values = {5.0, 2.0};
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = RunConfig::defaults(Scenario::Plap);
    c.controller = "bogus";
    EXPECT_THROW(c.validate(), InvalidParameter);
    c = RunConfig::defaults(Scenario::Plap);
    c.base = "hexagon";
    EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(Commands, UnbalancedNetworkSourceIsInvalidInput) {
    auto c = RunConfig::defaults(Scenario::NetworkFormation);
    c.output_dir = scratch("unbalanced").string();
    c.n = 8;
    c.mean_correct = false;
    std::ostringstream log, err;
    EXPECT_EQ(run(c, log, err), kInvalidInput);
    EXPECT_NE(err.str().find("do not balance"), std::string::npos);
}

TEST(Commands, ShortNetworkRunWritesArtifacts) {
    auto c = RunConfig::defaults(Scenario::NetworkFormation);
    const auto dir = scratch("network");
    c.output_dir = dir.string();
    c.n = 8;
    c.t_max = 2.0;
    c.snapshot_times = {0.0, 1.0};
    std::ostringstream log, err;
    ASSERT_EQ(run(c, log, err), kOk) << err.str();
    EXPECT_TRUE(fs::exists(dir / "steps.csv"));
    EXPECT_TRUE(fs::exists(dir / "c_000.vtk"));
    EXPECT_TRUE(fs::exists(dir / "c_001.vtk"));
    const auto m = read_manifest(dir);
    EXPECT_EQ(m.at("exit_code"), 0);
    EXPECT_TRUE(m.at("results").at("energy_monotone").get<bool>());
    // the manifest config reproduces the run configuration
    EXPECT_EQ(from_json(m.at("config"), RunConfig{}).n, 8);
}

TEST(Commands, PlapWritesFieldsAndErrors) {
    auto c = RunConfig::defaults(Scenario::Plap);
    const auto dir = scratch("plap");
    c.output_dir = dir.string();
    c.case_name = "TC2";
    c.n = 8;
    std::ostringstream log, err;
    ASSERT_EQ(run(c, log, err), kOk) << err.str();
    const auto m = read_manifest(dir);
    EXPECT_TRUE(m.at("results").contains("err_quasi"));
    std::ifstream vtk(dir / "fields.vtk");
    std::stringstream text;
    text << vtk.rdbuf();
    EXPECT_NE(text.str().find("SCALARS steady_residual_p0 double 1"), std::string::npos);
}

TEST(Commands, DiscreteStudies) {
    for (const char* study : {"qz-gap", "xx-identity", "energy-identity", "mass-balance", "flow"}) {
        auto c = RunConfig::defaults(Scenario::DiscreteStudy);
        c.output_dir = scratch(std::string("discrete_") + study).string();
        c.study = study;
        c.refinements = 2;
        c.samples = 10;
        c.graph_steps = 10;
        std::ostringstream log, err;
        EXPECT_EQ(run(c, log, err), kOk) << study << ": " << err.str();
    }
    auto c = RunConfig::defaults(Scenario::DiscreteStudy);
    c.output_dir = scratch("discrete_bad").string();
    c.study = "nonsense";
    std::ostringstream log, err;
    EXPECT_EQ(run(c, log, err), kInvalidInput);
}
