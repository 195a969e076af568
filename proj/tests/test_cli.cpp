#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "elasto/cli/commands.hpp"

using namespace elasto;
using namespace elasto::cli;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "seed": 2,
  "phantom": {
    "kind": "layers", "height_mm": 6.0, "width_mm": 4.0,
    "boundaries_mm": [2, 4], "moduli_kpa": [20, 60, 20], "compression": 0.02,
    "grid": {"rows": 240, "lines": 12},
    "psf": {"axial_sigma_wavelengths": 0.5},
    "psnr_db": 30
  },
  "dp": {"smoothness_factor": 3.0},
  "solver": {"preset": "soul"},
  "evaluate": {
    "windows": [
      {"top": 150, "left": 1, "height": 10, "width": 3, "role": "target"},
      {"top": 150, "left": 5, "height": 10, "width": 3, "role": "target"},
      {"top": 20, "left": 1, "height": 10, "width": 3, "role": "background"}
    ]
  }
})";

fs::path fresh(const std::string& name) {
  auto p = fs::temp_directory_path() / ("elasto_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error_path(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

}  // namespace

TEST(Config, SampleConfigsParse) {
  for (const auto& e : fs::directory_iterator(ELASTO_CONFIGS_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
  }
}

TEST(Config, ErrorsNameTheOffendingKey) {
  EXPECT_EQ(config_error_path(R"({"solver": {"preset": "glue", "bogus": 1}})"), "solver.bogus");
  EXPECT_EQ(config_error_path(R"({"phantom": {"kind": "layers", "height_mm": 4, "width_mm": 4,
             "boundaries_mm": [2], "moduli_kpa": [1, 2], "grid": {"rows": 10, "lines": 4}}})"),
            "phantom.compression");
  EXPECT_EQ(config_error_path(R"({"solver": {"preset": "fast"}})"), "solver.preset");
  EXPECT_EQ(config_error_path(R"({"solver": {"alpha1": "ten"}})"), "solver.alpha1");
  EXPECT_EQ(config_error_path(R"({"solver": {"preset": "soul", "theta1": 1, "second_order_multiplier": 5}})"),
            "solver.second_order_multiplier");
  EXPECT_EQ(config_error_path(R"({"strain": {"kernel": 4}})"), "strain.kernel");
  EXPECT_EQ(config_error_path(R"({"evaluate": {"windows": [{"top": 1, "left": 1, "height": 2, "width": 2,
             "role": "middle"}]}})"),
            "evaluate.windows[0].role");
  EXPECT_THROW(parse_config_text("{not json"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Config, PresetsEnforceTheirStructure) {
  auto c = parse_config_text(R"({"solver": {"preset": "glue", "theta1": 7, "lambda2": 3}})");
  EXPECT_EQ(c.solver.config.theta1, 0.0);
  EXPECT_EQ(c.solver.config.lambda2, 0.0);
  EXPECT_EQ(c.solver.config.first_order, solver::Norm::L2);
  auto s = parse_config_text(R"({"solver": {"preset": "soul", "theta1": 7}})");
  EXPECT_EQ(s.solver.config.theta1, 7.0);
  EXPECT_EQ(s.solver.config.theta2, 0.0);
  auto l = parse_config_text(R"({"solver": {"preset": "l1soul", "second_order_multiplier": 10}})");
  EXPECT_EQ(l.solver.config.theta1, 100.0);
  EXPECT_EQ(l.solver.config.second_order, solver::Norm::L1);
}

TEST(Config, EchoRoundTrips) {
  auto c = parse_config_text(kSmall);
  auto j = to_json(c);
  auto again = to_json(parse_config(j));
  EXPECT_EQ(j.dump(), again.dump());
  EXPECT_EQ(j["solver"]["theta1"], 500.0);
  EXPECT_EQ(j["phantom"]["psnr_db"], 30.0);
  auto quiet = to_json(parse_config_text(R"({"phantom": {"kind": "rigid_shift", "height_mm": 4, "width_mm": 4,
      "shift": {"samples": 2}, "grid": {"rows": 100, "lines": 8}, "psnr_db": "none"}})"));
  EXPECT_EQ(quiet["phantom"]["psnr_db"], "none");
}

TEST(Commands, PipelineProducesEveryOutput) {
  auto dir = fresh("pipeline");
  auto c = parse_config_text(kSmall);
  Overrides o;
  o.out = (dir / "sim").string();
  cmd_simulate(apply(c, o));
  for (auto f : {"I1.rfe", "I2.rfe", "truth.dsp", "truth.str", "simulate.config.json"})
    EXPECT_TRUE(fs::exists(dir / "sim" / f)) << f;

  o = {};
  o.out = (dir / "est").string();
  o.pre = (dir / "sim/I1.rfe").string();
  o.post = (dir / "sim/I2.rfe").string();
  cmd_estimate(apply(c, o));
  auto prior = io::read_field(dir / "est/prior.dsp");
  auto refined = io::read_field(dir / "est/refined.dsp");
  EXPECT_EQ(prior.stage, DisplacementStage::integer_prior);
  EXPECT_EQ(refined.stage, DisplacementStage::refined);
  EXPECT_EQ(slurp(dir / "est/trace.csv").substr(0, 24), "iteration,cost,max_step\n");

  o = {};
  o.out = (dir / "str").string();
  o.field = (dir / "est/refined.dsp").string();
  cmd_strain(apply(c, o));
  EXPECT_EQ(io::read_strain(dir / "str/strain.str").kernel, 3);
  EXPECT_EQ(slurp(dir / "str/strain.pgm").substr(0, 11), "P5\n12 240\n2");

  o = {};
  o.out = (dir / "ev").string();
  o.strain = (dir / "str/strain.str").string();
  o.truth = (dir / "sim/truth.str").string();
  cmd_evaluate(apply(c, o));
  auto rep = read_json(dir / "ev/report.json");
  EXPECT_TRUE(rep["mean_ssim"].is_number());
  EXPECT_EQ(rep["cnr_histogram"].size(), 2u);
  EXPECT_LT(rep["sr"].get<double>(), 1.0);  // stiff middle layer strains less
}

TEST(Commands, TruthAgainstItself) {
  auto dir = fresh("self");
  auto c = parse_config_text(kSmall);
  Overrides o;
  o.out = (dir / "sim").string();
  cmd_simulate(apply(c, o));
  o = {};
  o.out = (dir / "ev").string();
  o.strain = o.truth = (dir / "sim/truth.str").string();
  cmd_evaluate(apply(c, o));
  auto rep = read_json(dir / "ev/report.json");
  EXPECT_NEAR(rep["mean_ssim"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(rep["l2_error"].get<double>(), 0.0);

  // The truth is constant inside every window, so no CNR is defined.
  EXPECT_EQ(rep["cnr_histogram"][0], nullptr);
  o = {};
  o.out = (dir / "rep").string();
  o.reports = {"a=" + (dir / "ev/report.json").string(), "b=" + (dir / "ev/report.json").string()};
  try {
    cmd_report(apply(c, o));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("a vs b"), std::string::npos) << e.what();
  }
}

TEST(Commands, CnrHistogramHasOneRowPerPair) {
  auto dir = fresh("hist");
  StrainImage s{Image(300, 30, 0.0), 3};
  for (std::size_t k = 0; k < s.values.size(); ++k) s.values.data()[k] = -0.01 - 1e-4 * static_cast<double>(k % 17);
  io::write_strain(s, dir.string() + ".str");
  Json j = {{"output", dir.string()}, {"inputs", {{"strain", dir.string() + ".str"}}}};
  Json ws = Json::array();
  for (int t = 0; t < 6; ++t)
    ws.push_back({{"top", 10 + 40 * t}, {"left", 2}, {"height", 20}, {"width", 4}, {"role", "target"}});
  for (int b = 0; b < 20; ++b)
    ws.push_back({{"top", 10 + 12 * b}, {"left", 20}, {"height", 20}, {"width", 4}, {"role", "background"}});
  j["evaluate"] = {{"windows", ws}};
  cmd_evaluate(parse_config(j));
  auto csv = slurp(dir / "cnr_hist.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 121);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "target,background,cnr");

  j = {{"output", dir.string() + "_rep"},
       {"inputs",
        {{"reports",
          {{{"name", "a"}, {"path", (dir / "report.json").string()}},
           {{"name", "b"}, {"path", (dir / "report.json").string()}}}}}}};
  cmd_report(parse_config(j));
  EXPECT_EQ(slurp(dir.string() + "_rep/ttests.csv"), "a,b,pairs,t,p,df,degenerate,underflow\na,b,120,0,1,119,0,0\n");
}

TEST(Commands, WindowErrorsNameTheWindow) {
  auto dir = fresh("win");
  io::write_strain(StrainImage{Image(50, 8, -0.01), 3}, dir.string() + ".str");
  Json j = {{"output", dir.string()},
            {"inputs", {{"strain", dir.string() + ".str"}}},
            {"evaluate",
             {{"windows",
               {{{"top", 10}, {"left", 1}, {"height", 5}, {"width", 2}, {"role", "target"}},
                {{"top", 45}, {"left", 1}, {"height", 10}, {"width", 2}, {"role", "background"}}}}}}};
  try {
    cmd_evaluate(parse_config(j));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("evaluate.windows[1]"), std::string::npos) << e.what();
  }
}

TEST(Commands, IdenticalFramesGiveZeroDisplacement) {
  auto dir = fresh("same");
  auto c = parse_config_text(kSmall);
  Overrides o;
  o.out = (dir / "sim").string();
  cmd_simulate(apply(c, o));
  o = {};
  o.out = (dir / "est").string();
  o.pre = o.post = (dir / "sim/I1.rfe").string();
  cmd_estimate(apply(c, o));
  auto f = io::read_field(dir / "est/refined.dsp");
  for (double v : f.axial.data()) EXPECT_NEAR(v, 0.0, 1e-6);
  for (double v : f.lateral.data()) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Commands, MissingInputs) {
  auto dir = fresh("missing");
  auto c = parse_config_text(kSmall);
  c.output = dir.string();
  try {
    cmd_strain(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "inputs.field");
  }
  Overrides o;
  o.field = "/nonexistent/refined.dsp";
  try {
    cmd_strain(apply(c, o));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/refined.dsp"), std::string::npos);
  }
  o = {};
  o.reports = {"only=x.json"};
  EXPECT_THROW(cmd_report(apply(c, o)), ConfigError);
  o.reports = {"broken"};
  EXPECT_THROW(apply(c, o), ConfigError);
}

TEST(Binary, ExitCodesAndErrorLine) {
  auto dir = fresh("bin");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"solver": {"bogus": 1}})";
  auto run = [&](const std::string& args) {
    std::string cmd = std::string("\"") + ELASTO_CLI + "\" " + args + " >\"" + (dir / "out.txt").string() + "\" 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  EXPECT_EQ(run("estimate --config " + (dir / "bad.json").string()), 1);
  EXPECT_EQ(slurp(dir / "out.txt"), "elasto: error: config: solver.bogus: unknown key\n");
  EXPECT_EQ(run("estimate"), 2);
  EXPECT_EQ(run("--help"), 0);
}
