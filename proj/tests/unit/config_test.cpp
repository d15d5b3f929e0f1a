#include "floorlab/config.hpp"

#include <gtest/gtest.h>

#include "floorlab/errors.hpp"

namespace floorlab {
namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_text(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseConfig, MinimalFloorSpinFillsDefaults) {
  const auto c = parse_config("experiment = floor-spin\nn = 100\n");
  EXPECT_EQ(c.experiment, "floor-spin");
  EXPECT_EQ(c.uint("n"), 100u);
  EXPECT_EQ(c.uint("trials"), 200u);
  EXPECT_EQ(c.real("grad_tol"), 1e-5);
  EXPECT_EQ(c.real("step_size"), 0.01);
  EXPECT_EQ(c.uint("max_steps"), 1'000'000u);
  EXPECT_TRUE(c.flag("fresh_couplings"));
  EXPECT_EQ(c.real("bin_width"), 0.01);
  EXPECT_FALSE(c.has("dims"));
}

TEST(ParseConfig, MnistDefaults) {
  const auto c = parse_config("experiment = teacher-student\ndata_dir = /data\n");
  EXPECT_EQ(c.uint_list("seeds"), (UIntList{1, 2, 3, 4, 5}));
  EXPECT_EQ(c.uint("batch_size"), 64u);
  EXPECT_EQ(c.real("step_size"), 0.1);
  EXPECT_EQ(c.uint("train_subsample"), 6000u);
  EXPECT_EQ(c.uint("test_subsample"), 1000u);
  EXPECT_EQ(c.text("teacher_architecture"), "784-500-300-10");
  EXPECT_EQ(c.text_list("architectures").size(), 4u);
  const auto g = parse_config("experiment = gd-vs-sgd-mnist\ndata_dir = d\n");
  EXPECT_EQ(g.real("gd_step_size"), 0.5);
  EXPECT_EQ(g.real("sgd_step_size"), 0.1);
}

TEST(ParseConfig, CommentsListsAndWhitespace) {
  const auto c = parse_config(
      "# ensemble over dimensions\n"
      "experiment=floor-spin   \n"
      "\n"
      "  n = 10  # low\n"
      "dims = 10, 50,100\n");
  EXPECT_EQ(c.uint_list("dims"), (UIntList{10, 50, 100}));
}

TEST(ParseConfig, MisspelledKeyIsNamedWithLine) {
  const std::string text = "experiment = floor-spin\nn = 10\nstep_sise = 0.1\n";
  EXPECT_EQ(error_line(text), 3);
  EXPECT_NE(error_text(text).find("step_sise"), std::string::npos);
}

TEST(ParseConfig, KeyFromAnotherExperimentIsRejected) {
  EXPECT_EQ(error_line("experiment = floor-spin\nn = 10\ndata_dir = x\n"), 3);
}

TEST(ParseConfig, TypeMismatch) {
  EXPECT_EQ(error_line("experiment = floor-spin\nn = ten\n"), 2);
  EXPECT_EQ(error_line("experiment = floor-spin\nn = 10\nstep_size = fast\n"), 3);
  EXPECT_EQ(error_line("experiment = floor-spin\nn = 10\nfresh_couplings = yes\n"), 3);
  EXPECT_EQ(error_line("experiment = floor-spin\nn = -4\n"), 2);
  EXPECT_EQ(error_line("experiment = sgd-spin\nn = 4\nP = 1, x\n"), 3);
}

TEST(ParseConfig, MissingRequiredKey) {
  EXPECT_NE(error_text("experiment = floor-spin\n").find("'n'"), std::string::npos);
  EXPECT_NE(error_text("experiment = sgd-spin\nn = 50\n").find("'P'"), std::string::npos);
  EXPECT_NE(error_text("n = 50\n").find("experiment"), std::string::npos);
}

TEST(ParseConfig, UnknownExperimentAndMalformedLines) {
  EXPECT_EQ(error_line("\nexperiment = floor-sping\n"), 2);
  EXPECT_EQ(error_line("experiment = floor-spin\nn 10\n"), 2);
  EXPECT_EQ(error_line("experiment = floor-spin\nn = 1\nn = 2\n"), 3);
}

TEST(ParseConfig, RoundTrip) {
  for (const std::string text :
       {"experiment = floor-spin\nn = 100\nstep_size = 0.1\ndims = 10, 100\n",
        "experiment = sgd-spin\nn = 50\nP = 1, 5, 10\nbudget = 12.5\npass_order = uniform\n",
        "experiment = teacher-student\ndata_dir = data/x\narchitectures = 784-5-10, 784-9-10\n",
        "experiment = gd-vs-sgd-mnist\ndata_dir = d\ndesk_scale = true\nbudget = "
        "0.30000000000000004\n"}) {
    const auto a = parse_config(text);
    const auto b = parse_config(serialize_config(a));
    EXPECT_EQ(a, b) << text;
    EXPECT_EQ(serialize_config(a), serialize_config(b));
  }
}

TEST(ExperimentConfigTest, SetValidatesAgainstSchema) {
  auto c = parse_config("experiment = floor-spin\nn = 10\n");
  c.set("master_seed", "99");
  EXPECT_EQ(c.uint("master_seed"), 99u);
  EXPECT_THROW(c.set("desk_scale", "true"), ConfigError);
  EXPECT_THROW(c.set("trials", "many"), ConfigError);
  EXPECT_THROW((void)c.text("n"), ConfigError);
}

TEST(Registry, ListsEveryExperiment) {
  const auto& reg = experiment_registry();
  EXPECT_EQ(reg, (std::vector<std::string>{"floor-spin", "floor-tripartite", "sgd-spin",
                                           "teacher-student", "gd-vs-sgd-mnist"}));
  for (const auto& name : reg) EXPECT_FALSE(experiment_description(name).empty());
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-5), "1e-05");
  EXPECT_EQ(format_double(-1.633), "-1.633");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

}  // namespace
}  // namespace floorlab
