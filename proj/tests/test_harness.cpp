#include <gtest/gtest.h>

#include "harness.hpp"

using namespace squire::harness;

TEST(Spec, DefaultsCoverEverySubcommand) {
  for (const auto& sub : subcommands()) {
    const Spec s = Spec::defaults(sub);
    EXPECT_NO_THROW(s.validate()) << sub;
    EXPECT_EQ(s.get("seed"), "1");
  }
  EXPECT_EQ(Spec::defaults("kernel").get_ints("workers"), (std::vector<std::int64_t>{4, 8, 16, 32}));
  EXPECT_THROW(Spec::defaults("plot"), std::invalid_argument);
}

TEST(Spec, RejectsUnknownKeysAndBadValues) {
  Spec s = Spec::defaults("kernel");
  EXPECT_THROW(s.set("nonsense", "1"), std::invalid_argument);
  s.set("kernel", "fft");
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = Spec::defaults("kernel");
  s.set("kernel", "sw");
  s.set("size", "3");
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.set("size", "abc");
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = Spec::defaults("kernel");
  s.set("workers", "0,4");
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = Spec::defaults("cache-sweep");
  s.set("sizes_kib", "1,3");
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Spec, ConfigTextFormats) {
  Spec s = Spec::defaults("kernel");
  apply_config_text(s, "# comment\nkernel = chain\n\nworkers=4\n");
  EXPECT_EQ(s.get("kernel"), "chain");
  EXPECT_EQ(s.get("workers"), "4");
  EXPECT_THROW(apply_config_text(s, "kernel"), std::invalid_argument);
  EXPECT_THROW(apply_config_text(s, "subcommand=pipeline"), std::invalid_argument);

  Spec j = Spec::defaults("kernel");
  apply_config_text(j, R"({"schema_version":1,"spec":{"subcommand":"kernel","kernel":"sw","reps":"3"}})");
  EXPECT_EQ(j.get("kernel"), "sw");
  EXPECT_EQ(j.get("reps"), "3");

  Spec c = Spec::defaults("kernel");
  apply_config_text(c, "# schema_version=1\n# spec.kernel=radix\n# spec.seed=9\nworkers,speedup\n4,1.0\n");
  EXPECT_EQ(c.get("kernel"), "radix");
  EXPECT_EQ(c.get("seed"), "9");
}

TEST(Knee, SmallestSizeWithinTolerance) {
  EXPECT_EQ(knee_size({1, 2, 4, 8, 16}, {9.0, 5.0, 4.3, 4.1, 4.0}), 4u);
  EXPECT_EQ(knee_size({1, 2, 4}, {1.0, 1.0, 1.0}), 1u);
  EXPECT_EQ(knee_size({1, 2, 4}, {3.0, 2.0, 1.0}), 4u);
  EXPECT_EQ(knee_size({}, {}), 0u);
}

TEST(Run, KernelReportEmbedsSpecAndIsDeterministic) {
  Spec s = Spec::defaults("kernel");
  s.set("kernel", "dtw");
  s.set("workers", "1,4");
  s.set("size", "40");
  const Outcome a = run(s);
  const Outcome b = run(s);
  EXPECT_EQ(render_json(a), render_json(b));
  EXPECT_EQ(a.report["schema_version"], kSchemaVersion);
  EXPECT_EQ(a.report["spec"]["workers"], "1,4");
  ASSERT_EQ(a.report["rows"].size(), 2u);
  EXPECT_LT(a.report["rows"][0]["speedup"].get<double>(), 1.0);  // one in-order worker loses to the host
  EXPECT_TRUE(a.clean());
}

TEST(Run, CsvHeaderFollowsRowKeys) {
  Spec s = Spec::defaults("syncbench");
  s.set("workers", "1,4");
  s.set("lock_sweep", "30");
  s.set("format", "csv");
  const std::string csv = render_csv(run(s));
  EXPECT_NE(csv.find("# schema_version=1\n"), std::string::npos);
  EXPECT_NE(csv.find("# spec.lock_sweep=30\n"), std::string::npos);
  EXPECT_NE(csv.find("\nseries,workers,lock_cost,hw_cycles,lock_cycles_total,ratio\n"), std::string::npos);
}

TEST(Run, SingleWorkerLockRatioNearOne) {
  Spec s = Spec::defaults("syncbench");
  s.set("workers", "1");
  s.set("lock_sweep", "30");
  const double r = run(s).report["rows"][0]["ratio"].get<double>();
  EXPECT_NEAR(r, 1.0, 0.05);
}
