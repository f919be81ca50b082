#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "cellseg/error.hpp"
#include "cellseg/fileutil.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kSmall =
    " --seed 3 --set gen.cell_count=4 --set gen.lattice_dims=24 --set gen.crop_dims=20"
    " --set gen.seed_radius=3 --set gen.cell_target_volume=300 --set gen.mc_sweeps=5";

/// Runs the CLI with `args`, discarding its output, and returns the exit status.
int run(const std::string& args) {
  const std::string cmd = std::string("\"") + CELLSEG_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, HelpSucceeds) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("gen --help"), 0);
}

TEST(Cli, UsageProblemsExitWithOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("gen"), 1);  // no --out
  EXPECT_EQ(run("gen --out /tmp/x --set gen.no_such_key=1"), 1);
  EXPECT_EQ(run("gen --out /tmp/x --set justtext"), 1);
  EXPECT_EQ(run("ablate --out /tmp/x --arms none"), 1);
}

TEST(Cli, PlacementOverflowExitsWithOne) {
  support::TempDir dir;
  EXPECT_EQ(run("gen --out " + q(dir.path()) + kSmall + " --set gen.cell_count=5000"), 1);
}

TEST(Cli, DataProblemsExitWithTwo) {
  support::TempDir dir;
  EXPECT_EQ(run("detect --volume " + q(dir / "absent") + " --out " + q(dir / "d.jsonl")), 2);
  cellseg::write_file_atomic(dir / "bad.jsonl", "{\"view\":\"qq\"}\n");
  EXPECT_EQ(run("fuse --detections " + q(dir / "bad.jsonl") + " --out " + q(dir / "b.json")), 2);
}

TEST(Cli, UnknownBackendExitsWithOne) {
  support::TempDir dir;
  ASSERT_EQ(run("gen --out " + q(dir.path()) + kSmall), 0);
  EXPECT_EQ(run("detect --volume " + q(dir / "vol_0000") + " --backend neural --out " + q(dir / "d.jsonl")), 1);
  EXPECT_EQ(run("detect --volume " + q(dir / "vol_0000") + " --backend oracle --out " + q(dir / "d.jsonl")), 1);
}

TEST(Cli, StagesChainThroughFiles) {
  support::TempDir dir;
  ASSERT_EQ(run("gen --count 1 --out " + q(dir.path()) + kSmall), 0);
  const auto vol = q(dir / "vol_0000");
  const auto labels = q(dir / "vol_0000_labels");
  ASSERT_EQ(run("detect --volume " + vol + " --backend oracle --labels " + labels + " --out " + q(dir / "d.jsonl")), 0);
  ASSERT_EQ(run("fuse --detections " + q(dir / "d.jsonl") + " --out " + q(dir / "b.json")), 0);
  ASSERT_EQ(run("segment --volume " + vol + " --boxes " + q(dir / "b.json") + " --backend oracle --labels " + labels +
                " --out " + q(dir / "pred")),
            0);
  ASSERT_EQ(run("eval --pred " + q(dir / "pred") + " --gt " + labels + " --out " + q(dir / "m")), 0);
  EXPECT_TRUE(fs::exists(dir / "m" / "metrics.json"));
  EXPECT_TRUE(fs::exists(dir / "pred_records.json"));
  ASSERT_EQ(run("export-cubes --volume " + vol + " --boxes " + q(dir / "b.json") + " --out " + q(dir / "cubes")), 0);
  EXPECT_TRUE(fs::exists(dir / "cubes" / "index.json"));
  // Scoring the truth against itself is perfect.
  ASSERT_EQ(run("eval --pred " + labels + " --gt " + labels + " --out " + q(dir / "self")), 0);
  EXPECT_EQ(cellseg::read_json(dir / "self" / "metrics.json").at("mAJ"), 1.0);
}

TEST(ExitStatus, GroupsErrorKinds) {
  using cellseg::ErrorCode;
  EXPECT_EQ(cellseg::exit_status(ErrorCode::ConfigError), 1);
  EXPECT_EQ(cellseg::exit_status(ErrorCode::UsageError), 1);
  EXPECT_EQ(cellseg::exit_status(ErrorCode::HeaderMalformed), 2);
  EXPECT_EQ(cellseg::exit_status(ErrorCode::ParseError), 2);
  EXPECT_EQ(cellseg::exit_status(ErrorCode::MissingMaskFile), 2);
  EXPECT_EQ(cellseg::exit_status(ErrorCode::EmptyCluster), 3);
  EXPECT_EQ(cellseg::exit_status(ErrorCode::EmptyOperands), 3);
  EXPECT_EQ(cellseg::exit_status(ErrorCode::EmptyForeground), 3);
}
