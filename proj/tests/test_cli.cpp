#include <gtest/gtest.h>

#include "cli_runner.hpp"
#include "mslkit/mslkit.hpp"

using namespace mslkit;
using mslkit::testing::CliResult;
using mslkit::testing::key_values;
using mslkit::testing::ScratchDir;

namespace {

CliResult cli(const ScratchDir& dir, std::vector<std::string> args) {
  return mslkit::testing::run_cli(args, dir.path() / "io");
}

// small separable dataset under dir/data
void small_synth(const ScratchDir& dir, const std::string& extra_sigma = "1") {
  const CliResult r = cli(dir, {"synth", "--classes", "3", "--per-class", "10", "--dim", "8", "--models", "2",
                                "--sigma", extra_sigma, "--out", dir / "data"});
  ASSERT_EQ(r.exit_code, 0) << r.err;
}

}  // namespace

TEST(Cli, NoSubcommandIsUsageError) {
  ScratchDir d("cli");
  EXPECT_EQ(cli(d, {}).exit_code, 2);
  EXPECT_EQ(cli(d, {"frobnicate"}).exit_code, 2);
  EXPECT_EQ(cli(d, {"train", "--manifest", "x.csv"}).exit_code, 2);  // --out missing
}

TEST(Cli, HelpExitsZero) {
  ScratchDir d("cli");
  const CliResult r = cli(d, {"train", "--help"});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("--energy"), std::string::npos);
}

TEST(Cli, SynthFivePerClassSplitsFourOne) {
  ScratchDir d("cli");
  ASSERT_EQ(cli(d, {"synth", "--classes", "2", "--per-class", "5", "--dim", "3", "--models", "2", "--out", d / "s"})
                .exit_code,
            0);
  const DatasetManifest train = read_manifest(d.path() / "s/train.csv");
  const DatasetManifest test = read_manifest(d.path() / "s/test.csv");
  std::map<std::string, std::set<std::string>> train_ids, test_ids;
  for (const auto& r : train.records) train_ids[r.label].insert(r.sample_id);
  for (const auto& r : test.records) test_ids[r.label].insert(r.sample_id);
  ASSERT_EQ(train_ids.size(), 2u);
  for (const auto& [label, ids] : train_ids) EXPECT_EQ(ids.size(), 4u) << label;
  for (const auto& [label, ids] : test_ids) EXPECT_EQ(ids.size(), 1u) << label;
}

TEST(Cli, SynthIsByteIdenticalAcrossRuns) {
  ScratchDir d("cli");
  for (const char* out : {"a", "b"})
    ASSERT_EQ(cli(d, {"synth", "--per-class", "5", "--dim", "6", "--seed", "7", "--out", d / out}).exit_code, 0);
  const auto a = mslkit::testing::tree_bytes(d.path() / "a");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, mslkit::testing::tree_bytes(d.path() / "b"));
}

TEST(Cli, SynthValidation) {
  ScratchDir d("cli");
  EXPECT_EQ(cli(d, {"synth", "--per-class", "1", "--out", d / "x"}).exit_code, 2);
  EXPECT_EQ(cli(d, {"synth", "--noise-corr", "2", "--out", d / "x"}).exit_code, 2);
  EXPECT_EQ(cli(d, {"synth", "--classes", "abc", "--out", d / "x"}).exit_code, 2);
  EXPECT_FALSE(std::filesystem::exists(d.path() / "x"));
}

TEST(Cli, TrainFlagValidation) {
  ScratchDir d("cli");
  small_synth(d);
  const std::string m = d / "data/train.csv";
  const CliResult energy = cli(d, {"train", "--manifest", m, "--energy", "1.5", "--out", d / "m.bin"});
  EXPECT_EQ(energy.exit_code, 2);
  EXPECT_NE(energy.err.find("energy"), std::string::npos);
  EXPECT_EQ(cli(d, {"train", "--manifest", m, "--method", "svm", "--out", d / "m.bin"}).exit_code, 2);
  EXPECT_EQ(cli(d, {"train", "--manifest", m, "--itr-max", "0", "--out", d / "m.bin"}).exit_code, 2);
  EXPECT_EQ(cli(d, {"train", "--manifest", m, "--mda-dims", "2,x", "--out", d / "m.bin"}).exit_code, 2);
  EXPECT_EQ(cli(d, {"train", "--manifest", m, "--epsilon", "-1", "--out", d / "m.bin"}).exit_code, 2);
  EXPECT_FALSE(std::filesystem::exists(d.path() / "m.bin"));
  EXPECT_EQ(cli(d, {"train", "--manifest", d / "missing.csv", "--out", d / "m.bin"}).exit_code, 1);
}

TEST(Cli, NoiselessTrainEvalInspect) {
  ScratchDir d("cli");
  small_synth(d, "0");
  const CliResult t = cli(d, {"train", "--manifest", d / "data/train.csv", "--out", d / "m.bin"});
  ASSERT_EQ(t.exit_code, 0) << t.err;
  EXPECT_NE(t.out.find("method=howsvd-mda"), std::string::npos);

  const CliResult e = cli(d, {"eval", "--model", d / "m.bin", "--manifest", d / "data/train.csv", "--report",
                              d / "r.txt"});
  ASSERT_EQ(e.exit_code, 0) << e.err;
  EXPECT_NE(e.out.find("accuracy=1 "), std::string::npos) << e.out;
  const EvalReport rep = parse_report(mslkit::testing::slurp(d.path() / "r.txt"));
  EXPECT_EQ(rep.accuracy, 1.0);

  const CliResult i = cli(d, {"inspect", "--model", d / "m.bin"});
  ASSERT_EQ(i.exit_code, 0) << i.err;
  const auto kv = key_values(i.out);
  // gallery width equals the product of the final stage dims
  const TrainedModel model = load_model(d.path() / "m.bin");
  std::size_t width = 1;
  for (std::size_t v : model.stages.back().output_dims) width *= v;
  EXPECT_EQ(model.gallery.width(), width);
  EXPECT_NE(t.out.find("gallery_width=" + std::to_string(width)), std::string::npos);
  EXPECT_EQ(kv.at("method"), "howsvd-mda");
  EXPECT_EQ(kv.at("stage.2.kind"), "mda");
}

TEST(Cli, InspectDimsMatchTrainSummary) {
  ScratchDir d("cli");
  small_synth(d);
  const CliResult t = cli(d, {"train", "--manifest", d / "data/train.csv", "--out", d / "m.bin"});
  ASSERT_EQ(t.exit_code, 0) << t.err;
  const auto kv = key_values(cli(d, {"inspect", "--model", d / "m.bin"}).out);
  for (int s = 1; s <= 2; ++s) {
    // train prints stageN=kind[8x2->4x2]; inspect prints stage.N.dims: 8x2 -> 4x2
    std::string dims = kv.at("stage." + std::to_string(s) + ".dims");
    dims.erase(std::remove(dims.begin(), dims.end(), ' '), dims.end());
    const std::string token = "stage" + std::to_string(s) + "=" + kv.at("stage." + std::to_string(s) + ".kind") +
                              "[" + dims + "]";
    EXPECT_NE(t.out.find(token), std::string::npos) << token << " in " << t.out;
  }
}

TEST(Cli, InspectDeltasSatisfyStopRule) {
  ScratchDir d("cli");
  small_synth(d);
  ASSERT_EQ(cli(d, {"train", "--manifest", d / "data/train.csv", "--out", d / "m.bin"}).exit_code, 0);
  const auto kv = key_values(cli(d, {"inspect", "--model", d / "m.bin"}).out);
  const int iterations = std::stoi(kv.at("mda.iterations_used"));
  EXPECT_LE(iterations, 5);
  if (kv.at("mda.converged") == "yes") {
    const TrainedModel model = load_model(d.path() / "m.bin");
    const ModeBasis& mda = model.stages.back();
    for (std::size_t k = 1; k <= mda.order(); ++k) {
      const double delta = std::stod(kv.at("mda.mode." + std::to_string(k) + ".delta"));
      // recomputed, not the printed threshold
      const double bound = static_cast<double>(mda.output_dims[k - 1] * mda.input_dims[k - 1]) * 1e-6;
      EXPECT_LT(delta, bound) << "mode " << k;
    }
  }
}

TEST(Cli, LdaGalleryWidthBound) {
  ScratchDir d("cli");
  small_synth(d);
  const CliResult t = cli(d, {"train", "--manifest", d / "data/train.csv", "--method", "lda", "--out", d / "m.bin"});
  ASSERT_EQ(t.exit_code, 0) << t.err;
  EXPECT_LE(load_model(d.path() / "m.bin").gallery.width(), 2u);
}

TEST(Cli, EvalWithWrongModelCountFails) {
  ScratchDir d("cli");
  small_synth(d);
  ASSERT_EQ(cli(d, {"train", "--manifest", d / "data/train.csv", "--models", "model_0", "--out", d / "m.bin"})
                .exit_code,
            0);
  const CliResult e =
      cli(d, {"eval", "--model", d / "m.bin", "--manifest", d / "data/test.csv", "--report", d / "r.txt"});
  EXPECT_EQ(e.exit_code, 1);
  EXPECT_NE(e.err.find("error:"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(d.path() / "r.txt"));
}

TEST(Cli, EvalReportSchema) {
  ScratchDir d("cli");
  small_synth(d);
  ASSERT_EQ(cli(d, {"train", "--manifest", d / "data/train.csv", "--out", d / "m.bin"}).exit_code, 0);
  ASSERT_EQ(
      cli(d, {"eval", "--model", d / "m.bin", "--manifest", d / "data/test.csv", "--report", d / "r.txt"}).exit_code,
      0);
  const std::string text = mslkit::testing::slurp(d.path() / "r.txt");
  const EvalReport r = parse_report(text);
  std::size_t total = 0;
  for (const auto& row : r.confusion)
    for (std::size_t v : row) total += v;
  EXPECT_EQ(total, r.n_test);
  EXPECT_EQ(r.n_test, 6u);
  const auto kv = key_values(text);
  for (const char* key : {"n_test", "n_classes", "accuracy", "micro_auc", "class.1.name", "class.1.accuracy",
                          "class.1.auc", "class.1.confusion"})
    EXPECT_TRUE(kv.count(key)) << key;
}

TEST(Cli, InspectCorruptFileFails) {
  ScratchDir d("cli");
  std::ofstream(d.path() / "junk.bin") << "not a model at all";
  EXPECT_EQ(cli(d, {"inspect", "--model", d / "junk.bin"}).exit_code, 1);
  EXPECT_EQ(cli(d, {"inspect", "--model", d / "absent.bin"}).exit_code, 1);
}

TEST(Cli, ProjectWritesOneRowPerSample) {
  ScratchDir d("cli");
  small_synth(d);
  ASSERT_EQ(cli(d, {"train", "--manifest", d / "data/train.csv", "--out", d / "m.bin"}).exit_code, 0);
  ASSERT_EQ(cli(d, {"project", "--model", d / "m.bin", "--manifest", d / "data/test.csv", "--out", d / "p.csv"})
                .exit_code,
            0);
  const std::string csv = mslkit::testing::slurp(d.path() / "p.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 6);
}

TEST(Cli, ConfigFileOverriddenByFlags) {
  ScratchDir d("cli");
  std::ofstream(d.path() / "synth.ini") << "classes=2\nper-class=5\ndim=3\nmodels=1\n";
  ASSERT_EQ(cli(d, {"synth", "--config", d / "synth.ini", "--models", "2", "--out", d / "s"}).exit_code, 0);
  const DatasetManifest train = read_manifest(d.path() / "s/train.csv");
  EXPECT_EQ(train.records.size(), 2u * 4u * 2u);
}

TEST(Cli, TrainAndEvalAreDeterministic) {
  ScratchDir d("cli");
  small_synth(d);
  for (const char* tag : {"1", "2"}) {
    ASSERT_EQ(cli(d, {"train", "--manifest", d / "data/train.csv", "--out", d / (std::string("m") + tag)}).exit_code,
              0);
    ASSERT_EQ(cli(d, {"eval", "--model", d / (std::string("m") + tag), "--manifest", d / "data/test.csv", "--report",
                      d / (std::string("r") + tag)})
                  .exit_code,
              0);
  }
  EXPECT_EQ(mslkit::testing::slurp(d.path() / "m1"), mslkit::testing::slurp(d.path() / "m2"));
  EXPECT_EQ(mslkit::testing::slurp(d.path() / "r1"), mslkit::testing::slurp(d.path() / "r2"));
}
