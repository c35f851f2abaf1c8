#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "support/synthetic.hpp"
#include "uavids/detector.hpp"
#include "uavids/error.hpp"
#include "uavids/pipeline.hpp"

namespace fs = std::filesystem;

namespace uavids {
namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Relative path -> bytes for every file under `root`.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("uavids_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Short sessions and few epochs keep the chain fast.
const std::vector<std::string> kQuick = {"train.epochs=15"};

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fresh_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    config_path_ = testing::write_flight_fixture(dir_, {.full_sessions = false, .seed = 5});
  }
  PipelineConfig config(std::vector<std::string> extra = {}) const {
    auto o = kQuick;
    o.insert(o.end(), extra.begin(), extra.end());
    return load_pipeline_config(config_path_, o);
  }
  void run_all(const PipelineConfig& cfg) {
    std::ostringstream log;
    cmd_prepare(cfg, log);
    cmd_train(cfg, log);
    cmd_detect(cfg, {}, log);
    cmd_eval(cfg, {}, log);
    cmd_report(cfg, log);
  }

  fs::path dir_;
  fs::path config_path_;
};

TEST(Config, ParsesDefaultsAndOverrides) {
  const auto dir = fresh_dir("config");
  {
    std::ofstream(dir / "a.conf") << "# comment\n"
                                     "annotations = ann.csv\n"
                                     "category_map = /abs/cats.csv\n"
                                     "seed = 9\n"
                                     "train.epochs = 3\n"
                                     "log.s1 = logs/s1.csv\n"
                                     "test.start.s1 = 10:00:05\n";
  }
  const auto cfg = load_pipeline_config(dir / "a.conf", {"train.seed=4", "threshold.method=max"});
  EXPECT_EQ(cfg.annotations, dir / "ann.csv");
  EXPECT_EQ(cfg.category_map, fs::path("/abs/cats.csv"));
  EXPECT_EQ(cfg.logs.at("s1"), dir / "logs/s1.csv");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.pooling.rng_seed, 9u);
  EXPECT_EQ(cfg.train.rng_seed, 4u);
  EXPECT_EQ(cfg.train.epochs, 3u);
  EXPECT_EQ(cfg.threshold.method, ThresholdMethod::MaxBenign);
  EXPECT_EQ(cfg.test_start.at("s1").str(), "10:00:05");
  EXPECT_EQ(cfg.encoder_dims, (std::vector<std::size_t>{24, 12, 6}));
  EXPECT_EQ(cfg.pooling.window_ms, 500);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  const auto dir = fresh_dir("config_bad");
  std::ofstream(dir / "a.conf") << "annotations = a.csv\ntrain.epoch = 3\n";
  try {
    load_pipeline_config(dir / "a.conf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("train.epoch"), std::string::npos);
  }
  std::ofstream(dir / "b.conf") << "train.learning_rate = fast\n";
  EXPECT_THROW(load_pipeline_config(dir / "b.conf"), Error);
  std::ofstream(dir / "c.conf") << "seed = 1\n";
  EXPECT_THROW(load_pipeline_config(dir / "c.conf", {"train.batch_size=0"}), Error);
}

TEST(SplitBenign, IsTimeOrderedEightyTwenty) {
  WindowedMatrix m;
  m.features = {"a"};
  m.values = Matrix(10, 1);
  for (int r = 0; r < 10; ++r) {
    m.values(r, 0) = r;
    m.window_starts.push_back(r);
  }
  const auto s = split_benign(m, 0.2);
  EXPECT_EQ(s.train.rows(), 8u);
  EXPECT_EQ(s.validation.rows(), 2u);
  EXPECT_EQ(s.validation.values(0, 0), 8.0);
}

TEST_F(Pipeline, PrepareWritesOneMatrixPerSessionOneCatalogOneScaler) {
  std::ostringstream log;
  cmd_prepare(config(), log);
  const Layout layout{dir_ / "out"};
  std::size_t matrices = 0;
  for (const auto& e : fs::directory_iterator(layout.root / "windows")) matrices += e.is_regular_file();
  EXPECT_EQ(matrices, 3u);
  EXPECT_TRUE(fs::is_regular_file(layout.catalog()));
  EXPECT_TRUE(fs::is_regular_file(layout.scaler()));

  // Control, constant and absent-from-attack channels are gone.
  const auto catalog = load_catalog(layout.catalog());
  for (const auto& name : catalog.selected()) {
    EXPECT_NE(catalog.category_of(name), Category::Control);
    EXPECT_NE(name, "system_id");
    EXPECT_NE(name, "rangefinder_distance");
  }
  const auto dos = load_matrix(layout.matrix("dos"));
  EXPECT_GT(dos.attack_rows(), 0u);
  EXPECT_EQ(load_matrix(layout.matrix("benign")).attack_rows(), 0u);
  EXPECT_NE(log.str().find("dropped_tranquil"), std::string::npos);
}

TEST_F(Pipeline, MissingAnnotationFileNamesThePath) {
  fs::remove(dir_ / "annotations.csv");
  std::ostringstream log;
  try {
    cmd_prepare(config(), log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find((dir_ / "annotations.csv").string()), std::string::npos);
  }
}

TEST_F(Pipeline, FullChainIsReproducibleByteForByte) {
  run_all(config());
  const auto first = snapshot(dir_ / "out");
  fs::remove_all(dir_ / "out");
  run_all(config());
  const auto second = snapshot(dir_ / "out");
  EXPECT_EQ(first.size(), second.size());
  for (const auto& [name, bytes] : first) {
    ASSERT_TRUE(second.count(name)) << name;
    EXPECT_TRUE(second.at(name) == bytes) << name << " differs";
  }
  EXPECT_TRUE(first.count("report/dos_trace.svg"));
  EXPECT_TRUE(first.count("report/gps_distribution.csv"));
  EXPECT_TRUE(first.count("eval/gps.txt"));
}

TEST_F(Pipeline, DetectionMatchesLibraryComposition) {
  run_all(config());
  const Layout layout{dir_ / "out"};
  const auto model = load_model(layout.model());
  const auto meta = ConfigFile::load(layout.detection_meta("dos"));
  const double threshold = std::stod(*meta.get("threshold"));
  const auto m = load_matrix(layout.matrix("dos"));
  const auto want = score(model, m);

  std::ifstream in(layout.detection("dos"));
  const auto rows = read_detection(in);
  ASSERT_EQ(rows.size(), want.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].loss, 0.0);
    EXPECT_EQ(rows[i].loss, want[i].loss);
    EXPECT_EQ(rows[i].verdict, rows[i].loss > threshold ? Label::Attack : Label::Benign);
    EXPECT_EQ(rows[i].label, m.labels[i]);
  }
  EXPECT_EQ(*meta.get("model_fingerprint"), model_fingerprint(model));
}

TEST_F(Pipeline, PinnedTestStartCropsTheSession) {
  std::ostringstream log;
  const auto cfg = config();
  auto infos = load_annotations(cfg.annotations);
  const auto& dos = *std::find_if(infos.begin(), infos.end(), [](auto& i) { return i.session_id == "dos"; });
  auto pinned = cfg;
  pinned.test_start["dos"] = ClockTime{dos.flight_start.seconds + 30};
  cmd_prepare(pinned, log);
  const auto m = load_matrix(Layout{dir_ / "out"}.matrix("dos"));
  EXPECT_EQ(m.window_starts.front(), 30'000'000);
  pinned.test_start["dos"] = dos.annotation->attack_start;
  EXPECT_THROW(cmd_prepare(pinned, log), Error);
}

TEST_F(Pipeline, TrainRejectsAttackRowsInTheBenignMatrix) {
  std::ostringstream log;
  const auto cfg = config();
  cmd_prepare(cfg, log);
  const Layout layout{dir_ / "out"};
  auto m = load_matrix(layout.matrix("benign"));
  m.labels[0] = Label::Attack;
  save_matrix(layout.matrix("benign"), m);
  EXPECT_THROW(cmd_train(cfg, log), Error);
  EXPECT_FALSE(fs::exists(layout.model()));
}

TEST_F(Pipeline, LaterStagesNeedEarlierOutputs) {
  std::ostringstream log;
  EXPECT_THROW(cmd_train(config(), log), Error);
  cmd_prepare(config(), log);
  EXPECT_THROW(cmd_detect(config(), {}, log), Error);
  EXPECT_THROW(cmd_report(config(), log), Error);
  cmd_train(config(), log);
  EXPECT_THROW(cmd_eval(config(), {}, log), Error);
  EXPECT_THROW(cmd_detect(config(), {"nope"}, log), Error);
}

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(UAVIDS_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(Pipeline, CliChainExitsZeroAndErrorsAreOneLine) {
  const auto err = dir_ / "stderr.txt";
  const std::string base = "--config " + config_path_.string() + " --set train.epochs=5 ";
  for (const char* sub : {"prepare", "train", "detect", "eval", "report"}) {
    EXPECT_EQ(run_cli(base + sub, err), 0) << sub << ": " << slurp(err);
  }
  EXPECT_TRUE(fs::is_regular_file(dir_ / "out" / "report" / "gps_trace.svg"));

  EXPECT_EQ(run_cli(base + "detect --session nope", err), 1);
  const auto text = slurp(err);
  EXPECT_EQ(text.rfind("error: command=detect kind=precondition message=\"", 0), 0u) << text;
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);

  EXPECT_EQ(run_cli(base + "--set bogus.key=1 train", err), 1);
  EXPECT_NE(slurp(err).find("kind=config"), std::string::npos) << slurp(err);

  EXPECT_NE(run_cli("--config " + config_path_.string(), err), 0);
}

}  // namespace
}  // namespace uavids
