#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "logad/cli.hpp"
#include "logad/config.hpp"
#include "logad/csv.hpp"
#include "logad/errors.hpp"
#include "logad/synthetic.hpp"
#include "test_util.hpp"

using namespace logad;
using namespace std::chrono_literals;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "logad");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("config defaults and file values") {
  const auto d = load_config_text("");
  CHECK(d.hp.learning_rate == 0.01);
  CHECK(d.hp.epochs == 50);
  CHECK(d.steps == 6);
  CHECK(d.features.bucket == 10min);
  CHECK_FALSE(d.features.cumsum);
  CHECK(d.features.normalization == Normalization::minmax);
  CHECK(d.features.top_n == 10);
  CHECK(d.hidden_units == 128);

  const auto c = load_config_text("# comment\n[train]\nlr = 0.1\nepochs=20\n\n[features]\ntop-n = 5\nbucket = 30m\ncumsum = true\n");
  CHECK(c.hp.learning_rate == 0.1);
  CHECK(c.hp.epochs == 20);
  CHECK(c.features.top_n == 5);
  CHECK(c.features.bucket == 30min);
  CHECK(c.features.cumsum);

  try {
    load_config_text("learningrate = 0.1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("learningrate") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config_text("lr = fast\n"), ConfigError);
  CHECK_THROWS_AS(load_config_text("just words\n"), ConfigError);
  RunConfig bad;
  apply_setting(bad, "lr", "1.5");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("flags override the config file") {
  test::TempDir dir;
  const auto conf = dir.file("run.conf");
  csv::write_file(conf, "lr = 0.1\n");
  auto file_only = load_config(conf);
  CHECK(file_only.hp.learning_rate == 0.1);
  apply_setting(file_only, "lr", "0.01");
  CHECK(file_only.hp.learning_rate == 0.01);

  // via the CLI: an unknown key in the file is a usage error
  csv::write_file(dir.file("bad.conf"), "learningrate = 0.1\n");
  const auto r = cli({"train", "--config", dir.file("bad.conf")});
  CHECK(r.code == 2);
  CHECK(r.err.find("learningrate") != std::string::npos);
}

TEST_CASE("anonymize on a three-line corpus") {
  test::TempDir dir;
  csv::write_file(dir.file("corpus.log"),
                  "<38>1 2022-03-01T10:00:00Z node1 sshd 11 - - Accepted publickey for alice from 10.1.2.3\n"
                  "<38>1 2022-03-01T10:00:05Z node2 sshd 12 - - Accepted publickey for alice from 10.1.2.4\n"
                  "<11>1 2022-03-01T10:01:00Z node1 kernel - - - error code 404\n");
  const auto r = cli({"anonymize", "--out-dir", dir.path().string()});
  REQUIRE(r.code == 0);
  const auto stream = csv::read_file(dir.file("anonymized.csv"));
  CHECK(line_count(stream) == 4);
  CHECK(stream.starts_with("timestamp,facility,severity,hostname,pattern\n"));
  CHECK(stream.find("alice") == std::string::npos);
  const auto dict = load_dictionary(dir.file("dictionary.csv"));
  CHECK(dict.size() == 2);
  CHECK(dict.total_count() == 3);
}

TEST_CASE("usage and stage errors") {
  test::TempDir dir;
  auto r = cli({"detect", "--out-dir", dir.path().string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("model not found") != std::string::npos);
  CHECK(line_count(r.err) == 1);

  CHECK(cli({}).code == 2);
  CHECK(cli({"train", "--no-such-flag", "1"}).code == 2);
  CHECK(cli({"train", "--lr", "2"}).code == 2);
  CHECK(cli({"synth", "--kind", "mystery", "--out-dir", dir.path().string()}).code == 2);
  r = cli({"featurize", "--input", dir.file("missing.csv")});
  CHECK(r.code == 1);
  CHECK(r.err.starts_with("logad featurize: error:"));
}

TEST_CASE("synth writes series frames") {
  test::TempDir dir;
  REQUIRE(cli({"synth", "--kind", "fib", "--repeats", "3", "--out-dir", dir.path().string()}).code == 0);
  const auto f = load_frame(dir.file("features.csv"));
  CHECK(f.rows() == 30);
  CHECK(f.at(9, 0) == 55);
  CHECK_FALSE(f.norm_meta());
}

TEST_CASE("separate stages reproduce the in-memory pipeline") {
  test::TempDir dir;
  const auto d = dir.path().string();
  REQUIRE(cli({"synth", "--kind", "corpus", "--duration", "48h", "--rate", "300", "--seed", "5", "--burst-at",
               "2022-03-02T20:00:00Z", "--out-dir", d})
              .code == 0);
  const std::vector<std::string> learn = {"--epochs", "4", "--hidden", "8", "--seed", "3"};
  REQUIRE(cli({"anonymize", "--out-dir", d}).code == 0);
  REQUIRE(cli({"featurize", "--out-dir", d}).code == 0);
  auto train_args = std::vector<std::string>{"train", "--out-dir", d};
  train_args.insert(train_args.end(), learn.begin(), learn.end());
  REQUIRE(cli(train_args).code == 0);
  REQUIRE(cli({"detect", "--out-dir", d}).code == 0);

  CHECK(csv::read_file(dir.file("loss.csv")).starts_with("epoch,train_loss,val_loss\n1,"));
  CHECK(line_count(csv::read_file(dir.file("loss.csv"))) == 5);
  CHECK(csv::read_file(dir.file("predictions.csv")).starts_with("time,actual_freq_top,predicted_freq_top\n"));

  RunConfig cfg;
  apply_setting(cfg, "epochs", "4");
  apply_setting(cfg, "hidden", "8");
  apply_setting(cfg, "seed", "3");
  const auto in_memory = run_pipeline_in_memory(csv::read_file(dir.file("corpus.log")), cfg);
  CHECK(csv::read_file(dir.file("anomalies.csv")) == in_memory);
}

TEST_CASE("sweep over a series frame") {
  test::TempDir dir;
  const auto d = dir.path().string();
  REQUIRE(cli({"synth", "--kind", "fib", "--repeats", "4", "--out-dir", d}).code == 0);
  const auto r = cli({"sweep", "--input", dir.file("features.csv"), "--sweep-lr", "0.001,0.01,0.1", "--epochs", "2",
                      "--hidden", "4", "--steps", "3", "--out-dir", d});
  REQUIRE(r.code == 0);
  CHECK(line_count(csv::read_file(dir.file("sweep.csv"))) == 4);
}
