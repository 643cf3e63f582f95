#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kTiny = ADP_TEST_DATA "/tiny.json";

struct Run {
  int code;
  std::string out, err;
};

Run adp_run(std::vector<std::string> args) {
  args.insert(args.begin(), "adp");
  std::ostringstream out, err;
  const int code = adp::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("adp_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 1 and name the culprit") {
  Run r = adp_run({});
  CHECK(r.code == 1);
  r = adp_run({"frobnicate"});
  CHECK(r.code == 1);
  r = adp_run({"evaluate", "--config", "/no/such/cfg.json"});
  CHECK(r.code == 1);
  CHECK(r.err.find("/no/such/cfg.json") != std::string::npos);
  r = adp_run({"gen-data", "--config", kTiny});
  CHECK(r.code == 1);
  CHECK(r.err.find("--out") != std::string::npos);
  r = adp_run({"evaluate", "--config", kTiny, "--runs", "zero"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--runs") != std::string::npos);
  r = adp_run({"evaluate", "--config", kTiny, "--set", "attack.nme=pgd"});
  CHECK(r.code == 1);
  CHECK(r.err.find("attack.nme") != std::string::npos);
  r = adp_run({"evaluate", "--config", kTiny, "--attack", "carlini"});
  CHECK(r.code == 1);
  CHECK(r.err.find("attack.name") != std::string::npos);
  CHECK(adp_run({"evaluate", "--help"}).code == 0);
}

TEST_CASE("end-to-end subcommands") {
  TempDir dir;
  const std::string data = dir / "d.bin", data2 = dir / "d2.bin";
  REQUIRE(adp_run({"gen-data", "--config", kTiny, "--out", data}).code == 0);
  REQUIRE(adp_run({"gen-data", "--config", kTiny, "--out", data2}).code == 0);
  CHECK(slurp(data) == slurp(data2));
  CHECK(adp_run({"gen-data", "--config", kTiny, "--seed", "9", "--out", data2}).code == 0);
  CHECK(slurp(data) != slurp(data2));

  const std::string clf = dir / "clf.adpw", score = dir / "score.adpw";
  REQUIRE(adp_run({"train-classifier", "--config", kTiny, "--data", data, "--out", clf}).code == 0);
  REQUIRE(adp_run({"train-score", "--config", kTiny, "--data", data, "--out", score}).code == 0);
  const std::vector<std::string> models{"--data", data, "--classifier", clf, "--score", score};
  auto with = [&](std::vector<std::string> head) {
    head.insert(head.end(), models.begin(), models.end());
    return head;
  };

  const std::string r1 = dir / "r1.json", r2 = dir / "r2.json";
  REQUIRE(adp_run(with({"evaluate", "--config", kTiny, "--out", r1})).code == 0);
  REQUIRE(adp_run(with({"evaluate", "--config", kTiny, "--out", r2, "--threads", "2"})).code == 0);
  CHECK(slurp(r1) == slurp(r2));
  const auto rep = nlohmann::json::parse(slurp(r1));
  CHECK(rep["records"].size() == 8);
  CHECK(rep.contains("robust_accuracy"));

  const std::string adv = dir / "adv.bin";
  CHECK(adp_run(with({"attack", "--config", kTiny, "--out", dir / "a.json", "--adversarial-out", adv})).code == 0);
  CHECK(adp_run(with({"purify", "--config", kTiny, "--input", adv, "--out", dir / "p.json"})).code == 0);
  CHECK(adp_run(with({"certify", "--config", kTiny, "--out", dir / "c.json", "--curve", dir / "c.csv"})).code == 0);
  CHECK(slurp(dir / "c.csv").rfind("radius,certified_accuracy\n", 0) == 0);
  CHECK(adp_run(with({"detect", "--config", kTiny, "--attacked", adv, "--out", dir / "det.json", "--histogram",
                      dir / "h.csv"}))
            .code == 0);
  CHECK(slurp(dir / "h.csv").rfind("set,bin_lo,bin_hi,count\n", 0) == 0);
  CHECK(adp_run(with({"calibrate-threshold", "--config", kTiny, "--out", dir / "t.json"})).code == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "t.json")).contains("threshold"));

  // Runtime failures exit 2; a checkpoint of the wrong kind is a usage error.
  std::ofstream(dir / "junk.adpw") << "not a checkpoint";
  CHECK(adp_run({"evaluate", "--config", kTiny, "--data", data, "--classifier", dir / "junk.adpw", "--score", score,
                 "--out", r1})
            .code == 2);
  const Run wrong = adp_run({"evaluate", "--config", kTiny, "--classifier", score, "--out", r1});
  CHECK(wrong.code == 1);
  CHECK(wrong.err.find("classifier.checkpoint") != std::string::npos);
}
