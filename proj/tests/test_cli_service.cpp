#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "lfkit/adjudication.hpp"
#include "lfkit/audit.hpp"
#include "lfkit/cli.hpp"
#include "lfkit/dataset_io.hpp"
#include "lfkit/image.hpp"
#include "lfkit/service.hpp"
#include "test_util.hpp"

using namespace lfkit;
using lfkit::testing::rec;
using lfkit::testing::TempDir;
using nlohmann::json;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::filesystem::path& data_dir, std::vector<std::string> args) {
  args.insert(args.begin(), {"--data-dir", data_dir.string()});
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Subject 1: race tie B/W. Subject 2: gender tie. Subject 3: clean. Subject 4: race majority.
std::vector<Record> small_raw() {
  return {
      rec("1_00", "1", "1980-01-01", "2003-01-01", 'M', 'B'),
      rec("1_01", "1", "1980-01-01", "2004-01-01", 'M', 'W'),
      rec("2_00", "2", "1975-01-01", "2003-05-01", 'M', 'W'),
      rec("2_01", "2", "1975-01-01", "2005-05-01", 'F', 'W'),
      rec("3_00", "3", "1990-06-01", "2006-02-01", 'F', 'B'),
      rec("4_00", "4", "1985-06-01", "2006-02-01", 'M', 'B'),
      rec("4_01", "4", "1985-06-01", "2006-03-01", 'M', 'H'),
      rec("4_02", "4", "1985-06-01", "2006-04-01", 'M', 'B'),
  };
}

AdjudicationService make_service(const TempDir& dir) {
  return AdjudicationService(build_queue(group_by_subject(small_raw())),
                             DecisionLog::load(dir / "decisions.jsonl"), dir / "corpus", dir / "ui");
}

}  // namespace

TEST_CASE("service handlers") {
  TempDir dir("svc");
  auto svc = make_service(dir);

  auto list = json::parse(svc.list_items({}).body);
  CHECK(list["total"] == 2);
  CHECK(json::parse(svc.list_items({{"kind", "gender_tie"}}).body)["total"] == 1);
  CHECK(svc.list_items({{"status", "nope"}}).status == 422);
  CHECK(svc.list_items({{"page_size", "0"}}).status == 422);
  CHECK(json::parse(svc.list_items({{"page", "2"}, {"page_size", "1"}}).body)["items"].size() == 1);

  const auto item = svc.get_item("race-1");
  CHECK(item.status == 200);
  CHECK(json::parse(item.body)["records"].size() == 2);
  CHECK(svc.get_item("race-99").status == 404);

  const auto bad_value = svc.post_decision("race-1", R"({"decision":"M"})");
  CHECK(bad_value.status == 422);
  const auto allowed = json::parse(bad_value.body)["allowed_values"];
  CHECK(std::find(allowed.begin(), allowed.end(), "O") != allowed.end());
  CHECK(svc.post_decision("race-1", "not json").status == 400);
  CHECK(svc.post_decision("race-1", R"({"decision":5})").status == 400);
  CHECK(svc.post_decision("ghost", R"({"decision":"W"})").status == 404);

  CHECK(svc.post_decision("race-1", R"({"decision":"W","annotator":"ann"})").status == 200);
  const auto again = svc.post_decision("race-1", R"({"decision":"O"})");
  CHECK(again.status == 409);
  CHECK(json::parse(again.body)["decision"] == "W");
  CHECK(svc.post_decision("race-1", R"({"decision":"O","override":true})").status == 200);

  const auto summary = json::parse(svc.summary().body);
  CHECK(summary["decided"] == 1);
  CHECK(summary["pending"] == 1);
  CHECK(summary["log_entries"] == 2);
  CHECK(summary["log_hash"] == svc.log_hash());

  // The log on disk carries both entries; the latest wins.
  const auto log = DecisionLog::load(dir / "decisions.jsonl");
  CHECK(log.entries().size() == 2);
  CHECK(log.decisions().at("race-1") == "O");
  CHECK(log.hash() == svc.log_hash());

  // A restarted service picks the decision up.
  auto restarted = make_service(dir);
  CHECK(json::parse(restarted.get_item("race-1").body)["status"] == "decided");
}

TEST_CASE("service files and paths") {
  TempDir dir("svcfiles");
  std::filesystem::create_directories(dir / "corpus/images");
  std::filesystem::create_directories(dir / "ui");
  save_pgm(dir / "corpus/images/1_00.pgm", GrayImage(60, 70, 100));
  write_file(dir / "ui/index.html", "<html></html>");
  auto svc = make_service(dir);
  const auto img = svc.image("images/1_00.pgm");
  CHECK(img.status == 200);
  CHECK(img.content_type == "image/x-portable-anymap");
  CHECK(svc.image("../ui/index.html").status == 404);
  CHECK(svc.image("/etc/passwd").status == 404);
  CHECK(svc.static_file("").body == "<html></html>");
  CHECK(svc.static_file("missing.js").status == 404);
}

TEST_CASE("http round trip feeds the cleaner") {
  TempDir dir("http");
  save_dataset(dir / "corpus/raw.csv", small_raw());
  REQUIRE(cli(dir.path(), {"audit"}).code == 0);
  const auto queue = load_queue(dir / "audit/queue.json");
  CHECK(queue.size() == 2);

  {
    LogLock lock(dir / "decisions.jsonl");
    CHECK(LogLock::held(dir / "decisions.jsonl"));
    CHECK_THROWS_AS(LogLock(dir / "decisions.jsonl"), Error);
    const auto refused = cli(dir.path(), {"clean"});
    CHECK(refused.code == 1);
    CHECK(refused.err.find("ConfigError") != std::string::npos);

    AdjudicationService svc(queue, DecisionLog::load(dir / "decisions.jsonl"));
    const int port = svc.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread th([&] { svc.run(); });
    svc.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto r = client.Get("/items?status=pending");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(json::parse(r->body)["total"] == 2);
    r = client.Post("/items/race-1/decision", R"({"decision":"O"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    r = client.Post("/items/race-1/decision", R"({"decision":"B"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 409);
    r = client.Post("/items/gender-2/decision", R"({"decision":"B"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 422);
    r = client.Post("/items/gender-2/decision", R"({"decision":"M"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    r = client.Get("/items/nope");
    REQUIRE(r);
    CHECK(r->status == 404);
    r = client.Get("/summary");
    REQUIRE(r);
    CHECK(json::parse(r->body)["pending"] == 0);
    svc.stop();
    th.join();
  }
  CHECK_FALSE(LogLock::held(dir / "decisions.jsonl"));

  const auto cleaned = cli(dir.path(), {"clean", "--strict"});
  CHECK(cleaned.code == 0);
  const auto out = load_dataset(dir / "clean/cleaned_v2.csv");
  std::map<std::string, Correction> ind;
  for (const auto& r : out) ind[r.image_id] = *r.corrected;
  CHECK(ind.at("1_00") == Correction::race_other);
  CHECK(ind.at("1_01") == Correction::race_other);
  CHECK(ind.at("2_01") == Correction::gender);
  CHECK(ind.at("2_00") == Correction::none);
  CHECK(ind.at("4_01") == Correction::race_majority);
  const auto summary = json::parse(read_file(dir / "clean/clean_summary.json"));
  CHECK(summary["decision_log_hash"] == DecisionLog::load(dir / "decisions.jsonl").hash());
  CHECK(summary["decision_entries"] == 2);
}

TEST_CASE("strict cleaning with pending items fails") {
  TempDir dir("strict");
  save_dataset(dir / "corpus/raw.csv", small_raw());
  const auto r = cli(dir.path(), {"clean", "--strict"});
  CHECK(r.code == 1);
  const auto err = json::parse(r.err.substr(0, r.err.find('\n')));
  CHECK(err["error"] == "UnresolvedSubjects");
  CHECK(err["message"].get<std::string>().find("1,2") != std::string::npos);

  const auto lenient = cli(dir.path(), {"clean"});
  CHECK(lenient.code == 0);
  CHECK(load_dataset(dir / "clean/cleaned_v2.csv").size() == 4);
  CHECK(json::parse(read_file(dir / "clean/clean_summary.json"))["pending_records"] == 4);
}

TEST_CASE("a torn decision log tail is ignored by the cleaner") {
  TempDir dir("torn");
  save_dataset(dir / "corpus/raw.csv", small_raw());
  {
    std::ofstream log(dir / "decisions.jsonl", std::ios::binary);
    log << entry_to_line({"race-1", "W", "t", "a", false});
    log << entry_to_line({"gender-2", "F", "t", "a", false});
    log << R"({"item_id":"race-1","decision":"B)";
  }
  CHECK(cli(dir.path(), {"clean", "--strict"}).code == 0);
  const auto out = load_dataset(dir / "clean/cleaned_v2.csv");
  for (const auto& r : out) {
    if (r.subject_id == "1") CHECK(r.race == Race::white);
  }
}

TEST_CASE("cli errors and exit codes") {
  TempDir dir("cli");
  auto r = cli(dir.path(), {"frobnicate"});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"] == "UnknownSubcommand");
  r = cli(dir.path(), {"clean", "--input", "missing.csv"});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
  r = cli(dir.path(), {"subset", "--seeds", "x-y"});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"] == "ConfigError");
  r = cli(dir.path(), {"synth", "--bogus-flag"});
  CHECK(r.code == 1);
  r = cli(dir.path(), {"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("subset") != std::string::npos);
  CHECK(exit_code_for(ErrorKind::infeasible_split) == 2);
  CHECK(exit_code_for(ErrorKind::all_seeds_infeasible) == 2);
  CHECK(exit_code_for(ErrorKind::missing_column) == 1);

  // Three two-image anchor subjects cannot be halved.
  std::vector<Record> go;
  int n = 0;
  auto add = [&](char race, char gender, int images) {
    ++n;
    for (int k = 0; k < images; ++k) {
      go.push_back(rec(std::to_string(n) + "_" + std::to_string(k), std::to_string(n), "1980-01-01",
                       "2004-01-0" + std::to_string(k + 1), gender, race));
    }
  };
  for (int i = 0; i < 3; ++i) add('W', 'F', 2);
  for (int i = 0; i < 6; ++i) add('B', 'F', 1);
  for (int i = 0; i < 6; ++i) add('W', 'M', 3);
  for (int i = 0; i < 6; ++i) add('B', 'M', 3);
  save_dataset(dir / "clean/go_for_age.csv", go);
  r = cli(dir.path(), {"subset", "--seeds", "1-3", "--permutations", "50"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"] == "AllSeedsInfeasible");
}

TEST_CASE("config file supplies subcommand options") {
  TempDir dir("config");
  write_file(dir / "lfkit.toml", "[synth]\nsubjects = 12\nseed = 4\nno-images = true\n");
  const auto r = cli(dir.path(), {"--config", (dir / "lfkit.toml").string(), "synth"});
  REQUIRE(r.code == 0);
  CHECK(load_dataset(dir / "corpus/raw.csv").size() >= 12);
  const auto meta = json::parse(read_file(dir / "corpus/gen_spec.json"));
  CHECK(meta["subjects"] == 12);
  CHECK(meta["spec"]["seed"] == 4);
  CHECK(std::filesystem::is_empty(dir / "corpus/images"));
}

TEST_CASE("data dir comes from the environment") {
  TempDir dir("env");
  ::setenv("LFKIT_DATA_DIR", dir.path().c_str(), 1);
  std::ostringstream out, err;
  const int code = run_cli({"synth", "--subjects", "5", "--no-images"}, out, err);
  ::unsetenv("LFKIT_DATA_DIR");
  CHECK(code == 0);
  CHECK(std::filesystem::exists(dir / "corpus/raw.csv"));
}

TEST_CASE("end-to-end pipeline on a small corpus") {
  TempDir dir("pipeline");
  const auto p = dir.path();
  REQUIRE(cli(p, {"synth", "--mirror", "--scale", "0.02", "--seed", "3"}).code == 0);
  REQUIRE(cli(p, {"audit"}).code == 0);
  REQUIRE(cli(p, {"clean", "--strict"}).code == 0);
  auto r = cli(p, {"subset", "--seeds", "1-4", "--permutations", "200", "--threads", "1"});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(p / "subset/ecdf.csv"));
  REQUIRE(cli(p, {"features", "--threads", "1"}).code == 0);
  r = cli(p, {"train", "--pca-dim", "40", "--svm-cost", "0.1", "--svr-cost", "0.1", "--threads", "1"});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(p / "models/protocol.json"));
  r = cli(p, {"evaluate", "--models", "models", "--threads", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("bf_1") != std::string::npos);
  const auto leak = json::parse(read_file(p / "eval/leakage.json"));
  CHECK(leak["violations"].empty());
  // Training inline gives the same predictions as the saved models.
  r = cli(p, {"evaluate", "--pca-dim", "40", "--svm-cost", "0.1", "--svr-cost", "0.1", "--threads", "1",
              "--out", "eval2"});
  REQUIRE(r.code == 0);
  CHECK(read_file(p / "eval/predictions.csv") == read_file(p / "eval2/predictions.csv"));
  r = cli(p, {"report"});
  REQUIRE(r.code == 0);
  const auto bundle = json::parse(read_file(p / "report/bundle.json"));
  CHECK(bundle.contains("clean"));
  CHECK(bundle.contains("evaluation"));

}
