#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "lfkit/composite.hpp"
#include "test_util.hpp"

using namespace lfkit;
using lfkit::testing::TempDir;

namespace {

const ToyRun& toy() {
  static const ToyRun run = toy_mode(ProtocolConfig{}, 1);
  return run;
}

std::map<std::string, const Record*> by_image(const std::vector<Record>& records) {
  std::map<std::string, const Record*> out;
  for (const auto& r : records) out[r.image_id] = &r;
  return out;
}

}  // namespace

TEST_CASE("composite age blends the two race models") {
  const auto a = composite_age(1.0, 20.0, 40.0);
  CHECK(a.y_star == 40.0);
  CHECK(a.y_hard == 40.0);
  const auto b = composite_age(0.25, 20.0, 40.0);
  CHECK(b.y_star == doctest::Approx(25.0));
  CHECK(b.y_hard == 20.0);
  CHECK(composite_age(0.5, 20.0, 40.0).y_hard == 40.0);
  CHECK(composite_age(0.0, 33.0, 10.0).y_star == 33.0);
}

TEST_CASE("protocol config round-trips through json") {
  ProtocolConfig c;
  c.pca_dim = 50;
  c.svm_cost = 0.5;
  c.gender_mode = GenderMode::classified;
  c.grid.second_tier = false;
  ProtocolConfig d;
  d.apply_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(d.hash() == c.hash());
  CHECK(d.svm_cost == 0.5);
  CHECK_FALSE(d.svr_cost);
  CHECK(d.hash() != ProtocolConfig{}.hash());
  CHECK_THROWS_AS(d.apply_json(nlohmann::json{{"gender_mode", "guess"}}), Error);
}

TEST_CASE("toy corpus shape") {
  const auto& run = toy();
  CHECK(run.corpus.truth.subjects.size() == 1000);
  CHECK(run.corpus.records.size() == 1000);
  std::map<std::string, int> cells;
  std::array<int, 10> bins{};
  for (const auto& r : run.records) {
    ++cells[std::string{code(r.race), code(r.gender)}];
    const double age = *r.age_dec;
    CHECK(age >= 15.99);
    CHECK(age <= 77.01);
    ++bins[std::min<std::size_t>(9, static_cast<std::size_t>((age - 16.0) / 6.1))];
  }
  CHECK(cells == std::map<std::string, int>{{"BF", 250}, {"BM", 250}, {"WF", 250}, {"WM", 250}});
  for (int b : bins) {
    CHECK(b >= 50);
    CHECK(b <= 150);
  }
  CHECK(run.assignment.certificate.all());
}

TEST_CASE("toy report is complete and consistent") {
  const auto& run = toy();
  const auto& rep = run.report;
  CHECK(rep.tested() == 1000);
  CHECK(rep.predictions.size() == 1000);
  CHECK(rep.cells.size() == 8);
  for (const auto& name : report_cells()) {
    REQUIRE(rep.cells.count(name));
    CHECK(rep.cells.at(name).count == 125);
  }
  CHECK(rep.leakage.clean());
  CHECK(rep.leakage.checks >= 8);

  // Recompute every cell from the predictions and the source records.
  const auto idx = by_image(run.records);
  std::map<std::string, std::pair<double, double>> sums;
  std::set<std::string> seen;
  for (const auto& p : rep.predictions) {
    CHECK(seen.insert(p.image_id).second);
    const auto& r = *idx.at(p.image_id);
    CHECK(p.age_dec == *r.age_dec);
    CHECK(p.w + p.b == doctest::Approx(1.0));
    CHECK(p.w >= 0.0);
    CHECK(p.w <= 1.0);
    CHECK(p.y_star >= std::min(p.yhat_b, p.yhat_w) - 1e-9);
    CHECK(p.y_star <= std::max(p.yhat_b, p.yhat_w) + 1e-9);
    CHECK(p.y_hard == (p.w >= 0.5 ? p.yhat_w : p.yhat_b));
    CHECK(p.gender_used == r.gender);
    const auto side = run.assignment.set_of(p.image_id);
    const std::string expected_cell = std::string{static_cast<char>(std::tolower(code(r.race))),
                                                  static_cast<char>(std::tolower(code(r.gender)))} +
                                      (side == SetLabel::s1 ? "_1" : "_2");
    CHECK(p.cell == expected_cell);
    sums[p.cell].first += std::abs(p.age_dec - p.y_hard);
    sums[p.cell].second += std::abs(p.age_dec - p.y_star);
  }
  for (const auto& [cell, s] : sums) {
    CHECK(rep.cells.at(cell).mae == doctest::Approx(s.first / 125.0).epsilon(1e-12));
    CHECK(rep.cells.at(cell).weighted_mae == doctest::Approx(s.second / 125.0).epsilon(1e-12));
  }
  const auto csv = rep.predictions_csv();
  CHECK(csv.rfind("image_id,w,yhat_B,yhat_W,y_star,y_hard,age_dec\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1001);
  CHECK(rep.table().find("wm_2") != std::string::npos);
  CHECK(rep.to_json()["cells"].size() == 8);
}

TEST_CASE("race probability tracks the latent race") {
  const auto& run = toy();
  const auto idx = by_image(run.records);
  int hits = 0;
  for (const auto& p : run.report.predictions) hits += (p.w >= 0.5) == (idx.at(p.image_id)->race == Race::white);
  CHECK(hits >= 900);
}

TEST_CASE("swapping S1 and S2 transposes the report") {
  const auto& run = toy();
  auto swapped = run.assignment;
  for (auto& row : swapped.rows) {
    if (row.set == SetLabel::s1) {
      row.set = SetLabel::s2;
    } else if (row.set == SetLabel::s2) {
      row.set = SetLabel::s1;
    }
  }
  swapped.reindex();
  const auto rep = run_protocol(run.records, run.features, swapped, ProtocolConfig{});
  for (const auto& name : report_cells()) {
    const std::string partner = name.substr(0, 3) + (name.back() == '1' ? "2" : "1");
    CHECK(rep.cells.at(name).mae == run.report.cells.at(partner).mae);
    CHECK(rep.cells.at(name).weighted_mae == run.report.cells.at(partner).weighted_mae);
  }
}

TEST_CASE("a single shared age model makes both errors equal") {
  const auto& run = toy();
  ProtocolConfig c;
  c.shared_age_model = true;
  const auto rep = run_protocol(run.records, run.features, run.assignment, c);
  for (const auto& name : report_cells()) {
    CHECK(rep.cells.at(name).mae == doctest::Approx(rep.cells.at(name).weighted_mae).epsilon(1e-12));
  }
  for (const auto& p : rep.predictions) CHECK(p.yhat_b == p.yhat_w);
}

TEST_CASE("leakage check catches a contaminated model") {
  const auto& run = toy();
  const auto trained = train_protocol(run.records, run.features, run.assignment, ProtocolConfig{});
  const auto rep = evaluate_protocol(run.records, run.features, run.assignment, trained);
  CHECK(check_leakage(run.records, run.assignment, trained, rep).clean());

  auto bad = trained;
  // Give f2's age model a subject that f2 then scores (a female in S1).
  std::string victim;
  for (const auto& r : run.records) {
    if (r.gender == Gender::female && run.assignment.set_of(r.image_id) == SetLabel::s1) {
      victim = r.subject_id;
      break;
    }
  }
  REQUIRE_FALSE(victim.empty());
  for (auto& f : bad.folds) {
    if (f.name == "f2") f.model_subjects.begin()->second.push_back(victim);
  }
  const auto leak = check_leakage(run.records, run.assignment, bad, rep);
  CHECK_FALSE(leak.clean());
  REQUIRE(leak.violations.size() == 1);
  CHECK(leak.violations[0].subjects == std::vector<std::string>{victim});
  CHECK(leak.violations[0].cell.substr(1) == "f_1");
}

TEST_CASE("saved models reproduce the evaluation") {
  TempDir dir("proto");
  const auto& run = toy();
  const auto trained = train_protocol(run.records, run.features, run.assignment, ProtocolConfig{});
  save_protocol(dir.path(), trained);
  const auto loaded = load_protocol(dir.path());
  CHECK(loaded.folds.size() == 4);
  const auto a = evaluate_protocol(run.records, run.features, run.assignment, trained);
  const auto b = evaluate_protocol(run.records, run.features, run.assignment, loaded);
  CHECK(a.predictions_csv() == b.predictions_csv());
  CHECK(a.predictions_csv() == run.report.predictions_csv());
}

TEST_CASE("missing features are reported before training") {
  const auto& run = toy();
  FeatureTable partial(run.features.width(), run.features.height(), run.features.geometry());
  for (std::size_t i = 0; i + 1 < run.features.size(); ++i) {
    const auto row = run.features.row(i);
    partial.add(run.features.ids()[i], std::vector<std::uint32_t>(row.begin(), row.end()));
  }
  try {
    run_protocol(run.records, partial, run.assignment, ProtocolConfig{});
    FAIL("expected missing_features");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::missing_features);
    CHECK(std::string(e.what()).find(run.features.ids().back()) != std::string::npos);
  }
}

TEST_CASE("classified gender mode") {
  const auto& run = toy();
  ProtocolConfig c;
  c.gender_mode = GenderMode::classified;
  const auto rep = run_protocol(run.records, run.features, run.assignment, c);
  REQUIRE(rep.gender_accuracy);
  CHECK(*rep.gender_accuracy >= 0.9);
  CHECK(rep.leakage.clean());
  CHECK(rep.tested() == 1000);
}
