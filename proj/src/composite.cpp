#include "lfkit/composite.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lfkit/audit.hpp"
#include "lfkit/dataset_io.hpp"
#include "lfkit/lbp.hpp"
#include "lfkit/model_io.hpp"
#include "lfkit/parallel.hpp"
#include "lfkit/rng.hpp"

namespace lfkit {

using nlohmann::json;
using nlohmann::ordered_json;

CompositeAge composite_age(double w, double yhat_b, double yhat_w) {
  return {(1.0 - w) * yhat_b + w * yhat_w, w >= 0.5 ? yhat_w : yhat_b};
}

ordered_json ProtocolConfig::to_json() const {
  ordered_json j;
  j["pca_dim"] = pca_dim;
  j["epsilon"] = epsilon;
  j["grid"] = {{"tier1", grid.tier1},
               {"refine", grid.refine},
               {"second_tier", grid.second_tier},
               {"validation_fraction", grid.validation_fraction},
               {"tol", grid.solver.tol},
               {"max_iter", grid.solver.max_iter}};
  j["platt_folds"] = platt_folds;
  j["gender_mode"] = gender_mode == GenderMode::oracle ? "oracle" : "classified";
  j["seed"] = seed;
  j["svm_cost"] = svm_cost ? json(*svm_cost) : json(nullptr);
  j["svr_cost"] = svr_cost ? json(*svr_cost) : json(nullptr);
  j["shared_age_model"] = shared_age_model;
  return j;
}

std::string ProtocolConfig::hash() const { return "fnv1a64:" + hex64(fnv1a64(to_json().dump())); }

void ProtocolConfig::apply_json(const json& j) {
  try {
    if (j.contains("pca_dim")) pca_dim = j.at("pca_dim").get<std::size_t>();
    if (j.contains("epsilon")) epsilon = j.at("epsilon").get<double>();
    if (j.contains("platt_folds")) platt_folds = j.at("platt_folds").get<std::size_t>();
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("shared_age_model")) shared_age_model = j.at("shared_age_model").get<bool>();
    if (j.contains("gender_mode")) {
      const auto m = j.at("gender_mode").get<std::string>();
      if (m != "oracle" && m != "classified") {
        throw Error(ErrorKind::config_error, "gender_mode must be oracle or classified");
      }
      gender_mode = m == "oracle" ? GenderMode::oracle : GenderMode::classified;
    }
    auto cost = [&](const char* key, std::optional<double>& out) {
      if (!j.contains(key)) return;
      if (j.at(key).is_null()) {
        out.reset();
      } else {
        out = j.at(key).get<double>();
      }
    };
    cost("svm_cost", svm_cost);
    cost("svr_cost", svr_cost);
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.contains("tier1")) grid.tier1 = g.at("tier1").get<std::vector<double>>();
      if (g.contains("refine")) grid.refine = g.at("refine").get<std::vector<double>>();
      if (g.contains("second_tier")) grid.second_tier = g.at("second_tier").get<bool>();
      if (g.contains("validation_fraction")) {
        grid.validation_fraction = g.at("validation_fraction").get<double>();
      }
      if (g.contains("tol")) grid.solver.tol = g.at("tol").get<double>();
      if (g.contains("max_iter")) grid.solver.max_iter = g.at("max_iter").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config_error, std::string("protocol config: ") + e.what());
  }
  if (pca_dim == 0) throw Error(ErrorKind::config_error, "pca_dim must be positive");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::config_error, "epsilon must be non-negative");
  if (platt_folds < 2) throw Error(ErrorKind::config_error, "platt_folds must be >= 2");
}

const std::vector<std::string>& report_cells() {
  static const std::vector<std::string> cells{"bf_1", "bf_2", "wf_1", "wf_2",
                                              "bm_1", "bm_2", "wm_1", "wm_2"};
  return cells;
}

std::size_t EvalReport::tested() const {
  std::size_t n = 0;
  for (const auto& [_, c] : cells) n += c.count;
  return n;
}

ordered_json EvalReport::to_json() const {
  ordered_json j;
  j["config_hash"] = config_hash;
  j["gender_mode"] = gender_mode == GenderMode::oracle ? "oracle" : "classified";
  if (gender_accuracy) j["gender_accuracy"] = *gender_accuracy;
  ordered_json cj;
  for (const auto& name : report_cells()) {
    const auto it = cells.find(name);
    if (it == cells.end()) continue;
    cj[name] = {{"count", it->second.count},
                {"mae", it->second.mae},
                {"weighted_mae", it->second.weighted_mae}};
  }
  j["cells"] = cj;
  j["tested_images"] = tested();
  j["leakage"] = {{"checks", leakage.checks}, {"violations", leakage.violations.size()}};
  return j;
}

std::string EvalReport::table() const {
  std::string out = fmt::format("config {}  gender {}\n", config_hash,
                                gender_mode == GenderMode::oracle ? "oracle" : "classified");
  out += fmt::format("{:<6} {:>6} {:>8} {:>13}\n", "cell", "n", "MAE", "weighted MAE");
  for (const auto& name : report_cells()) {
    const auto it = cells.find(name);
    if (it == cells.end()) continue;
    out += fmt::format("{:<6} {:>6} {:>8.3f} {:>13.3f}\n", name, it->second.count, it->second.mae,
                       it->second.weighted_mae);
  }
  return out;
}

std::string EvalReport::predictions_csv() const {
  std::string out = "image_id,w,yhat_B,yhat_W,y_star,y_hard,age_dec\n";
  for (const auto& p : predictions) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", p.image_id, p.w, p.yhat_b,
                       p.yhat_w, p.y_star, p.y_hard, p.age_dec);
  }
  return out;
}

namespace {

bool study_race(Race r) { return r == Race::white || r == Race::black; }

int side_number(SetLabel s) { return s == SetLabel::s1 ? 1 : 2; }
SetLabel other_side(SetLabel s) { return s == SetLabel::s1 ? SetLabel::s2 : SetLabel::s1; }

std::string fold_name(Gender g, SetLabel side) {
  return fmt::format("{}{}", g == Gender::female ? 'f' : 'm', side_number(side));
}

std::string cell_key(Race r, Gender g, SetLabel side) {
  return fmt::format("{}{}_{}", r == Race::white ? 'w' : 'b', g == Gender::female ? 'f' : 'm',
                     side_number(side));
}

struct Rows {
  std::vector<std::size_t> idx;  // into records
  std::vector<std::string> ids;
  std::vector<std::string> subjects;
};

Rows select(const std::vector<Record>& records, const SplitAssignment& a, SetLabel side,
            std::optional<Gender> gender, std::optional<Race> race = std::nullopt) {
  Rows rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!study_race(r.race)) continue;
    if (gender && r.gender != *gender) continue;
    if (race && r.race != *race) continue;
    const auto s = a.set_of(r.image_id);
    if (!s || *s != side) continue;
    rows.idx.push_back(i);
    rows.ids.push_back(r.image_id);
    rows.subjects.push_back(r.subject_id);
  }
  return rows;
}

std::vector<std::string> unique_sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string training_hash(const std::vector<std::string>& ids, const std::string& config_hash) {
  auto sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = fnv1a64(config_hash);
  for (const auto& id : sorted) h = fnv1a64(id + "\n", h);
  return "fnv1a64:" + hex64(h);
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

// Subject-disjoint out-of-fold decision values for Platt fitting.
std::vector<double> out_of_fold_decisions(const Eigen::MatrixXd& z, const std::vector<int>& y,
                                          const std::vector<std::string>& groups, double cost,
                                          const LinearSvmModel& full, std::size_t folds,
                                          std::uint64_t seed, const SolverOptions& solver) {
  auto subjects = unique_sorted(groups);
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(subjects));
  std::map<std::string, std::size_t> fold_of;
  for (std::size_t i = 0; i < subjects.size(); ++i) fold_of[subjects[i]] = i % folds;

  const Eigen::VectorXd fallback = full.decision(z);
  std::vector<double> f(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) f[i] = fallback(static_cast<Eigen::Index>(i));
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (fold_of[groups[i]] == k ? te : tr).push_back(i);
    if (te.empty()) continue;
    const auto ytr = take(y, tr);
    const bool both = std::count(ytr.begin(), ytr.end(), 1) > 0 && std::count(ytr.begin(), ytr.end(), -1) > 0;
    if (!both) continue;
    const auto m = svm_train(take_rows(z, tr), ytr, cost, solver);
    const Eigen::VectorXd d = m.decision(take_rows(z, te));
    for (std::size_t i = 0; i < te.size(); ++i) f[te[i]] = d(static_cast<Eigen::Index>(i));
  }
  return f;
}

LinearSvrModel fit_age_model(const Eigen::MatrixXd& z, const std::vector<double>& ages,
                             const std::vector<std::string>& groups, const ProtocolConfig& config,
                             std::uint64_t seed) {
  if (ages.size() < 2) {
    throw Error(ErrorKind::empty_sample, "age model needs at least two training images");
  }
  const double c = config.svr_cost
                       ? *config.svr_cost
                       : grid_search_svr(z, ages, groups, config.epsilon, seed, config.grid).best_cost;
  return svr_train(z, ages, c, config.epsilon, config.grid.solver);
}

struct FoldStreams {
  static constexpr std::uint64_t race_grid = 1;
  static constexpr std::uint64_t platt = 2;
  static constexpr std::uint64_t white_grid = 3;
  static constexpr std::uint64_t black_grid = 4;
  static constexpr std::uint64_t gender_grid = 5;
};

FoldModels train_fold(const std::vector<Record>& records, const FeatureTable& features,
                      const SplitAssignment& a, SetLabel side, Gender gender,
                      const ProtocolConfig& config) {
  FoldModels m;
  m.name = fold_name(gender, side);
  m.train_side = side;
  m.gender = gender;
  const auto rows = select(records, a, side, gender);
  if (rows.idx.empty()) {
    throw Error(ErrorKind::empty_sample, "no training images for fold " + m.name);
  }
  const Eigen::MatrixXd x = features.matrix(rows.ids);
  m.pca = pca_fit(x, config.pca_dim);
  const Eigen::MatrixXd proj = pca_project_rows(m.pca, x);
  m.standardizer = Standardizer::fit(proj);
  const Eigen::MatrixXd z = m.standardizer.apply(proj);

  // Seeds depend on gender only, so relabelling S1 and S2 transposes the report.
  const std::uint64_t fold_seed = mix_seed(config.seed, static_cast<std::uint64_t>(code(gender)));
  std::vector<int> y;
  std::vector<double> ages;
  std::vector<std::size_t> white, black;
  for (std::size_t i = 0; i < rows.idx.size(); ++i) {
    const auto& r = records[rows.idx[i]];
    y.push_back(r.race == Race::white ? 1 : -1);
    ages.push_back(record_age(r));
    (r.race == Race::white ? white : black).push_back(i);
  }
  if (white.empty() || black.empty()) {
    throw Error(ErrorKind::single_class_input, "fold " + m.name + " lacks one race");
  }
  const double c = config.svm_cost ? *config.svm_cost
                                   : grid_search_svm(z, y, rows.subjects,
                                                     mix_seed(fold_seed, FoldStreams::race_grid),
                                                     config.grid)
                                         .best_cost;
  m.race = svm_train(z, y, c, config.grid.solver);
  const auto f = out_of_fold_decisions(z, y, rows.subjects, c, m.race, config.platt_folds,
                                       mix_seed(fold_seed, FoldStreams::platt), config.grid.solver);
  m.platt = platt_fit(f, y);

  const auto all_subjects = unique_sorted(rows.subjects);
  if (config.shared_age_model) {
    m.svr_w = fit_age_model(z, ages, rows.subjects, config, mix_seed(fold_seed, FoldStreams::white_grid));
    m.svr_b = m.svr_w;
    m.model_subjects["svr_w"] = all_subjects;
    m.model_subjects["svr_b"] = all_subjects;
  } else {
    m.svr_w = fit_age_model(take_rows(z, white), take(ages, white), take(rows.subjects, white),
                            config, mix_seed(fold_seed, FoldStreams::white_grid));
    m.svr_b = fit_age_model(take_rows(z, black), take(ages, black), take(rows.subjects, black),
                            config, mix_seed(fold_seed, FoldStreams::black_grid));
    m.model_subjects["svr_w"] = unique_sorted(take(rows.subjects, white));
    m.model_subjects["svr_b"] = unique_sorted(take(rows.subjects, black));
  }
  for (const char* name : {"pca", "standardizer", "race_svm", "platt"}) {
    m.model_subjects[name] = all_subjects;
  }
  m.training_hash = training_hash(rows.ids, config.hash());
  return m;
}

GenderModel train_gender(const std::vector<Record>& records, const FeatureTable& features,
                         const SplitAssignment& a, SetLabel side, const ProtocolConfig& config) {
  GenderModel g;
  g.train_side = side;
  const auto rows = select(records, a, side, std::nullopt);
  if (rows.idx.empty()) throw Error(ErrorKind::empty_sample, "no images to train the gender model");
  const Eigen::MatrixXd x = features.matrix(rows.ids);
  g.pca = pca_fit(x, config.pca_dim);
  const Eigen::MatrixXd proj = pca_project_rows(g.pca, x);
  g.standardizer = Standardizer::fit(proj);
  const Eigen::MatrixXd z = g.standardizer.apply(proj);
  std::vector<int> y;
  for (auto i : rows.idx) y.push_back(records[i].gender == Gender::female ? 1 : -1);
  const double c = config.svm_cost
                       ? *config.svm_cost
                       : grid_search_svm(z, y, rows.subjects,
                                         mix_seed(config.seed, FoldStreams::gender_grid), config.grid)
                             .best_cost;
  g.svm = svm_train(z, y, c, config.grid.solver);
  g.subjects = unique_sorted(rows.subjects);
  g.training_hash = training_hash(rows.ids, config.hash());
  return g;
}

const FoldModels& find_fold(const TrainedProtocol& t, Gender g, SetLabel side) {
  for (const auto& f : t.folds) {
    if (f.gender == g && f.train_side == side) return f;
  }
  throw Error(ErrorKind::config_error, "trained protocol lacks fold " + fold_name(g, side));
}

}  // namespace

TrainedProtocol train_protocol(const std::vector<Record>& records, const FeatureTable& features,
                               const SplitAssignment& assignment, const ProtocolConfig& config) {
  TrainedProtocol t;
  t.config = config;
  const std::pair<Gender, SetLabel> folds[] = {{Gender::female, SetLabel::s1},
                                               {Gender::female, SetLabel::s2},
                                               {Gender::male, SetLabel::s1},
                                               {Gender::male, SetLabel::s2}};
  const bool classified = config.gender_mode == GenderMode::classified;
  const std::size_t jobs = 4 + (classified ? 2 : 0);
  t.folds.resize(4);
  if (classified) t.genders.resize(2);
  parallel_for(
      jobs,
      [&](std::size_t j) {
        if (j < 4) {
          t.folds[j] = train_fold(records, features, assignment, folds[j].second, folds[j].first, config);
        } else {
          t.genders[j - 4] = train_gender(records, features, assignment,
                                          j == 4 ? SetLabel::s1 : SetLabel::s2, config);
        }
      },
      config.threads);
  return t;
}

EvalReport evaluate_protocol(const std::vector<Record>& records, const FeatureTable& features,
                             const SplitAssignment& assignment, const TrainedProtocol& trained) {
  const auto& config = trained.config;
  const bool classified = config.gender_mode == GenderMode::classified;
  EvalReport report;
  report.config_hash = config.hash();
  report.gender_mode = config.gender_mode;

  // One job per test side and gender label; cells are keyed by the labels.
  struct Job {
    SetLabel side;
    Gender gender;
    std::vector<CompositeEstimate> out;
    std::size_t gender_correct = 0;
  };
  std::vector<Job> jobs{{SetLabel::s1, Gender::female, {}, 0}, {SetLabel::s2, Gender::female, {}, 0},
                        {SetLabel::s1, Gender::male, {}, 0},   {SetLabel::s2, Gender::male, {}, 0}};
  parallel_for(
      jobs.size(),
      [&](std::size_t j) {
        auto& job = jobs[j];
        const auto rows = select(records, assignment, job.side, job.gender);
        if (rows.idx.empty()) return;
        const Eigen::MatrixXd x = features.matrix(rows.ids);
        const SetLabel train_side = other_side(job.side);
        std::vector<Gender> used(rows.idx.size(), job.gender);
        if (classified) {
          const auto& gm = trained.genders.at(train_side == SetLabel::s1 ? 0 : 1);
          const Eigen::VectorXd f =
              gm.svm.decision(gm.standardizer.apply(pca_project_rows(gm.pca, x)));
          for (std::size_t i = 0; i < used.size(); ++i) {
            used[i] = f(static_cast<Eigen::Index>(i)) >= 0.0 ? Gender::female : Gender::male;
            job.gender_correct += used[i] == job.gender;
          }
        }
        for (Gender g : kAllGenders) {
          std::vector<std::size_t> mine;
          for (std::size_t i = 0; i < used.size(); ++i) {
            if (used[i] == g) mine.push_back(i);
          }
          if (mine.empty()) continue;
          const auto& fold = find_fold(trained, g, train_side);
          const Eigen::MatrixXd z = fold.standardizer.apply(pca_project_rows(fold.pca, take_rows(x, mine)));
          const Eigen::VectorXd f = fold.race.decision(z);
          const Eigen::VectorXd yw = fold.svr_w.predict(z);
          const Eigen::VectorXd yb = fold.svr_b.predict(z);
          for (std::size_t k = 0; k < mine.size(); ++k) {
            const auto& r = records[rows.idx[mine[k]]];
            const auto e = static_cast<Eigen::Index>(k);
            CompositeEstimate p;
            p.image_id = r.image_id;
            p.subject_id = r.subject_id;
            p.cell = cell_key(r.race, r.gender, job.side);
            p.gender_used = g;
            p.age_dec = record_age(r);
            p.w = fold.platt.probability(f(e));
            p.b = 1.0 - p.w;
            p.yhat_w = yw(e);
            p.yhat_b = yb(e);
            const auto c = composite_age(p.w, p.yhat_b, p.yhat_w);
            p.y_star = c.y_star;
            p.y_hard = c.y_hard;
            job.out.push_back(std::move(p));
          }
        }
        // Record order within the job.
        std::map<std::string, std::size_t> order;
        for (std::size_t i = 0; i < rows.ids.size(); ++i) order[rows.ids[i]] = i;
        std::sort(job.out.begin(), job.out.end(), [&](const auto& a, const auto& b) {
          return order[a.image_id] < order[b.image_id];
        });
      },
      config.threads);

  std::size_t correct = 0, total = 0;
  std::map<std::string, std::vector<CompositeEstimate>> by_cell;
  for (auto& job : jobs) {
    correct += job.gender_correct;
    total += job.out.size();
    for (auto& p : job.out) by_cell[p.cell].push_back(std::move(p));
  }
  if (classified && total > 0) report.gender_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  for (const auto& name : report_cells()) {
    auto& preds = by_cell[name];
    CellReport c;
    c.count = preds.size();
    for (const auto& p : preds) {
      c.mae += std::abs(p.age_dec - p.y_hard);
      c.weighted_mae += std::abs(p.age_dec - p.y_star);
    }
    if (c.count > 0) {
      c.mae /= static_cast<double>(c.count);
      c.weighted_mae /= static_cast<double>(c.count);
    }
    report.cells[name] = c;
    for (auto& p : preds) report.predictions.push_back(std::move(p));
  }
  report.leakage = check_leakage(records, assignment, trained, report);
  return report;
}

EvalReport run_protocol(const std::vector<Record>& records, const FeatureTable& features,
                        const SplitAssignment& assignment, const ProtocolConfig& config) {
  // Surface missing features before any training.
  std::vector<std::string> needed;
  for (const auto& r : records) {
    const auto s = assignment.set_of(r.image_id);
    if (s && *s != SetLabel::r && study_race(r.race)) needed.push_back(r.image_id);
  }
  std::vector<std::string> missing;
  for (const auto& id : needed) {
    if (!features.find(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? "," : "") + missing[i];
    throw Error(ErrorKind::missing_features,
                fmt::format("{} images lack features: {}{}", missing.size(), list,
                            missing.size() > 20 ? ",..." : ""));
  }
  const auto trained = train_protocol(records, features, assignment, config);
  return evaluate_protocol(records, features, assignment, trained);
}

LeakageReport check_leakage(const std::vector<Record>& records, const SplitAssignment& assignment,
                            const TrainedProtocol& trained, const EvalReport& report) {
  // Test subjects per cell, taken from the assignment rather than from the models.
  std::map<std::string, std::set<std::string>> test_subjects;
  std::map<std::string, std::set<std::string>> used_models;
  std::map<std::string, const Record*> by_id;
  for (const auto& r : records) by_id[r.image_id] = &r;
  for (const auto& p : report.predictions) {
    const auto it = by_id.find(p.image_id);
    if (it == by_id.end()) continue;
    const auto side = assignment.set_of(p.image_id);
    if (!side || *side == SetLabel::r) continue;
    const auto cell = cell_key(it->second->race, it->second->gender, *side);
    test_subjects[cell].insert(it->second->subject_id);
    used_models[cell].insert(fold_name(p.gender_used, other_side(*side)));
    if (trained.config.gender_mode == GenderMode::classified) {
      used_models[cell].insert(other_side(*side) == SetLabel::s1 ? "gender_1" : "gender_2");
    }
  }
  LeakageReport out;
  auto check = [&](const std::string& cell, const std::string& model,
                   const std::vector<std::string>& train) {
    ++out.checks;
    std::vector<std::string> overlap;
    for (const auto& s : train) {
      if (test_subjects[cell].count(s)) overlap.push_back(s);
    }
    if (!overlap.empty()) out.violations.push_back({cell, model, overlap});
  };
  for (const auto& [cell, models] : used_models) {
    for (const auto& name : models) {
      if (name.rfind("gender_", 0) == 0) {
        const auto& g = trained.genders.at(name == "gender_1" ? 0 : 1);
        check(cell, name, g.subjects);
        continue;
      }
      for (const auto& f : trained.folds) {
        if (f.name != name) continue;
        for (const auto& [model, subjects] : f.model_subjects) check(cell, name + "/" + model, subjects);
      }
    }
  }
  return out;
}

void save_protocol(const std::filesystem::path& dir, const TrainedProtocol& trained) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + dir.string());
  ordered_json j;
  j["config"] = trained.config.to_json();
  ordered_json folds = ordered_json::array();
  for (const auto& f : trained.folds) {
    const auto sub = dir / f.name;
    std::filesystem::create_directories(sub, ec);
    save_pca(sub / "pca.model", f.pca, f.training_hash);
    save_standardizer(sub / "standardizer.model", f.standardizer, f.training_hash);
    save_svm(sub / "race_svm.model", f.race, f.training_hash);
    save_platt(sub / "platt.model", f.platt, f.training_hash);
    save_svr(sub / "svr_w.model", f.svr_w, f.training_hash);
    save_svr(sub / "svr_b.model", f.svr_b, f.training_hash);
    ordered_json fj;
    fj["name"] = f.name;
    fj["train_side"] = to_string(f.train_side);
    fj["gender"] = std::string(1, code(f.gender));
    fj["training_hash"] = f.training_hash;
    fj["model_subjects"] = f.model_subjects;
    folds.push_back(fj);
  }
  j["folds"] = folds;
  ordered_json genders = ordered_json::array();
  for (std::size_t i = 0; i < trained.genders.size(); ++i) {
    const auto& g = trained.genders[i];
    const auto sub = dir / fmt::format("gender_{}", side_number(g.train_side));
    std::filesystem::create_directories(sub, ec);
    save_pca(sub / "pca.model", g.pca, g.training_hash);
    save_standardizer(sub / "standardizer.model", g.standardizer, g.training_hash);
    save_svm(sub / "gender_svm.model", g.svm, g.training_hash);
    genders.push_back({{"train_side", to_string(g.train_side)},
                       {"training_hash", g.training_hash},
                       {"subjects", g.subjects}});
  }
  j["genders"] = genders;
  write_file(dir / "protocol.json", j.dump(2) + "\n");
}

TrainedProtocol load_protocol(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_file(dir / "protocol.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config_error, std::string("protocol.json: ") + e.what());
  }
  TrainedProtocol t;
  t.config.apply_json(j.at("config"));
  for (const auto& fj : j.at("folds")) {
    FoldModels f;
    f.name = fj.at("name").get<std::string>();
    f.train_side = parse_set_label(fj.at("train_side").get<std::string>()).value_or(SetLabel::s2);
    f.gender = parse_gender(fj.at("gender").get<std::string>()).value_or(Gender::female);
    f.training_hash = fj.at("training_hash").get<std::string>();
    f.model_subjects = fj.at("model_subjects").get<std::map<std::string, std::vector<std::string>>>();
    const auto sub = dir / f.name;
    f.pca = load_pca(sub / "pca.model");
    f.standardizer = load_standardizer(sub / "standardizer.model");
    f.race = load_svm(sub / "race_svm.model");
    f.platt = load_platt(sub / "platt.model");
    f.svr_w = load_svr(sub / "svr_w.model");
    f.svr_b = load_svr(sub / "svr_b.model");
    t.folds.push_back(std::move(f));
  }
  for (const auto& gj : j.at("genders")) {
    GenderModel g;
    g.train_side = parse_set_label(gj.at("train_side").get<std::string>()).value_or(SetLabel::s2);
    g.training_hash = gj.at("training_hash").get<std::string>();
    g.subjects = gj.at("subjects").get<std::vector<std::string>>();
    const auto sub = dir / fmt::format("gender_{}", side_number(g.train_side));
    g.pca = load_pca(sub / "pca.model");
    g.standardizer = load_standardizer(sub / "standardizer.model");
    g.svm = load_svm(sub / "gender_svm.model");
    t.genders.push_back(std::move(g));
  }
  return t;
}

FeatureTable corpus_features(const Corpus& corpus, const LbpGeometry& geometry, unsigned threads) {
  std::vector<std::vector<std::uint32_t>> hist(corpus.records.size());
  parallel_for(
      corpus.records.size(),
      [&](std::size_t i) { hist[i] = extract_lbp(render_image(corpus, i), geometry).histogram; },
      threads);
  FeatureTable table(kCropWidth, kCropHeight, geometry);
  for (std::size_t i = 0; i < hist.size(); ++i) table.add(corpus.records[i].image_id, hist[i]);
  return table;
}

ToyRun toy_mode(const ProtocolConfig& config, std::uint64_t corpus_seed) {
  ToyRun run;
  run.corpus = generate(toy_spec(corpus_seed));
  run.records = clean(run.corpus.records).records;
  run.features = corpus_features(run.corpus, {}, config.threads);
  SubsetSpec spec;
  spec.male_weight = 1;
  spec.female_weight = 1;
  spec.seeds = {corpus_seed};
  run.assignment = allocate(run.records, spec, corpus_seed);
  run.trained = train_protocol(run.records, run.features, run.assignment, config);
  run.report = evaluate_protocol(run.records, run.features, run.assignment, run.trained);
  return run;
}

}  // namespace lfkit
