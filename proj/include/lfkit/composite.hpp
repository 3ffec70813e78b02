#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfkit/core.hpp"
#include "lfkit/feature_cache.hpp"
#include "lfkit/grid_search.hpp"
#include "lfkit/learners.hpp"
#include "lfkit/pca.hpp"
#include "lfkit/platt.hpp"
#include "lfkit/subset.hpp"
#include "lfkit/synth.hpp"

namespace lfkit {

struct CompositeAge {
  double y_star = 0.0;
  double y_hard = 0.0;
};

// y* = (1 - w) yB + w yW. The hard estimate takes the white model when w >= 0.5.
CompositeAge composite_age(double w, double yhat_b, double yhat_w);

enum class GenderMode { oracle, classified };

struct ProtocolConfig {
  std::size_t pca_dim = 400;
  double epsilon = 1.0;
  GridOptions grid;
  std::size_t platt_folds = 5;  // subject-disjoint folds for out-of-sample decision values
  GenderMode gender_mode = GenderMode::oracle;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::optional<double> svm_cost;  // fixed C instead of grid search
  std::optional<double> svr_cost;
  bool shared_age_model = false;  // one SVR on both races, used as yB and yW

  nlohmann::ordered_json to_json() const;
  std::string hash() const;
  void apply_json(const nlohmann::json& j);
};

// Models fitted on one gender of one side; they score that gender on the other side.
struct FoldModels {
  std::string name;  // "f2": females of S2
  SetLabel train_side = SetLabel::s2;
  Gender gender = Gender::female;
  PcaModel pca;
  Standardizer standardizer;
  LinearSvmModel race;  // +1 = White
  PlattModel platt;
  LinearSvrModel svr_w;
  LinearSvrModel svr_b;
  std::map<std::string, std::vector<std::string>> model_subjects;  // model -> training subjects
  std::string training_hash;
};

// Gender classifier for classified mode, fitted on every B/W image of one side.
struct GenderModel {
  SetLabel train_side = SetLabel::s2;
  PcaModel pca;
  Standardizer standardizer;
  LinearSvmModel svm;  // +1 = female
  std::vector<std::string> subjects;
  std::string training_hash;
};

struct TrainedProtocol {
  ProtocolConfig config;
  std::vector<FoldModels> folds;      // f1, f2, m1, m2
  std::vector<GenderModel> genders;   // classified mode only: trained on S1, S2
};

struct CompositeEstimate {
  std::string image_id;
  std::string subject_id;
  std::string cell;  // "bf_1"
  Gender gender_used = Gender::female;
  double age_dec = 0.0;
  double w = 0.0;
  double b = 1.0;
  double yhat_b = 0.0;
  double yhat_w = 0.0;
  double y_star = 0.0;
  double y_hard = 0.0;
};

struct CellReport {
  std::size_t count = 0;
  double mae = 0.0;           // |age - y_hard|
  double weighted_mae = 0.0;  // |age - y_star|
};

struct LeakageViolation {
  std::string cell;
  std::string model;
  std::vector<std::string> subjects;
};

struct LeakageReport {
  std::size_t checks = 0;
  std::vector<LeakageViolation> violations;
  bool clean() const { return violations.empty(); }
};

struct EvalReport {
  std::map<std::string, CellReport> cells;
  std::vector<CompositeEstimate> predictions;  // cell order, then record order
  LeakageReport leakage;
  std::string config_hash;
  GenderMode gender_mode = GenderMode::oracle;
  std::optional<double> gender_accuracy;

  std::size_t tested() const;
  nlohmann::ordered_json to_json() const;
  std::string table() const;
  std::string predictions_csv() const;
};

// bf_1, bf_2, wf_1, wf_2, bm_1, bm_2, wm_1, wm_2.
const std::vector<std::string>& report_cells();

// records: the study population (clean B/W age records) carrying the assignment's image ids.
TrainedProtocol train_protocol(const std::vector<Record>& records, const FeatureTable& features,
                               const SplitAssignment& assignment, const ProtocolConfig& config);
EvalReport evaluate_protocol(const std::vector<Record>& records, const FeatureTable& features,
                             const SplitAssignment& assignment, const TrainedProtocol& trained);
EvalReport run_protocol(const std::vector<Record>& records, const FeatureTable& features,
                        const SplitAssignment& assignment, const ProtocolConfig& config);

// Recomputes the train/test subject intersections from the assignment alone.
LeakageReport check_leakage(const std::vector<Record>& records, const SplitAssignment& assignment,
                            const TrainedProtocol& trained, const EvalReport& report);

void save_protocol(const std::filesystem::path& dir, const TrainedProtocol& trained);
TrainedProtocol load_protocol(const std::filesystem::path& dir);

struct ToyRun {
  Corpus corpus;
  std::vector<Record> records;  // cleaned, with age_dec
  FeatureTable features;
  SplitAssignment assignment;
  TrainedProtocol trained;
  EvalReport report;
};

// 1,000 single-image subjects, balanced cells, split 1:1 into S1 and S2, then the protocol.
ToyRun toy_mode(const ProtocolConfig& config, std::uint64_t corpus_seed);

// Renders and extracts every record of the corpus in memory.
FeatureTable corpus_features(const Corpus& corpus, const LbpGeometry& geometry = {},
                             unsigned threads = 0);

}  // namespace lfkit
