#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfkit/adjudication.hpp"
#include "lfkit/core.hpp"

namespace lfkit {

struct ConflictEntry {
  std::string subject_id;
  std::map<std::string, int> values;  // observed value -> record count
};

struct InconsistencyReport {
  std::vector<ConflictEntry> gender_conflicts;
  std::vector<ConflictEntry> race_conflicts;
  std::vector<ConflictEntry> dob_conflicts;
  std::map<std::string, std::int64_t> dob_range_days;  // max pairwise gap per subject

  std::size_t subject_count = 0;
  std::size_t record_count = 0;
  std::size_t single_record_subjects = 0;
  std::size_t max_records_per_subject = 0;

  // Subjects per dob gap, and the running proportion of dob-conflicted subjects.
  std::vector<std::pair<std::int64_t, std::size_t>> dob_gap_frequency;
  std::vector<std::pair<std::int64_t, double>> dob_gap_cumulative;
};

InconsistencyReport audit(const std::vector<SubjectLedger>& ledgers);

nlohmann::ordered_json report_to_json(const InconsistencyReport& report);
std::string dob_gap_frequency_csv(const InconsistencyReport& report);
std::string dob_gap_cumulative_csv(const InconsistencyReport& report);

enum class Attribute { gender, race, dob };
enum class Rule { majority, mean_dob, uncorrectable, adjudicated, single_outlier, pending };
enum class Source { automatic, human };

std::string_view to_string(Attribute a);
std::string_view to_string(Rule r);

struct Resolution {
  std::string subject_id;
  Attribute attribute = Attribute::gender;
  Rule rule = Rule::majority;
  // "F", "W", an ISO date, or empty for uncorrectable/pending.
  std::string resolved_value;
  Source source = Source::automatic;
};

// Latest decision per adjudication item id.
using DecisionMap = std::map<std::string, std::string>;

// Each resolver expects a ledger that is conflicted in its attribute.
Resolution resolve_gender(const SubjectLedger& ledger, const DecisionMap& decisions = {});
Resolution resolve_race(const SubjectLedger& ledger, const DecisionMap& decisions);
Resolution resolve_dob(const SubjectLedger& ledger);

inline constexpr std::int64_t kMeanDobMaxGapDays = 366;

struct CleanOptions {
  bool queue_dob_review = false;
};

struct CleanResult {
  std::vector<Record> records;  // input order; pending subjects removed
  std::vector<Resolution> resolutions;
  std::vector<std::string> pending_subjects;
  std::size_t pending_record_count = 0;
  std::vector<AdjudicationItem> queue;  // undecided items plus optional dob reviews
};

// Resolves every conflicted subject, then recomputes each record's indicator
// from the raw-vs-cleaned diff and fills age_dec.
CleanResult clean(const std::vector<Record>& raw, const DecisionMap& decisions = {},
                  const CleanOptions& options = {});

// Items the human queue needs for this corpus, regardless of decisions.
std::vector<AdjudicationItem> build_queue(const std::vector<SubjectLedger>& ledgers,
                                          const CleanOptions& options = {});

struct DatasetVersions {
  std::vector<Record> cleaned_v2;
  std::vector<Record> go_for_age;
  std::vector<Record> holdout_for_age;
  DatasetManifest cleaned_manifest;
  DatasetManifest go_manifest;
  DatasetManifest holdout_manifest;
  std::size_t pending_excluded = 0;
};

// Throws unresolved_subjects in strict mode when anything is still pending.
DatasetVersions emit_versions(const CleanResult& result, bool strict = false);

}  // namespace lfkit
