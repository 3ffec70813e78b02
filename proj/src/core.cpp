#include "lfkit/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace lfkit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::missing_column: return "MissingColumn";
    case ErrorKind::unparseable_date: return "UnparseableDate";
    case ErrorKind::unknown_race_code: return "UnknownRaceCode";
    case ErrorKind::unknown_gender_code: return "UnknownGenderCode";
    case ErrorKind::negative_age: return "NegativeAge";
    case ErrorKind::unresolved_subjects: return "UnresolvedSubjects";
    case ErrorKind::empty_sample: return "EmptySample";
    case ErrorKind::degenerate_sample: return "DegenerateSample";
    case ErrorKind::exact_mode_too_large: return "ExactModeTooLarge";
    case ErrorKind::infeasible_split: return "InfeasibleSplit";
    case ErrorKind::all_seeds_infeasible: return "AllSeedsInfeasible";
    case ErrorKind::undecodable_image: return "UndecodableImage";
    case ErrorKind::wrong_dimensions: return "WrongDimensions";
    case ErrorKind::bad_cell_geometry: return "BadCellGeometry";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::single_class_input: return "SingleClassInput";
    case ErrorKind::missing_features: return "MissingFeatures";
    case ErrorKind::stale_cache: return "StaleCache";
    case ErrorKind::config_error: return "ConfigError";
    case ErrorKind::io_error: return "IoError";
  }
  return "Unknown";
}

namespace {

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::int64_t day_number(const Date& date) {
  return std::chrono::sys_days{date}.time_since_epoch().count();
}

Date date_from_day_number(std::int64_t days) {
  return Date{std::chrono::sys_days{std::chrono::days{days}}};
}

double compute_age_dec(const Date& dob, const Date& arrest_date) {
  const std::int64_t days = days_between(dob, arrest_date);
  if (days < 0) {
    throw Error(ErrorKind::negative_age,
                "arrest date " + format_date(arrest_date) + " precedes birth date " +
                    format_date(dob));
  }
  return static_cast<double>(days) / kDaysPerYear;
}

std::optional<Gender> parse_gender(std::string_view code) {
  if (code == "M") return Gender::male;
  if (code == "F") return Gender::female;
  return std::nullopt;
}

std::optional<Race> parse_race(std::string_view code) {
  if (code.size() != 1) return std::nullopt;
  switch (code[0]) {
    case 'B': return Race::black;
    case 'W': return Race::white;
    case 'A': return Race::asian;
    case 'H': return Race::hispanic;
    case 'O': return Race::other;
    default: return std::nullopt;
  }
}

std::string_view describe(Correction c) {
  switch (c) {
    case Correction::none: return "no change";
    case Correction::dob_majority: return "dob - majority";
    case Correction::dob_averaged: return "dob - averaged";
    case Correction::dob_uncorrectable: return "dob - uncorrectable";
    case Correction::race_majority: return "race - majority";
    case Correction::race_perception: return "race - perception";
    case Correction::race_other: return "race - assigned to Other";
    case Correction::multiple: return "more than 1 change";
    case Correction::gender: return "gender corrected";
  }
  return "";
}

std::optional<Correction> correction_from_int(int value) {
  if (value < 0 || value > 8) return std::nullopt;
  return static_cast<Correction>(value);
}

SubjectLedger make_ledger(std::string subject_id, std::vector<Record> records) {
  SubjectLedger ledger;
  ledger.subject_id = std::move(subject_id);
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    const auto da = day_number(a.arrest_date);
    const auto db = day_number(b.arrest_date);
    if (da != db) return da < db;
    return a.image_id < b.image_id;
  });
  for (const auto& r : records) {
    ++ledger.gender_values[r.gender];
    ++ledger.race_values[r.race];
    ++ledger.dob_values[day_number(r.dob)];
  }
  ledger.records = std::move(records);
  return ledger;
}

std::vector<SubjectLedger> group_by_subject(const std::vector<Record>& records) {
  std::map<std::string, std::vector<Record>> by_subject;
  for (const auto& r : records) by_subject[r.subject_id].push_back(r);
  std::vector<SubjectLedger> ledgers;
  ledgers.reserve(by_subject.size());
  for (auto& [id, recs] : by_subject) ledgers.push_back(make_ledger(id, std::move(recs)));
  return ledgers;
}

std::string_view to_string(DatasetVersion v) {
  switch (v) {
    case DatasetVersion::raw: return "raw";
    case DatasetVersion::cleaned_v2: return "cleaned_v2";
    case DatasetVersion::go_for_age: return "go_for_age";
    case DatasetVersion::holdout_for_age: return "holdout_for_age";
  }
  return "";
}

std::optional<DatasetVersion> parse_dataset_version(std::string_view text) {
  for (auto v : {DatasetVersion::raw, DatasetVersion::cleaned_v2, DatasetVersion::go_for_age,
                 DatasetVersion::holdout_for_age}) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

}  // namespace lfkit
