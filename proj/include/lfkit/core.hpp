#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lfkit {

// Error kinds shared across the toolkit. The CLI maps them onto exit codes.
enum class ErrorKind {
  missing_column,
  unparseable_date,
  unknown_race_code,
  unknown_gender_code,
  negative_age,
  unresolved_subjects,
  empty_sample,
  degenerate_sample,
  exact_mode_too_large,
  infeasible_split,
  all_seeds_infeasible,
  undecodable_image,
  wrong_dimensions,
  bad_cell_geometry,
  dimension_mismatch,
  single_class_input,
  missing_features,
  stale_cache,
  config_error,
  io_error,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

using Date = std::chrono::year_month_day;

// Parses strict YYYY-MM-DD; returns nullopt on anything else.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

// Days since 1970-01-01 (negative before).
std::int64_t day_number(const Date& date);
Date date_from_day_number(std::int64_t days);
inline std::int64_t days_between(const Date& from, const Date& to) {
  return day_number(to) - day_number(from);
}

inline constexpr double kDaysPerYear = 365.25;

// Decimal age in years. Throws negative_age when arrest precedes birth.
double compute_age_dec(const Date& dob, const Date& arrest_date);

enum class Gender : char { male = 'M', female = 'F' };
enum class Race : char { black = 'B', white = 'W', asian = 'A', hispanic = 'H', other = 'O' };

inline constexpr Race kAllRaces[] = {Race::black, Race::white, Race::asian, Race::hispanic,
                                     Race::other};
inline constexpr Gender kAllGenders[] = {Gender::male, Gender::female};

std::optional<Gender> parse_gender(std::string_view code);
std::optional<Race> parse_race(std::string_view code);
inline char code(Gender g) { return static_cast<char>(g); }
inline char code(Race r) { return static_cast<char>(r); }

// Per-record cleaning indicator.
enum class Correction : int {
  none = 0,
  dob_majority = 1,
  dob_averaged = 2,
  dob_uncorrectable = 3,
  race_majority = 4,
  race_perception = 5,
  race_other = 6,
  multiple = 7,
  gender = 8,
};

std::string_view describe(Correction c);
std::optional<Correction> correction_from_int(int value);

struct Record {
  std::string image_id;
  std::string subject_id;
  Date dob;
  Date arrest_date;
  Gender gender = Gender::male;
  Race race = Race::black;
  std::string image_path;
  std::optional<Correction> corrected;
  std::optional<double> age_dec;

  bool operator==(const Record&) const = default;
};

struct SubjectLedger {
  std::string subject_id;
  std::vector<Record> records;  // sorted by arrest_date, then image_id
  std::map<Gender, int> gender_values;
  std::map<Race, int> race_values;
  std::map<std::int64_t, int> dob_values;  // keyed by day number

  bool gender_consistent() const { return gender_values.size() <= 1; }
  bool race_consistent() const { return race_values.size() <= 1; }
  bool dob_consistent() const { return dob_values.size() <= 1; }
};

// Builds one ledger from records that all share a subject id.
SubjectLedger make_ledger(std::string subject_id, std::vector<Record> records);

// One ledger per distinct subject, ordered by subject id.
std::vector<SubjectLedger> group_by_subject(const std::vector<Record>& records);

enum class DatasetVersion { raw, cleaned_v2, go_for_age, holdout_for_age };
std::string_view to_string(DatasetVersion v);
std::optional<DatasetVersion> parse_dataset_version(std::string_view text);

struct DatasetManifest {
  std::string name;
  DatasetVersion version = DatasetVersion::raw;
  std::size_t record_count = 0;
  std::size_t subject_count = 0;
  std::string checksum;

  bool operator==(const DatasetManifest&) const = default;
};

}  // namespace lfkit
