#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "lfkit/core.hpp"
#include "lfkit/gof.hpp"

namespace lfkit {

enum class SetLabel { s1, s2, r };
std::string_view to_string(SetLabel s);
std::optional<SetLabel> parse_set_label(std::string_view text);

struct Cell {
  Race race = Race::white;
  Gender gender = Gender::female;
  bool operator==(const Cell&) const = default;
};
std::string cell_name(Cell c);  // "WF", "BM", ...

enum class Combiner { min, mean };

struct SubsetSpec {
  int male_weight = 3;  // male:female image ratio
  int female_weight = 1;
  int white_weight = 1;  // white:black image ratio
  int black_weight = 1;
  Cell anchor{Race::white, Gender::female};
  std::int64_t slack = 0;
  std::vector<std::uint64_t> seeds{42};
  std::size_t permutations = 10000;
  Combiner combiner = Combiner::min;
  std::size_t repair_budget = 10000;

  void validate() const;
  std::string hash() const;  // covers every field that changes the assignment or score
  nlohmann::ordered_json to_json() const;
};

// Cells in processing order: the anchor first, then the remaining B/W cells.
std::vector<Cell> processing_order(const SubsetSpec& spec);

struct CellCounts {
  std::array<std::size_t, 3> images{};    // S1, S2, R
  std::array<std::size_t, 3> subjects{};
};

struct Certificate {
  bool complete = false;
  bool subject_disjoint = false;
  bool anchor_in_s = false;
  bool per_cell_equal = false;
  bool ratios = false;
  bool others_in_r = false;

  bool all() const {
    return complete && subject_disjoint && anchor_in_s && per_cell_equal && ratios && others_in_r;
  }
};

struct AssignmentRow {
  std::string image_id;
  std::string subject_id;
  SetLabel set = SetLabel::r;
};

struct SplitAssignment {
  std::vector<AssignmentRow> rows;  // input record order
  std::map<std::string, CellCounts> cells;
  std::map<std::string, std::int64_t> targets;  // per-side image target per B/W cell
  std::uint64_t seed = 0;
  std::string spec_hash;
  Certificate certificate;

  std::unordered_map<std::string, std::size_t> index;  // image_id -> row

  void reindex();
  std::optional<SetLabel> set_of(const std::string& image_id) const;
};

// Splits one cell's subjects (given by image counts) into two sides. Anchor cells
// place every subject in S1 or S2; other cells leave the rest in R (label r).
// ok is false when the targets are not met within the move budget.
struct PackResult {
  std::vector<SetLabel> sides;
  std::array<std::int64_t, 2> achieved{};
  bool ok = false;
};
PackResult pack_cell(const std::vector<std::int64_t>& sizes, std::int64_t target,
                     std::int64_t slack, bool anchor, std::uint64_t seed,
                     std::size_t budget = 10000);

// Deterministic in (records, spec, seed). Throws infeasible_split.
SplitAssignment allocate(const std::vector<Record>& records, const SubsetSpec& spec,
                         std::uint64_t seed);

// Recomputes counts and every certificate flag from scratch.
Certificate certify(const SplitAssignment& a, const std::vector<Record>& records,
                    const SubsetSpec& spec);

struct SeedScore {
  std::uint64_t seed = 0;
  double ks_statistic = 0.0;
  double ad_statistic = 0.0;
  double ks_p = 1.0;
  double ad_p = 1.0;
  double combined = 1.0;
};

SeedScore score_split(const SplitAssignment& a, const std::vector<Record>& records,
                      const SubsetSpec& spec, unsigned threads = 0);

struct SearchResult {
  SplitAssignment best;
  std::vector<SeedScore> scores;  // feasible seeds, in seed-list order
  std::vector<std::pair<std::uint64_t, std::string>> infeasible;
  std::vector<SeedScore> ranked() const;  // combined descending, then seed ascending
};

// Throws all_seeds_infeasible when no seed yields a split.
SearchResult search_seeds(const std::vector<Record>& records, const SubsetSpec& spec,
                          unsigned threads = 0);

struct AgeSummary {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0, sd = 0;
};
// Quartiles by linear interpolation between order statistics; sd uses n - 1.
AgeSummary summarize(std::vector<double> ages);

struct SummaryBundle {
  std::map<std::string, AgeSummary> sets;  // S1, S2, S, R, W
  std::string counts_csv;                  // set,cell,images,subjects
  std::string age_hist_csv;                // set,cell,bin_lo,bin_hi,count
  std::string ecdf_csv;                    // set,age,cum_prop
  nlohmann::ordered_json to_json() const;
};
SummaryBundle emit_summaries(const SplitAssignment& a, const std::vector<Record>& records);

std::string serialize_assignment(const SplitAssignment& a);
void save_assignment(const std::filesystem::path& path, const SplitAssignment& a);
SplitAssignment load_assignment(const std::filesystem::path& path);

nlohmann::ordered_json scores_to_json(const SearchResult& result, const SubsetSpec& spec);

// age_dec when present, otherwise computed from the dates.
double record_age(const Record& r);

}  // namespace lfkit
