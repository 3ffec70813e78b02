#include "lfkit/audit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <unordered_map>

#include "lfkit/dataset_io.hpp"

namespace lfkit {

using nlohmann::ordered_json;

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::gender: return "gender";
    case Attribute::race: return "race";
    case Attribute::dob: return "dob";
  }
  return "";
}

std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::majority: return "majority";
    case Rule::mean_dob: return "mean_dob";
    case Rule::uncorrectable: return "uncorrectable";
    case Rule::adjudicated: return "adjudicated";
    case Rule::single_outlier: return "single_outlier";
    case Rule::pending: return "pending";
  }
  return "";
}

namespace {

template <typename K>
std::optional<K> strict_majority(const std::map<K, int>& counts) {
  int total = 0;
  for (const auto& [k, c] : counts) total += c;
  for (const auto& [k, c] : counts) {
    if (2 * c > total) return k;
  }
  return std::nullopt;
}

std::int64_t dob_gap(const SubjectLedger& ledger) {
  if (ledger.dob_values.empty()) return 0;
  return ledger.dob_values.rbegin()->first - ledger.dob_values.begin()->first;
}

// floor(a / b) for b > 0.
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

}  // namespace

InconsistencyReport audit(const std::vector<SubjectLedger>& ledgers) {
  InconsistencyReport report;
  report.subject_count = ledgers.size();
  std::map<std::int64_t, std::size_t> gaps;
  for (const auto& ledger : ledgers) {
    report.record_count += ledger.records.size();
    report.max_records_per_subject = std::max(report.max_records_per_subject, ledger.records.size());
    if (ledger.records.size() == 1) ++report.single_record_subjects;
    if (!ledger.gender_consistent()) {
      ConflictEntry e{ledger.subject_id, {}};
      for (const auto& [g, c] : ledger.gender_values) e.values[std::string(1, code(g))] = c;
      report.gender_conflicts.push_back(std::move(e));
    }
    if (!ledger.race_consistent()) {
      ConflictEntry e{ledger.subject_id, {}};
      for (const auto& [r, c] : ledger.race_values) e.values[std::string(1, code(r))] = c;
      report.race_conflicts.push_back(std::move(e));
    }
    if (!ledger.dob_consistent()) {
      ConflictEntry e{ledger.subject_id, {}};
      for (const auto& [d, c] : ledger.dob_values) e.values[format_date(date_from_day_number(d))] = c;
      report.dob_conflicts.push_back(std::move(e));
      const auto gap = dob_gap(ledger);
      report.dob_range_days[ledger.subject_id] = gap;
      ++gaps[gap];
    }
  }
  std::size_t running = 0;
  const double total = static_cast<double>(report.dob_conflicts.size());
  for (const auto& [gap, count] : gaps) {
    report.dob_gap_frequency.emplace_back(gap, count);
    running += count;
    report.dob_gap_cumulative.emplace_back(gap, static_cast<double>(running) / total);
  }
  return report;
}

ordered_json report_to_json(const InconsistencyReport& report) {
  ordered_json j;
  j["subject_count"] = report.subject_count;
  j["record_count"] = report.record_count;
  j["single_record_subjects"] = report.single_record_subjects;
  j["max_records_per_subject"] = report.max_records_per_subject;
  j["inconsistencies"] = {{"gender", report.gender_conflicts.size()},
                          {"race", report.race_conflicts.size()},
                          {"dob", report.dob_conflicts.size()}};
  auto list = [](const std::vector<ConflictEntry>& entries) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : entries) arr.push_back({{"subject_id", e.subject_id}, {"values", e.values}});
    return arr;
  };
  j["gender_conflicts"] = list(report.gender_conflicts);
  j["race_conflicts"] = list(report.race_conflicts);
  ordered_json dob = ordered_json::array();
  for (const auto& e : report.dob_conflicts) {
    dob.push_back({{"subject_id", e.subject_id},
                   {"values", e.values},
                   {"range_days", report.dob_range_days.at(e.subject_id)}});
  }
  j["dob_conflicts"] = std::move(dob);
  return j;
}

std::string dob_gap_frequency_csv(const InconsistencyReport& report) {
  std::string out = "gap_days,count\n";
  for (const auto& [gap, count] : report.dob_gap_frequency) out += fmt::format("{},{}\n", gap, count);
  return out;
}

std::string dob_gap_cumulative_csv(const InconsistencyReport& report) {
  std::string out = "gap_days,cum_prop\n";
  for (const auto& [gap, p] : report.dob_gap_cumulative) out += fmt::format("{},{}\n", gap, p);
  return out;
}

Resolution resolve_gender(const SubjectLedger& ledger, const DecisionMap& decisions) {
  Resolution res{ledger.subject_id, Attribute::gender, Rule::majority, {}, Source::automatic};
  if (const auto winner = strict_majority(ledger.gender_values)) {
    res.resolved_value = std::string(1, code(*winner));
    return res;
  }
  const auto it = decisions.find(item_id_for(ItemKind::gender_tie, ledger.subject_id));
  if (it != decisions.end() && parse_gender(it->second)) {
    res.rule = Rule::adjudicated;
    res.source = Source::human;
    res.resolved_value = it->second;
    return res;
  }
  res.rule = Rule::pending;
  return res;
}

Resolution resolve_race(const SubjectLedger& ledger, const DecisionMap& decisions) {
  Resolution res{ledger.subject_id, Attribute::race, Rule::majority, {}, Source::automatic};
  if (const auto winner = strict_majority(ledger.race_values)) {
    res.resolved_value = std::string(1, code(*winner));
    return res;
  }
  const auto it = decisions.find(item_id_for(ItemKind::race_no_majority, ledger.subject_id));
  if (it != decisions.end() && parse_race(it->second)) {
    res.rule = Rule::adjudicated;
    res.source = Source::human;
    res.resolved_value = it->second;
    return res;
  }
  res.rule = Rule::pending;
  return res;
}

Resolution resolve_dob(const SubjectLedger& ledger) {
  Resolution res{ledger.subject_id, Attribute::dob, Rule::majority, {}, Source::automatic};
  if (const auto winner = strict_majority(ledger.dob_values)) {
    res.resolved_value = format_date(date_from_day_number(*winner));
    return res;
  }
  if (dob_gap(ledger) <= kMeanDobMaxGapDays) {
    std::int64_t sum = 0;
    for (const auto& r : ledger.records) sum += day_number(r.dob);
    const auto n = static_cast<std::int64_t>(ledger.records.size());
    // Half-up rounding of sum / n.
    const std::int64_t mean = floor_div(2 * sum + n, 2 * n);
    res.rule = Rule::mean_dob;
    res.resolved_value = format_date(date_from_day_number(mean));
    return res;
  }
  res.rule = Rule::uncorrectable;
  return res;
}

std::vector<AdjudicationItem> build_queue(const std::vector<SubjectLedger>& ledgers,
                                          const CleanOptions& options) {
  std::vector<AdjudicationItem> items;
  auto make_item = [](const SubjectLedger& ledger, ItemKind kind) {
    AdjudicationItem item;
    item.item_id = item_id_for(kind, ledger.subject_id);
    item.subject_id = ledger.subject_id;
    item.kind = kind;
    item.records = ledger.records;
    switch (kind) {
      case ItemKind::gender_tie:
        for (const auto& [g, c] : ledger.gender_values) item.value_counts[std::string(1, code(g))] = c;
        break;
      case ItemKind::race_no_majority:
        for (const auto& [r, c] : ledger.race_values) item.value_counts[std::string(1, code(r))] = c;
        break;
      case ItemKind::dob_review:
        for (const auto& [d, c] : ledger.dob_values) {
          item.value_counts[format_date(date_from_day_number(d))] = c;
        }
        break;
    }
    return item;
  };
  for (const auto& ledger : ledgers) {
    if (!ledger.gender_consistent() && !strict_majority(ledger.gender_values)) {
      items.push_back(make_item(ledger, ItemKind::gender_tie));
    }
    if (!ledger.race_consistent() && !strict_majority(ledger.race_values)) {
      items.push_back(make_item(ledger, ItemKind::race_no_majority));
    }
    if (options.queue_dob_review && !ledger.dob_consistent() &&
        resolve_dob(ledger).rule == Rule::uncorrectable) {
      items.push_back(make_item(ledger, ItemKind::dob_review));
    }
  }
  return items;
}

namespace {

struct RecordChange {
  bool gender = false;
  std::optional<Correction> race;
  std::optional<Correction> dob;
  bool uncorrectable = false;
};

Correction indicator_for(const RecordChange& c) {
  if (c.uncorrectable) return Correction::dob_uncorrectable;
  const int changes = (c.gender ? 1 : 0) + (c.race ? 1 : 0) + (c.dob ? 1 : 0);
  if (changes >= 2) return Correction::multiple;
  if (c.gender) return Correction::gender;
  if (c.race) return *c.race;
  if (c.dob) return *c.dob;
  return Correction::none;
}

}  // namespace

CleanResult clean(const std::vector<Record>& raw, const DecisionMap& decisions,
                  const CleanOptions& options) {
  CleanResult result;
  const auto ledgers = group_by_subject(raw);

  std::unordered_map<std::string, Record> cleaned;
  std::unordered_map<std::string, RecordChange> changes;
  std::unordered_map<std::string, bool> pending_subject;

  for (const auto& ledger : ledgers) {
    std::vector<Resolution> subject_res;
    if (!ledger.gender_consistent()) subject_res.push_back(resolve_gender(ledger, decisions));
    if (!ledger.race_consistent()) subject_res.push_back(resolve_race(ledger, decisions));
    if (!ledger.dob_consistent()) subject_res.push_back(resolve_dob(ledger));

    const bool pending = std::any_of(subject_res.begin(), subject_res.end(),
                                     [](const Resolution& r) { return r.rule == Rule::pending; });
    if (pending) {
      result.pending_subjects.push_back(ledger.subject_id);
      result.pending_record_count += ledger.records.size();
      pending_subject[ledger.subject_id] = true;
    }

    for (const auto& original : ledger.records) {
      Record r = original;
      RecordChange change;
      for (const auto& res : subject_res) {
        switch (res.attribute) {
          case Attribute::gender: {
            if (res.rule == Rule::pending) break;
            const auto g = *parse_gender(res.resolved_value);
            if (g != r.gender) {
              r.gender = g;
              change.gender = true;
            }
            break;
          }
          case Attribute::race: {
            if (res.rule == Rule::pending) break;
            const auto race = *parse_race(res.resolved_value);
            if (race != r.race) {
              r.race = race;
              if (res.rule == Rule::majority) {
                change.race = Correction::race_majority;
              } else {
                change.race = race == Race::other ? Correction::race_other
                                                  : Correction::race_perception;
              }
            }
            break;
          }
          case Attribute::dob: {
            if (res.rule == Rule::uncorrectable) {
              change.uncorrectable = true;
              break;
            }
            const auto dob = *parse_date(res.resolved_value);
            if (day_number(dob) != day_number(r.dob)) {
              r.dob = dob;
              change.dob = res.rule == Rule::majority ? Correction::dob_majority
                                                      : Correction::dob_averaged;
            }
            break;
          }
        }
      }
      r.corrected = indicator_for(change);
      r.age_dec = compute_age_dec(r.dob, r.arrest_date);
      changes[r.image_id] = change;
      cleaned.emplace(r.image_id, std::move(r));
    }
    for (auto& res : subject_res) result.resolutions.push_back(std::move(res));
  }

  result.records.reserve(raw.size());
  for (const auto& r : raw) {
    if (pending_subject.count(r.subject_id)) continue;
    result.records.push_back(cleaned.at(r.image_id));
  }

  result.queue = build_queue(ledgers, options);
  for (auto& item : result.queue) {
    const auto it = decisions.find(item.item_id);
    if (it != decisions.end()) {
      item.status = ItemStatus::decided;
      item.decision = it->second;
    }
  }
  return result;
}

DatasetVersions emit_versions(const CleanResult& result, bool strict) {
  if (strict && !result.pending_subjects.empty()) {
    std::string list;
    for (const auto& s : result.pending_subjects) {
      if (!list.empty()) list += ",";
      list += s;
    }
    throw Error(ErrorKind::unresolved_subjects,
                fmt::format("{} subject(s) awaiting adjudication: {}",
                            result.pending_subjects.size(), list));
  }
  DatasetVersions v;
  v.pending_excluded = result.pending_record_count;
  v.cleaned_v2 = result.records;
  for (const auto& r : result.records) {
    if (r.corrected == Correction::dob_uncorrectable) {
      v.holdout_for_age.push_back(r);
    } else {
      v.go_for_age.push_back(r);
    }
  }
  v.cleaned_manifest = make_manifest("cleaned_v2", DatasetVersion::cleaned_v2, v.cleaned_v2);
  v.go_manifest = make_manifest("go_for_age", DatasetVersion::go_for_age, v.go_for_age);
  v.holdout_manifest =
      make_manifest("holdout_for_age", DatasetVersion::holdout_for_age, v.holdout_for_age);
  return v;
}

}  // namespace lfkit
