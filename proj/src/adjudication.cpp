#include "lfkit/adjudication.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

#include "lfkit/dataset_io.hpp"

namespace lfkit {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ItemKind kind) {
  switch (kind) {
    case ItemKind::race_no_majority: return "race_no_majority";
    case ItemKind::gender_tie: return "gender_tie";
    case ItemKind::dob_review: return "dob_review";
  }
  return "";
}

std::optional<ItemKind> parse_item_kind(std::string_view text) {
  for (auto k : {ItemKind::race_no_majority, ItemKind::gender_tie, ItemKind::dob_review}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(ItemStatus status) {
  return status == ItemStatus::pending ? "pending" : "decided";
}

std::string item_id_for(ItemKind kind, const std::string& subject_id) {
  switch (kind) {
    case ItemKind::race_no_majority: return "race-" + subject_id;
    case ItemKind::gender_tie: return "gender-" + subject_id;
    case ItemKind::dob_review: return "dob-" + subject_id;
  }
  return subject_id;
}

std::vector<std::string> allowed_values(const AdjudicationItem& item) {
  switch (item.kind) {
    case ItemKind::race_no_majority: return {"B", "W", "A", "H", "O"};
    case ItemKind::gender_tie: return {"M", "F"};
    case ItemKind::dob_review: {
      std::set<std::string> dobs;
      for (const auto& r : item.records) dobs.insert(format_date(r.dob));
      std::vector<std::string> values(dobs.begin(), dobs.end());
      values.push_back("uncorrectable");
      return values;
    }
  }
  return {};
}

bool is_allowed(const AdjudicationItem& item, const std::string& value) {
  for (const auto& v : allowed_values(item)) {
    if (v == value) return true;
  }
  return false;
}

ordered_json item_to_json(const AdjudicationItem& item, bool with_evidence) {
  ordered_json j;
  j["item_id"] = item.item_id;
  j["subject_id"] = item.subject_id;
  j["kind"] = std::string(to_string(item.kind));
  j["status"] = std::string(to_string(item.status));
  j["decision"] = item.decision ? json(*item.decision) : json(nullptr);
  j["decided_at"] = item.decided_at.empty() ? json(nullptr) : json(item.decided_at);
  j["decided_by"] = item.decided_by.empty() ? json(nullptr) : json(item.decided_by);
  j["record_count"] = item.records.size();
  j["value_counts"] = item.value_counts;
  if (with_evidence) {
    ordered_json records = ordered_json::array();
    for (const auto& r : item.records) {
      ordered_json e;
      e["image_id"] = r.image_id;
      e["image_path"] = r.image_path;
      e["image_url"] = r.image_path.empty() ? json(nullptr) : json("/images/" + r.image_path);
      e["arrest_date"] = format_date(r.arrest_date);
      e["dob"] = format_date(r.dob);
      e["gender"] = std::string(1, code(r.gender));
      e["race"] = std::string(1, code(r.race));
      records.push_back(std::move(e));
    }
    j["records"] = std::move(records);
    j["allowed_values"] = allowed_values(item);
  }
  return j;
}

AdjudicationItem item_from_json(const json& j) {
  AdjudicationItem item;
  item.item_id = j.at("item_id").get<std::string>();
  item.subject_id = j.at("subject_id").get<std::string>();
  const auto kind = parse_item_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorKind::config_error, "unknown item kind for " + item.item_id);
  item.kind = *kind;
  if (j.contains("value_counts")) {
    item.value_counts = j.at("value_counts").get<std::map<std::string, int>>();
  }
  if (j.contains("records")) {
    for (const auto& e : j.at("records")) {
      Record r;
      r.subject_id = item.subject_id;
      r.image_id = e.at("image_id").get<std::string>();
      r.image_path = e.value("image_path", std::string{});
      const auto arrest = parse_date(e.at("arrest_date").get<std::string>());
      const auto dob = parse_date(e.at("dob").get<std::string>());
      const auto gender = parse_gender(e.at("gender").get<std::string>());
      const auto race = parse_race(e.at("race").get<std::string>());
      if (!arrest || !dob || !gender || !race) {
        throw Error(ErrorKind::config_error, "malformed evidence record in " + item.item_id);
      }
      r.arrest_date = *arrest;
      r.dob = *dob;
      r.gender = *gender;
      r.race = *race;
      item.records.push_back(std::move(r));
    }
  }
  return item;
}

void save_queue(const std::filesystem::path& path, const std::vector<AdjudicationItem>& items) {
  ordered_json j;
  ordered_json arr = ordered_json::array();
  for (const auto& item : items) arr.push_back(item_to_json(item, true));
  j["items"] = std::move(arr);
  write_file(path, j.dump(2) + "\n");
}

std::vector<AdjudicationItem> load_queue(const std::filesystem::path& path) {
  const auto j = json::parse(read_file(path));
  std::vector<AdjudicationItem> items;
  std::set<std::string> seen;
  for (const auto& e : j.at("items")) {
    auto item = item_from_json(e);
    if (!seen.insert(item.item_id).second) {
      throw Error(ErrorKind::config_error, "duplicate item id " + item.item_id);
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::string entry_to_line(const DecisionEntry& entry) {
  ordered_json j;
  j["item_id"] = entry.item_id;
  j["decision"] = entry.decision;
  j["timestamp"] = entry.timestamp;
  j["annotator"] = entry.annotator;
  j["override"] = entry.override_decision;
  return j.dump() + "\n";
}

DecisionLog::DecisionLog(std::filesystem::path path) : path_(std::move(path)) {}

DecisionLog DecisionLog::load(const std::filesystem::path& path) {
  DecisionLog log(path);
  if (!std::filesystem::exists(path)) return log;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    const std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty()) {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("item_id") ||
          !j.contains("decision")) {
        break;
      }
      DecisionEntry e;
      e.item_id = j.at("item_id").get<std::string>();
      e.decision = j.at("decision").get<std::string>();
      e.timestamp = j.value("timestamp", std::string{});
      e.annotator = j.value("annotator", std::string{});
      e.override_decision = j.value("override", false);
      log.entries_.push_back(std::move(e));
    }
    pos = nl + 1;
  }
  log.consumed_ = text.substr(0, pos);
  return log;
}

std::map<std::string, DecisionEntry> DecisionLog::latest() const {
  std::map<std::string, DecisionEntry> out;
  for (const auto& e : entries_) out[e.item_id] = e;
  return out;
}

std::map<std::string, std::string> DecisionLog::decisions() const {
  std::map<std::string, std::string> out;
  for (const auto& e : entries_) out[e.item_id] = e.decision;
  return out;
}

void DecisionLog::append(const DecisionEntry& entry) {
  if (path_.empty()) throw Error(ErrorKind::io_error, "decision log has no backing file");
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  const std::string line = entry_to_line(entry);
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT, 0644);
  if (fd < 0) throw Error(ErrorKind::io_error, "cannot open decision log " + path_.string());
  // Drop any torn tail left by an earlier crash before appending.
  if (::ftruncate(fd, static_cast<off_t>(consumed_.size())) != 0 ||
      ::lseek(fd, 0, SEEK_END) < 0) {
    ::close(fd);
    throw Error(ErrorKind::io_error, "cannot position decision log " + path_.string());
  }
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorKind::io_error, "short write to decision log " + path_.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  entries_.push_back(entry);
  consumed_ += line;
}

std::string DecisionLog::hash() const { return "fnv1a64:" + hex64(fnv1a64(consumed_)); }

void apply_decisions(std::vector<AdjudicationItem>& items, const DecisionLog& log) {
  const auto latest = log.latest();
  for (auto& item : items) {
    auto it = latest.find(item.item_id);
    if (it == latest.end()) continue;
    item.status = ItemStatus::decided;
    item.decision = it->second.decision;
    item.decided_at = it->second.timestamp;
    item.decided_by = it->second.annotator;
  }
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace lfkit
