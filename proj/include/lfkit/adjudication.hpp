#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfkit/core.hpp"

namespace lfkit {

enum class ItemKind { race_no_majority, gender_tie, dob_review };
enum class ItemStatus { pending, decided };

std::string_view to_string(ItemKind kind);
std::optional<ItemKind> parse_item_kind(std::string_view text);
std::string_view to_string(ItemStatus status);

// One case a human has to look at, with everything the cleaner knew about it.
struct AdjudicationItem {
  std::string item_id;
  std::string subject_id;
  ItemKind kind = ItemKind::race_no_majority;
  std::vector<Record> records;
  std::map<std::string, int> value_counts;
  ItemStatus status = ItemStatus::pending;
  std::optional<std::string> decision;
  std::string decided_at;
  std::string decided_by;
};

std::string item_id_for(ItemKind kind, const std::string& subject_id);
std::vector<std::string> allowed_values(const AdjudicationItem& item);
bool is_allowed(const AdjudicationItem& item, const std::string& value);

nlohmann::ordered_json item_to_json(const AdjudicationItem& item, bool with_evidence);
AdjudicationItem item_from_json(const nlohmann::json& j);

void save_queue(const std::filesystem::path& path, const std::vector<AdjudicationItem>& items);
std::vector<AdjudicationItem> load_queue(const std::filesystem::path& path);

struct DecisionEntry {
  std::string item_id;
  std::string decision;
  std::string timestamp;
  std::string annotator;
  bool override_decision = false;
};

// Append-only, line-delimited JSON. Re-decisions append; the latest entry wins.
class DecisionLog {
 public:
  DecisionLog() = default;
  explicit DecisionLog(std::filesystem::path path);

  // Reads every complete line. A torn final line (crash mid-write) is dropped.
  static DecisionLog load(const std::filesystem::path& path);

  const std::vector<DecisionEntry>& entries() const { return entries_; }
  std::map<std::string, DecisionEntry> latest() const;
  std::map<std::string, std::string> decisions() const;

  // Durably appends one entry; throws io_error when the write cannot complete.
  void append(const DecisionEntry& entry);

  // Hash over the complete entries consumed so far.
  std::string hash() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<DecisionEntry> entries_;
  std::string consumed_;
};

std::string entry_to_line(const DecisionEntry& entry);

// Applies the log onto queue items (status, decision, decided_at, decided_by).
void apply_decisions(std::vector<AdjudicationItem>& items, const DecisionLog& log);

std::string utc_timestamp_now();

}  // namespace lfkit
