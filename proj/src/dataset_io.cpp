#include "lfkit/dataset_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace lfkit {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

std::vector<std::string> split_csv_line(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

namespace {

std::string row_label(std::size_t row) { return "row " + std::to_string(row); }

}  // namespace

std::vector<Record> parse_dataset(std::istream& in, const ColumnMap& columns) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::missing_column, "input table has no header line");
  }
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(header[i], i);

  auto required = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) {
      throw Error(ErrorKind::missing_column, "required column '" + name + "' not found");
    }
    return it->second;
  };
  auto optional = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  };

  const std::size_t c_subject = required(columns.subject_id);
  const std::size_t c_image = required(columns.image_id);
  const std::size_t c_dob = required(columns.dob);
  const std::size_t c_arrest = required(columns.arrest_date);
  const std::size_t c_race = required(columns.race);
  const std::size_t c_gender = required(columns.gender);
  const auto c_path = optional(columns.image_path);
  const auto c_corrected = optional(columns.corrected);
  const auto c_age = optional(columns.age_dec);

  std::vector<Record> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto fields = split_csv_line(line);
    auto field = [&](std::size_t col) -> const std::string& {
      static const std::string empty;
      return col < fields.size() ? fields[col] : empty;
    };

    Record r;
    r.subject_id = field(c_subject);
    r.image_id = field(c_image);
    const auto dob = parse_date(field(c_dob));
    if (!dob) {
      throw Error(ErrorKind::unparseable_date,
                  row_label(row) + ": cannot parse dob '" + field(c_dob) + "'");
    }
    const auto arrest = parse_date(field(c_arrest));
    if (!arrest) {
      throw Error(ErrorKind::unparseable_date, row_label(row) + ": cannot parse arrest date '" +
                                                   field(c_arrest) + "'");
    }
    r.dob = *dob;
    r.arrest_date = *arrest;
    const auto race = parse_race(field(c_race));
    if (!race) {
      throw Error(ErrorKind::unknown_race_code,
                  row_label(row) + ": unknown race code '" + field(c_race) + "'");
    }
    r.race = *race;
    const auto gender = parse_gender(field(c_gender));
    if (!gender) {
      throw Error(ErrorKind::unknown_gender_code,
                  row_label(row) + ": unknown gender code '" + field(c_gender) + "'");
    }
    r.gender = *gender;
    if (c_path) r.image_path = field(*c_path);
    if (c_corrected && !field(*c_corrected).empty()) {
      int value = -1;
      const auto& text = field(*c_corrected);
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      const auto c = correction_from_int(value);
      if (ec != std::errc{} || ptr != text.data() + text.size() || !c) {
        throw Error(ErrorKind::config_error,
                    row_label(row) + ": invalid corrected value '" + text + "'");
      }
      r.corrected = *c;
    }
    if (c_age && !field(*c_age).empty()) {
      const auto& text = field(*c_age);
      double value = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::config_error,
                    row_label(row) + ": invalid age_dec value '" + text + "'");
      }
      r.age_dec = value;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<Record> load_dataset(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open " + path.string());
  return parse_dataset(in, columns);
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_dataset(std::ostream& out, const std::vector<Record>& records) {
  bool cleaned = false;
  for (const auto& r : records) cleaned = cleaned || r.corrected.has_value() || r.age_dec.has_value();
  out << "id_num,picture,dob,date_of_arrest,race,gender,image_path";
  if (cleaned) out << ",corrected,age_dec";
  out << '\n';
  for (const auto& r : records) {
    out << quote_if_needed(r.subject_id) << ',' << quote_if_needed(r.image_id) << ','
        << format_date(r.dob) << ',' << format_date(r.arrest_date) << ',' << code(r.race) << ','
        << code(r.gender) << ',' << quote_if_needed(r.image_path);
    if (cleaned) {
      out << ',';
      if (r.corrected) out << static_cast<int>(*r.corrected);
      out << ',';
      if (r.age_dec) out << fmt::format("{}", *r.age_dec);
    }
    out << '\n';
  }
}

std::string serialize_dataset(const std::vector<Record>& records) {
  std::ostringstream out;
  write_dataset(out, records);
  return out.str();
}

void save_dataset(const std::filesystem::path& path, const std::vector<Record>& records) {
  write_file(path, serialize_dataset(records));
}

DatasetManifest make_manifest(std::string name, DatasetVersion version,
                              const std::vector<Record>& records) {
  DatasetManifest m;
  m.name = std::move(name);
  m.version = version;
  m.record_count = records.size();
  std::set<std::string> subjects;
  for (const auto& r : records) subjects.insert(r.subject_id);
  m.subject_count = subjects.size();
  m.checksum = "fnv1a64:" + hex64(fnv1a64(serialize_dataset(records)));
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["version"] = std::string(to_string(m.version));
  j["record_count"] = m.record_count;
  j["subject_count"] = m.subject_count;
  j["checksum"] = m.checksum;
  write_file(path, j.dump(2) + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  DatasetManifest m;
  m.name = j.at("name").get<std::string>();
  const auto v = parse_dataset_version(j.at("version").get<std::string>());
  if (!v) throw Error(ErrorKind::config_error, "unknown dataset version in " + path.string());
  m.version = *v;
  m.record_count = j.at("record_count").get<std::size_t>();
  m.subject_count = j.at("subject_count").get<std::size_t>();
  m.checksum = j.at("checksum").get<std::string>();
  return m;
}

DatasetManifest save_versioned(const std::filesystem::path& dir, const std::string& stem,
                               DatasetVersion version, const std::vector<Record>& records) {
  std::filesystem::create_directories(dir);
  save_dataset(dir / (stem + ".csv"), records);
  auto manifest = make_manifest(stem, version, records);
  save_manifest(dir / (stem + ".manifest.json"), manifest);
  return manifest;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_error, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::io_error, "write failed for " + path.string());
}

}  // namespace lfkit
