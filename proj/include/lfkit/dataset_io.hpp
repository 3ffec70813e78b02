#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lfkit/core.hpp"

namespace lfkit {

// Maps logical fields onto header names of the input table.
struct ColumnMap {
  std::string subject_id = "id_num";
  std::string image_id = "picture";
  std::string dob = "dob";
  std::string arrest_date = "date_of_arrest";
  std::string race = "race";
  std::string gender = "gender";
  std::string image_path = "image_path";  // optional column
  std::string corrected = "corrected";    // optional column
  std::string age_dec = "age_dec";        // optional column
};

// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

// Splits one delimited line, honouring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line, char delimiter = ',');

std::vector<Record> parse_dataset(std::istream& in, const ColumnMap& columns = {});
std::vector<Record> load_dataset(const std::filesystem::path& path,
                                 const ColumnMap& columns = {});

// Writes the canonical table. Cleaning columns are appended when any record carries them.
void write_dataset(std::ostream& out, const std::vector<Record>& records);
std::string serialize_dataset(const std::vector<Record>& records);
void save_dataset(const std::filesystem::path& path, const std::vector<Record>& records);

DatasetManifest make_manifest(std::string name, DatasetVersion version,
                              const std::vector<Record>& records);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes `<stem>.csv` plus its `<stem>.manifest.json` sidecar.
DatasetManifest save_versioned(const std::filesystem::path& dir, const std::string& stem,
                               DatasetVersion version, const std::vector<Record>& records);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace lfkit
