#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lfkit/learners.hpp"
#include "lfkit/pca.hpp"
#include "lfkit/platt.hpp"

namespace lfkit {

// Text header of key=value lines, a blank line, then a raw little-endian
// double payload whose length the header declares.
struct ModelFile {
  std::map<std::string, std::string> header;
  std::vector<double> payload;

  const std::string& at(const std::string& key) const;
  double number(const std::string& key) const;
};

void write_model_file(const std::filesystem::path& path, const ModelFile& file);
ModelFile read_model_file(const std::filesystem::path& path);

void save_svm(const std::filesystem::path& path, const LinearSvmModel& m,
              const std::string& training_hash);
LinearSvmModel load_svm(const std::filesystem::path& path);

void save_svr(const std::filesystem::path& path, const LinearSvrModel& m,
              const std::string& training_hash);
LinearSvrModel load_svr(const std::filesystem::path& path);

void save_platt(const std::filesystem::path& path, const PlattModel& m,
                const std::string& training_hash);
PlattModel load_platt(const std::filesystem::path& path);

void save_pca(const std::filesystem::path& path, const PcaModel& m,
              const std::string& training_hash);
PcaModel load_pca(const std::filesystem::path& path);

void save_standardizer(const std::filesystem::path& path, const Standardizer& s,
                       const std::string& training_hash);
Standardizer load_standardizer(const std::filesystem::path& path);

}  // namespace lfkit
