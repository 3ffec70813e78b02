#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "lfkit/core.hpp"
#include "lfkit/lbp.hpp"

namespace lfkit {

// LBP histograms for a set of images, one row per image id.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(int width, int height, LbpGeometry geometry);

  int width() const { return width_; }
  int height() const { return height_; }
  const LbpGeometry& geometry() const { return geometry_; }
  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  void add(const std::string& image_id, const std::vector<std::uint32_t>& histogram);
  std::optional<std::size_t> find(const std::string& image_id) const;
  std::span<const std::uint16_t> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  // Stacks the requested rows as doubles. Throws missing_features listing absentees.
  Eigen::MatrixXd matrix(const std::vector<std::string>& image_ids) const;

  std::uint64_t payload_hash() const;

 private:
  int width_ = 0;
  int height_ = 0;
  LbpGeometry geometry_;
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::uint16_t> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Hash over each record's image id, path and file bytes.
std::uint64_t source_fingerprint(const std::vector<Record>& records,
                                 const std::filesystem::path& image_root);

// Decodes every record's image (relative to image_root) and extracts LBP.
FeatureTable extract_features(const std::vector<Record>& records,
                              const std::filesystem::path& image_root,
                              const LbpGeometry& geometry = {}, bool strict = true,
                              unsigned threads = 0);

void save_feature_cache(const std::filesystem::path& path, const FeatureTable& table,
                        std::uint64_t fingerprint);

// Throws stale_cache when the geometry, payload hash or (if given) the source
// fingerprint disagree with the file.
FeatureTable load_feature_cache(const std::filesystem::path& path, const LbpGeometry& geometry,
                                std::optional<std::uint64_t> fingerprint = std::nullopt);

}  // namespace lfkit
