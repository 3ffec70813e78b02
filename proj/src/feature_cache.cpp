#include "lfkit/feature_cache.hpp"

#include <fmt/format.h>

#include <cstring>
#include <limits>

#include "lfkit/dataset_io.hpp"
#include "lfkit/image.hpp"
#include "lfkit/parallel.hpp"

namespace lfkit {

namespace {

constexpr char kMagic[8] = {'L', 'F', 'K', 'F', 'E', 'A', 'T', '1'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorKind::stale_cache, "feature cache is truncated: " + name_);
    }
  }

  std::string_view bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

FeatureTable::FeatureTable(int width, int height, LbpGeometry geometry)
    : width_(width), height_(height), geometry_(geometry),
      dim_(lbp_dimension(width, height, geometry)) {
  if (static_cast<long>(geometry.cell_w) * geometry.cell_h > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorKind::bad_cell_geometry, "cell area exceeds the cache's 16-bit counts");
  }
}

void FeatureTable::add(const std::string& image_id, const std::vector<std::uint32_t>& histogram) {
  if (histogram.size() != dim_) {
    throw Error(ErrorKind::dimension_mismatch,
                fmt::format("feature for {} has {} values, table expects {}", image_id,
                            histogram.size(), dim_));
  }
  index_[image_id] = ids_.size();
  ids_.push_back(image_id);
  for (auto v : histogram) data_.push_back(static_cast<std::uint16_t>(v));
}

std::optional<std::size_t> FeatureTable::find(const std::string& image_id) const {
  const auto it = index_.find(image_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::MatrixXd FeatureTable::matrix(const std::vector<std::string>& image_ids) const {
  std::vector<std::string> missing;
  for (const auto& id : image_ids) {
    if (!find(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? "," : "") + missing[i];
    throw Error(ErrorKind::missing_features,
                fmt::format("{} image(s) have no features: {}{}", missing.size(), list,
                            missing.size() > 20 ? ",..." : ""));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(image_ids.size()), static_cast<Eigen::Index>(dim_));
  for (std::size_t r = 0; r < image_ids.size(); ++r) {
    const auto src = row(*find(image_ids[r]));
    for (std::size_t c = 0; c < dim_; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = src[c];
  }
  return m;
}

std::uint64_t FeatureTable::payload_hash() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& id : ids_) h = fnv1a64(id + '\n', h);
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(data_.data()),
                                  data_.size() * sizeof(std::uint16_t)),
                 h);
}

std::uint64_t source_fingerprint(const std::vector<Record>& records,
                                 const std::filesystem::path& image_root) {
  std::uint64_t h = fnv1a64("");
  for (const auto& r : records) {
    h = fnv1a64(r.image_id + '\0' + r.image_path + '\0', h);
    const auto path = image_root / r.image_path;
    if (std::filesystem::exists(path)) h = fnv1a64(read_file(path), h);
  }
  return h;
}

FeatureTable extract_features(const std::vector<Record>& records,
                              const std::filesystem::path& image_root, const LbpGeometry& geometry,
                              bool strict, unsigned threads) {
  std::vector<std::vector<std::uint32_t>> features(records.size());
  std::vector<std::pair<int, int>> dims(records.size());
  parallel_for(
      records.size(),
      [&](std::size_t i) {
        if (records[i].image_path.empty()) {
          throw Error(ErrorKind::undecodable_image,
                      "record " + records[i].image_id + " has no image path");
        }
        const auto gray = load_gray(image_root / records[i].image_path, strict);
        dims[i] = {gray.width, gray.height};
        features[i] = extract_lbp(gray, geometry).histogram;
      },
      threads);
  const int w = records.empty() ? kCropWidth : dims[0].first;
  const int h = records.empty() ? kCropHeight : dims[0].second;
  FeatureTable table(w, h, geometry);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (dims[i] != std::pair{w, h}) {
      throw Error(ErrorKind::wrong_dimensions,
                  fmt::format("{} is {}x{}, other images are {}x{}", records[i].image_id,
                              dims[i].first, dims[i].second, w, h));
    }
    table.add(records[i].image_id, features[i]);
  }
  return table;
}

void save_feature_cache(const std::filesystem::path& path, const FeatureTable& table,
                        std::uint64_t fingerprint) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.width()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.height()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.geometry().cell_w));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.geometry().cell_h));
  put<std::uint64_t>(out, table.dimension());
  put<std::uint64_t>(out, table.size());
  put<std::uint64_t>(out, fingerprint);
  put<std::uint64_t>(out, table.payload_hash());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& id = table.ids()[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    const auto row = table.row(i);
    out.append(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(std::uint16_t));
  }
  write_file(path, out);
}

FeatureTable load_feature_cache(const std::filesystem::path& path, const LbpGeometry& geometry,
                                std::optional<std::uint64_t> fingerprint) {
  const std::string bytes = read_file(path);
  Reader in(bytes, path.string());
  if (in.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
    throw Error(ErrorKind::stale_cache, "not a feature cache: " + path.string());
  }
  const auto width = static_cast<int>(in.get<std::uint32_t>());
  const auto height = static_cast<int>(in.get<std::uint32_t>());
  const LbpGeometry stored{static_cast<int>(in.get<std::uint32_t>()),
                           static_cast<int>(in.get<std::uint32_t>())};
  const auto dim = in.get<std::uint64_t>();
  const auto count = in.get<std::uint64_t>();
  const auto stored_fingerprint = in.get<std::uint64_t>();
  const auto stored_hash = in.get<std::uint64_t>();
  if (!(stored == geometry)) {
    throw Error(ErrorKind::stale_cache,
                fmt::format("cache uses {}x{} cells, {}x{} requested", stored.cell_w,
                            stored.cell_h, geometry.cell_w, geometry.cell_h));
  }
  if (fingerprint && *fingerprint != stored_fingerprint) {
    throw Error(ErrorKind::stale_cache, "images changed since the feature cache was built");
  }
  FeatureTable table(width, height, stored);
  if (table.dimension() != dim) throw Error(ErrorKind::stale_cache, "cache dimension mismatch");
  std::vector<std::uint32_t> hist(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = in.get<std::uint32_t>();
    const std::string id(in.take(len));
    const auto payload = in.take(dim * sizeof(std::uint16_t));
    for (std::size_t c = 0; c < dim; ++c) {
      std::uint16_t v;
      std::memcpy(&v, payload.data() + c * sizeof v, sizeof v);
      hist[c] = v;
    }
    table.add(id, hist);
  }
  if (table.payload_hash() != stored_hash) {
    throw Error(ErrorKind::stale_cache, "feature cache payload hash mismatch: " + path.string());
  }
  return table;
}

}  // namespace lfkit
