#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vdr/error.hpp"
#include "vdr/features.hpp"

static_assert(std::endian::native == std::endian::little,
              "feature files are little-endian and read without byte swapping");

namespace vdr {

namespace {

constexpr char kMagic[4] = {'V', 'D', 'F', '1'};

template <typename T>
T read_pod(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), "feature-truncated",
          "feature file ends mid-record");
  return v;
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

const ObjectFeatureSet& FeatureStore::require_image(std::int64_t image_id) const {
  const auto it = by_image.find(image_id);
  require(it != by_image.end(), "feature-miss:" + std::to_string(image_id),
          "no region features for image " + std::to_string(image_id));
  return it->second;
}

FeatureStore load_features(const std::string& path, std::size_t k_min, std::size_t k_max) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "feature-truncated", "cannot open feature file: " + path);

  char magic[4];
  in.read(magic, 4);
  require(in.gcount() == 4, "feature-truncated", "feature file shorter than its magic");
  require(std::memcmp(magic, kMagic, 4) == 0, "feature-magic",
          "not a feature file (bad magic): " + path);

  FeatureStore store;
  store.d_img = read_pod<std::uint32_t>(in);
  require(store.d_img >= 1, "feature-magic", "feature width must be positive");
  const std::uint32_t count = read_pod<std::uint32_t>(in);

  for (std::uint32_t i = 0; i < count; ++i) {
    ObjectFeatureSet set;
    set.image_id = static_cast<std::int64_t>(read_pod<std::uint64_t>(in));
    set.k = read_pod<std::uint16_t>(in);
    set.d_img = store.d_img;
    const std::string image = std::to_string(set.image_id);
    require(set.k >= k_min && set.k <= k_max, "feature-count:" + image,
            "image has " + std::to_string(set.k) + " regions, outside [" + std::to_string(k_min) +
                ", " + std::to_string(k_max) + "]");
    set.data.resize(set.k * store.d_img);
    in.read(reinterpret_cast<char*>(set.data.data()),
            static_cast<std::streamsize>(set.data.size() * sizeof(float)));
    require(in.gcount() == static_cast<std::streamsize>(set.data.size() * sizeof(float)),
            "feature-truncated", "feature file ends inside image " + image);
    for (float v : set.data) {
      require(std::isfinite(v), "feature-nonfinite:" + image, "non-finite region feature");
    }
    require(store.by_image.emplace(set.image_id, std::move(set)).second,
            "feature-duplicate:" + image, "image appears twice in feature file");
  }
  return store;
}

void save_features(const FeatureStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "feature-truncated", "cannot open feature file for writing: " + path);
  out.write(kMagic, 4);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(store.d_img));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(store.by_image.size()));

  std::vector<std::int64_t> ids;
  ids.reserve(store.by_image.size());
  for (const auto& [id, set] : store.by_image) {
    (void)set;
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());

  for (std::int64_t id : ids) {
    const ObjectFeatureSet& set = store.by_image.at(id);
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(id));
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(set.k));
    out.write(reinterpret_cast<const char*>(set.data.data()),
              static_cast<std::streamsize>(set.data.size() * sizeof(float)));
  }
  out.flush();
  require(out.good(), "feature-truncated", "failed writing feature file: " + path);
}

}  // namespace vdr
