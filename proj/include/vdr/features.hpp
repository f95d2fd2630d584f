#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace vdr {

// Per-image set of K region feature vectors, stored single-precision exactly
// as the file holds them; the models widen to double on use.
struct ObjectFeatureSet {
  std::int64_t image_id = 0;
  std::size_t k = 0;
  std::size_t d_img = 0;
  std::vector<float> data;  // row-major K x d_img

  const float* region(std::size_t i) const { return data.data() + i * d_img; }
};

struct FeatureStore {
  std::size_t d_img = 0;
  std::unordered_map<std::int64_t, ObjectFeatureSet> by_image;

  const ObjectFeatureSet& require_image(std::int64_t image_id) const;
};

// Binary little-endian layout: magic "VDF1", u32 d_img, u32 image count,
// then per image u64 image_id, u16 K, K×d_img float32 row-major.
FeatureStore load_features(const std::string& path, std::size_t k_min = 1, std::size_t k_max = 100);
void save_features(const FeatureStore& store, const std::string& path);

}  // namespace vdr
