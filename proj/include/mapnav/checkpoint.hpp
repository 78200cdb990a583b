#ifndef MAPNAV_CHECKPOINT_HPP_
#define MAPNAV_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace mapnav {

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;

  std::size_t expected_size() const;
};

/// Container layout: 8-byte magic "MAPNAVCK", u32 version, u64 manifest
/// length, JSON manifest, then every tensor's data as little-endian f64 in
/// manifest order. All integers little-endian.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json meta = nlohmann::json::object();
  std::vector<Tensor> tensors;

  const Tensor* find(const std::string& name) const;
  Tensor& add(std::string name, std::vector<int> shape, std::vector<double> data);
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
/// Throws CheckpointError on bad magic, version, manifest or truncation.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct ShapeSpec {
  std::string name;
  std::vector<int> shape;
};

/// Compares names and shapes in order and throws CheckpointError listing
/// every mismatch, missing tensor and unexpected tensor.
void check_shapes(const Checkpoint& ck, const std::vector<ShapeSpec>& expected, const std::string& prefix = "");

std::string shape_string(const std::vector<int>& shape);

}  // namespace mapnav

#endif  // MAPNAV_CHECKPOINT_HPP_
