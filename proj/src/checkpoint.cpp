#include "mapnav/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "mapnav/errors.hpp"

namespace mapnav {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'P', 'N', 'A', 'V', 'C', 'K'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("checkpoint truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  return value;
}

}  // namespace

std::size_t Tensor::expected_size() const {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const Tensor& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

Tensor& Checkpoint::add(std::string name, std::vector<int> shape, std::vector<double> data) {
  tensors.push_back({std::move(name), std::move(shape), std::move(data)});
  if (tensors.back().expected_size() != tensors.back().data.size())
    throw CheckpointError("tensor '" + tensors.back().name + "' data does not match its shape");
  return tensors.back();
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  nlohmann::json manifest;
  manifest["meta"] = ck.meta;
  manifest["tensors"] = nlohmann::json::array();
  for (const Tensor& t : ck.tensors) {
    if (t.expected_size() != t.data.size())
      throw CheckpointError("tensor '" + t.name + "' data does not match its shape");
    manifest["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "f64"}});
  }
  const std::string text = manifest.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_le<std::uint32_t>(out, Checkpoint::kVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const Tensor& t : ck.tensors)
    for (double v : t.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw CheckpointError("not a checkpoint file");
  std::size_t pos = 8;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != Checkpoint::kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto len = get_le<std::uint64_t>(bytes, pos);
  if (len > bytes.size() - pos) throw CheckpointError("checkpoint truncated");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint manifest: ") + e.what());
  }
  pos += len;

  Checkpoint ck;
  try {
    ck.meta = manifest.at("meta");
    for (const auto& entry : manifest.at("tensors")) {
      if (entry.at("dtype").get<std::string>() != "f64")
        throw CheckpointError("unsupported dtype for tensor " + entry.at("name").get<std::string>());
      Tensor t{entry.at("name").get<std::string>(), entry.at("shape").get<std::vector<int>>(), {}};
      t.data.resize(t.expected_size());
      for (double& v : t.data) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
      ck.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint manifest: ") + e.what());
  }
  if (pos != bytes.size()) throw CheckpointError("checkpoint has trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ck);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void check_shapes(const Checkpoint& ck, const std::vector<ShapeSpec>& expected, const std::string& prefix) {
  std::map<std::string, const Tensor*> have;
  for (const Tensor& t : ck.tensors)
    if (t.name.starts_with(prefix)) have[t.name] = &t;

  std::string problems;
  for (const ShapeSpec& s : expected) {
    auto it = have.find(s.name);
    if (it == have.end()) {
      problems += "\n  missing " + s.name + " " + shape_string(s.shape);
      continue;
    }
    if (it->second->shape != s.shape)
      problems += "\n  " + s.name + ": checkpoint " + shape_string(it->second->shape) + ", expected " +
                  shape_string(s.shape);
    have.erase(it);
  }
  for (const auto& [name, t] : have) problems += "\n  unexpected " + name + " " + shape_string(t->shape);
  if (!problems.empty()) throw CheckpointError("checkpoint shape mismatch:" + problems);
}

}  // namespace mapnav
