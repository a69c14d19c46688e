#include "latentic/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace latentic {

namespace {

constexpr char kMagic[4] = {'L', 'T', 'C', 'K'};

void write_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

nlohmann::json read_header(std::istream& is, const std::filesystem::path& path) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const uint64_t len = read_u64(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("checkpoint: truncated header in " + path.string());
  return nlohmann::json::parse(text);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& meta,
                     const ParamRefs& tensors) {
  nlohmann::json header = meta;
  header["version"] = kCheckpointVersion;
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& t : tensors)
    shapes.push_back({{"name", t.name}, {"shape", t.shape}});
  header["tensors"] = shapes;

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path.string());
  os.write(kMagic, 4);
  const std::string text = header.dump();
  write_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : tensors) {
    for (double v : *t.data) {
      const float f = static_cast<float>(v);
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      unsigned char b[4];
      for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
      os.write(reinterpret_cast<const char*>(b), 4);
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

nlohmann::json load_checkpoint(const std::filesystem::path& path, const ParamRefs& tensors) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path.string());
  nlohmann::json header = read_header(is, path);

  const auto& stored = header.at("tensors");
  if (stored.size() != tensors.size())
    throw std::runtime_error("checkpoint: tensor count mismatch in " + path.string());
  for (size_t i = 0; i < tensors.size(); ++i) {
    const auto& meta = stored[i];
    if (meta.at("name").get<std::string>() != tensors[i].name)
      throw std::runtime_error("checkpoint: tensor name mismatch: expected " + tensors[i].name);
    const auto shape = meta.at("shape").get<std::vector<int>>();
    if (shape != tensors[i].shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + tensors[i].name);
    for (double& v : *tensors[i].data) {
      unsigned char b[4];
      is.read(reinterpret_cast<char*>(b), 4);
      if (!is) throw std::runtime_error("checkpoint: truncated data in " + path.string());
      uint32_t bits = 0;
      for (int j = 0; j < 4; ++j) bits |= static_cast<uint32_t>(b[j]) << (8 * j);
      float f;
      std::memcpy(&f, &bits, 4);
      v = static_cast<double>(f);
    }
  }
  return header;
}

nlohmann::json peek_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path.string());
  return read_header(is, path);
}

}  // namespace latentic
