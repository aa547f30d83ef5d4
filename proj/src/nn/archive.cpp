#include "cmi/nn/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cmi/common/error.hpp"

namespace cmi::nn {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little-endian");

namespace {
constexpr char kMagic[8] = {'C', 'M', 'I', 'W', 'G', 'T', '0', '1'};

void WriteU64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t ReadU64(std::ifstream& in, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("truncated weight archive: " + path.string());
  return v;
}
}  // namespace

void WriteArchive(const std::filesystem::path& path, const nlohmann::json& header,
                  std::span<const float> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string text = header.dump();
  out.write(kMagic, sizeof kMagic);
  WriteU64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  WriteU64(out, values.size());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out) throw IoError("failed writing " + path.string());
}

WeightArchive ReadArchive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw IoError("not a weight archive: " + path.string());
  const std::uint64_t header_len = ReadU64(in, path);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len)))
    throw IoError("truncated weight archive: " + path.string());
  WeightArchive archive;
  archive.header = nlohmann::json::parse(text);
  const std::uint64_t count = ReadU64(in, path);
  archive.values.resize(count);
  if (!in.read(reinterpret_cast<char*>(archive.values.data()),
               static_cast<std::streamsize>(count * sizeof(float))))
    throw IoError("truncated weight archive: " + path.string());
  return archive;
}

}  // namespace cmi::nn
