#include "dann/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "dann/errors.hpp"

namespace dann {

namespace {

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!is) throw FormatError("truncated checkpoint: " + path);
  return value;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write("DANN", 4);
  write_pod<std::uint32_t>(os, kCheckpointVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape) write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.value.data.data()),
             static_cast<std::streamsize>(t.value.data.size() * sizeof(double)));
  }
  if (!os) throw IoError("write failed: " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DANN", 4) != 0)
    throw FormatError("bad magic in checkpoint: " + path);
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint " + path + " has version " + std::to_string(version) +
                      ", expected " + std::to_string(kCheckpointVersion));
  }
  const auto count = read_pod<std::uint32_t>(is, path);
  std::vector<NamedTensor> tensors(count);
  for (NamedTensor& t : tensors) {
    const auto name_len = read_pod<std::uint32_t>(is, path);
    t.name.resize(name_len);
    is.read(t.name.data(), name_len);
    if (!is) throw FormatError("truncated checkpoint: " + path);
    const auto rank = read_pod<std::uint32_t>(is, path);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_pod<std::uint32_t>(is, path);
    Tensor value(shape);
    is.read(reinterpret_cast<char*>(value.data.data()),
            static_cast<std::streamsize>(value.data.size() * sizeof(double)));
    if (!is) throw FormatError("truncated checkpoint: " + path);
    t.value = std::move(value);
  }
  return tensors;
}

}  // namespace dann
