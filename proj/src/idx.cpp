#include "mmgan/idx.hpp"

#include "mmgan/errors.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

namespace mmgan {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t at) {
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open IDX file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Tensor parse_idx(std::span<const std::uint8_t> bytes, std::optional<std::uint32_t> expected_magic) {
  if (bytes.size() < 4) throw FormatError("IDX header truncated before magic number", bytes.size());
  const std::uint32_t magic = read_be32(bytes, 0);
  if ((magic >> 8) != 0x08 || (magic & 0xFF) == 0)
    throw FormatError("unsupported IDX magic (need unsigned-byte data, rank >= 1)", 0);
  if (expected_magic && magic != *expected_magic)
    throw FormatError("IDX magic does not match the expected file kind", 0);
  const std::size_t rank = magic & 0xFF;
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) throw FormatError("IDX header truncated in dimension sizes", bytes.size());
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (std::size_t k = 0; k < rank; ++k) {
    shape[k] = read_be32(bytes, 4 + 4 * k);
    if (shape[k] == 0) throw FormatError("IDX dimension size is zero", 4 + 4 * k);
    count *= shape[k];
  }
  if (bytes.size() < header + count) throw FormatError("IDX payload truncated", bytes.size());
  if (bytes.size() > header + count) throw FormatError("trailing bytes after IDX payload", header + count);
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = bytes[header + i];
  return Tensor(std::move(shape), std::move(values));
}

Tensor load_idx(const std::filesystem::path& path) { return parse_idx(read_file(path)); }

Tensor load_idx_images(const std::filesystem::path& path) {
  return parse_idx(read_file(path), kIdxImageMagic);
}

Tensor load_idx_labels(const std::filesystem::path& path) {
  return parse_idx(read_file(path), kIdxLabelMagic);
}

std::vector<std::uint8_t> encode_idx(const Tensor& tensor) {
  if (tensor.rank() < 1 || tensor.rank() > 255) throw InvalidArgument("IDX rank must be 1..255");
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * tensor.rank() + tensor.values.size());
  put_be32(out, 0x00000800u | static_cast<std::uint32_t>(tensor.rank()));
  for (auto e : tensor.shape) put_be32(out, static_cast<std::uint32_t>(e));
  for (double v : tensor.values) {
    if (!(v >= 0 && v <= 255) || v != std::floor(v))
      throw InvalidArgument("IDX unsigned-byte payload needs integers in [0, 255]");
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

void write_idx(const std::filesystem::path& path, const Tensor& tensor) {
  const auto bytes = encode_idx(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write IDX file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace mmgan
