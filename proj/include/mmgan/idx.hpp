#pragma once

#include "mmgan/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace mmgan {

inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;

/// Parse an unsigned-byte IDX buffer. Big-endian magic 0x000008NN (NN = rank), then NN
/// big-endian uint32 extents, then the payload. If `expected_magic` is set any other magic
/// is a FormatError.
Tensor parse_idx(std::span<const std::uint8_t> bytes,
                 std::optional<std::uint32_t> expected_magic = std::nullopt);

Tensor load_idx(const std::filesystem::path& path);
Tensor load_idx_images(const std::filesystem::path& path);
Tensor load_idx_labels(const std::filesystem::path& path);

/// Values must be integers in [0, 255].
std::vector<std::uint8_t> encode_idx(const Tensor& tensor);
void write_idx(const std::filesystem::path& path, const Tensor& tensor);

}  // namespace mmgan
