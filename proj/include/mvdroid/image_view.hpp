#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvdroid/bytes.hpp"
#include "mvdroid/ingest.hpp"

namespace mvd {

using Plane = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PlaneF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kDefaultPlaneWidth = 256;
inline constexpr std::size_t kDefaultImageSize = 224;

struct DenoiseOptions {
  std::vector<std::string> so_sections = {".text", ".data", ".rodata"};
};

struct DenoiseResult {
  Bytes bytes;
  bool passthrough = false;  // input did not parse under its format; returned unchanged
};

/// Keeps only the behaviour-bearing regions: the DEX data area, AXML
/// string-pool and element payloads, and whitelisted ELF sections.
DenoiseResult denoise(ByteSpan bytes, ArtifactKind kind, const DenoiseOptions& options = {});

/// Same, but each file of the stream is denoised on its own so a malformed
/// file only passes itself through.
DenoiseResult denoise(const ArtifactStream& stream, ArtifactKind kind, const DenoiseOptions& options = {});

/// Row-major reshape to a fixed width, zero-padding the final row. Empty
/// input yields a single all-zero row.
Plane bytes_to_plane(ByteSpan bytes, std::size_t width = kDefaultPlaneWidth);

/// Bilinear resampling with the half-pixel (align-corners=false) convention:
/// source = (i + 0.5) * in/out - 0.5, clamped to the valid range.
PlaneF resize_bilinear(const Plane& plane, std::size_t out_height, std::size_t out_width);

/// Three same-sized channels: R = dex, G = xml, B = so.
struct ViewImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::array<Plane, 3> channels;
};

ViewImage assemble_and_resize(const std::array<Plane, 3>& planes, std::size_t out_height = kDefaultImageSize,
                              std::size_t out_width = kDefaultImageSize);

void write_png(const ViewImage& image, const std::filesystem::path& path);

Bytes encode_view_image(const ViewImage& image);
ViewImage decode_view_image(ByteSpan data);

}  // namespace mvd
