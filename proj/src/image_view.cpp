#include "mvdroid/image_view.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "mvdroid/axml.hpp"
#include "mvdroid/dex.hpp"
#include "mvdroid/elf.hpp"

namespace mvd {
namespace {

constexpr std::uint32_t kImageMagic = 0x4944564d;  // "MVDI"

// Returns the data area of the DEX image starting at `bytes` and its total
// file size.
std::pair<ByteSpan, std::size_t> dex_data_area(ByteSpan bytes) {
  if (bytes.size() < dex::kHeaderSize || bytes[0] != 'd' || bytes[1] != 'e' || bytes[2] != 'x' || bytes[3] != '\n')
    throw Error(ErrorCode::MalformedInput, "not a DEX image");
  ByteReader r(bytes, ErrorCode::MalformedInput);
  const std::uint32_t file_size = r.read_at<std::uint32_t>(32);
  const std::uint32_t data_size = r.read_at<std::uint32_t>(104);
  const std::uint32_t data_off = r.read_at<std::uint32_t>(108);
  if (file_size < dex::kHeaderSize || file_size > bytes.size() ||
      static_cast<std::uint64_t>(data_off) + data_size > file_size)
    throw Error(ErrorCode::MalformedInput, "inconsistent DEX header");
  return {bytes.subspan(data_off, data_size), file_size};
}

Bytes denoise_strict(ByteSpan bytes, ArtifactKind kind, const DenoiseOptions& options) {
  switch (kind) {
    case ArtifactKind::Dex: {
      Bytes out;
      std::size_t off = 0;
      while (off < bytes.size()) {
        const auto [area, file_size] = dex_data_area(bytes.subspan(off));
        out.insert(out.end(), area.begin(), area.end());
        off += file_size;
      }
      return out;
    }
    case ArtifactKind::Xml:
      return axml::data_sections(bytes);
    case ArtifactKind::So:
      return elf::section_contents(bytes, options.so_sections);
  }
  return {};
}

DenoiseResult denoise_one(ByteSpan bytes, ArtifactKind kind, const DenoiseOptions& options) {
  if (bytes.empty()) return {};
  try {
    return {denoise_strict(bytes, kind, options), false};
  } catch (const Error&) {
    return {Bytes(bytes.begin(), bytes.end()), true};
  }
}

}  // namespace

DenoiseResult denoise(ByteSpan bytes, ArtifactKind kind, const DenoiseOptions& options) {
  return denoise_one(bytes, kind, options);
}

DenoiseResult denoise(const ArtifactStream& stream, ArtifactKind kind, const DenoiseOptions& options) {
  DenoiseResult total;
  for (const auto& f : stream.index) {
    DenoiseResult part = denoise_one(stream.file_bytes(f), kind, options);
    total.bytes.insert(total.bytes.end(), part.bytes.begin(), part.bytes.end());
    total.passthrough = total.passthrough || part.passthrough;
  }
  return total;
}

Plane bytes_to_plane(ByteSpan bytes, std::size_t width) {
  if (width < 1) throw Error(ErrorCode::BadConfig, "plane width must be >= 1");
  const std::size_t height = std::max<std::size_t>(1, (bytes.size() + width - 1) / width);
  Plane plane = Plane::Zero(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  std::copy(bytes.begin(), bytes.end(), plane.data());
  return plane;
}

namespace {

struct Taps {
  std::vector<Eigen::Index> lo, hi;
  std::vector<double> frac;
};

Taps half_pixel_taps(Eigen::Index in, Eigen::Index out) {
  Taps t;
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Eigen::Index i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<Eigen::Index>(std::floor(src));
    t.lo.push_back(lo);
    t.hi.push_back(std::min(lo + 1, in - 1));
    t.frac.push_back(src - static_cast<double>(lo));
  }
  return t;
}

}  // namespace

PlaneF resize_bilinear(const Plane& plane, std::size_t out_height, std::size_t out_width) {
  if (plane.size() == 0 || out_height == 0 || out_width == 0)
    throw Error(ErrorCode::ShapeMismatch, "resize of an empty plane or to an empty size");
  const auto oh = static_cast<Eigen::Index>(out_height);
  const auto ow = static_cast<Eigen::Index>(out_width);
  const Taps tx = half_pixel_taps(plane.cols(), ow);
  const Taps ty = half_pixel_taps(plane.rows(), oh);

  // Accumulate in double; only the result is rounded to float.
  using PlaneD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const PlaneD src = plane.cast<double>();
  PlaneD horiz(plane.rows(), ow);
  for (Eigen::Index j = 0; j < ow; ++j)
    horiz.col(j) = (1.0 - tx.frac[j]) * src.col(tx.lo[j]) + tx.frac[j] * src.col(tx.hi[j]);
  PlaneD out(oh, ow);
  for (Eigen::Index i = 0; i < oh; ++i)
    out.row(i) = (1.0 - ty.frac[i]) * horiz.row(ty.lo[i]) + ty.frac[i] * horiz.row(ty.hi[i]);
  return out.cast<float>();
}

ViewImage assemble_and_resize(const std::array<Plane, 3>& planes, std::size_t out_height, std::size_t out_width) {
  ViewImage img;
  img.height = out_height;
  img.width = out_width;
  for (std::size_t c = 0; c < 3; ++c)
    img.channels[c] = resize_bilinear(planes[c], out_height, out_width)
                          .array()
                          .round()
                          .cwiseMax(0.0f)
                          .cwiseMin(255.0f)
                          .cast<std::uint8_t>()
                          .matrix();
  return img;
}

void write_png(const ViewImage& image, const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::UnreadableFile, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::UnreadableFile, "libpng write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(3 * image.width);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        row[3 * x + c] = image.channels[c](static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Bytes encode_view_image(const ViewImage& image) {
  ByteWriter w;
  w.u32(kImageMagic);
  w.u64(image.height);
  w.u32(static_cast<std::uint32_t>(image.width));
  w.u32(3);
  for (const auto& plane : image.channels)
    w.bytes(ByteSpan(plane.data(), static_cast<std::size_t>(plane.size())));
  return std::move(w.buffer());
}

ViewImage decode_view_image(ByteSpan data) {
  ByteReader r(data);
  if (r.u32() != kImageMagic) throw Error(ErrorCode::BadMagic, "not a view-image record");
  ViewImage img;
  img.height = r.u64();
  img.width = r.u32();
  if (r.u32() != 3) throw Error(ErrorCode::MalformedInput, "view image must have 3 channels");
  if (img.width != 0 && img.height > r.remaining() / img.width / 3)
    throw Error(ErrorCode::TruncatedFile, "view-image payload shorter than header claims");
  for (auto& plane : img.channels) {
    plane.resize(static_cast<Eigen::Index>(img.height), static_cast<Eigen::Index>(img.width));
    const ByteSpan px = r.bytes(img.height * img.width);
    std::copy(px.begin(), px.end(), plane.data());
  }
  return img;
}

}  // namespace mvd
