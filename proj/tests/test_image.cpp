#include <doctest.h>

#include <random>

#include "fixture_util.hpp"
#include "mvdroid/axml.hpp"
#include "mvdroid/elf.hpp"
#include "mvdroid/image_view.hpp"
#include "oracles.hpp"

using namespace mvd;

namespace {

ArtifactStream single_file_stream(const Bytes& b, const std::string& name) {
  ArtifactStream s;
  s.bytes = b;
  s.index.push_back({name, 0, b.size()});
  return s;
}

Plane random_plane(std::mt19937_64& rng, Eigen::Index h, Eigen::Index w) {
  std::uniform_int_distribution<int> px(0, 255);
  Plane p(h, w);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = static_cast<std::uint8_t>(px(rng));
  return p;
}

}  // namespace

TEST_SUITE("image") {

TEST_CASE("golden axml chunk table") {
  const Bytes raw = fixture::bytes("golden.axml");
  const auto& exp = fixture::expected()["axml"];
  const auto docs = axml::walk(raw);
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].root.type == axml::kXmlDocument);
  CHECK(docs[0].root.size == exp["size"].get<std::uint32_t>());
  REQUIRE(docs[0].children.size() == exp["chunks"].size());
  for (std::size_t i = 0; i < docs[0].children.size(); ++i) {
    const auto& c = docs[0].children[i];
    const auto& e = exp["chunks"][i];
    CHECK(c.type == e["type"].get<int>());
    CHECK(c.header_size == e["header_size"].get<int>());
    CHECK(c.size == e["size"].get<std::uint32_t>());
    CHECK(c.offset == e["offset"].get<std::size_t>());
  }
}

TEST_CASE("golden elf section tables") {
  for (const auto& [file, key] : {std::pair{"golden64le.so", "elf64le"}, std::pair{"golden32be.so", "elf32be"}}) {
    CAPTURE(file);
    const auto secs = elf::sections(fixture::bytes(file));
    const auto& exp = fixture::expected()[key]["sections"];
    REQUIRE(secs.size() == exp.size());
    for (std::size_t i = 0; i < secs.size(); ++i) {
      CHECK(secs[i].name == exp[i]["name"].get<std::string>());
      CHECK(secs[i].type == exp[i]["type"].get<std::uint32_t>());
      CHECK(secs[i].offset == exp[i]["offset"].get<std::uint64_t>());
      CHECK(secs[i].size == exp[i]["size"].get<std::uint64_t>());
    }
  }
}

TEST_CASE("denoise outputs equal the precomputed slices") {
  const auto dex = denoise(fixture::bytes("golden.dex"), ArtifactKind::Dex);
  CHECK_FALSE(dex.passthrough);
  CHECK(dex.bytes == fixture::bytes("golden.dex.data.bin"));
  const auto xml = denoise(fixture::bytes("golden.axml"), ArtifactKind::Xml);
  CHECK_FALSE(xml.passthrough);
  CHECK(xml.bytes == fixture::bytes("golden.axml.data.bin"));
  for (const char* so : {"golden64le.so", "golden32be.so"}) {
    const auto r = denoise(fixture::bytes(so), ArtifactKind::So);
    CHECK_FALSE(r.passthrough);
    CHECK(r.bytes == fixture::bytes(std::string(so) + ".kept.bin"));
  }
}

TEST_CASE("malformed files pass through unchanged, per file") {
  const Bytes junk{'n', 'o', 't', ' ', 'e', 'l', 'f'};
  const auto r = denoise(junk, ArtifactKind::So);
  CHECK(r.passthrough);
  CHECK(r.bytes == junk);

  const Bytes good = fixture::bytes("golden64le.so");
  ArtifactStream s;
  s.bytes = good;
  s.bytes.insert(s.bytes.end(), junk.begin(), junk.end());
  s.index = {{"lib/a.so", 0, good.size()}, {"lib/b.so", good.size(), junk.size()}};
  const auto both = denoise(s, ArtifactKind::So);
  CHECK(both.passthrough);
  Bytes expect = fixture::bytes("golden64le.so.kept.bin");
  expect.insert(expect.end(), junk.begin(), junk.end());
  CHECK(both.bytes == expect);

  const auto single = denoise(single_file_stream(fixture::bytes("golden.axml"), "AndroidManifest.xml"),
                              ArtifactKind::Xml);
  CHECK(single.bytes == fixture::bytes("golden.axml.data.bin"));
}

TEST_CASE("elf errors") {
  CHECK_THROWS_WITH_AS(elf::sections(Bytes{1, 2, 3, 4, 5}), doctest::Contains("BadMagic"), Error);
  Bytes cut = fixture::bytes("golden64le.so");
  cut.resize(cut.size() - 20);
  CHECK_THROWS_WITH_AS(elf::sections(cut), doctest::Contains("TruncatedFile"), Error);
}

TEST_CASE("bytes to plane") {
  const Bytes b(300, 7);
  const Plane p = bytes_to_plane(b, 256);
  CHECK(p.rows() == 2);
  CHECK(p.cols() == 256);
  CHECK(p(1, 43) == 7);
  CHECK(p(1, 44) == 0);
  const Plane empty = bytes_to_plane({}, 256);
  CHECK(empty.rows() == 1);
  CHECK(empty.isZero());
}

TEST_CASE("bilinear resize matches per-pixel oracle") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int trial = 0; trial < 20; ++trial) {
    const Plane src = random_plane(rng, dim(rng), dim(rng));
    const std::size_t oh = static_cast<std::size_t>(dim(rng)), ow = static_cast<std::size_t>(dim(rng));
    const PlaneF out = resize_bilinear(src, oh, ow);
    oracle::Matrix m = oracle::zeros(static_cast<std::size_t>(src.rows()), static_cast<std::size_t>(src.cols()));
    for (Eigen::Index i = 0; i < src.rows(); ++i)
      for (Eigen::Index j = 0; j < src.cols(); ++j) m[i][j] = src(i, j);
    double worst = 0;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j)
        worst = std::max(worst, std::abs(out(i, j) - oracle::bilinear_pixel(m, oh, ow, i, j)));
    CHECK(worst < 1e-4);
    CHECK(out.minCoeff() >= src.minCoeff());
    CHECK(out.maxCoeff() <= src.maxCoeff());
  }
}

TEST_CASE("constant planes stay constant") {
  Plane p = Plane::Constant(37, 256, 91);
  const PlaneF out = resize_bilinear(p, 224, 224);
  CHECK((out.array() - 91.0f).abs().maxCoeff() < 1e-4f);
}

TEST_CASE("assembled image channels and codec") {
  std::mt19937_64 rng(4);
  const std::array<Plane, 3> planes{random_plane(rng, 10, 256), random_plane(rng, 3, 256), Plane::Zero(1, 256)};
  const ViewImage img = assemble_and_resize(planes, 32, 32);
  CHECK(img.height == 32);
  CHECK(img.channels[2].isZero());
  const ViewImage back = decode_view_image(encode_view_image(img));
  CHECK(back.height == img.height);
  for (int c = 0; c < 3; ++c) CHECK(back.channels[c] == img.channels[c]);
  Bytes bad = encode_view_image(img);
  bad[0] ^= 0xff;
  CHECK_THROWS_AS(decode_view_image(bad), Error);

  fixture::TempDir dir("png");
  write_png(img, dir.path() / "x.png");
  const Bytes png = read_file(dir.path() / "x.png");
  REQUIRE(png.size() > 8);
  CHECK(png[1] == 'P');
  CHECK(png[2] == 'N');
}

}  // TEST_SUITE
