#include "mvdroid/axml.hpp"

namespace mvd::axml {
namespace {

Chunk read_chunk(ByteReader& r) {
  Chunk c;
  c.offset = r.pos();
  c.type = r.u16();
  c.header_size = r.u16();
  c.size = r.u32();
  if (c.header_size < 8 || c.size < c.header_size || c.size > r.size() - c.offset)
    throw Error(ErrorCode::MalformedInput, "bad AXML chunk framing at offset " + std::to_string(c.offset));
  return c;
}

}  // namespace

std::vector<Document> walk(ByteSpan data) {
  ByteReader r(data, ErrorCode::MalformedInput);
  std::vector<Document> docs;
  while (r.remaining() > 0) {
    Document doc;
    doc.root = read_chunk(r);
    if (doc.root.type != kXmlDocument)
      throw Error(ErrorCode::MalformedInput, "expected an XML document chunk at " + std::to_string(doc.root.offset));
    const std::size_t end = doc.root.offset + doc.root.size;
    r.seek(doc.root.offset + doc.root.header_size);
    while (r.pos() < end) {
      Chunk child = read_chunk(r);
      if (child.offset + child.size > end) throw Error(ErrorCode::MalformedInput, "child chunk overruns document");
      doc.children.push_back(child);
      r.seek(child.offset + child.size);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

Bytes data_sections(ByteSpan data) {
  Bytes out;
  for (const auto& doc : walk(data)) {
    for (const auto& c : doc.children) {
      if (c.type != kStringPool && c.type != kStartElement && c.type != kEndElement) continue;
      const auto payload = data.subspan(c.offset + c.header_size, c.size - c.header_size);
      out.insert(out.end(), payload.begin(), payload.end());
    }
  }
  return out;
}

}  // namespace mvd::axml
