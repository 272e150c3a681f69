#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvdroid/bytes.hpp"
#include "mvdroid/nn.hpp"

namespace mvd {

struct NamedArray {
  std::string name;
  ad::Shape shape;
  std::vector<float> values;
};

/// Versioned parameter container: magic, version, total length, the
/// effective config text, then (name, shape, float payload) entries and a
/// CRC-32 of everything before it.
struct Checkpoint {
  std::string config_text;
  std::vector<NamedArray> arrays;
};

Bytes encode_checkpoint(const Checkpoint& ckpt);
/// Throws `BadMagic`, `ChecksumMismatch` or `TruncatedFile`.
Checkpoint decode_checkpoint(ByteSpan data);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <typename S>
std::vector<NamedArray> snapshot(const ad::ParameterStore<S>& store) {
  std::vector<NamedArray> out;
  for (const auto& p : store.all()) {
    NamedArray a{p.name, p.tensor.shape(), {}};
    a.values.reserve(static_cast<std::size_t>(p.tensor.size()));
    for (ad::Index i = 0; i < p.tensor.size(); ++i) a.values.push_back(static_cast<float>(p.tensor.value()[i]));
    out.push_back(std::move(a));
  }
  return out;
}

/// Copies every array into the same-named parameter. Names and shapes must
/// match the store exactly.
template <typename S>
void restore(ad::ParameterStore<S>& store, const std::vector<NamedArray>& arrays) {
  if (arrays.size() != store.all().size())
    throw Error(ErrorCode::ShapeMismatch, "checkpoint has " + std::to_string(arrays.size()) + " arrays, model has " +
                                              std::to_string(store.all().size()));
  for (const auto& a : arrays) {
    if (!store.contains(a.name)) throw Error(ErrorCode::ShapeMismatch, "checkpoint array " + a.name + " not in model");
    ad::Tensor<S> t = store.get(a.name);
    if (t.shape() != a.shape) ad::shape_error(("restore " + a.name).c_str(), a.shape, t.shape());
    for (std::size_t i = 0; i < a.values.size(); ++i) t.mutable_value()[static_cast<ad::Index>(i)] = S(a.values[i]);
  }
}

}  // namespace mvd
