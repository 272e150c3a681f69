#include "mvdroid/error.hpp"

namespace mvd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::NotAZip: return "NotAZip";
    case ErrorCode::CorruptEntry: return "CorruptEntry";
    case ErrorCode::NoDexFound: return "NoDexFound";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::UnknownPermission: return "UnknownPermission";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonFiniteAttention: return "NonFiniteAttention";
    case ErrorCode::MissingView: return "MissingView";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::TooFewSlots: return "TooFewSlots";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace mvd
