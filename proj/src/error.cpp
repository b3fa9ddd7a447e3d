#include "certfraud/error.hpp"

namespace certfraud {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage: return "Usage";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::InvalidDomainName: return "InvalidDomainName";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::SerializationFailure: return "SerializationFailure";
    case ErrorCode::CorruptCorpus: return "CorruptCorpus";
    case ErrorCode::IndexMismatch: return "IndexMismatch";
    case ErrorCode::DegenerateDataset: return "DegenerateDataset";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SpecIncomplete: return "SpecIncomplete";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::SubsetTooLarge: return "SubsetTooLarge";
    case ErrorCode::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace certfraud
