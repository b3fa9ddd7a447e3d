#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace certfraud {

enum class ErrorCode {
  Usage,
  Io,
  MalformedInput,
  InvalidDomainName,
  StorageFull,
  SerializationFailure,
  CorruptCorpus,
  IndexMismatch,
  DegenerateDataset,
  SchemaError,
  TooFewRows,
  CorruptModel,
  VersionMismatch,
  SpecIncomplete,
  EmptyClass,
  SubsetTooLarge,
  EmptyInput,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this type; the code selects the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace certfraud
