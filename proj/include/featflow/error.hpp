#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace featflow {

enum class ErrorCode {
  kUnknownFormat,
  kDecodeError,
  kIoError,
  kDuplicateName,
  kUnknownTransformer,
  kNoConversionPath,
  kTransformerFailure,
  kInvalidSpec,
  kInvalidParams,
  kNoAudioTrack,
  kAudioTooShort,
  kDimensionMismatch,
  kUnknownResource,
  kUnknownColumn,
  kArityMismatch,
  kPivotCollision,
  kMissingCredentials,
  kServiceError,
  kResponseShapeError,
  kTimeout,
  kCacheCorruption,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library derives from Error so callers can
// branch on code() without catching a dozen concrete types.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class TransformerFailure : public Error {
 public:
  TransformerFailure(std::string transformer, std::string source_name,
                     const std::string& cause,
                     std::optional<ErrorCode> cause_code = std::nullopt)
      : Error(ErrorCode::kTransformerFailure,
              "transformer '" + transformer + "' failed on stim '" +
                  source_name + "': " + cause),
        transformer_(std::move(transformer)),
        source_name_(std::move(source_name)),
        cause_(cause),
        cause_code_(cause_code) {}

  const std::string& transformer() const noexcept { return transformer_; }
  const std::string& source_name() const noexcept { return source_name_; }
  const std::string& cause() const noexcept { return cause_; }
  // Code of the library error that caused the failure, if any.
  std::optional<ErrorCode> cause_code() const noexcept { return cause_code_; }

 private:
  std::string transformer_;
  std::string source_name_;
  std::string cause_;
  std::optional<ErrorCode> cause_code_;
};

class ServiceError : public Error {
 public:
  ServiceError(int status, std::string body_excerpt)
      : Error(ErrorCode::kServiceError,
              "service returned HTTP " + std::to_string(status) + ": " +
                  body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

}  // namespace featflow
