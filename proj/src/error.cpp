#include "featflow/error.hpp"

namespace featflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownFormat: return "UnknownFormat";
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kUnknownTransformer: return "UnknownTransformer";
    case ErrorCode::kNoConversionPath: return "NoConversionPath";
    case ErrorCode::kTransformerFailure: return "TransformerFailure";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kNoAudioTrack: return "NoAudioTrack";
    case ErrorCode::kAudioTooShort: return "AudioTooShort";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnknownResource: return "UnknownResource";
    case ErrorCode::kUnknownColumn: return "UnknownColumn";
    case ErrorCode::kArityMismatch: return "ArityMismatch";
    case ErrorCode::kPivotCollision: return "PivotCollision";
    case ErrorCode::kMissingCredentials: return "MissingCredentials";
    case ErrorCode::kServiceError: return "ServiceError";
    case ErrorCode::kResponseShapeError: return "ResponseShapeError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kCacheCorruption: return "CacheCorruption";
  }
  return "Unknown";
}

}  // namespace featflow
