#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgtopo {

enum class Errc {
  InvalidArgument,
  Io,
  MalformedLine,
  UnknownNode,
  UnknownRelation,
  UnknownCategory,
  Unsupported,
  CategoriesNotAssigned,
  MissingRelation,
  ParseFailure,
  RelationMismatch,
  MissingPlaceholder,
  UnknownPlaceholder,
  NoWinner,
  AllBatchesFailed,
  Auth,
  RateLimited,
  Transport,
  BackendRefused,
  CacheIo,
  TaskMismatch,
  Config,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::UnknownRelation: return "UnknownRelation";
    case Errc::UnknownCategory: return "UnknownCategory";
    case Errc::Unsupported: return "Unsupported";
    case Errc::CategoriesNotAssigned: return "CategoriesNotAssigned";
    case Errc::MissingRelation: return "MissingRelation";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::RelationMismatch: return "RelationMismatch";
    case Errc::MissingPlaceholder: return "MissingPlaceholder";
    case Errc::UnknownPlaceholder: return "UnknownPlaceholder";
    case Errc::NoWinner: return "NoWinner";
    case Errc::AllBatchesFailed: return "AllBatchesFailed";
    case Errc::Auth: return "Auth";
    case Errc::RateLimited: return "RateLimited";
    case Errc::Transport: return "Transport";
    case Errc::BackendRefused: return "BackendRefused";
    case Errc::CacheIo: return "CacheIo";
    case Errc::TaskMismatch: return "TaskMismatch";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

/// Single exception type for the library. `code()` identifies the failure
/// class; `line()` is set for MalformedLine (1-based), zero otherwise.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::size_t line = 0)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        line_(line),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Same error with extra context prepended to the detail.
  Error with_context(std::string_view context) const {
    return Error(code_, std::string(context) + ": " + detail_, line_);
  }

 private:
  Errc code_;
  std::size_t line_;
  std::string detail_;
};

}  // namespace kgtopo
