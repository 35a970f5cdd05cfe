#pragma once

#include <stdexcept>
#include <string>

namespace arramon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

#define ARRAMON_DEFINE_ERROR(Name)            \
    class Name : public Error {               \
      public:                                 \
        using Error::Error;                   \
    }

ARRAMON_DEFINE_ERROR(ConfigError);
ARRAMON_DEFINE_ERROR(PlacementError);
ARRAMON_DEFINE_ERROR(PhaseError);
ARRAMON_DEFINE_ERROR(StateError);
ARRAMON_DEFINE_ERROR(NoPathError);
ARRAMON_DEFINE_ERROR(EmptyPathError);
ARRAMON_DEFINE_ERROR(ShapeError);
ARRAMON_DEFINE_ERROR(EmptyResultsError);
ARRAMON_DEFINE_ERROR(GenerationError);
ARRAMON_DEFINE_ERROR(AmbiguityError);
ARRAMON_DEFINE_ERROR(VocabError);
ARRAMON_DEFINE_ERROR(DataError);

#undef ARRAMON_DEFINE_ERROR

/// Malformed serialized input. Carries the 1-based line number for JSONL
/// sources (0 when not applicable).
class SchemaError : public Error {
  public:
    SchemaError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

} // namespace arramon
