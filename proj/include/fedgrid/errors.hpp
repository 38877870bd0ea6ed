#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedgrid {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// nn-core
class InvalidSpecError : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class EmptyInputError : public Error { public: using Error::Error; };

// fl-protocol
class ProtocolDesyncError : public Error { public: using Error::Error; };
class IncompleteRoundError : public Error { public: using Error::Error; };
class DivergenceError : public Error { public: using Error::Error; };
class VersionError : public Error { public: using Error::Error; };

class DecodeError : public Error {
public:
    DecodeError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// data
class InvalidParameterError : public Error { public: using Error::Error; };
class EmptyDatasetError : public Error { public: using Error::Error; };
class SplitRangeError : public Error { public: using Error::Error; };
class CsvMissingColumnError : public Error { public: using Error::Error; };
class CsvTimestampError : public Error { public: using Error::Error; };
class CsvEmptyError : public Error { public: using Error::Error; };

// grid-service
class InsufficientHorizonError : public Error { public: using Error::Error; };
class AlignmentError : public Error { public: using Error::Error; };

// cli / orchestration
class ConfigError : public Error { public: using Error::Error; };
class IncompatibleModelError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

}  // namespace fedgrid
