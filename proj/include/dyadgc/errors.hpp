#pragma once

#include <stdexcept>
#include <string>

namespace dyadgc {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateSeries : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class EmptyOverlap : public Error { public: using Error::Error; };
class InsufficientData : public Error { public: using Error::Error; };
class SingularDesign : public Error { public: using Error::Error; };
class EmptyInput : public Error { public: using Error::Error; };

/// Malformed input file. `what()` names the offending column or row.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

}  // namespace dyadgc
