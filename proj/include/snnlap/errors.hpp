#pragma once

#include <stdexcept>
#include <string>

namespace snnlap {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SNNLAP_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

SNNLAP_DEFINE_ERROR(OffManifold);
SNNLAP_DEFINE_ERROR(InvalidParams);
SNNLAP_DEFINE_ERROR(RejectionStall);
SNNLAP_DEFINE_ERROR(KTooLarge);
SNNLAP_DEFINE_ERROR(SameNode);
SNNLAP_DEFINE_ERROR(IsolatedNode);
SNNLAP_DEFINE_ERROR(ZeroDenominator);
SNNLAP_DEFINE_ERROR(QuadratureTooCoarse);
SNNLAP_DEFINE_ERROR(TooFewCells);
SNNLAP_DEFINE_ERROR(ConfigError);

#undef SNNLAP_DEFINE_ERROR

}  // namespace snnlap
