#pragma once

#include <stdexcept>
#include <string>

namespace chainbound {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CHAINBOUND_ERROR(Name)                 \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  };

// x outside the domain of a function (modulus argument, Green's function time).
CHAINBOUND_ERROR(DomainError)
// A modulus evaluated to a non-positive value.
CHAINBOUND_ERROR(InvalidModulusError)
// A modulus with d_w <= 1.
CHAINBOUND_ERROR(NotAdmissibleError)
// A metric space with fewer than two points.
CHAINBOUND_ERROR(NontrivialSpaceError)
// Input too large for the requested algorithm or the array budget.
CHAINBOUND_ERROR(SizeError)
// A greedy cover exceeded the cardinality allowed by the supplied dimension info.
CHAINBOUND_ERROR(DimsTooSmallError)
// A point id that is not part of the net or field.
CHAINBOUND_ERROR(MembershipError)
CHAINBOUND_ERROR(ParameterError)
CHAINBOUND_ERROR(ShapeError)
CHAINBOUND_ERROR(AccuracyError)
CHAINBOUND_ERROR(ParseError)
CHAINBOUND_ERROR(UsageError)
CHAINBOUND_ERROR(FitError)

#undef CHAINBOUND_ERROR

}  // namespace chainbound
