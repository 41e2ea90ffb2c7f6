// error.hpp
#pragma once

#include <stdexcept>
#include <string>

namespace ustat {

// Every failure raised by the library derives from ustat::Error so callers
// (the CLI in particular) can tell library contract failures from bugs.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define USTAT_DEFINE_ERROR(Name)                 \
    class Name : public Error {                  \
    public:                                      \
        explicit Name(const std::string& what)   \
            : Error(#Name ": " + what) {}        \
    }

USTAT_DEFINE_ERROR(InvalidArgument);
USTAT_DEFINE_ERROR(DimensionMismatch);
USTAT_DEFINE_ERROR(NotErgodic);
USTAT_DEFINE_ERROR(BudgetExceeded);
USTAT_DEFINE_ERROR(DegreeTooLarge);
USTAT_DEFINE_ERROR(NonIntegrable);
USTAT_DEFINE_ERROR(NotCanonical);
USTAT_DEFINE_ERROR(NeedDeclaredEnvelope);
USTAT_DEFINE_ERROR(PNotPositive);
USTAT_DEFINE_ERROR(DomainError);
USTAT_DEFINE_ERROR(Unbounded);
USTAT_DEFINE_ERROR(Unsupported);

#undef USTAT_DEFINE_ERROR

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidArgument(what);
}

}  // namespace ustat
