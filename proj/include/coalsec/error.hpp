#pragma once

#include <stdexcept>
#include <string>

namespace coalsec {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

#define COALSEC_DEFINE_ERROR(Name)                                              \
    class Name : public Error                                                   \
    {                                                                           \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}    \
    }

COALSEC_DEFINE_ERROR(ZeroDistance);
COALSEC_DEFINE_ERROR(NoDestinations);
COALSEC_DEFINE_ERROR(InfeasibleNulling);
COALSEC_DEFINE_ERROR(NoPower);
COALSEC_DEFINE_ERROR(InvalidCoalitionSize);
COALSEC_DEFINE_ERROR(MismatchedPlayers);
COALSEC_DEFINE_ERROR(RoundCapExceeded);
COALSEC_DEFINE_ERROR(TooLargeToVerify);
COALSEC_DEFINE_ERROR(ParseError);
COALSEC_DEFINE_ERROR(ValidationError);

#undef COALSEC_DEFINE_ERROR

} // namespace coalsec
