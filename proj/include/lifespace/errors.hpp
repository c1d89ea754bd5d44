#pragma once

#include <stdexcept>
#include <string>

namespace lifespace {

/// Base class of every error the engine raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LIFESPACE_DEFINE_ERROR(Name)              \
    class Name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

LIFESPACE_DEFINE_ERROR(ParseError);
LIFESPACE_DEFINE_ERROR(ValidationError);
LIFESPACE_DEFINE_ERROR(NoRouteError);
LIFESPACE_DEFINE_ERROR(OutOfBoundsError);
LIFESPACE_DEFINE_ERROR(UnknownSceneError);
LIFESPACE_DEFINE_ERROR(MissingSceneError);
LIFESPACE_DEFINE_ERROR(IllegalTransitionError);
LIFESPACE_DEFINE_ERROR(TrackMismatchError);
LIFESPACE_DEFINE_ERROR(PreconditionError);
LIFESPACE_DEFINE_ERROR(ProviderUnavailableError);
LIFESPACE_DEFINE_ERROR(UnknownAgentError);
LIFESPACE_DEFINE_ERROR(ClosedSessionError);
LIFESPACE_DEFINE_ERROR(UnknownSessionError);
LIFESPACE_DEFINE_ERROR(CorruptSnapshotError);
LIFESPACE_DEFINE_ERROR(CorruptLogError);
LIFESPACE_DEFINE_ERROR(EngineNotStartedError);

#undef LIFESPACE_DEFINE_ERROR

}  // namespace lifespace
