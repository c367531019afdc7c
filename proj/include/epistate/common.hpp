#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace epistate {

enum class ErrorCode {
    UnknownEntity,
    InvalidIntervention,
    UnknownHypothesis,
    NonNormalizedPrior,
    ZeroPriorOnContingent,
    IncoherentEvidence,
    NoHistory,
    NonNormalized,
    MissingLevel,
    ZeroProbabilityObservation,
    SupportTooLarge,
    MissingUtilityEntry,
    MissingKinematics,
    UnauthorizedLethal,
    HnpmUnavailable,
    SchemaError,
    DanglingReference,
    CorpusMismatch,
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

// Process exit code for the CLI, grouped by error class (documented in README).
int error_exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

enum class EntityClass {
    Civilian,
    Belligerent,
    ProtectedObject,
    FriendlyCombatant,
};

inline constexpr EntityClass kAllEntityClasses[] = {
    EntityClass::Civilian,
    EntityClass::Belligerent,
    EntityClass::ProtectedObject,
    EntityClass::FriendlyCombatant,
};

const char* to_string(EntityClass cls);
EntityClass entity_class_from_string(std::string_view name);

// Discrete 2-D grid coordinate; also used for per-tick displacement.
struct GridPos {
    int x = 0;
    int y = 0;

    friend bool operator==(const GridPos&, const GridPos&) = default;
    GridPos operator+(const GridPos& o) const { return {x + o.x, y + o.y}; }
};

inline long long squared_distance(const GridPos& a, const GridPos& b) {
    const long long dx = a.x - b.x;
    const long long dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// Shortest round-trip decimal formatting, shared by CSV and text emitters.
std::string format_double(double value);

}  // namespace epistate
