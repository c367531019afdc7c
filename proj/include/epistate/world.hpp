#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epistate/common.hpp"
#include "epistate/proposition.hpp"

namespace epistate {

struct Entity {
    std::string id;
    EntityClass true_class = EntityClass::Civilian;
    GridPos position{};
    GridPos motion{};  // per-tick displacement
};

enum class EventEffectKind {
    AddEntity,
    RemoveEntity,
    SetClass,
    Nudge,  // one-off displacement, e.g. a wind gust
};

struct EventEffect {
    EventEffectKind kind = EventEffectKind::Nudge;
    std::string target;              // entity id (all but AddEntity)
    Entity entity;                   // AddEntity payload
    EntityClass new_class = EntityClass::Civilian;  // SetClass payload
    GridPos delta{};                 // Nudge payload
};

// Scripted (luck=false) or chance (luck=true) events on the world timeline.
// Chance events fire with `probability`, sampled from a stream keyed by
// (world rng root, event id, due tick) so the draw is independent of how
// advance() is chunked and of any counterfactual fork.
struct ExogenousEvent {
    std::string id;
    int at_tick = 0;
    bool luck = false;
    double probability = 1.0;  // chance of firing when due; scripted events ignore it
    EventEffect effect;
};

struct WorldState {
    int time = 0;
    std::vector<Entity> entities;          // sorted by id; ids unique
    std::vector<ExogenousEvent> pending;   // sorted by (at_tick, id)
    std::vector<std::string> applied_events;
    std::string stream_name = "world";
    uint64_t rng_root = 0;

    const Entity* find_entity(const std::string& id) const;
    bool has_entity(const std::string& id) const { return find_entity(id) != nullptr; }
};

// Validated world assembly: enforces id uniqueness and canonical ordering.
WorldState make_world(std::vector<Entity> entities, std::vector<ExogenousEvent> events,
                      uint64_t rng_root, std::string stream_name = "world");

WorldState advance(const WorldState& world, int ticks);

// Ground-truth valuation at world.time. Throws UnknownEntity for a ClassIs
// proposition whose subject is absent; existential propositions are total.
bool truth_of(const WorldState& world, const Proposition& prop);

enum class InterventionKind {
    ReplaceClass,
    RemoveEntity,
    AddEntity,
    SuppressEvent,
};

struct Intervention {
    InterventionKind kind = InterventionKind::ReplaceClass;
    std::string target;             // entity or event id
    Entity entity;                  // AddEntity payload
    EntityClass new_class = EntityClass::Civilian;  // ReplaceClass payload
};

// Surgical counterfactual edit. The fork keeps the parent's rng root so that
// sampling keyed by stable identifiers (events, channels) is unchanged, and
// takes a derived stream name for any randomness the fork itself introduces.
WorldState fork_counterfactual(const WorldState& world, const Intervention& intervention,
                               uint64_t seed);

// World with all pending luck-tagged events suppressed; scripted events kept.
// Idempotent. Used by aptness reruns.
WorldState strip_luck(const WorldState& world);

}  // namespace epistate
