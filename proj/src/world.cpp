#include "epistate/world.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "epistate/rng.hpp"

namespace epistate {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownEntity: return "UnknownEntity";
        case ErrorCode::InvalidIntervention: return "InvalidIntervention";
        case ErrorCode::UnknownHypothesis: return "UnknownHypothesis";
        case ErrorCode::NonNormalizedPrior: return "NonNormalizedPrior";
        case ErrorCode::ZeroPriorOnContingent: return "ZeroPriorOnContingent";
        case ErrorCode::IncoherentEvidence: return "IncoherentEvidence";
        case ErrorCode::NoHistory: return "NoHistory";
        case ErrorCode::NonNormalized: return "NonNormalized";
        case ErrorCode::MissingLevel: return "MissingLevel";
        case ErrorCode::ZeroProbabilityObservation: return "ZeroProbabilityObservation";
        case ErrorCode::SupportTooLarge: return "SupportTooLarge";
        case ErrorCode::MissingUtilityEntry: return "MissingUtilityEntry";
        case ErrorCode::MissingKinematics: return "MissingKinematics";
        case ErrorCode::UnauthorizedLethal: return "UnauthorizedLethal";
        case ErrorCode::HnpmUnavailable: return "HnpmUnavailable";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::DanglingReference: return "DanglingReference";
        case ErrorCode::CorpusMismatch: return "CorpusMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

int error_exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::SchemaError: return 2;
        case ErrorCode::DanglingReference: return 3;
        case ErrorCode::CorpusMismatch: return 4;
        case ErrorCode::InvalidArgument: return 5;
        default: return 6;  // engine errors
    }
}

const char* to_string(EntityClass cls) {
    switch (cls) {
        case EntityClass::Civilian: return "Civilian";
        case EntityClass::Belligerent: return "Belligerent";
        case EntityClass::ProtectedObject: return "ProtectedObject";
        case EntityClass::FriendlyCombatant: return "FriendlyCombatant";
    }
    return "?";
}

EntityClass entity_class_from_string(std::string_view name) {
    for (EntityClass cls : kAllEntityClasses) {
        if (name == to_string(cls)) return cls;
    }
    fail(ErrorCode::SchemaError, "unknown entity class '" + std::string(name) + "'");
}

std::string format_double(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) return "nan";
    return std::string(buffer, ptr);
}

std::string Proposition::key() const {
    std::string k;
    if (negated) k += "not:";
    if (kind == PropositionKind::ClassIs) {
        k += "class:" + subject + "=" + to_string(cls);
    } else {
        k += "exists:" + std::string(to_string(cls)) + "@(" + std::to_string(center.x) + "," +
             std::to_string(center.y) + ")r" + std::to_string(radius);
    }
    if (at_tick) k += "@t" + std::to_string(*at_tick);
    return k;
}

Proposition class_proposition(std::string entity_id, EntityClass cls) {
    Proposition p;
    p.kind = PropositionKind::ClassIs;
    p.subject = std::move(entity_id);
    p.cls = cls;
    return p;
}

Proposition region_proposition(EntityClass cls, GridPos center, int radius) {
    Proposition p;
    p.kind = PropositionKind::ExistsInRegion;
    p.cls = cls;
    p.center = center;
    p.radius = radius;
    return p;
}

const Entity* WorldState::find_entity(const std::string& id) const {
    auto it = std::lower_bound(entities.begin(), entities.end(), id,
                               [](const Entity& e, const std::string& key) { return e.id < key; });
    if (it != entities.end() && it->id == id) return &*it;
    return nullptr;
}

namespace {

void sort_entities(std::vector<Entity>& entities) {
    std::sort(entities.begin(), entities.end(),
              [](const Entity& a, const Entity& b) { return a.id < b.id; });
}

void sort_events(std::vector<ExogenousEvent>& events) {
    std::sort(events.begin(), events.end(), [](const ExogenousEvent& a, const ExogenousEvent& b) {
        return std::tie(a.at_tick, a.id) < std::tie(b.at_tick, b.id);
    });
}

void insert_entity(WorldState& world, Entity entity, ErrorCode duplicate_code) {
    if (world.has_entity(entity.id)) {
        fail(duplicate_code, "duplicate entity id '" + entity.id + "'");
    }
    world.entities.push_back(std::move(entity));
    sort_entities(world.entities);
}

void apply_effect(WorldState& world, const EventEffect& effect) {
    switch (effect.kind) {
        case EventEffectKind::AddEntity:
            insert_entity(world, effect.entity, ErrorCode::SchemaError);
            break;
        case EventEffectKind::RemoveEntity:
            std::erase_if(world.entities, [&](const Entity& e) { return e.id == effect.target; });
            break;
        case EventEffectKind::SetClass:
            for (Entity& e : world.entities) {
                if (e.id == effect.target) e.true_class = effect.new_class;
            }
            break;
        case EventEffectKind::Nudge:
            for (Entity& e : world.entities) {
                if (e.id == effect.target) e.position = e.position + effect.delta;
            }
            break;
    }
}

}  // namespace

WorldState make_world(std::vector<Entity> entities, std::vector<ExogenousEvent> events,
                      uint64_t rng_root, std::string stream_name) {
    WorldState world;
    world.rng_root = rng_root;
    world.stream_name = std::move(stream_name);

    std::set<std::string> ids;
    for (const Entity& e : entities) {
        if (!ids.insert(e.id).second) {
            fail(ErrorCode::SchemaError, "duplicate entity id '" + e.id + "'");
        }
    }
    std::set<std::string> event_ids;
    for (const ExogenousEvent& ev : events) {
        if (!event_ids.insert(ev.id).second) {
            fail(ErrorCode::SchemaError, "duplicate event id '" + ev.id + "'");
        }
        if (ev.at_tick < 0) fail(ErrorCode::SchemaError, "event '" + ev.id + "' due before t=0");
    }
    world.entities = std::move(entities);
    world.pending = std::move(events);
    sort_entities(world.entities);
    sort_events(world.pending);
    return world;
}

WorldState advance(const WorldState& world, int ticks) {
    if (ticks < 1) fail(ErrorCode::InvalidArgument, "advance: ticks must be >= 1");

    WorldState next = world;
    for (int step = 0; step < ticks; ++step) {
        next.time += 1;
        for (Entity& e : next.entities) e.position = e.position + e.motion;

        // pending is (at_tick, id)-sorted, so due events apply in canonical order.
        std::vector<ExogenousEvent> still_pending;
        still_pending.reserve(next.pending.size());
        for (const ExogenousEvent& ev : next.pending) {
            if (ev.at_tick != next.time) {
                still_pending.push_back(ev);
                continue;
            }
            bool fires = true;
            if (ev.luck) {
                Rng rng(derive_seed(derive_seed(next.rng_root, ev.id),
                                    static_cast<uint64_t>(ev.at_tick)));
                fires = rng.bernoulli(ev.probability);
            }
            if (fires) {
                apply_effect(next, ev.effect);
                next.applied_events.push_back(ev.id);
            }
        }
        next.pending = std::move(still_pending);
    }
    return next;
}

bool truth_of(const WorldState& world, const Proposition& prop) {
    bool value = false;
    if (prop.kind == PropositionKind::ClassIs) {
        const Entity* entity = world.find_entity(prop.subject);
        if (!entity) {
            fail(ErrorCode::UnknownEntity,
                 "proposition subject '" + prop.subject + "' not in world");
        }
        value = entity->true_class == prop.cls;
    } else {
        const long long r2 = static_cast<long long>(prop.radius) * prop.radius;
        for (const Entity& e : world.entities) {
            if (e.true_class == prop.cls && squared_distance(e.position, prop.center) <= r2) {
                value = true;
                break;
            }
        }
    }
    return prop.negated ? !value : value;
}

WorldState fork_counterfactual(const WorldState& world, const Intervention& intervention,
                               uint64_t seed) {
    WorldState fork = world;
    fork.stream_name = world.stream_name + "/fork:" + std::to_string(seed);

    switch (intervention.kind) {
        case InterventionKind::ReplaceClass: {
            bool found = false;
            for (Entity& e : fork.entities) {
                if (e.id == intervention.target) {
                    e.true_class = intervention.new_class;
                    found = true;
                }
            }
            if (!found) {
                fail(ErrorCode::InvalidIntervention,
                     "ReplaceClass target '" + intervention.target + "' missing");
            }
            break;
        }
        case InterventionKind::RemoveEntity: {
            const std::size_t before = fork.entities.size();
            std::erase_if(fork.entities,
                          [&](const Entity& e) { return e.id == intervention.target; });
            if (fork.entities.size() == before) {
                fail(ErrorCode::InvalidIntervention,
                     "RemoveEntity target '" + intervention.target + "' missing");
            }
            break;
        }
        case InterventionKind::AddEntity:
            if (fork.has_entity(intervention.entity.id)) {
                fail(ErrorCode::InvalidIntervention,
                     "AddEntity id '" + intervention.entity.id + "' already present");
            }
            insert_entity(fork, intervention.entity, ErrorCode::InvalidIntervention);
            break;
        case InterventionKind::SuppressEvent: {
            const std::size_t before = fork.pending.size();
            std::erase_if(fork.pending,
                          [&](const ExogenousEvent& ev) { return ev.id == intervention.target; });
            if (fork.pending.size() == before) {
                fail(ErrorCode::InvalidIntervention,
                     "SuppressEvent target '" + intervention.target + "' missing");
            }
            break;
        }
    }
    return fork;
}

WorldState strip_luck(const WorldState& world) {
    WorldState stripped = world;
    std::erase_if(stripped.pending, [](const ExogenousEvent& ev) { return ev.luck; });
    return stripped;
}

}  // namespace epistate
