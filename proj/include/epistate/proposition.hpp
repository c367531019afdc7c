#pragma once

#include <optional>
#include <string>

#include "epistate/common.hpp"

namespace epistate {

enum class PropositionKind {
    ClassIs,          // "<entity> is <class>"
    ExistsInRegion,   // "some <class> within <radius> of <center>"
};

// Class attributions over entities and regions, the proposition algebra the
// credence store and verdict engine operate on. Canonical form is the key()
// string: two propositions are the same iff their keys are equal.
struct Proposition {
    PropositionKind kind = PropositionKind::ClassIs;
    std::string subject;              // entity id (ClassIs only)
    EntityClass cls = EntityClass::Civilian;
    GridPos center{};                 // ExistsInRegion only
    int radius = 0;                   // ExistsInRegion only
    bool negated = false;             // "no <class> within ..." / "<entity> is not <class>"
    std::optional<int> at_tick;       // declared time scope; part of identity

    std::string key() const;

    Proposition negation() const {
        Proposition p = *this;
        p.negated = !p.negated;
        return p;
    }

    friend bool operator==(const Proposition& a, const Proposition& b) {
        return a.key() == b.key();
    }
    friend bool operator<(const Proposition& a, const Proposition& b) {
        return a.key() < b.key();
    }
};

Proposition class_proposition(std::string entity_id, EntityClass cls);
Proposition region_proposition(EntityClass cls, GridPos center, int radius);

}  // namespace epistate
