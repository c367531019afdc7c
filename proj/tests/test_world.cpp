#include "doctest.h"

#include "epistate/scenario.hpp"
#include "epistate/world.hpp"

using namespace epistate;

namespace {

Entity make_entity(std::string id, EntityClass cls, GridPos pos, GridPos motion = {0, 0}) {
    return Entity{std::move(id), cls, pos, motion};
}

std::string serialize(const WorldState& world) { return world_to_json(world).dump(); }

// Gettier-style scene: a building with civilians walking past, plus a distant
// belligerent.
WorldState gettier_world(uint64_t root = 7) {
    return make_world(
        {
            make_entity("building", EntityClass::ProtectedObject, {5, 0}),
            make_entity("walker1", EntityClass::Civilian, {4, 1}),
            make_entity("walker2", EntityClass::Civilian, {6, -1}),
            make_entity("b1", EntityClass::Belligerent, {40, 40}),
        },
        {}, root);
}

}  // namespace

TEST_CASE("advance increments time and is total on valid worlds") {
    WorldState world = make_world({make_entity("e1", EntityClass::Civilian, {0, 0}, {1, 0})}, {}, 1);
    WorldState next = advance(world, 1);
    CHECK(next.time == 1);
    CHECK(next.find_entity("e1")->position == GridPos{1, 0});
    CHECK(world.time == 0);  // input untouched
    CHECK_THROWS_AS((void)advance(world, 0), Error);
}

TEST_CASE("scripted event applies at its due tick") {
    ExogenousEvent child_enters;
    child_enters.id = "child_enters";
    child_enters.at_tick = 3;
    child_enters.luck = false;
    child_enters.effect.kind = EventEffectKind::AddEntity;
    child_enters.effect.entity = make_entity("child", EntityClass::Civilian, {5, 0});

    WorldState world = make_world({make_entity("building", EntityClass::ProtectedObject, {5, 0})},
                                  {child_enters}, 11);
    CHECK_FALSE(world.has_entity("child"));
    WorldState at2 = advance(world, 2);
    CHECK_FALSE(at2.has_entity("child"));
    WorldState at3 = advance(world, 3);
    CHECK(at3.has_entity("child"));
    CHECK(at3.applied_events == std::vector<std::string>{"child_enters"});
}

TEST_CASE("advance chunking does not change the outcome") {
    // Replay oracle: advancing twice by 1 equals advancing once by 2, including
    // luck-event draws, because sampling is keyed by (root, event, tick).
    ExogenousEvent gust;
    gust.id = "gust";
    gust.at_tick = 2;
    gust.luck = true;
    gust.probability = 0.5;
    gust.effect.kind = EventEffectKind::Nudge;
    gust.effect.target = "e1";
    gust.effect.delta = {0, 3};

    for (uint64_t root : {1ULL, 2ULL, 3ULL, 99ULL}) {
        WorldState world =
            make_world({make_entity("e1", EntityClass::Civilian, {0, 0}, {1, 1})}, {gust}, root);
        WorldState chunked = advance(advance(world, 1), 1);
        WorldState direct = advance(world, 2);
        CHECK(serialize(chunked) == serialize(direct));
    }
}

TEST_CASE("truth_of reads ground truth") {
    WorldState world = gettier_world();
    CHECK(truth_of(world, class_proposition("walker1", EntityClass::Civilian)));
    CHECK_FALSE(truth_of(world, class_proposition("b1", EntityClass::Civilian)));
    CHECK(truth_of(world, region_proposition(EntityClass::Civilian, {5, 0}, 5)));
    CHECK_FALSE(truth_of(world, region_proposition(EntityClass::Belligerent, {5, 0}, 5)));

    SUBCASE("negation flips the valuation") {
        Proposition none_near = region_proposition(EntityClass::Civilian, {5, 0}, 5).negation();
        CHECK_FALSE(truth_of(world, none_near));
    }
    SUBCASE("unknown subject raises for class propositions") {
        CHECK_THROWS_AS((void)truth_of(world, class_proposition("ghost", EntityClass::Civilian)),
                        Error);
    }
}

TEST_CASE("fork_counterfactual applies surgical edits without touching the source") {
    WorldState world = gettier_world();
    const std::string before = serialize(world);

    SUBCASE("ReplaceClass flips the proposition") {
        Intervention iv;
        iv.kind = InterventionKind::ReplaceClass;
        iv.target = "walker1";
        iv.new_class = EntityClass::Belligerent;
        WorldState fork = fork_counterfactual(world, iv, 5);
        CHECK_FALSE(truth_of(fork, class_proposition("walker1", EntityClass::Civilian)));
        CHECK(serialize(world) == before);
    }
    SUBCASE("RemoveEntity: class form raises, existential form goes false") {
        Intervention iv;
        iv.kind = InterventionKind::RemoveEntity;
        iv.target = "walker1";
        WorldState fork = fork_counterfactual(world, iv, 5);
        CHECK_THROWS_AS((void)truth_of(fork, class_proposition("walker1", EntityClass::Civilian)),
                        Error);
        // walker2 still in the region
        CHECK(truth_of(fork, region_proposition(EntityClass::Civilian, {5, 0}, 5)));
        Intervention iv2;
        iv2.kind = InterventionKind::RemoveEntity;
        iv2.target = "walker2";
        WorldState fork2 = fork_counterfactual(fork, iv2, 6);
        CHECK_FALSE(truth_of(fork2, region_proposition(EntityClass::Civilian, {5, 0}, 5)));
    }
    SUBCASE("missing target is an invalid intervention") {
        Intervention iv;
        iv.kind = InterventionKind::RemoveEntity;
        iv.target = "ghost";
        CHECK_THROWS_AS((void)fork_counterfactual(world, iv, 5), Error);
    }
    SUBCASE("no-op payload preserves every truth valuation") {
        Intervention iv;
        iv.kind = InterventionKind::ReplaceClass;
        iv.target = "walker1";
        iv.new_class = EntityClass::Civilian;  // equals current value
        WorldState fork = fork_counterfactual(world, iv, 5);
        for (const Entity& e : world.entities) {
            for (EntityClass cls : kAllEntityClasses) {
                CHECK(truth_of(fork, class_proposition(e.id, cls)) ==
                      truth_of(world, class_proposition(e.id, cls)));
            }
        }
    }
}

TEST_CASE("forks share randomness for non-intervened sampling") {
    ExogenousEvent gust;
    gust.id = "gust";
    gust.at_tick = 1;
    gust.luck = true;
    gust.probability = 0.5;
    gust.effect.kind = EventEffectKind::Nudge;
    gust.effect.target = "bystander";
    gust.effect.delta = {2, 0};

    for (uint64_t root = 0; root < 8; ++root) {
        WorldState world = make_world(
            {
                make_entity("target", EntityClass::Civilian, {0, 0}),
                make_entity("bystander", EntityClass::Civilian, {9, 9}, {0, 1}),
            },
            {gust}, root);
        Intervention iv;
        iv.kind = InterventionKind::ReplaceClass;
        iv.target = "target";
        iv.new_class = EntityClass::Belligerent;
        WorldState fork = fork_counterfactual(world, iv, 1234);

        WorldState base_evolved = advance(world, 3);
        WorldState fork_evolved = advance(fork, 3);
        const Entity* base_bystander = base_evolved.find_entity("bystander");
        const Entity* fork_bystander = fork_evolved.find_entity("bystander");
        REQUIRE(base_bystander);
        REQUIRE(fork_bystander);
        CHECK(base_bystander->position == fork_bystander->position);
        CHECK(base_evolved.applied_events == fork_evolved.applied_events);
    }
}

TEST_CASE("strip_luck suppresses chance events only and is idempotent") {
    ExogenousEvent gust;
    gust.id = "gust";
    gust.at_tick = 5;
    gust.luck = true;
    gust.effect.kind = EventEffectKind::Nudge;
    gust.effect.target = "arrow";
    gust.effect.delta = {0, -1};
    ExogenousEvent scripted;
    scripted.id = "release";
    scripted.at_tick = 1;
    scripted.luck = false;
    scripted.effect.kind = EventEffectKind::Nudge;
    scripted.effect.target = "arrow";
    scripted.effect.delta = {1, 0};

    WorldState world =
        make_world({make_entity("arrow", EntityClass::FriendlyCombatant, {0, 1}, {1, 0})},
                   {gust, scripted}, 3);
    const std::string before = serialize(world);
    WorldState stripped = strip_luck(world);
    CHECK(serialize(world) == before);
    CHECK(stripped.pending.size() == 1);
    CHECK(stripped.pending.front().id == "release");
    CHECK(serialize(strip_luck(stripped)) == serialize(stripped));

    SUBCASE("a world without luck events is unchanged") {
        WorldState no_luck =
            make_world({make_entity("arrow", EntityClass::FriendlyCombatant, {0, 1})}, {scripted}, 3);
        CHECK(serialize(strip_luck(no_luck)) == serialize(no_luck));
    }
}

TEST_CASE("archer scene: gust makes the shot, stripping it breaks the shot") {
    ExogenousEvent gust;
    gust.id = "gust";
    gust.at_tick = 5;
    gust.luck = true;
    gust.probability = 1.0;
    gust.effect.kind = EventEffectKind::Nudge;
    gust.effect.target = "arrow";
    gust.effect.delta = {0, -1};

    WorldState world = make_world(
        {
            make_entity("arrow", EntityClass::FriendlyCombatant, {0, 1}, {1, 0}),
            make_entity("bullseye", EntityClass::ProtectedObject, {10, 0}),
        },
        {gust}, 21);

    WorldState with_luck = advance(world, 10);
    CHECK(with_luck.find_entity("arrow")->position == GridPos{10, 0});

    WorldState without_luck = advance(strip_luck(world), 10);
    CHECK(without_luck.find_entity("arrow")->position == GridPos{10, 1});
}

TEST_CASE("world construction enforces unique ids") {
    CHECK_THROWS_AS((void)make_world({make_entity("dup", EntityClass::Civilian, {0, 0}),
                                      make_entity("dup", EntityClass::Civilian, {1, 1})},
                                     {}, 0),
                    Error);
}

TEST_CASE("deterministic advance: equal seeds give structurally identical worlds") {
    ExogenousEvent chance;
    chance.id = "chance";
    chance.at_tick = 4;
    chance.luck = true;
    chance.probability = 0.3;
    chance.effect.kind = EventEffectKind::SetClass;
    chance.effect.target = "p";
    chance.effect.new_class = EntityClass::Belligerent;

    WorldState a = make_world({make_entity("p", EntityClass::Civilian, {2, 2}, {0, 1})}, {chance}, 5);
    WorldState b = make_world({make_entity("p", EntityClass::Civilian, {2, 2}, {0, 1})}, {chance}, 5);
    CHECK(serialize(advance(a, 6)) == serialize(advance(b, 6)));
}
