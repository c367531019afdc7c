#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "epistate/policy.hpp"
#include "epistate/rng.hpp"
#include "epistate/runner.hpp"

using namespace epistate;

namespace {

Partition strike_partition() {
    Partition partition;
    partition.id = "tgt";
    partition.target.kind = ObservationTarget::Kind::Entity;
    partition.target.entity_id = "e7";
    partition.labels = {"Civilian", "Belligerent"};
    return partition;
}

CredenceFunction credences_for(double p_civilian) {
    return prior_init({strike_partition()},
                      {{"tgt", {{"Civilian", p_civilian}, {"Belligerent", 1.0 - p_civilian}}}});
}

ActionSpec strike_action(std::string id = "strike", int flight = 0) {
    ActionSpec action;
    action.id = std::move(id);
    action.tier = ActionTier::LethalEffect;
    action.target_entity = "e7";
    action.outcome_partition = "tgt";
    action.gate_label = "Belligerent";
    action.utility_key = "strike";
    action.flight_ticks = flight;
    return action;
}

UtilityModel strike_utilities() {
    UtilityModel model;
    model.table["strike"] = {{"Civilian", -100.0}, {"Belligerent", 10.0}};
    model.table["hold"] = {{"Civilian", 0.0}, {"Belligerent", 0.0}};
    return model;
}

ActionCandidate passing_candidate(ActionSpec action) {
    ActionCandidate candidate;
    candidate.action = std::move(action);
    candidate.verdict = classify(true, DoxasticAttitude::Belief, true, {1.0, 1.0, 32}, 0.9);
    candidate.aaa = {true, true, true};
    candidate.reflective.reflective = true;
    candidate.reflective.apt = true;
    candidate.reflective.meta_credence = 0.99;
    candidate.reflective.coherence_gap = 0.01;
    candidate.redundancy = 3;
    candidate.justified_lethal = true;
    return candidate;
}

TrackState closing_track() {
    TrackState track;
    track.range = 800.0;
    track.range_rate = -25.0;
    track.speed = 200.0;
    track.can_maneuver = true;
    return track;
}

std::vector<EnvelopePredicate> ciws_envelope() {
    return {
        {EnvelopePredicateKind::RangeClosing, "closing", 0.0, 0.0},
        {EnvelopePredicateKind::ManeuverCapable, "maneuver", 0.0, 0.0},
        {EnvelopePredicateKind::VelocityBand, "velocity_band", 50.0, 400.0},
    };
}

}  // namespace

TEST_CASE("expected_utility is the credence-weighted utility sum") {
    CredenceFunction c = credences_for(0.75);
    UtilityModel u = strike_utilities();
    // 0.75 * (-100) + 0.25 * 10 = -72.5
    CHECK(expected_utility(c, strike_action(), u) == doctest::Approx(-72.5).epsilon(1e-12));

    SUBCASE("zero utilities give zero EU for any credence") {
        UtilityModel zero;
        zero.table["strike"] = {{"Civilian", 0.0}, {"Belligerent", 0.0}};
        for (double p : {0.01, 0.3, 0.8, 0.99}) {
            CHECK(expected_utility(credences_for(p), strike_action(), zero) == 0.0);
        }
    }
    SUBCASE("missing utility entries are reported") {
        UtilityModel partial;
        partial.table["strike"] = {{"Civilian", -100.0}};
        CHECK_THROWS_WITH_AS((void)expected_utility(c, strike_action(), partial),
                             doctest::Contains("MissingUtilityEntry"), Error);
    }
}

TEST_CASE("corner choice: argmax picks the lower-expected-harm corner") {
    // Two aim points with asymmetric civilian-presence credences.
    Partition corner_a;
    corner_a.id = "corner_a";
    corner_a.target.kind = ObservationTarget::Kind::Region;
    corner_a.target.cls = EntityClass::Civilian;
    corner_a.target.center = {0, 0};
    corner_a.target.radius = 2;
    corner_a.labels = {kPresentLabel, kAbsentLabel};
    Partition corner_b = corner_a;
    corner_b.id = "corner_b";
    corner_b.target.center = {10, 0};

    CredenceFunction c = prior_init({corner_a, corner_b},
                                    {{"corner_a", {{kPresentLabel, 0.7}, {kAbsentLabel, 0.3}}},
                                     {"corner_b", {{kPresentLabel, 0.1}, {kAbsentLabel, 0.9}}}});
    UtilityModel u;
    u.table["hit_corner"] = {{kPresentLabel, -100.0}, {kAbsentLabel, 20.0}};

    ActionSpec hit_a;
    hit_a.id = "hit_a";
    hit_a.tier = ActionTier::LethalEffect;
    hit_a.target_entity = "building";
    hit_a.outcome_partition = "corner_a";
    hit_a.gate_label = kAbsentLabel;
    hit_a.utility_key = "hit_corner";
    ActionSpec hit_b = hit_a;
    hit_b.id = "hit_b";
    hit_b.outcome_partition = "corner_b";

    const double eu_a = expected_utility(c, hit_a, u);
    const double eu_b = expected_utility(c, hit_b, u);
    CHECK(eu_a == doctest::Approx(0.7 * -100 + 0.3 * 20).epsilon(1e-12));
    CHECK(eu_b == doctest::Approx(0.1 * -100 + 0.9 * 20).epsilon(1e-12));

    // Brute-force enumeration agrees with the gate's argmax.
    GateInputs inputs;
    ActionCandidate ca = passing_candidate(hit_a);
    ActionCandidate cb = passing_candidate(hit_b);
    inputs.candidates = {ca, cb};
    inputs.credences = &c;
    UtilityModel utilities = u;
    inputs.utilities = &utilities;
    PolicyConfig as2b = make_policy(PolicyKind::AS2b);
    ActionDecision decision = decide(as2b, "hit_a", inputs);
    CHECK(decision.outcome == DecisionOutcome::Execute);
    CHECK(decision.chosen_action == (eu_b > eu_a ? "hit_b" : "hit_a"));
}

TEST_CASE("envelope_check evaluates kinematic predicates") {
    SUBCASE("the full criteria list passes on a closing maneuvering contact") {
        EnvelopeResult result = envelope_check(ciws_envelope(), closing_track());
        CHECK(result.pass);
        CHECK(result.results.size() == 3);
    }
    SUBCASE("a receding track fails") {
        TrackState receding = closing_track();
        receding.range_rate = 5.0;
        EnvelopeResult result = envelope_check(ciws_envelope(), receding);
        CHECK_FALSE(result.pass);
        CHECK_FALSE(result.results[0].pass);
        CHECK(result.results[1].pass);
    }
    SUBCASE("an empty envelope is vacuously true") {
        CHECK(envelope_check({}, TrackState{}).pass);
    }
    SUBCASE("missing kinematics are an error, not a pass") {
        TrackState no_speed = closing_track();
        no_speed.speed.reset();
        CHECK_THROWS_WITH_AS((void)envelope_check(ciws_envelope(), no_speed),
                             doctest::Contains("MissingKinematics"), Error);
    }
}

TEST_CASE("make_policy encodes the architecture invariants") {
    PolicyConfig as1v = make_policy(PolicyKind::AS1v);
    PolicyConfig as2b = make_policy(PolicyKind::AS2b);
    PolicyConfig as3bv = make_policy(PolicyKind::AS3bv);
    for (ActionTier tier : {ActionTier::Navigate, ActionTier::Surveil, ActionTier::NonLethalEffect,
                            ActionTier::LethalEffect}) {
        CHECK(as1v.mechanism(tier) == GateMechanism::ReflectiveGate);
        CHECK(as2b.mechanism(tier) == GateMechanism::BayesianGate);
    }
    CHECK(as3bv.mechanism(ActionTier::Navigate) == GateMechanism::BayesianGate);
    CHECK(as3bv.mechanism(ActionTier::LethalEffect) == GateMechanism::ReflectiveGate);
    CHECK(as3bv.redundancy_floor(ActionTier::LethalEffect) == 2);
    CHECK_NOTHROW(as1v.validate());
    CHECK_NOTHROW(as2b.validate());
    CHECK_NOTHROW(as3bv.validate());

    SUBCASE("breaking an invariant fails validation") {
        as3bv.tier_map[ActionTier::LethalEffect] = GateMechanism::BayesianGate;
        CHECK_THROWS_AS(as3bv.validate(), Error);
    }
}

TEST_CASE("AS1v executes only inside the envelope with apt knowledge") {
    PolicyConfig policy = make_policy(PolicyKind::AS1v);
    policy.envelope = ciws_envelope();
    CredenceFunction c = credences_for(0.02);
    UtilityModel u = strike_utilities();

    GateInputs inputs;
    inputs.candidates = {passing_candidate(strike_action())};
    inputs.track = closing_track();
    inputs.credences = &c;
    inputs.utilities = &u;

    SUBCASE("all conditions met: Execute") {
        ActionDecision decision = decide(policy, "strike", inputs);
        CHECK(decision.outcome == DecisionOutcome::Execute);
        CHECK(decision.mechanism == "knowledge");
        CHECK(record_recomputes(decision, policy.thresholds.theta_eu));
    }
    SUBCASE("target outside the velocity band: Withhold") {
        inputs.track.speed = 900.0;
        ActionDecision decision = decide(policy, "strike", inputs);
        CHECK(decision.outcome == DecisionOutcome::Withhold);
        CHECK_FALSE(decision.envelope.pass);
    }
    SUBCASE("verdict short of Knowledge: Withhold") {
        inputs.candidates[0].verdict =
            classify(true, DoxasticAttitude::Belief, true, {0.0, 1.0, 32}, 0.9);
        ActionDecision decision = decide(policy, "strike", inputs);
        CHECK(decision.outcome == DecisionOutcome::Withhold);
        CHECK(decision.verdict_kind == "Gettiered");
    }
    SUBCASE("not apt: Withhold") {
        inputs.candidates[0].aaa.apt = false;
        CHECK(decide(policy, "strike", inputs).outcome == DecisionOutcome::Withhold);
    }
}

TEST_CASE("AS2b executes the EU argmax when it clears the threshold") {
    PolicyConfig policy = make_policy(PolicyKind::AS2b);
    UtilityModel u = strike_utilities();

    SUBCASE("navigation proceeds under suspension-level credences") {
        // Route planner: mid credences, positive-EU route available.
        Partition route;
        route.id = "route";
        route.target.kind = ObservationTarget::Kind::Region;
        route.target.cls = EntityClass::Belligerent;
        route.target.center = {3, 3};
        route.target.radius = 3;
        route.labels = {kPresentLabel, kAbsentLabel};
        CredenceFunction c =
            prior_init({route}, {{"route", {{kPresentLabel, 0.4}, {kAbsentLabel, 0.6}}}});
        UtilityModel nav;
        nav.table["route_north"] = {{kPresentLabel, -5.0}, {kAbsentLabel, 10.0}};
        nav.table["route_south"] = {{kPresentLabel, -2.0}, {kAbsentLabel, 4.0}};

        ActionSpec north;
        north.id = "route_north";
        north.tier = ActionTier::Navigate;
        north.outcome_partition = "route";
        north.gate_label = kAbsentLabel;
        north.utility_key = "route_north";
        ActionSpec south = north;
        south.id = "route_south";
        south.utility_key = "route_south";

        ActionCandidate cn;
        cn.action = north;
        cn.verdict = classify(true, DoxasticAttitude::Suspension, true, {}, 0.9);
        ActionCandidate cs = cn;
        cs.action = south;

        GateInputs inputs;
        inputs.candidates = {cn, cs};
        inputs.credences = &c;
        inputs.utilities = &nav;

        ActionDecision decision = decide(policy, "route_north", inputs);
        CHECK(decision.outcome == DecisionOutcome::Execute);
        CHECK(decision.chosen_action == "route_north");  // 4.0 vs 1.6
        CHECK(decision.eu_table.at("route_north") == doctest::Approx(4.0));
        CHECK(decision.eu_table.at("route_south") == doctest::Approx(1.6));
    }
    SUBCASE("max EU below theta_EU withholds") {
        CredenceFunction c = credences_for(0.75);
        GateInputs inputs;
        inputs.candidates = {passing_candidate(strike_action())};
        inputs.credences = &c;
        inputs.utilities = &u;
        ActionDecision decision = decide(policy, "strike", inputs);
        CHECK(decision.outcome == DecisionOutcome::Withhold);  // EU = -72.5 < 0
        CHECK(record_recomputes(decision, policy.thresholds.theta_eu));
    }
    SUBCASE("randomized menus: gate argmax equals brute force with lexicographic ties") {
        Rng rng(8899);
        CredenceFunction c = credences_for(0.5);
        for (int trial = 0; trial < 300; ++trial) {
            const int n = rng.uniform_int(2, 5);
            UtilityModel menu_u;
            GateInputs inputs;
            for (int i = 0; i < n; ++i) {
                std::string id = "a" + std::to_string(rng.uniform_int(0, 6));
                if (menu_u.table.contains(id)) {
                    id += "_" + std::to_string(i);
                }
                // Coarse utilities make exact EU ties common.
                menu_u.table[id] = {{"Civilian", static_cast<double>(rng.uniform_int(-3, 3))},
                                    {"Belligerent", static_cast<double>(rng.uniform_int(-3, 3))}};
                ActionSpec action = strike_action(id);
                action.utility_key = id;
                inputs.candidates.push_back(passing_candidate(action));
            }
            inputs.credences = &c;
            inputs.utilities = &menu_u;

            ActionDecision decision =
                decide(policy, inputs.candidates.front().action.id, inputs);

            std::string best_id;
            double best_eu = -1e300;
            for (const ActionCandidate& candidate : inputs.candidates) {
                const double eu = expected_utility(c, candidate.action, menu_u);
                if (eu > best_eu || (eu == best_eu && candidate.action.id < best_id)) {
                    best_id = candidate.action.id;
                    best_eu = eu;
                }
            }
            if (best_eu >= policy.thresholds.theta_eu) {
                CHECK(decision.outcome == DecisionOutcome::Execute);
                CHECK(decision.chosen_action == best_id);
            } else {
                CHECK(decision.outcome == DecisionOutcome::Withhold);
            }
            CHECK(record_recomputes(decision, policy.thresholds.theta_eu));
        }
    }
}

TEST_CASE("AS3bv gates lethal actions reflectively") {
    PolicyConfig policy = make_policy(PolicyKind::AS3bv);
    CredenceFunction c = credences_for(0.02);
    UtilityModel u = strike_utilities();

    GateInputs inputs;
    inputs.candidates = {passing_candidate(strike_action())};
    inputs.credences = &c;
    inputs.utilities = &u;

    SUBCASE("reflective, justified, redundant: Execute") {
        ActionDecision decision = decide(policy, "strike", inputs);
        CHECK(decision.outcome == DecisionOutcome::Execute);
        CHECK(decision.mechanism == "reflective");
        CHECK(record_recomputes(decision, policy.thresholds.theta_eu));
    }
    SUBCASE("reflective check false: Withhold") {
        inputs.candidates[0].reflective.reflective = false;
        ActionDecision decision = decide(policy, "strike", inputs);
        CHECK(decision.outcome == DecisionOutcome::Withhold);
    }
    SUBCASE("redundancy collapsed below the lethal floor: Withdraw") {
        inputs.candidates[0].redundancy = 1;
        ActionDecision decision = decide(policy, "strike", inputs);
        CHECK(decision.outcome == DecisionOutcome::Withdraw);
        CHECK(record_recomputes(decision, policy.thresholds.theta_eu));
    }
    SUBCASE("authorization handling") {
        policy.authorization_required[ActionTier::LethalEffect] = true;
        SUBCASE("missing scripted input is an error") {
            CHECK_THROWS_WITH_AS((void)decide(policy, "strike", inputs),
                                 doctest::Contains("UnauthorizedLethal"), Error);
        }
        SUBCASE("explicit denial withholds") {
            inputs.authorization = false;
            CHECK(decide(policy, "strike", inputs).outcome == DecisionOutcome::Withhold);
        }
        SUBCASE("explicit grant executes") {
            inputs.authorization = true;
            CHECK(decide(policy, "strike", inputs).outcome == DecisionOutcome::Execute);
        }
    }
    SUBCASE("non-lethal tiers run the Bayesian gate") {
        ActionSpec navigate = strike_action("move");
        navigate.tier = ActionTier::Navigate;
        navigate.target_entity.clear();
        navigate.utility_key = "hold";
        inputs.candidates = {passing_candidate(navigate)};
        ActionDecision decision = decide(policy, "move", inputs);
        CHECK(decision.mechanism == "expected_utility");
    }
}

TEST_CASE("abort_or_retarget re-runs the gate on refreshed evidence") {
    PolicyConfig policy = make_policy(PolicyKind::AS2b);
    UtilityModel u = strike_utilities();

    CredenceFunction before = credences_for(0.05);  // strike EU = +4.5
    GateInputs inputs;
    inputs.candidates = {passing_candidate(strike_action())};
    inputs.credences = &before;
    inputs.utilities = &u;
    ActionDecision launched = decide(policy, "strike", inputs);
    REQUIRE(launched.outcome == DecisionOutcome::Execute);

    SUBCASE("no new evidence: decision unchanged") {
        ActionDecision same = abort_or_retarget(launched, policy, inputs);
        CHECK(same.outcome == DecisionOutcome::Execute);
        CHECK(same.chosen_action == launched.chosen_action);
    }
    SUBCASE("a child walks into the target: credence shift aborts the strike") {
        CredenceFunction after = credences_for(0.60);  // EU now -56
        GateInputs updated = inputs;
        updated.credences = &after;
        ActionDecision aborted = abort_or_retarget(launched, policy, updated);
        CHECK(aborted.outcome == DecisionOutcome::Abort);
    }
    SUBCASE("a strictly better passing alternative retargets") {
        UtilityModel two = u;
        two.table["strike_alt"] = {{"Civilian", -100.0}, {"Belligerent", 40.0}};
        ActionSpec alternative = strike_action("strike_alt");
        alternative.utility_key = "strike_alt";
        GateInputs updated = inputs;
        updated.candidates.push_back(passing_candidate(alternative));
        updated.utilities = &two;
        ActionDecision retargeted = abort_or_retarget(launched, policy, updated);
        CHECK(retargeted.outcome == DecisionOutcome::Retarget);
        CHECK(retargeted.chosen_action == "strike_alt");
    }
    SUBCASE("raising civilian-presence credence never flips a non-Execute to Execute") {
        Rng rng(5150);
        for (int trial = 0; trial < 200; ++trial) {
            const double low = rng.uniform(0.01, 0.98);
            const double high = rng.uniform(low, 0.99);
            GateInputs lo_inputs = inputs;
            CredenceFunction lo = credences_for(low);
            lo_inputs.credences = &lo;
            ActionDecision base = decide(policy, "strike", lo_inputs);
            if (base.outcome != DecisionOutcome::Execute) {
                CredenceFunction hi = credences_for(high);
                GateInputs hi_inputs = inputs;
                hi_inputs.credences = &hi;
                ActionDecision shifted = decide(policy, "strike", hi_inputs);
                CHECK(shifted.outcome != DecisionOutcome::Execute);
            }
        }
    }
}

TEST_CASE("lethal actions must name a target") {
    ActionSpec anonymous = strike_action();
    anonymous.target_entity.clear();
    CHECK_THROWS_AS(anonymous.validate(), Error);
}
