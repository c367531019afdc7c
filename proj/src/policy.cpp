#include "epistate/policy.hpp"

#include <algorithm>

namespace epistate {

const char* to_string(ActionTier tier) {
    switch (tier) {
        case ActionTier::Navigate: return "Navigate";
        case ActionTier::Surveil: return "Surveil";
        case ActionTier::NonLethalEffect: return "NonLethalEffect";
        case ActionTier::LethalEffect: return "LethalEffect";
    }
    return "?";
}

ActionTier action_tier_from_string(std::string_view name) {
    for (ActionTier tier : {ActionTier::Navigate, ActionTier::Surveil, ActionTier::NonLethalEffect,
                            ActionTier::LethalEffect}) {
        if (name == to_string(tier)) return tier;
    }
    fail(ErrorCode::SchemaError, "unknown action tier '" + std::string(name) + "'");
}

const char* to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::AS1v: return "AS1v";
        case PolicyKind::AS2b: return "AS2b";
        case PolicyKind::AS3bv: return "AS3bv";
    }
    return "?";
}

PolicyKind policy_kind_from_string(std::string_view name) {
    for (PolicyKind kind : {PolicyKind::AS1v, PolicyKind::AS2b, PolicyKind::AS3bv}) {
        if (name == to_string(kind)) return kind;
    }
    fail(ErrorCode::SchemaError, "unknown policy kind '" + std::string(name) + "'");
}

const char* to_string(DecisionOutcome outcome) {
    switch (outcome) {
        case DecisionOutcome::Execute: return "Execute";
        case DecisionOutcome::Withhold: return "Withhold";
        case DecisionOutcome::Withdraw: return "Withdraw";
        case DecisionOutcome::Abort: return "Abort";
        case DecisionOutcome::Retarget: return "Retarget";
    }
    return "?";
}

void ActionSpec::validate() const {
    if (id.empty()) fail(ErrorCode::SchemaError, "action id is empty");
    if (tier == ActionTier::LethalEffect && target_entity.empty()) {
        fail(ErrorCode::SchemaError, "lethal action '" + id + "' names no target");
    }
    if (flight_ticks < 0) fail(ErrorCode::SchemaError, "action '" + id + "' has negative flight");
}

double UtilityModel::utility(const std::string& utility_key, const std::string& outcome) const {
    auto row = table.find(utility_key);
    if (row == table.end()) {
        fail(ErrorCode::MissingUtilityEntry, "no utility row '" + utility_key + "'");
    }
    auto entry = row->second.find(outcome);
    if (entry == row->second.end()) {
        fail(ErrorCode::MissingUtilityEntry,
             "no utility for ('" + utility_key + "', '" + outcome + "')");
    }
    return entry->second;
}

double expected_utility(const CredenceFunction& c, const ActionSpec& action,
                        const UtilityModel& model) {
    const CredenceFunction::Block* block = c.find_block(action.outcome_partition);
    if (!block) {
        fail(ErrorCode::InvalidArgument,
             "credences do not cover partition '" + action.outcome_partition + "'");
    }
    double eu = 0.0;
    for (std::size_t i = 0; i < block->partition.labels.size(); ++i) {
        eu += block->credences[i] * model.utility(action.utility_key, block->partition.labels[i]);
    }
    return eu;
}

EnvelopeResult envelope_check(const std::vector<EnvelopePredicate>& envelope,
                              const TrackState& track) {
    EnvelopeResult result;
    for (const EnvelopePredicate& predicate : envelope) {
        bool pass = false;
        switch (predicate.kind) {
            case EnvelopePredicateKind::RangeClosing:
                if (!track.range_rate) fail(ErrorCode::MissingKinematics, "no range rate on track");
                pass = *track.range_rate < 0.0;
                break;
            case EnvelopePredicateKind::VelocityBand:
                if (!track.speed) fail(ErrorCode::MissingKinematics, "no speed on track");
                pass = *track.speed >= predicate.min_value && *track.speed <= predicate.max_value;
                break;
            case EnvelopePredicateKind::ManeuverCapable:
                if (!track.can_maneuver) {
                    fail(ErrorCode::MissingKinematics, "no maneuver flag on track");
                }
                pass = *track.can_maneuver;
                break;
            case EnvelopePredicateKind::RangeBelow:
                if (!track.range) fail(ErrorCode::MissingKinematics, "no range on track");
                pass = *track.range <= predicate.max_value;
                break;
        }
        result.results.push_back({predicate.name, pass});
        result.pass = result.pass && pass;
    }
    return result;
}

GateMechanism PolicyConfig::mechanism(ActionTier tier) const {
    auto it = tier_map.find(tier);
    if (it == tier_map.end()) {
        fail(ErrorCode::InvalidArgument, "no gate mechanism for tier " + std::string(to_string(tier)));
    }
    return it->second;
}

bool PolicyConfig::needs_authorization(ActionTier tier) const {
    auto it = authorization_required.find(tier);
    return it != authorization_required.end() && it->second;
}

int PolicyConfig::redundancy_floor(ActionTier tier) const {
    auto it = min_redundancy.find(tier);
    return it == min_redundancy.end() ? 1 : it->second;
}

void PolicyConfig::validate() const {
    thresholds.lockean.validate();
    for (ActionTier tier : {ActionTier::Navigate, ActionTier::Surveil, ActionTier::NonLethalEffect,
                            ActionTier::LethalEffect}) {
        const GateMechanism mech = mechanism(tier);
        if (kind == PolicyKind::AS1v && mech != GateMechanism::ReflectiveGate) {
            fail(ErrorCode::SchemaError, "AS1v routes every tier through the knowledge gate");
        }
        if (kind == PolicyKind::AS2b && mech != GateMechanism::BayesianGate) {
            fail(ErrorCode::SchemaError, "AS2b routes every tier through the Bayesian gate");
        }
    }
    if (kind == PolicyKind::AS3bv &&
        mechanism(ActionTier::LethalEffect) != GateMechanism::ReflectiveGate) {
        fail(ErrorCode::SchemaError, "AS3bv must gate LethalEffect reflectively");
    }
}

PolicyConfig make_policy(PolicyKind kind) {
    PolicyConfig policy;
    policy.kind = kind;
    for (ActionTier tier : {ActionTier::Navigate, ActionTier::Surveil, ActionTier::NonLethalEffect,
                            ActionTier::LethalEffect}) {
        switch (kind) {
            case PolicyKind::AS1v: policy.tier_map[tier] = GateMechanism::ReflectiveGate; break;
            case PolicyKind::AS2b: policy.tier_map[tier] = GateMechanism::BayesianGate; break;
            case PolicyKind::AS3bv:
                policy.tier_map[tier] = tier == ActionTier::LethalEffect
                                            ? GateMechanism::ReflectiveGate
                                            : GateMechanism::BayesianGate;
                break;
        }
        policy.authorization_required[tier] = false;
        policy.min_redundancy[tier] = tier == ActionTier::LethalEffect ? 2 : 1;
    }
    return policy;
}

namespace {

const ActionCandidate& find_candidate(const GateInputs& inputs, const std::string& action_id) {
    for (const ActionCandidate& candidate : inputs.candidates) {
        if (candidate.action.id == action_id) return candidate;
    }
    fail(ErrorCode::DanglingReference, "action '" + action_id + "' not in the decision menu");
}

void push_check(ActionDecision& decision, std::string name, double value, double threshold,
                std::string cmp, bool pass) {
    decision.checks.push_back({std::move(name), value, threshold, std::move(cmp), pass});
}

ActionDecision knowledge_gate(const PolicyConfig& policy, const ActionCandidate& candidate,
                              const GateInputs& inputs) {
    ActionDecision decision;
    decision.action_id = candidate.action.id;
    decision.chosen_action = candidate.action.id;
    decision.mechanism = "knowledge";
    decision.verdict_kind = to_string(candidate.verdict.kind);
    decision.apt = candidate.aaa.apt;

    decision.envelope = envelope_check(policy.envelope, inputs.track);
    const bool knowledge = candidate.verdict.kind == VerdictKind::Knowledge;
    push_check(decision, "envelope", decision.envelope.pass ? 1.0 : 0.0, 1.0, "==",
               decision.envelope.pass);
    push_check(decision, "verdict_is_knowledge", knowledge ? 1.0 : 0.0, 1.0, "==", knowledge);
    push_check(decision, "apt", candidate.aaa.apt ? 1.0 : 0.0, 1.0, "==", candidate.aaa.apt);

    decision.outcome = decision.envelope.pass && knowledge && candidate.aaa.apt
                           ? DecisionOutcome::Execute
                           : DecisionOutcome::Withhold;
    return decision;
}

ActionDecision expected_utility_gate(const PolicyConfig& policy, const ActionCandidate& requested,
                                     const GateInputs& inputs) {
    if (!inputs.credences || !inputs.utilities) {
        fail(ErrorCode::InvalidArgument, "expected-utility gate needs credences and utilities");
    }
    ActionDecision decision;
    decision.action_id = requested.action.id;
    decision.mechanism = "expected_utility";
    decision.verdict_kind = to_string(requested.verdict.kind);

    // Argmax over the menu; ties break to the lexicographically smallest id.
    std::string best_id;
    double best_eu = 0.0;
    for (const ActionCandidate& candidate : inputs.candidates) {
        const double eu = expected_utility(*inputs.credences, candidate.action, *inputs.utilities);
        decision.eu_table[candidate.action.id] = eu;
        if (best_id.empty() || eu > best_eu || (eu == best_eu && candidate.action.id < best_id)) {
            best_id = candidate.action.id;
            best_eu = eu;
        }
    }
    decision.chosen_action = best_id;
    const bool pass = best_eu >= policy.thresholds.theta_eu;
    push_check(decision, "max_eu", best_eu, policy.thresholds.theta_eu, ">=", pass);
    decision.outcome = pass ? DecisionOutcome::Execute : DecisionOutcome::Withhold;
    if (!pass) decision.chosen_action = requested.action.id;
    return decision;
}

ActionDecision reflective_gate(const PolicyConfig& policy, const ActionCandidate& candidate,
                               const GateInputs& inputs) {
    ActionDecision decision;
    decision.action_id = candidate.action.id;
    decision.chosen_action = candidate.action.id;
    decision.mechanism = "reflective";
    decision.verdict_kind = to_string(candidate.verdict.kind);
    decision.apt = candidate.aaa.apt;
    decision.reflective = candidate.reflective.reflective;
    decision.authorization = inputs.authorization;

    const int floor = policy.redundancy_floor(ActionTier::LethalEffect);
    const bool redundancy_ok = candidate.redundancy >= floor;
    push_check(decision, "redundancy", candidate.redundancy, floor, ">=", redundancy_ok);
    if (!redundancy_ok) {
        // Justification collapsed below the lethal floor: pull back.
        decision.outcome = DecisionOutcome::Withdraw;
        return decision;
    }

    push_check(decision, "reflective", candidate.reflective.reflective ? 1.0 : 0.0, 1.0, "==",
               candidate.reflective.reflective);
    push_check(decision, "meta_credence", candidate.reflective.meta_credence,
               policy.thresholds.theta_meta, ">=",
               candidate.reflective.meta_credence >= policy.thresholds.theta_meta);
    push_check(decision, "coherence_gap", candidate.reflective.coherence_gap,
               policy.thresholds.delta_coh, "<=",
               candidate.reflective.coherence_gap <= policy.thresholds.delta_coh);
    push_check(decision, "justified_lethal", candidate.justified_lethal ? 1.0 : 0.0, 1.0, "==",
               candidate.justified_lethal);

    bool authorized = true;
    if (policy.needs_authorization(candidate.action.tier)) {
        if (!inputs.authorization.has_value()) {
            fail(ErrorCode::UnauthorizedLethal,
                 "action '" + candidate.action.id + "' requires a scripted authorization input");
        }
        authorized = *inputs.authorization;
        push_check(decision, "authorization", authorized ? 1.0 : 0.0, 1.0, "==", authorized);
    }

    decision.outcome = candidate.reflective.reflective && candidate.justified_lethal && authorized
                           ? DecisionOutcome::Execute
                           : DecisionOutcome::Withhold;
    return decision;
}

}  // namespace

ActionDecision decide(const PolicyConfig& policy, const std::string& action_id,
                      const GateInputs& inputs) {
    const ActionCandidate& candidate = find_candidate(inputs, action_id);
    candidate.action.validate();

    switch (policy.kind) {
        case PolicyKind::AS1v:
            return knowledge_gate(policy, candidate, inputs);
        case PolicyKind::AS2b:
            return expected_utility_gate(policy, candidate, inputs);
        case PolicyKind::AS3bv:
            break;
    }
    if (policy.mechanism(candidate.action.tier) == GateMechanism::BayesianGate) {
        return expected_utility_gate(policy, candidate, inputs);
    }
    return reflective_gate(policy, candidate, inputs);
}

ActionDecision abort_or_retarget(const ActionDecision& in_flight, const PolicyConfig& policy,
                                 const GateInputs& updated_inputs) {
    if (in_flight.outcome != DecisionOutcome::Execute &&
        in_flight.outcome != DecisionOutcome::Retarget) {
        fail(ErrorCode::InvalidArgument, "abort_or_retarget needs an in-flight execution");
    }
    const std::string current = in_flight.chosen_action;
    ActionDecision regated = decide(policy, current, updated_inputs);
    regated.action_id = in_flight.action_id;

    if (regated.outcome != DecisionOutcome::Execute) {
        regated.outcome = DecisionOutcome::Abort;
        regated.chosen_action = current;
        return regated;
    }

    if (regated.chosen_action != current) {
        // The expected-utility argmax moved to a different target.
        regated.outcome = DecisionOutcome::Retarget;
        return regated;
    }

    // Knowledge/reflective gates: scan for a strictly better passing alternative.
    if (regated.mechanism != "expected_utility" && updated_inputs.credences &&
        updated_inputs.utilities) {
        const ActionCandidate& current_candidate = find_candidate(updated_inputs, current);
        const double current_eu =
            expected_utility(*updated_inputs.credences, current_candidate.action,
                             *updated_inputs.utilities);
        const ActionCandidate* best = nullptr;
        double best_eu = current_eu;
        for (const ActionCandidate& alternative : updated_inputs.candidates) {
            if (alternative.action.id == current) continue;
            const double eu = expected_utility(*updated_inputs.credences, alternative.action,
                                               *updated_inputs.utilities);
            if (eu <= best_eu) continue;
            ActionDecision gate = decide(policy, alternative.action.id, updated_inputs);
            if (gate.outcome == DecisionOutcome::Execute) {
                best = &alternative;
                best_eu = eu;
            }
        }
        if (best) {
            ActionDecision retargeted = decide(policy, best->action.id, updated_inputs);
            retargeted.action_id = in_flight.action_id;
            retargeted.outcome = DecisionOutcome::Retarget;
            return retargeted;
        }
    }
    if (in_flight.outcome == DecisionOutcome::Retarget) {
        regated.outcome = DecisionOutcome::Retarget;  // provenance survives later re-gates
    }
    return regated;
}

}  // namespace epistate
