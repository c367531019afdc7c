#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epistate/doxastics.hpp"
#include "epistate/epistemics.hpp"

namespace epistate {

enum class ActionTier { Navigate, Surveil, NonLethalEffect, LethalEffect };

const char* to_string(ActionTier tier);
ActionTier action_tier_from_string(std::string_view name);

struct ActionSpec {
    std::string id;
    ActionTier tier = ActionTier::Navigate;
    std::string target_entity;      // required for LethalEffect
    std::string outcome_partition;  // partition whose hypotheses span the action's outcomes
    std::string gate_label;         // label that must amount to knowledge for knowledge gates
    std::string utility_key;        // row of the utility model
    int flight_ticks = 0;           // in-flight window before the effect lands

    void validate() const;
};

// Utilities per (action row, outcome hypothesis). Harm entries for protected
// classes must be non-positive and strictly worse than a miss.
struct UtilityModel {
    std::map<std::string, std::map<std::string, double>> table;

    double utility(const std::string& utility_key, const std::string& outcome) const;
};

double expected_utility(const CredenceFunction& c, const ActionSpec& action,
                        const UtilityModel& model);

enum class EnvelopePredicateKind { RangeClosing, VelocityBand, ManeuverCapable, RangeBelow };

struct EnvelopePredicate {
    EnvelopePredicateKind kind = EnvelopePredicateKind::RangeClosing;
    std::string name;
    double min_value = 0.0;
    double max_value = 0.0;
};

struct TrackState {
    std::optional<double> range;
    std::optional<double> range_rate;  // negative = closing
    std::optional<double> speed;
    std::optional<bool> can_maneuver;
};

struct PredicateResult {
    std::string name;
    bool pass = false;
};

struct EnvelopeResult {
    bool pass = true;  // empty envelope is vacuously true
    std::vector<PredicateResult> results;
};

EnvelopeResult envelope_check(const std::vector<EnvelopePredicate>& envelope,
                              const TrackState& track);

enum class PolicyKind { AS1v, AS2b, AS3bv };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

enum class GateMechanism { BayesianGate, ReflectiveGate };

struct PolicyThresholds {
    double theta_rel = 0.8;
    double tau_track = 0.9;
    double theta_meta = 0.95;
    double delta_coh = 0.05;
    double phi_apt = 0.9;
    double theta_eu = 0.0;
    // Asymmetric-evaluation multiplier on theta_rel for machine agents.
    double machine_rel_multiplier = 1.0;
    LockeanThresholds lockean;

    double effective_theta_rel() const { return theta_rel * machine_rel_multiplier; }
};

struct PolicyConfig {
    PolicyKind kind = PolicyKind::AS1v;
    PolicyThresholds thresholds;
    std::vector<EnvelopePredicate> envelope;
    std::map<ActionTier, GateMechanism> tier_map;
    std::map<ActionTier, bool> authorization_required;
    std::map<ActionTier, int> min_redundancy;  // justification redundancy floor per tier

    GateMechanism mechanism(ActionTier tier) const;
    bool needs_authorization(ActionTier tier) const;
    int redundancy_floor(ActionTier tier) const;
    void validate() const;
};

// Defaults per architecture: AS1v routes every tier through the knowledge
// gate, AS2b every tier through expected utility, AS3bv splits low-risk tiers
// to the Bayesian gate and LethalEffect to the reflective gate.
PolicyConfig make_policy(PolicyKind kind);

// Per-action epistemic evaluation, assembled by the harness.
struct ActionCandidate {
    ActionSpec action;
    EpistemicVerdict verdict;       // for the action's gate proposition
    AAAResult aaa;
    ReflectiveRecord reflective;
    int redundancy = 0;             // independent channels behind the gate belief
    bool justified_lethal = false;  // justified() at the lethal-tier redundancy floor
};

struct GateInputs {
    std::vector<ActionCandidate> candidates;  // the action menu
    TrackState track;
    const CredenceFunction* credences = nullptr;
    const UtilityModel* utilities = nullptr;
    std::optional<bool> authorization;  // scripted human input; nullopt = not supplied
};

enum class DecisionOutcome { Execute, Withhold, Withdraw, Abort, Retarget };

const char* to_string(DecisionOutcome outcome);

struct GateCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string cmp;  // ">=", "<=", "==" — enough to recompute pass
    bool pass = false;
};

struct ActionDecision {
    std::string action_id;   // requested action
    std::string chosen_action;  // executed action (argmax / retarget may differ)
    DecisionOutcome outcome = DecisionOutcome::Withhold;
    std::string mechanism;   // gate that ran: "knowledge", "expected_utility", "reflective"
    std::vector<GateCheck> checks;
    EnvelopeResult envelope;
    std::map<std::string, double> eu_table;  // action id -> EU (expected-utility gates)
    std::optional<bool> authorization;
    std::string verdict_kind;
    bool apt = false;
    bool reflective = false;
};

// Pure gating function. action_id must name a candidate in the inputs.
ActionDecision decide(const PolicyConfig& policy, const std::string& action_id,
                      const GateInputs& inputs);

// Re-runs the gate mid-flight on refreshed inputs: a failed gate aborts; an
// alternative candidate that passes with strictly higher EU retargets;
// otherwise the execution stands.
ActionDecision abort_or_retarget(const ActionDecision& in_flight, const PolicyConfig& policy,
                                 const GateInputs& updated_inputs);

}  // namespace epistate
