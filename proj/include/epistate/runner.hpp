#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epistate/scenario.hpp"

namespace epistate {

struct VerdictLog {
    std::string name;
    std::string partition_id;
    std::string label;
    double credence = 0.0;
    int redundancy = 0;
    EpistemicVerdict verdict;
};

struct DecisionLog {
    ActionDecision decision;
    ActionTier requested_tier = ActionTier::Navigate;
    ActionTier chosen_tier = ActionTier::Navigate;
    std::string target_entity;
    std::string target_class_at_impact;  // empty when no target or target missing
    bool lethal = false;                 // requested action sits on the lethal tier
    bool gate_label_true = false;        // chosen action's gate label held at decision time
    bool legitimate_engagement = false;
    bool false_positive_lethal = false;
    bool civilian_harm = false;
    bool envelope_violation = false;
};

struct TrialLog {
    int trial = 0;
    std::vector<VerdictLog> verdicts;
    std::vector<DecisionLog> decisions;
    DoxasticReport doxastic;
};

struct Aggregates {
    long decisions = 0;
    long executes = 0;
    long withholds = 0;
    long withdraws = 0;
    long aborts = 0;
    long retargets = 0;
    long lethal_decisions = 0;
    long lethal_executes = 0;
    long legitimate_lethal_executes = 0;
    long false_positive_lethal = 0;
    long civilian_harm = 0;
    long envelope_violations = 0;
    double legitimate_engagement_rate = 0.0;
    double withdrawal_rate = 0.0;
    double gate_record_completeness = 1.0;
    double mean_process_reliability = 0.0;
    std::map<std::string, long> verdict_histogram;
};

struct RunReport {
    std::string scenario;
    std::string policy;
    std::string fingerprint;
    uint64_t master_seed = 0;
    int trials = 0;
    bool redacted = false;  // gate records dropped from the logs
    Json effective_config;
    std::vector<TrialLog> logs;
    Aggregates aggregates;
};

struct RunOptions {
    std::optional<PolicyKind> policy_override;
    int threads = 1;       // >1 shards trials; merge order keeps reports byte-identical
    bool redact_gate_records = false;
};

RunReport run_trials(const ScenarioSpec& spec, const RunOptions& options = {});

// Re-derives outcome from the gate record alone and compares; the complete-
// record invariant the report surface is audited against.
bool record_recomputes(const ActionDecision& decision, double theta_eu);

struct CompetenceProfile {
    struct Row {
        std::string stage;
        int difficulty = 0;
        std::string policy;
        int trials = 0;
        long decisions = 0;
        double success_rate = 0.0;  // decisions whose gate label matched ground truth
        double harm_rate = 0.0;     // executed lethal actions on protected classes
    };
    std::vector<Row> rows;
};

// Behavioral know-how assay over the scenario's staged envelopes. Stages must
// be declared in non-decreasing difficulty. Competence is read off behavior
// only, never off gate internals, so redacted runs produce identical rates.
CompetenceProfile assay_know_how(const ScenarioSpec& spec, const RunOptions& options = {});

}  // namespace epistate
