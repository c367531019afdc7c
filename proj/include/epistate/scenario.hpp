#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "epistate/agent.hpp"
#include "epistate/hnpm.hpp"
#include "epistate/policy.hpp"

namespace epistate {

using Json = nlohmann::json;

// One tracked proposition the run must classify.
struct VerdictRequest {
    std::string name;
    std::string partition_id;
    std::string label;
    int min_redundancy = 1;  // belief-level justification floor
};

struct DecisionRequest {
    std::string request_action;       // defaults to the lexicographically first action
    std::optional<bool> authorization;
};

struct ReviewCriterion {
    std::string name;
    std::string metric;
    std::string policy;
    std::string cmp;  // lt | le | gt | ge | eq
    std::string other_policy;     // relative criteria
    std::optional<double> value;  // absolute criteria
};

struct AssayStage {
    std::string name;
    int difficulty = 0;
    Json overrides;  // JSON merge-patch over the base document
};

// Fully validated scenario with every default filled in. `effective` holds the
// expanded document that reports echo, and the corpus fingerprint covers
// everything but the policy block so that policy-override runs of one corpus
// stay comparable.
struct ScenarioSpec {
    std::string name;
    uint64_t master_seed = 0;
    int trials = 1;
    int horizon = 1;
    int tracking_samples = 32;
    int apt_reruns = 8;
    bool record_in_run = true;

    std::vector<Entity> entities;
    std::vector<ExogenousEvent> events;
    std::vector<Partition> partitions;
    std::vector<BoundChannel> channels;
    ProcessLedger ledger;
    AgentConfig agent;
    PolicyConfig policy;
    TrackState track;
    std::vector<VerdictRequest> verdicts;
    std::vector<ActionSpec> actions;
    std::optional<DecisionRequest> decision;
    UtilityModel utilities;
    std::optional<HnpmModel> hierarchy;
    std::vector<AssayStage> assays;
    std::vector<ReviewCriterion> review_criteria;

    Json effective;           // document with defaults made explicit
    std::string fingerprint;  // corpus identity (policy-independent)

    WorldState initial_world(uint64_t rng_root, const std::string& stream_name) const;
    const Partition* find_partition(const std::string& id) const;
};

ScenarioSpec load_scenario(const Json& document);
ScenarioSpec load_scenario_file(const std::string& path);

// Override the policy architecture while keeping the corpus identity: tier
// routing resets to the new kind's defaults, thresholds and envelope carry
// over.
ScenarioSpec with_policy_override(const ScenarioSpec& spec, PolicyKind kind);

// Canonical world serialization (sorted entity ids); byte-equality implies
// state equality.
Json world_to_json(const WorldState& world);

}  // namespace epistate
