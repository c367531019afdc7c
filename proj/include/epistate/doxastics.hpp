#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epistate/evidence.hpp"
#include "epistate/proposition.hpp"

namespace epistate {

// An exhaustive hypothesis set over one subject, e.g. {Civilian, Belligerent}
// for an entity or {Present, Absent} for a region. The partition id doubles as
// the subject key evidence items address.
struct Partition {
    std::string id;
    ObservationTarget target;
    std::vector<std::string> labels;

    Proposition proposition(const std::string& label) const {
        return target.proposition_for_label(label);
    }
};

struct CredenceFunction {
    struct Block {
        Partition partition;
        std::vector<double> credences;  // aligned with partition.labels; sums to 1
    };
    std::vector<Block> blocks;  // sorted by partition id

    const Block* find_block(const std::string& partition_id) const;
    // Credence in a proposition; nullopt when the proposition is untracked.
    std::optional<double> lookup(const Proposition& prop) const;
};

// Uniform priors where unspecified; rejects non-normalized or dogmatic
// (exactly 0/1) priors on contingent hypotheses.
CredenceFunction prior_init(const std::vector<Partition>& partitions,
                            const std::map<std::string, std::map<std::string, double>>& prior_spec);

// Bayesian conditionalization on one evidence item, addressed to the partition
// whose id equals the item's subject key. Returns a new function.
CredenceFunction update_credence(const CredenceFunction& c, const EvidenceItem& item);

enum class DoxasticAttitude { Belief, Disbelief, Suspension, Ignorance };

const char* to_string(DoxasticAttitude attitude);

struct LockeanThresholds {
    double belief = 0.9;
    double disbelief = 0.1;

    void validate() const;
};

DoxasticAttitude attitude_of(const CredenceFunction& c, const Proposition& prop,
                             const LockeanThresholds& thresholds);

struct DoxasticRecord {
    std::string proposition;  // canonical key
    double credence = 0.0;
    std::string attitude;
    std::vector<std::string> top_channels;  // by cumulative evidence weight, then id
    bool justified = false;
};

struct DoxasticReport {
    std::string agent_id;
    int tick = 0;
    std::vector<DoxasticRecord> records;  // sorted by proposition key
};

}  // namespace epistate
