#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epistate/world.hpp"

namespace epistate {

// Row-stochastic map P(reported label | true label) over a declared label set.
// For entity channels the labels are class names; for region channels they are
// "Present"/"Absent".
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;  // rows[i][j] = P(report labels[j] | truth labels[i])

    std::size_t index_of(const std::string& label) const;
    double prob(const std::string& true_label, const std::string& reported) const;
    void validate() const;  // each row sums to 1 within 1e-12

    static ConfusionMatrix identity(std::vector<std::string> labels);
    // Diagonal accuracy p, off-diagonal mass split evenly.
    static ConfusionMatrix symmetric(std::vector<std::string> labels, double accuracy);
};

struct SpoofRule {
    int from_tick = 0;
    int to_tick = 0;  // inclusive; window must be non-empty
    std::string fabricated_label;

    bool active_at(int tick) const { return tick >= from_tick && tick <= to_tick; }
};

struct Channel {
    std::string id;
    std::string process_id;   // links reports to the reliabilist ledger
    std::string source_tag;   // non-empty: shares a source with same-tagged channels
    ConfusionMatrix confusion;
    double availability = 1.0;
    std::optional<SpoofRule> compromise;
};

struct ObservationTarget {
    enum class Kind { Entity, Region } kind = Kind::Entity;
    std::string entity_id;                    // Entity
    EntityClass cls = EntityClass::Civilian;  // Region: class watched for
    GridPos center{};
    int radius = 0;

    std::string key() const;
    // Label set truth resolves to; Region targets use Present/Absent.
    std::string truth_label(const WorldState& world) const;
    Proposition proposition_for_label(const std::string& label) const;
};

inline constexpr const char* kPresentLabel = "Present";
inline constexpr const char* kAbsentLabel = "Absent";

struct EvidenceItem {
    std::string id;  // "<channel>@<tick>"
    std::string channel_id;
    std::string process_id;
    std::string source_tag;
    int tick = 0;
    std::string subject;         // target key
    std::string reported_label;
    std::map<std::string, double> likelihoods;  // hypothesis label -> P(this report | label)
};

// One report attempt. Availability gates first; an active spoof then replaces
// the channel output wholesale — the fabricated report needs no ground truth,
// and the item's likelihoods still describe the honest confusion model (the
// consumer does not know about the spoof).
std::optional<EvidenceItem> observe(const Channel& channel, const WorldState& world,
                                    const ObservationTarget& target, uint64_t seed);

Channel spoof(const Channel& channel, const SpoofRule& rule);

enum class DegradeMode { Offline, ReducedAvailability };

Channel degrade(const Channel& channel, DegradeMode mode, double p = 0.0);

double likelihood_of(const EvidenceItem& item, const std::string& hypothesis);

}  // namespace epistate
