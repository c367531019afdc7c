#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "epistate/doxastics.hpp"
#include "epistate/epistemics.hpp"
#include "epistate/evidence.hpp"

namespace epistate {

struct DegradeStep {
    int at_tick = 0;
    DegradeMode mode = DegradeMode::Offline;
    double availability = 0.0;  // ReducedAvailability payload
};

// A channel wired to the partition it reports on, with its scheduled
// degradations over the run.
struct BoundChannel {
    Channel channel;
    std::string partition_id;
    std::vector<DegradeStep> schedule;
};

struct AgentConfig {
    std::string id;
    std::set<std::string> distrusted_channels;  // reports received but never update credence
    LockeanThresholds thresholds;
    std::map<std::string, std::map<std::string, double>> prior_spec;  // partition -> label -> p
};

// Everything needed to rerun the belief-forming pipeline from scratch, which
// is what tracking and aptness replays do against forked worlds.
struct Pipeline {
    AgentConfig agent;
    std::vector<Partition> partitions;
    std::vector<BoundChannel> channels;
    int horizon = 1;            // observation ticks 0..horizon-1
    bool record_in_run = true;  // score each report against ground truth into the ledger
};

// Step-wise executor. Observation at the current world time, then the world
// advances; after run_to_horizon() the world sits at the last observed tick,
// which is the decision time. flight_step() continues the same loop for
// in-flight re-evaluation.
class AgentSim {
public:
    AgentSim(const Pipeline& pipeline, WorldState initial_world, ProcessLedger preload,
             uint64_t seed);

    void run_to_horizon();
    void flight_step();

    const WorldState& world() const { return world_; }
    const CredenceFunction& credences() const { return credences_; }
    const ProcessLedger& ledger() const { return ledger_; }
    const std::map<std::string, JustificationTrace>& traces() const { return traces_; }
    const Partition* partition(const std::string& id) const;

    JustificationTrace trace_for(const std::string& partition_id) const;
    DoxasticAttitude attitude(const Proposition& prop) const;
    // Reports that updated the credence block of a partition: (process, label).
    std::vector<std::pair<std::string, std::string>> used_reports(
        const std::string& partition_id) const;

    DoxasticReport doxastic_report() const;

private:
    void observe_all();
    void apply_schedule(int tick);

    Pipeline pipeline_;
    WorldState world_;
    CredenceFunction credences_;
    ProcessLedger ledger_;
    uint64_t seed_;
    int observed_ticks_ = 0;
    std::map<std::string, JustificationTrace> traces_;             // per partition id
    std::map<std::string, std::set<std::string>> seen_tags_;       // shared-source bookkeeping
    std::map<std::string, std::map<std::string, double>> weight_;  // partition -> channel -> weight
};

// Convenience wrapper: full run, final attitude toward a proposition.
DoxasticAttitude replay_attitude(const Pipeline& pipeline, const WorldState& world,
                                 const ProcessLedger& preload, const Proposition& prop,
                                 uint64_t seed);

}  // namespace epistate
