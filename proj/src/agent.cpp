#include "epistate/agent.hpp"

#include <algorithm>
#include <cmath>

#include "epistate/rng.hpp"

namespace epistate {

AgentSim::AgentSim(const Pipeline& pipeline, WorldState initial_world, ProcessLedger preload,
                   uint64_t seed)
    : pipeline_(pipeline),
      world_(std::move(initial_world)),
      ledger_(std::move(preload)),
      seed_(seed) {
    pipeline_.agent.thresholds.validate();
    credences_ = prior_init(pipeline_.partitions, pipeline_.agent.prior_spec);
    for (const Partition& partition : pipeline_.partitions) {
        JustificationTrace trace;
        trace.belief = partition.proposition(partition.labels.front());
        traces_[partition.id] = std::move(trace);
    }
}

const Partition* AgentSim::partition(const std::string& id) const {
    for (const Partition& p : pipeline_.partitions) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

void AgentSim::apply_schedule(int tick) {
    for (BoundChannel& bound : pipeline_.channels) {
        for (const DegradeStep& step : bound.schedule) {
            if (step.at_tick == tick) {
                bound.channel = degrade(bound.channel, step.mode, step.availability);
            }
        }
    }
}

void AgentSim::observe_all() {
    for (const BoundChannel& bound : pipeline_.channels) {
        const Partition* part = partition(bound.partition_id);
        if (!part) {
            fail(ErrorCode::DanglingReference,
                 "channel '" + bound.channel.id + "' bound to unknown partition '" +
                     bound.partition_id + "'");
        }
        const uint64_t obs_seed = derive_seed(derive_seed(seed_, "obs/" + bound.channel.id),
                                              static_cast<uint64_t>(world_.time));

        std::optional<EvidenceItem> item;
        const bool subject_present = part->target.kind != ObservationTarget::Kind::Entity ||
                                     world_.has_entity(part->target.entity_id);
        if (subject_present) {
            item = observe(bound.channel, world_, part->target, obs_seed);
        } else if (bound.channel.compromise && bound.channel.compromise->active_at(world_.time)) {
            // A fabricated feed keeps reporting even when the subject is gone.
            item = observe(bound.channel, world_, part->target, obs_seed);
        }
        if (!item) continue;

        JustificationTrace& trace = traces_[part->id];
        const bool trusted = !pipeline_.agent.distrusted_channels.contains(bound.channel.id);
        const bool tag_fresh = item->source_tag.empty() ||
                               !seen_tags_[part->id].contains(item->source_tag);

        TraceRecord record;
        record.process_id = item->process_id;
        record.evidence_id = item->id;
        record.output_label = item->reported_label;
        record.used_in_update = trusted && tag_fresh;
        trace.records.push_back(record);
        trace.channel_source_tags[item->channel_id] = item->source_tag;

        if (pipeline_.record_in_run && subject_present) {
            const std::string truth = part->target.truth_label(world_);
            ledger_ = record_process(ledger_, item->process_id, item->reported_label == truth);
        }

        if (record.used_in_update) {
            if (!item->source_tag.empty()) seen_tags_[part->id].insert(item->source_tag);
            credences_ = update_credence(credences_, *item);

            double lo = 1.0, hi = 0.0;
            for (const auto& [label, like] : item->likelihoods) {
                lo = std::min(lo, like);
                hi = std::max(hi, like);
            }
            weight_[part->id][item->channel_id] += std::log(hi / std::max(lo, 1e-12));
        }
    }
}

void AgentSim::run_to_horizon() {
    for (int t = observed_ticks_; t < pipeline_.horizon; ++t) {
        if (t > 0) world_ = advance(world_, 1);
        apply_schedule(world_.time);
        observe_all();
        ++observed_ticks_;
    }
}

void AgentSim::flight_step() {
    world_ = advance(world_, 1);
    apply_schedule(world_.time);
    observe_all();
    ++observed_ticks_;
}

JustificationTrace AgentSim::trace_for(const std::string& partition_id) const {
    auto it = traces_.find(partition_id);
    if (it == traces_.end()) {
        fail(ErrorCode::DanglingReference, "no trace for partition '" + partition_id + "'");
    }
    return it->second;
}

DoxasticAttitude AgentSim::attitude(const Proposition& prop) const {
    return attitude_of(credences_, prop, pipeline_.agent.thresholds);
}

std::vector<std::pair<std::string, std::string>> AgentSim::used_reports(
    const std::string& partition_id) const {
    std::vector<std::pair<std::string, std::string>> reports;
    auto it = traces_.find(partition_id);
    if (it == traces_.end()) return reports;
    for (const TraceRecord& record : it->second.records) {
        if (record.used_in_update) reports.emplace_back(record.process_id, record.output_label);
    }
    return reports;
}

DoxasticReport AgentSim::doxastic_report() const {
    DoxasticReport report;
    report.agent_id = pipeline_.agent.id;
    report.tick = world_.time;
    for (const CredenceFunction::Block& block : credences_.blocks) {
        // Channels ranked by cumulative evidence weight, ties by id.
        std::vector<std::pair<std::string, double>> ranked;
        auto weights = weight_.find(block.partition.id);
        if (weights != weight_.end()) {
            ranked.assign(weights->second.begin(), weights->second.end());
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
            });
        }
        std::vector<std::string> top_channels;
        for (const auto& [id, w] : ranked) top_channels.push_back(id);

        for (std::size_t i = 0; i < block.partition.labels.size(); ++i) {
            DoxasticRecord record;
            record.proposition = block.partition.proposition(block.partition.labels[i]).key();
            record.credence = block.credences[i];
            record.attitude = to_string(
                attitude_of(credences_, block.partition.proposition(block.partition.labels[i]),
                            pipeline_.agent.thresholds));
            record.top_channels = top_channels;
            record.justified = false;  // filled by the runner, which owns policy thresholds
            report.records.push_back(std::move(record));
        }
    }
    std::sort(report.records.begin(), report.records.end(),
              [](const DoxasticRecord& a, const DoxasticRecord& b) {
                  return a.proposition < b.proposition;
              });
    return report;
}

DoxasticAttitude replay_attitude(const Pipeline& pipeline, const WorldState& world,
                                 const ProcessLedger& preload, const Proposition& prop,
                                 uint64_t seed) {
    AgentSim sim(pipeline, world, preload, seed);
    sim.run_to_horizon();
    return sim.attitude(prop);
}

}  // namespace epistate
