#include "epistate/epistemics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "epistate/rng.hpp"

namespace epistate {

ProcessLedger::Counts ProcessLedger::counts(const std::string& process_id) const {
    auto it = processes.find(process_id);
    if (it == processes.end()) return {};
    return it->second;
}

ProcessLedger record_process(const ProcessLedger& ledger, const std::string& process_id,
                             bool output_was_true) {
    ProcessLedger next = ledger;
    ProcessLedger::Counts& counts = next.processes[process_id];
    counts.trials += 1;
    if (output_was_true) counts.successes += 1;
    return next;
}

double estimate_reliability(const ProcessLedger& ledger, const std::string& process_id) {
    const ProcessLedger::Counts counts = ledger.counts(process_id);
    if (counts.trials == 0) {
        fail(ErrorCode::NoHistory, "process '" + process_id + "' has no recorded trials");
    }
    return static_cast<double>(counts.successes + 1) / static_cast<double>(counts.trials + 2);
}

std::vector<std::string> JustificationTrace::process_ids() const {
    std::vector<std::string> ids;
    for (const TraceRecord& record : records) {
        if (std::find(ids.begin(), ids.end(), record.process_id) == ids.end()) {
            ids.push_back(record.process_id);
        }
    }
    return ids;
}

int JustificationTrace::redundancy_count() const {
    std::set<std::string> independent;
    for (const auto& [channel_id, tag] : channel_source_tags) {
        independent.insert(tag.empty() ? "channel:" + channel_id : "tag:" + tag);
    }
    return static_cast<int>(independent.size());
}

bool justified(const JustificationTrace& trace, const ProcessLedger& ledger, double theta_rel,
               int min_redundancy) {
    if (trace.records.empty()) return false;
    for (const std::string& process_id : trace.process_ids()) {
        if (estimate_reliability(ledger, process_id) < theta_rel) return false;
    }
    return trace.redundancy_count() >= min_redundancy;
}

TrackingMenus default_tracking_menus(const Proposition& prop, const WorldState& world,
                                     const std::vector<std::string>& partition_labels) {
    TrackingMenus menus;
    if (prop.kind == PropositionKind::ClassIs) {
        if (!world.has_entity(prop.subject)) {
            fail(ErrorCode::InvalidIntervention,
                 "tracking subject '" + prop.subject + "' not in world");
        }
        for (const std::string& label : partition_labels) {
            const EntityClass cls = entity_class_from_string(label);
            Intervention iv;
            iv.kind = InterventionKind::ReplaceClass;
            iv.target = prop.subject;
            iv.new_class = cls;
            if (cls == prop.cls) {
                menus.preserve.push_back({iv});  // no-op edit: identical truth valuations
            } else {
                menus.falsify.push_back({iv});
            }
        }
        Intervention removal;
        removal.kind = InterventionKind::RemoveEntity;
        removal.target = prop.subject;
        menus.falsify.push_back({removal});
        menus.preserve.push_back({});  // pure noise resample
    } else {
        // Existential: falsify by editing every in-region witness.
        const Proposition positive = prop.negated ? prop.negation() : prop;
        const long long r2 = static_cast<long long>(positive.radius) * positive.radius;
        std::vector<std::string> witnesses;
        for (const Entity& e : world.entities) {
            if (e.true_class == positive.cls &&
                squared_distance(e.position, positive.center) <= r2) {
                witnesses.push_back(e.id);
            }
        }
        InterventionBundle remove_all;
        InterventionBundle reclass_all;
        for (const std::string& id : witnesses) {
            Intervention removal;
            removal.kind = InterventionKind::RemoveEntity;
            removal.target = id;
            remove_all.push_back(removal);
            Intervention reclass;
            reclass.kind = InterventionKind::ReplaceClass;
            reclass.target = id;
            reclass.new_class = positive.cls == EntityClass::Belligerent ? EntityClass::Civilian
                                                                         : EntityClass::Belligerent;
            reclass_all.push_back(reclass);
        }
        // For a negated existential the "false" direction means adding a witness.
        if (prop.negated) {
            Intervention add;
            add.kind = InterventionKind::AddEntity;
            add.entity = Entity{"__cf_witness", positive.cls, positive.center, {0, 0}};
            menus.falsify.push_back({add});
            menus.preserve.push_back({});
        } else {
            if (witnesses.empty()) {
                fail(ErrorCode::InvalidIntervention, "existential proposition has no witnesses");
            }
            menus.falsify.push_back(std::move(remove_all));
            menus.falsify.push_back(std::move(reclass_all));
            menus.preserve.push_back({});
        }
    }
    return menus;
}

namespace {

WorldState apply_bundle(const WorldState& world, const InterventionBundle& bundle, uint64_t seed) {
    WorldState result = world;
    for (std::size_t i = 0; i < bundle.size(); ++i) {
        result = fork_counterfactual(result, bundle[i], derive_seed(seed, i));
    }
    return result;
}

}  // namespace

TrackingResult tracking_check(const AttitudeReplayFn& replay, const WorldState& base_world,
                              const TrackingMenus& menus, int n_samples, uint64_t seed) {
    if (n_samples < 1) fail(ErrorCode::InvalidArgument, "tracking needs n_samples >= 1");
    if (menus.falsify.empty() || menus.preserve.empty()) {
        fail(ErrorCode::InvalidIntervention, "tracking menus must be non-empty");
    }

    TrackingResult result;
    result.samples = n_samples;
    int c_pass = 0;
    int d_pass = 0;
    for (int i = 0; i < n_samples; ++i) {
        const uint64_t sample_seed = derive_seed(seed, static_cast<uint64_t>(i));
        Rng rng(derive_seed(sample_seed, "menu"));

        const InterventionBundle& falsify =
            menus.falsify[rng.uniform_int(0, static_cast<int>(menus.falsify.size()) - 1)];
        WorldState false_world = apply_bundle(base_world, falsify, derive_seed(sample_seed, "cf"));
        if (replay(false_world, derive_seed(sample_seed, "replay_c")) != DoxasticAttitude::Belief) {
            ++c_pass;
        }

        const InterventionBundle& preserve =
            menus.preserve[rng.uniform_int(0, static_cast<int>(menus.preserve.size()) - 1)];
        WorldState true_world = apply_bundle(base_world, preserve, derive_seed(sample_seed, "pv"));
        if (replay(true_world, derive_seed(sample_seed, "replay_d")) == DoxasticAttitude::Belief) {
            ++d_pass;
        }
    }
    result.condition_c_pass_rate = static_cast<double>(c_pass) / n_samples;
    result.condition_d_pass_rate = static_cast<double>(d_pass) / n_samples;
    return result;
}

AAAResult aaa_evaluate(bool accurate, const JustificationTrace& trace, const ProcessLedger& ledger,
                       double theta_rel, const OutcomeReplayFn& outcome,
                       const WorldState& base_world, int n_reruns, uint64_t seed, double phi) {
    if (n_reruns < 1) fail(ErrorCode::InvalidArgument, "aptness needs n_reruns >= 1");

    AAAResult result;
    result.accurate = accurate;
    result.adroit = true;
    if (trace.records.empty()) {
        result.adroit = false;
    } else {
        for (const std::string& process_id : trace.process_ids()) {
            if (estimate_reliability(ledger, process_id) < theta_rel) {
                result.adroit = false;
                break;
            }
        }
    }

    if (!result.accurate || !result.adroit) {
        result.apt = false;
        return result;
    }

    const WorldState stripped = strip_luck(base_world);
    int successes = 0;
    for (int i = 0; i < n_reruns; ++i) {
        if (outcome(stripped, derive_seed(seed, static_cast<uint64_t>(i)))) ++successes;
    }
    result.apt = static_cast<double>(successes) / n_reruns >= phi;
    return result;
}

ReflectiveRecord reflective_check(const ReflectiveInputs& inputs, const HnpmModel* meta_model,
                                  double theta_rel, double theta_meta, double delta_coh) {
    ReflectiveRecord record;
    record.apt = inputs.aaa.apt;
    if (!inputs.aaa.apt) {
        record.reason = "not apt";
        return record;
    }
    if (!meta_model) {
        // Animal knowledge only: competence without a model of it.
        record.reason = "no meta model configured";
        return record;
    }
    if (!inputs.trace || !inputs.ledger) {
        fail(ErrorCode::InvalidArgument, "reflective_check needs trace and ledger");
    }

    std::vector<GroupedObservation> observations;
    std::vector<std::string> groups;
    for (const std::string& process_id : inputs.trace->process_ids()) {
        const ProcessLedger::Counts counts = inputs.ledger->counts(process_id);
        if (counts.trials == 0) {
            fail(ErrorCode::NoHistory, "process '" + process_id + "' has no recorded trials");
        }
        groups.push_back(process_id);
        if (counts.successes > 0) {
            observations.push_back(
                {process_id, kMetaCorrectLabel, static_cast<int>(counts.successes)});
        }
        if (counts.trials - counts.successes > 0) {
            observations.push_back({process_id, kMetaIncorrectLabel,
                                    static_cast<int>(counts.trials - counts.successes)});
        }
    }
    const PosteriorTable table = hierarchical_update(*meta_model, observations, groups);

    record.meta_credence = 1.0;
    for (const std::string& group : groups) {
        record.meta_credence =
            std::min(record.meta_credence, level2_mass_at_least(*meta_model, table, group, theta_rel));
    }

    // Hierarchy-constrained prediction: rerun the belief chain with each
    // channel's likelihoods replaced by its posterior-mean reliability.
    const std::size_t n = inputs.labels.size();
    if (n < 2 || inputs.prior.size() != n) {
        fail(ErrorCode::InvalidArgument, "reflective_check needs the full label partition");
    }
    std::size_t target_idx = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (inputs.labels[i] == inputs.target_label) target_idx = i;
    }
    if (target_idx == n) {
        fail(ErrorCode::UnknownHypothesis, "target label '" + inputs.target_label + "'");
    }
    std::vector<double> posterior = inputs.prior;
    for (const auto& [process_id, reported] : inputs.used_reports) {
        const double mean_rel = level2_mean_value(*meta_model, table, process_id);
        const double off = (1.0 - mean_rel) / static_cast<double>(n - 1);
        double normalizer = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            posterior[i] *= (inputs.labels[i] == reported) ? mean_rel : off;
            normalizer += posterior[i];
        }
        if (normalizer <= 0.0) {
            fail(ErrorCode::IncoherentEvidence, "meta prediction normalizer is zero");
        }
        for (double& p : posterior) p /= normalizer;
    }
    record.predicted_credence = posterior[target_idx];
    record.coherence_gap = std::abs(inputs.first_order_credence - record.predicted_credence);

    if (record.meta_credence < theta_meta) {
        record.reason = "meta credence below threshold";
        return record;
    }
    if (record.coherence_gap > delta_coh) {
        record.reason = "first-order credence incoherent with hierarchy prediction";
        return record;
    }
    record.reflective = true;
    return record;
}

const char* to_string(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::Knowledge: return "Knowledge";
        case VerdictKind::Gettiered: return "Gettiered";
        case VerdictKind::UnjustifiedTrueBelief: return "UnjustifiedTrueBelief";
        case VerdictKind::Disbelief: return "Disbelief";
        case VerdictKind::FalseBelief: return "FalseBelief";
        case VerdictKind::Suspension: return "Suspension";
        case VerdictKind::Ignorance: return "Ignorance";
    }
    return "?";
}

EpistemicVerdict classify(bool truth, DoxasticAttitude attitude, bool is_justified,
                          const TrackingResult& tracking, double tau_track) {
    EpistemicVerdict verdict;
    verdict.truth = truth;
    verdict.attitude = attitude;
    verdict.justified = is_justified;
    verdict.tracking = tracking;
    verdict.tau_track = tau_track;

    switch (attitude) {
        case DoxasticAttitude::Ignorance:
            verdict.kind = VerdictKind::Ignorance;
            return verdict;
        case DoxasticAttitude::Suspension:
            verdict.kind = VerdictKind::Suspension;
            return verdict;
        case DoxasticAttitude::Disbelief:
            // Includes disbelief of a falsehood: the verdict names the attitude,
            // the diagnostics carry the truth value.
            verdict.kind = VerdictKind::Disbelief;
            return verdict;
        case DoxasticAttitude::Belief:
            break;
    }

    if (!truth) {
        verdict.kind = VerdictKind::FalseBelief;
    } else if (!is_justified) {
        verdict.kind = VerdictKind::UnjustifiedTrueBelief;
    } else if (tracking.passes(tau_track)) {
        verdict.kind = VerdictKind::Knowledge;
    } else {
        verdict.kind = VerdictKind::Gettiered;
    }
    return verdict;
}

}  // namespace epistate
