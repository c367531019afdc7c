#include "epistate/runner.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "epistate/rng.hpp"

namespace epistate {

namespace {

Pipeline build_pipeline(const ScenarioSpec& spec) {
    Pipeline pipeline;
    pipeline.agent = spec.agent;
    pipeline.partitions = spec.partitions;
    pipeline.channels = spec.channels;
    pipeline.horizon = spec.horizon;
    pipeline.record_in_run = spec.record_in_run;
    return pipeline;
}

struct EvaluatedProp {
    Proposition prop;
    double credence = 0.0;
    bool truth = false;
    DoxasticAttitude attitude = DoxasticAttitude::Ignorance;
    int redundancy = 0;
    bool justified_basic = false;
    bool justified_lethal = false;
    TrackingResult tracking;
    EpistemicVerdict verdict;
    AAAResult aaa;
    ReflectiveRecord reflective;
};

bool safe_truth(const WorldState& world, const Proposition& prop) {
    try {
        return truth_of(world, prop);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnknownEntity) return false;  // subject gone: not true
        throw;
    }
}

// Full epistemic evaluation of one partition label against the agent's state.
// Tracking and aptness replay the whole pipeline against forked/stripped
// worlds, so they only run where classify can consult them.
EvaluatedProp evaluate_proposition(const ScenarioSpec& spec, const Pipeline& pipeline,
                                   const AgentSim& sim, const WorldState& initial_world,
                                   const ProcessLedger& preload, const std::string& partition_id,
                                   const std::string& label, int verdict_redundancy,
                                   uint64_t seed) {
    const Partition* partition = spec.find_partition(partition_id);
    if (!partition) fail(ErrorCode::DanglingReference, "unknown partition '" + partition_id + "'");

    EvaluatedProp out;
    out.prop = partition->proposition(label);
    out.credence = sim.credences().lookup(out.prop).value_or(0.0);
    out.truth = safe_truth(sim.world(), out.prop);
    out.attitude = sim.attitude(out.prop);

    const JustificationTrace trace = sim.trace_for(partition_id);
    const double theta_rel = spec.policy.thresholds.effective_theta_rel();
    out.redundancy = trace.redundancy_count();
    out.justified_basic = justified(trace, sim.ledger(), theta_rel, verdict_redundancy);
    out.justified_lethal = justified(trace, sim.ledger(), theta_rel,
                                     spec.policy.redundancy_floor(ActionTier::LethalEffect));

    const AttitudeReplayFn replay = [&](const WorldState& world, uint64_t replay_seed) {
        return replay_attitude(pipeline, world, preload, out.prop, replay_seed);
    };

    // classify consults tracking only on the justified-true-belief branch.
    if (out.truth && out.attitude == DoxasticAttitude::Belief && out.justified_basic) {
        const TrackingMenus menus =
            default_tracking_menus(out.prop, initial_world, partition->labels);
        out.tracking = tracking_check(replay, initial_world, menus, spec.tracking_samples,
                                      derive_seed(seed, "tracking"));
    }
    out.verdict = classify(out.truth, out.attitude, out.justified_basic, out.tracking,
                           spec.policy.thresholds.tau_track);

    const OutcomeReplayFn outcome = [&](const WorldState& world, uint64_t replay_seed) {
        AgentSim rerun(pipeline, world, preload, replay_seed);
        rerun.run_to_horizon();
        return rerun.attitude(out.prop) == DoxasticAttitude::Belief &&
               safe_truth(rerun.world(), out.prop);
    };
    out.aaa = aaa_evaluate(out.truth, trace, sim.ledger(), theta_rel, outcome, initial_world,
                           spec.apt_reruns, derive_seed(seed, "apt"),
                           spec.policy.thresholds.phi_apt);

    ReflectiveInputs inputs;
    inputs.aaa = out.aaa;
    inputs.first_order_credence = out.credence;
    inputs.labels = partition->labels;
    inputs.target_label = label;
    auto prior_it = spec.agent.prior_spec.find(partition_id);
    if (prior_it == spec.agent.prior_spec.end()) {
        inputs.prior.assign(partition->labels.size(),
                            1.0 / static_cast<double>(partition->labels.size()));
    } else {
        for (const std::string& l : partition->labels) inputs.prior.push_back(prior_it->second.at(l));
    }
    inputs.used_reports = sim.used_reports(partition_id);
    inputs.trace = &trace;
    ProcessLedger ledger_snapshot = sim.ledger();
    inputs.ledger = &ledger_snapshot;
    out.reflective = reflective_check(inputs, spec.hierarchy ? &*spec.hierarchy : nullptr,
                                      theta_rel, spec.policy.thresholds.theta_meta,
                                      spec.policy.thresholds.delta_coh);

    out.verdict.aaa = out.aaa;
    out.verdict.reflective = out.reflective;
    return out;
}

std::vector<ActionCandidate> build_candidates(const ScenarioSpec& spec, const Pipeline& pipeline,
                                              const AgentSim& sim, const WorldState& initial_world,
                                              const ProcessLedger& preload, uint64_t seed) {
    std::vector<ActionCandidate> candidates;
    for (const ActionSpec& action : spec.actions) {
        EvaluatedProp ev =
            evaluate_proposition(spec, pipeline, sim, initial_world, preload,
                                 action.outcome_partition, action.gate_label, 1,
                                 derive_seed(seed, "cand/" + action.id));
        ActionCandidate candidate;
        candidate.action = action;
        candidate.verdict = ev.verdict;
        candidate.aaa = ev.aaa;
        candidate.reflective = ev.reflective;
        candidate.redundancy = ev.redundancy;
        candidate.justified_lethal = ev.justified_lethal;
        candidates.push_back(std::move(candidate));
    }
    return candidates;
}

const ActionSpec& action_by_id(const ScenarioSpec& spec, const std::string& id) {
    for (const ActionSpec& action : spec.actions) {
        if (action.id == id) return action;
    }
    fail(ErrorCode::DanglingReference, "unknown action '" + id + "'");
}

DecisionLog resolve_decision(const ScenarioSpec& spec, const AgentSim& sim,
                             const ActionDecision& decision) {
    DecisionLog log;
    log.decision = decision;
    const ActionSpec& requested = action_by_id(spec, decision.action_id);
    const ActionSpec& chosen = action_by_id(spec, decision.chosen_action);
    log.requested_tier = requested.tier;
    log.chosen_tier = chosen.tier;
    log.target_entity = chosen.target_entity;
    log.lethal = requested.tier == ActionTier::LethalEffect;
    if (const Partition* partition = spec.find_partition(chosen.outcome_partition)) {
        log.gate_label_true = safe_truth(sim.world(), partition->proposition(chosen.gate_label));
    }

    const bool landed = decision.outcome == DecisionOutcome::Execute ||
                        decision.outcome == DecisionOutcome::Retarget;
    if (landed && !chosen.target_entity.empty()) {
        if (const Entity* target = sim.world().find_entity(chosen.target_entity)) {
            log.target_class_at_impact = to_string(target->true_class);
            if (chosen.tier == ActionTier::LethalEffect) {
                log.legitimate_engagement = target->true_class == EntityClass::Belligerent;
                log.false_positive_lethal = !log.legitimate_engagement;
                log.civilian_harm = target->true_class == EntityClass::Civilian ||
                                    target->true_class == EntityClass::ProtectedObject;
            }
        } else if (chosen.tier == ActionTier::LethalEffect) {
            log.false_positive_lethal = true;  // struck a target no longer there
        }
    }
    if (landed) {
        for (const PredicateResult& result : decision.envelope.results) {
            if (!result.pass) log.envelope_violation = true;
        }
    }
    return log;
}

TrialLog run_one_trial(const ScenarioSpec& spec, int trial_index) {
    const uint64_t trial_seed = derive_seed(derive_seed(spec.master_seed, "trial"),
                                            static_cast<uint64_t>(trial_index));
    const Pipeline pipeline = build_pipeline(spec);
    const WorldState initial_world =
        spec.initial_world(derive_seed(trial_seed, "world"), "trial" + std::to_string(trial_index));
    const ProcessLedger preload = spec.ledger;

    AgentSim sim(pipeline, initial_world, preload, derive_seed(trial_seed, "agent"));
    sim.run_to_horizon();

    TrialLog log;
    log.trial = trial_index;

    for (const VerdictRequest& request : spec.verdicts) {
        EvaluatedProp ev = evaluate_proposition(spec, pipeline, sim, initial_world, preload,
                                                request.partition_id, request.label,
                                                request.min_redundancy,
                                                derive_seed(trial_seed, "verdict/" + request.name));
        VerdictLog verdict_log;
        verdict_log.name = request.name;
        verdict_log.partition_id = request.partition_id;
        verdict_log.label = request.label;
        verdict_log.credence = ev.credence;
        verdict_log.redundancy = ev.redundancy;
        verdict_log.verdict = ev.verdict;
        log.verdicts.push_back(std::move(verdict_log));
    }

    if (spec.decision && !spec.actions.empty()) {
        GateInputs inputs;
        inputs.candidates = build_candidates(spec, pipeline, sim, initial_world, preload,
                                             derive_seed(trial_seed, "decision"));
        inputs.track = spec.track;
        inputs.credences = &sim.credences();
        inputs.utilities = spec.utilities.table.empty() ? nullptr : &spec.utilities;
        inputs.authorization = spec.decision->authorization;

        ActionDecision decision = decide(spec.policy, spec.decision->request_action, inputs);

        // In-flight window: the agent keeps observing while the effect is on
        // its way; the gate re-runs on refreshed evidence every tick.
        if (decision.outcome == DecisionOutcome::Execute) {
            const int flight = action_by_id(spec, decision.chosen_action).flight_ticks;
            for (int k = 0; k < flight; ++k) {
                sim.flight_step();
                GateInputs updated;
                updated.candidates =
                    build_candidates(spec, pipeline, sim, initial_world, preload,
                                     derive_seed(trial_seed, "flight/" + std::to_string(k)));
                updated.track = spec.track;
                updated.credences = &sim.credences();
                updated.utilities = inputs.utilities;
                updated.authorization = inputs.authorization;
                decision = abort_or_retarget(decision, spec.policy, updated);
                if (decision.outcome == DecisionOutcome::Abort) break;
            }
        }
        log.decisions.push_back(resolve_decision(spec, sim, decision));
    }

    log.doxastic = sim.doxastic_report();
    const double theta_rel = spec.policy.thresholds.effective_theta_rel();
    for (DoxasticRecord& record : log.doxastic.records) {
        for (const CredenceFunction::Block& block : sim.credences().blocks) {
            for (const std::string& label : block.partition.labels) {
                if (block.partition.proposition(label).key() == record.proposition) {
                    record.justified =
                        justified(sim.trace_for(block.partition.id), sim.ledger(), theta_rel, 1);
                }
            }
        }
    }
    return log;
}

void redact_log(TrialLog& log) {
    // Behavioral surface only: outcomes stay, gate internals go.
    for (DecisionLog& decision_log : log.decisions) {
        decision_log.decision.checks.clear();
        decision_log.decision.eu_table.clear();
        decision_log.decision.envelope.results.clear();
    }
}

Aggregates aggregate_logs(const ScenarioSpec& spec, const std::vector<TrialLog>& logs,
                          double theta_eu, bool redacted) {
    Aggregates agg;
    long complete_records = 0;
    double reliability_sum = 0.0;
    long reliability_count = 0;

    for (const TrialLog& log : logs) {
        for (const VerdictLog& verdict_log : log.verdicts) {
            agg.verdict_histogram[to_string(verdict_log.verdict.kind)] += 1;
        }
        for (const DecisionLog& decision_log : log.decisions) {
            agg.decisions += 1;
            switch (decision_log.decision.outcome) {
                case DecisionOutcome::Execute: agg.executes += 1; break;
                case DecisionOutcome::Withhold: agg.withholds += 1; break;
                case DecisionOutcome::Withdraw: agg.withdraws += 1; break;
                case DecisionOutcome::Abort: agg.aborts += 1; break;
                case DecisionOutcome::Retarget: agg.retargets += 1; break;
            }
            if (decision_log.lethal) {
                agg.lethal_decisions += 1;
                if (decision_log.decision.outcome == DecisionOutcome::Execute ||
                    decision_log.decision.outcome == DecisionOutcome::Retarget) {
                    agg.lethal_executes += 1;
                    if (decision_log.legitimate_engagement) agg.legitimate_lethal_executes += 1;
                    if (decision_log.false_positive_lethal) agg.false_positive_lethal += 1;
                }
            }
            if (decision_log.civilian_harm) agg.civilian_harm += 1;
            if (decision_log.envelope_violation) agg.envelope_violations += 1;
            if (redacted || record_recomputes(decision_log.decision, theta_eu)) {
                complete_records += 1;
            }
        }
    }
    for (const auto& [process_id, counts] : spec.ledger.processes) {
        if (counts.trials > 0) {
            reliability_sum += estimate_reliability(spec.ledger, process_id);
            reliability_count += 1;
        }
    }
    agg.legitimate_engagement_rate =
        agg.lethal_decisions > 0
            ? static_cast<double>(agg.legitimate_lethal_executes) / agg.lethal_decisions
            : 0.0;
    agg.withdrawal_rate =
        agg.decisions > 0 ? static_cast<double>(agg.withdraws) / agg.decisions : 0.0;
    agg.gate_record_completeness =
        agg.decisions > 0 ? static_cast<double>(complete_records) / agg.decisions : 1.0;
    agg.mean_process_reliability =
        reliability_count > 0 ? reliability_sum / reliability_count : 0.0;
    return agg;
}

}  // namespace

bool record_recomputes(const ActionDecision& decision, double theta_eu) {
    if (decision.mechanism == "expected_utility") {
        if (decision.eu_table.empty()) return false;
        std::string best_id;
        double best_eu = 0.0;
        for (const auto& [id, eu] : decision.eu_table) {
            if (best_id.empty() || eu > best_eu || (eu == best_eu && id < best_id)) {
                best_id = id;
                best_eu = eu;
            }
        }
        const bool pass = best_eu >= theta_eu;
        if (decision.outcome == DecisionOutcome::Withhold) return !pass;
        if (decision.outcome == DecisionOutcome::Abort) return !pass;
        return pass && best_id == decision.chosen_action;
    }

    bool all_pass = true;
    bool redundancy_failed = false;
    for (const GateCheck& check : decision.checks) {
        bool recomputed = false;
        if (check.cmp == ">=") recomputed = check.value >= check.threshold;
        else if (check.cmp == "<=") recomputed = check.value <= check.threshold;
        else if (check.cmp == "==") recomputed = check.value == check.threshold;
        else return false;
        if (recomputed != check.pass) return false;
        if (!recomputed && check.name == "redundancy") redundancy_failed = true;
        // The reflective gate records meta/coherence detail checks for scrutiny;
        // the outcome is carried by the aggregate 'reflective' check.
        if (check.name == "meta_credence" || check.name == "coherence_gap") continue;
        all_pass = all_pass && recomputed;
    }
    if (decision.mechanism == "knowledge") {
        for (const PredicateResult& result : decision.envelope.results) {
            all_pass = all_pass && result.pass;
        }
    }
    switch (decision.outcome) {
        case DecisionOutcome::Execute:
        case DecisionOutcome::Retarget: return all_pass;
        case DecisionOutcome::Withdraw: return redundancy_failed;
        case DecisionOutcome::Withhold:
        case DecisionOutcome::Abort: return !all_pass;
    }
    return false;
}

RunReport run_trials(const ScenarioSpec& base_spec, const RunOptions& options) {
    const ScenarioSpec spec = options.policy_override
                                  ? with_policy_override(base_spec, *options.policy_override)
                                  : base_spec;

    RunReport report;
    report.scenario = spec.name;
    report.policy = to_string(spec.policy.kind);
    report.fingerprint = spec.fingerprint;
    report.master_seed = spec.master_seed;
    report.trials = spec.trials;
    report.redacted = options.redact_gate_records;
    report.effective_config = spec.effective;
    report.logs.resize(spec.trials);

    const auto run_range = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            try {
                report.logs[i] = run_one_trial(spec, i);
            } catch (const Error& e) {
                throw Error(e.code(), "trial " + std::to_string(i) + ": " + e.what());
            }
        }
    };

    const int threads = std::max(1, options.threads);
    if (threads == 1 || spec.trials <= 1) {
        run_range(0, spec.trials);
    } else {
        // Shard by contiguous blocks; logs land in their slot so the merged
        // report is byte-identical to a serial run.
        const int block = (spec.trials + threads - 1) / threads;
        std::vector<std::future<void>> futures;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * block;
            const int end = std::min(spec.trials, begin + block);
            if (begin >= end) break;
            futures.push_back(std::async(std::launch::async, run_range, begin, end));
        }
        std::exception_ptr first_error;
        for (auto& future : futures) {
            try {
                future.get();
            } catch (...) {
                if (!first_error) first_error = std::current_exception();
            }
        }
        if (first_error) std::rethrow_exception(first_error);
    }

    if (options.redact_gate_records) {
        for (TrialLog& log : report.logs) redact_log(log);
    }
    report.aggregates = aggregate_logs(spec, report.logs, spec.policy.thresholds.theta_eu,
                                       options.redact_gate_records);
    return report;
}

CompetenceProfile assay_know_how(const ScenarioSpec& spec, const RunOptions& options) {
    if (spec.assays.empty()) {
        fail(ErrorCode::InvalidArgument, "scenario declares no assay stages");
    }
    for (std::size_t i = 1; i < spec.assays.size(); ++i) {
        if (spec.assays[i].difficulty < spec.assays[i - 1].difficulty) {
            fail(ErrorCode::InvalidArgument, "assay stages must be ordered by difficulty");
        }
    }

    CompetenceProfile profile;
    for (const AssayStage& stage : spec.assays) {
        Json staged_doc = spec.effective;
        staged_doc.merge_patch(stage.overrides);
        staged_doc.erase("assays");
        ScenarioSpec staged = load_scenario(staged_doc);

        RunReport report = run_trials(staged, options);

        long decisions = 0;
        long correct = 0;
        long lethal_harm = 0;
        for (const TrialLog& log : report.logs) {
            for (const DecisionLog& decision_log : log.decisions) {
                decisions += 1;
                // Behavioral scoring: an action is warranted exactly when its
                // gate label held of the world; a correct decision executes
                // warranted actions and holds back unwarranted ones.
                const bool executed = decision_log.decision.outcome == DecisionOutcome::Execute ||
                                      decision_log.decision.outcome == DecisionOutcome::Retarget;
                if (executed == decision_log.gate_label_true) correct += 1;
                if (decision_log.civilian_harm) lethal_harm += 1;
            }
        }

        CompetenceProfile::Row row;
        row.stage = stage.name;
        row.difficulty = stage.difficulty;
        row.policy = report.policy;
        row.trials = report.trials;
        row.decisions = decisions;
        row.success_rate = decisions > 0 ? static_cast<double>(correct) / decisions : 0.0;
        row.harm_rate = decisions > 0 ? static_cast<double>(lethal_harm) / decisions : 0.0;
        profile.rows.push_back(std::move(row));
    }
    return profile;
}

}  // namespace epistate
