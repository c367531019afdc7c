#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epistate/doxastics.hpp"
#include "epistate/hnpm.hpp"
#include "epistate/world.hpp"

namespace epistate {

// Success/trial history per belief-forming process.
struct ProcessLedger {
    struct Counts {
        long successes = 0;
        long trials = 0;
    };
    std::map<std::string, Counts> processes;

    Counts counts(const std::string& process_id) const;
};

ProcessLedger record_process(const ProcessLedger& ledger, const std::string& process_id,
                             bool output_was_true);

// Add-one smoothed frequency (successes+1)/(trials+2). NoHistory when trials = 0.
double estimate_reliability(const ProcessLedger& ledger, const std::string& process_id);

struct TraceRecord {
    std::string process_id;
    std::string evidence_id;
    std::string output_label;
    bool used_in_update = false;  // false: received but discarded (distrust, shared source)
};

struct JustificationTrace {
    Proposition belief;
    std::vector<TraceRecord> records;
    std::map<std::string, std::string> channel_source_tags;  // contributing channel -> tag

    std::vector<std::string> process_ids() const;  // distinct, in first-seen order
    // Independent channels: distinct contributing channels, with same-tagged
    // channels collapsed to one.
    int redundancy_count() const;
};

// Process reliability plus channel redundancy.
bool justified(const JustificationTrace& trace, const ProcessLedger& ledger, double theta_rel,
               int min_redundancy);

struct TrackingResult {
    double condition_c_pass_rate = 0.0;  // belief vanishes when the proposition is made false
    double condition_d_pass_rate = 0.0;  // belief persists under truth-preserving perturbation
    int samples = 0;

    bool passes(double tau_track) const {
        return condition_c_pass_rate >= tau_track && condition_d_pass_rate >= tau_track;
    }
};

// Replays the belief-forming pipeline against a world and reports the final
// attitude toward the tracked proposition.
using AttitudeReplayFn = std::function<DoxasticAttitude(const WorldState&, uint64_t seed)>;

// One counterfactual option: a bundle of surgical edits applied together.
using InterventionBundle = std::vector<Intervention>;

struct TrackingMenus {
    std::vector<InterventionBundle> falsify;   // make the proposition false
    std::vector<InterventionBundle> preserve;  // perturb while keeping it true
};

// Canonical menus: ClassIs propositions flip the subject to another declared
// label or remove it outright; existential propositions reclass or remove
// every witness in the region. Preserving perturbations nudge the subject and
// resample channel noise.
TrackingMenus default_tracking_menus(const Proposition& prop, const WorldState& world,
                                     const std::vector<std::string>& partition_labels);

TrackingResult tracking_check(const AttitudeReplayFn& replay, const WorldState& base_world,
                              const TrackingMenus& menus, int n_samples, uint64_t seed);

struct AAAResult {
    bool accurate = false;
    bool adroit = false;
    bool apt = false;  // invariant: apt implies accurate and adroit
};

// Ground-truth success of the performance when replayed on a given world.
using OutcomeReplayFn = std::function<bool(const WorldState&, uint64_t seed)>;

// accurate: the actual outcome held. adroit: every trace process meets
// theta_rel. apt additionally requires the success to survive luck-stripped
// reruns in at least phi of n_reruns.
AAAResult aaa_evaluate(bool accurate, const JustificationTrace& trace, const ProcessLedger& ledger,
                       double theta_rel, const OutcomeReplayFn& outcome,
                       const WorldState& base_world, int n_reruns, uint64_t seed, double phi = 0.9);

struct ReflectiveRecord {
    bool reflective = false;
    bool apt = false;
    double meta_credence = 0.0;   // level-2 posterior mass on reliable bins, min over processes
    double coherence_gap = 1.0;   // |first-order credence - hierarchy-constrained prediction|
    double predicted_credence = 0.0;
    std::string reason;           // set when reflective is false
};

struct ReflectiveInputs {
    AAAResult aaa;
    double first_order_credence = 0.0;
    std::vector<std::string> labels;      // partition labels
    std::string target_label;             // label the proposition corresponds to
    std::vector<double> prior;            // prior credences aligned with labels
    // Reports that actually drove the belief: (process_id, reported label).
    std::vector<std::pair<std::string, std::string>> used_reports;
    const JustificationTrace* trace = nullptr;
    const ProcessLedger* ledger = nullptr;
};

inline constexpr const char* kMetaCorrectLabel = "correct";
inline constexpr const char* kMetaIncorrectLabel = "incorrect";

// Feeds the ledger history of every trace process into the meta hierarchy as
// level-3 correctness observations, then requires (i) aptness, (ii) meta
// credence >= theta_meta, (iii) the first-order credence to sit within
// delta_coh of the credence recomputed under hierarchy-constrained channel
// reliabilities. A null meta model yields reflective=false (animal-only).
ReflectiveRecord reflective_check(const ReflectiveInputs& inputs, const HnpmModel* meta_model,
                                  double theta_rel, double theta_meta, double delta_coh);

enum class VerdictKind {
    Knowledge,
    Gettiered,
    UnjustifiedTrueBelief,
    Disbelief,
    FalseBelief,
    Suspension,
    Ignorance,
};

const char* to_string(VerdictKind kind);

struct EpistemicVerdict {
    VerdictKind kind = VerdictKind::Ignorance;
    // Diagnostics: the tuple the kind is a total function of.
    bool truth = false;
    DoxasticAttitude attitude = DoxasticAttitude::Ignorance;
    bool justified = false;
    TrackingResult tracking;
    double tau_track = 0.9;
    // Filled by the caller when evaluated; not consulted by classify.
    std::optional<AAAResult> aaa;
    std::optional<ReflectiveRecord> reflective;
};

// Total and deterministic over the diagnostic tuple. Suspension and Ignorance
// report themselves; a held belief splits on truth, justification, and
// tracking; a disbelieving attitude reports Disbelief regardless of truth.
EpistemicVerdict classify(bool truth, DoxasticAttitude attitude, bool is_justified,
                          const TrackingResult& tracking, double tau_track);

}  // namespace epistate
