#include "epistate/report.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace epistate {

namespace {

Json aggregates_to_json(const Aggregates& agg) {
    Json histogram = Json::object();
    for (const auto& [kind, count] : agg.verdict_histogram) histogram[kind] = count;
    return Json{{"decisions", agg.decisions},
                {"executes", agg.executes},
                {"withholds", agg.withholds},
                {"withdraws", agg.withdraws},
                {"aborts", agg.aborts},
                {"retargets", agg.retargets},
                {"lethal_decisions", agg.lethal_decisions},
                {"lethal_executes", agg.lethal_executes},
                {"legitimate_lethal_executes", agg.legitimate_lethal_executes},
                {"false_positive_lethal", agg.false_positive_lethal},
                {"civilian_harm", agg.civilian_harm},
                {"envelope_violations", agg.envelope_violations},
                {"legitimate_engagement_rate", agg.legitimate_engagement_rate},
                {"withdrawal_rate", agg.withdrawal_rate},
                {"gate_record_completeness", agg.gate_record_completeness},
                {"mean_process_reliability", agg.mean_process_reliability},
                {"verdict_histogram", histogram}};
}

Json verdict_log_to_json(const VerdictLog& log) {
    const EpistemicVerdict& v = log.verdict;
    Json node{{"name", log.name},
              {"partition", log.partition_id},
              {"label", log.label},
              {"kind", to_string(v.kind)},
              {"truth", v.truth},
              {"attitude", to_string(v.attitude)},
              {"justified", v.justified},
              {"credence", log.credence},
              {"redundancy", log.redundancy},
              {"condition_c_pass_rate", v.tracking.condition_c_pass_rate},
              {"condition_d_pass_rate", v.tracking.condition_d_pass_rate},
              {"tracking_samples", v.tracking.samples},
              {"tau_track", v.tau_track}};
    if (v.aaa) {
        node["accurate"] = v.aaa->accurate;
        node["adroit"] = v.aaa->adroit;
        node["apt"] = v.aaa->apt;
        // Conclusion triad, read off the diagnostics.
        node["safe_not_lucky"] = v.tracking.passes(v.tau_track) && v.aaa->apt;
        node["contextually_valid"] = v.justified;
        node["available_for_scrutiny"] = true;
    }
    if (v.reflective) {
        node["reflective"] = v.reflective->reflective;
        node["meta_credence"] = v.reflective->meta_credence;
        node["coherence_gap"] = v.reflective->coherence_gap;
        node["predicted_credence"] = v.reflective->predicted_credence;
        if (!v.reflective->reason.empty()) node["reflective_reason"] = v.reflective->reason;
    }
    return node;
}

Json decision_log_to_json(const DecisionLog& log) {
    const ActionDecision& d = log.decision;
    Json checks = Json::array();
    for (const GateCheck& check : d.checks) {
        checks.push_back(Json{{"name", check.name},
                              {"value", check.value},
                              {"threshold", check.threshold},
                              {"cmp", check.cmp},
                              {"pass", check.pass}});
    }
    Json envelope = Json::array();
    for (const PredicateResult& result : d.envelope.results) {
        envelope.push_back(Json{{"name", result.name}, {"pass", result.pass}});
    }
    Json node{{"action", d.action_id},
              {"chosen", d.chosen_action},
              {"outcome", to_string(d.outcome)},
              {"mechanism", d.mechanism},
              {"verdict", d.verdict_kind},
              {"apt", d.apt},
              {"reflective", d.reflective},
              {"checks", checks},
              {"envelope", envelope},
              {"eu", d.eu_table},
              {"requested_tier", to_string(log.requested_tier)},
              {"chosen_tier", to_string(log.chosen_tier)},
              {"target", log.target_entity},
              {"target_class_at_impact", log.target_class_at_impact},
              {"lethal", log.lethal},
              {"gate_label_true", log.gate_label_true},
              {"legitimate_engagement", log.legitimate_engagement},
              {"false_positive_lethal", log.false_positive_lethal},
              {"civilian_harm", log.civilian_harm},
              {"envelope_violation", log.envelope_violation}};
    if (d.authorization) node["authorization"] = *d.authorization;
    return node;
}

std::vector<std::pair<std::string, double>> metric_rows(const Aggregates& agg) {
    return {{"decisions", static_cast<double>(agg.decisions)},
            {"executes", static_cast<double>(agg.executes)},
            {"withholds", static_cast<double>(agg.withholds)},
            {"withdraws", static_cast<double>(agg.withdraws)},
            {"aborts", static_cast<double>(agg.aborts)},
            {"retargets", static_cast<double>(agg.retargets)},
            {"lethal_decisions", static_cast<double>(agg.lethal_decisions)},
            {"lethal_executes", static_cast<double>(agg.lethal_executes)},
            {"legitimate_lethal_executes", static_cast<double>(agg.legitimate_lethal_executes)},
            {"false_positive_lethal", static_cast<double>(agg.false_positive_lethal)},
            {"civilian_harm", static_cast<double>(agg.civilian_harm)},
            {"envelope_violations", static_cast<double>(agg.envelope_violations)},
            {"legitimate_engagement_rate", agg.legitimate_engagement_rate},
            {"withdrawal_rate", agg.withdrawal_rate},
            {"gate_record_completeness", agg.gate_record_completeness},
            {"mean_process_reliability", agg.mean_process_reliability}};
}

// Valence for winner marks: +1 higher is better, -1 lower is better.
int metric_valence(const std::string& metric) {
    if (metric == "false_positive_lethal" || metric == "civilian_harm" ||
        metric == "envelope_violations") {
        return -1;
    }
    if (metric == "legitimate_engagement_rate" || metric == "gate_record_completeness" ||
        metric == "mean_process_reliability") {
        return 1;
    }
    return 0;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string escaped = "\"";
    for (char c : field) {
        if (c == '"') escaped += '"';
        escaped += c;
    }
    escaped += '"';
    return escaped;
}

VerdictKind verdict_kind_from_string(const std::string& name) {
    for (VerdictKind kind :
         {VerdictKind::Knowledge, VerdictKind::Gettiered, VerdictKind::UnjustifiedTrueBelief,
          VerdictKind::Disbelief, VerdictKind::FalseBelief, VerdictKind::Suspension,
          VerdictKind::Ignorance}) {
        if (name == to_string(kind)) return kind;
    }
    fail(ErrorCode::SchemaError, "unknown verdict kind '" + name + "'");
}

DoxasticAttitude attitude_from_string(const std::string& name) {
    for (DoxasticAttitude attitude : {DoxasticAttitude::Belief, DoxasticAttitude::Disbelief,
                                      DoxasticAttitude::Suspension, DoxasticAttitude::Ignorance}) {
        if (name == to_string(attitude)) return attitude;
    }
    fail(ErrorCode::SchemaError, "unknown attitude '" + name + "'");
}

DecisionOutcome outcome_from_string(const std::string& name) {
    for (DecisionOutcome outcome :
         {DecisionOutcome::Execute, DecisionOutcome::Withhold, DecisionOutcome::Withdraw,
          DecisionOutcome::Abort, DecisionOutcome::Retarget}) {
        if (name == to_string(outcome)) return outcome;
    }
    fail(ErrorCode::SchemaError, "unknown outcome '" + name + "'");
}

ActionTier tier_from_json(const Json& node, const char* key) {
    return action_tier_from_string(node.value(key, std::string("Navigate")));
}

VerdictLog verdict_log_from_json(const Json& node) {
    VerdictLog log;
    log.name = node.value("name", std::string());
    log.partition_id = node.value("partition", std::string());
    log.label = node.value("label", std::string());
    log.credence = node.value("credence", 0.0);
    log.redundancy = node.value("redundancy", 0);
    EpistemicVerdict& v = log.verdict;
    v.kind = verdict_kind_from_string(node.value("kind", std::string("Ignorance")));
    v.truth = node.value("truth", false);
    v.attitude = attitude_from_string(node.value("attitude", std::string("Ignorance")));
    v.justified = node.value("justified", false);
    v.tracking.condition_c_pass_rate = node.value("condition_c_pass_rate", 0.0);
    v.tracking.condition_d_pass_rate = node.value("condition_d_pass_rate", 0.0);
    v.tracking.samples = node.value("tracking_samples", 0);
    v.tau_track = node.value("tau_track", 0.9);
    if (node.contains("apt")) {
        AAAResult aaa;
        aaa.accurate = node.value("accurate", false);
        aaa.adroit = node.value("adroit", false);
        aaa.apt = node.value("apt", false);
        v.aaa = aaa;
    }
    if (node.contains("reflective")) {
        ReflectiveRecord record;
        record.reflective = node.value("reflective", false);
        record.meta_credence = node.value("meta_credence", 0.0);
        record.coherence_gap = node.value("coherence_gap", 1.0);
        record.predicted_credence = node.value("predicted_credence", 0.0);
        record.reason = node.value("reflective_reason", std::string());
        record.apt = v.aaa ? v.aaa->apt : false;
        v.reflective = record;
    }
    return log;
}

DecisionLog decision_log_from_json(const Json& node) {
    DecisionLog log;
    ActionDecision& d = log.decision;
    d.action_id = node.value("action", std::string());
    d.chosen_action = node.value("chosen", std::string());
    d.outcome = outcome_from_string(node.value("outcome", std::string("Withhold")));
    d.mechanism = node.value("mechanism", std::string());
    d.verdict_kind = node.value("verdict", std::string());
    d.apt = node.value("apt", false);
    d.reflective = node.value("reflective", false);
    for (const Json& check_node : node.value("checks", Json::array())) {
        GateCheck check;
        check.name = check_node.value("name", std::string());
        check.value = check_node.value("value", 0.0);
        check.threshold = check_node.value("threshold", 0.0);
        check.cmp = check_node.value("cmp", std::string());
        check.pass = check_node.value("pass", false);
        d.checks.push_back(std::move(check));
    }
    for (const Json& result_node : node.value("envelope", Json::array())) {
        PredicateResult result;
        result.name = result_node.value("name", std::string());
        result.pass = result_node.value("pass", false);
        d.envelope.results.push_back(result);
        d.envelope.pass = d.envelope.pass && result.pass;
    }
    const Json items_node_1 = node.value("eu", Json::object());
    for (const auto& [id, eu] : items_node_1.items()) {
        d.eu_table[id] = eu.get<double>();
    }
    if (node.contains("authorization")) d.authorization = node.at("authorization").get<bool>();
    log.requested_tier = tier_from_json(node, "requested_tier");
    log.chosen_tier = tier_from_json(node, "chosen_tier");
    log.target_entity = node.value("target", std::string());
    log.target_class_at_impact = node.value("target_class_at_impact", std::string());
    log.lethal = node.value("lethal", false);
    log.gate_label_true = node.value("gate_label_true", false);
    log.legitimate_engagement = node.value("legitimate_engagement", false);
    log.false_positive_lethal = node.value("false_positive_lethal", false);
    log.civilian_harm = node.value("civilian_harm", false);
    log.envelope_violation = node.value("envelope_violation", false);
    return log;
}

}  // namespace

ReportFormat report_format_from_string(std::string_view name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "text") return ReportFormat::Text;
    fail(ErrorCode::InvalidArgument, "format must be json|csv|text");
}

Json doxastic_report_to_json(const DoxasticReport& report) {
    Json records = Json::array();
    for (const DoxasticRecord& record : report.records) {
        records.push_back(Json{{"proposition", record.proposition},
                               {"credence", record.credence},
                               {"attitude", record.attitude},
                               {"top_channels", record.top_channels},
                               {"justified", record.justified}});
    }
    return Json{{"agent", report.agent_id}, {"tick", report.tick}, {"records", records}};
}

Json run_report_to_json(const RunReport& report) {
    Json logs = Json::array();
    for (const TrialLog& log : report.logs) {
        Json verdicts = Json::array();
        for (const VerdictLog& verdict_log : log.verdicts) {
            verdicts.push_back(verdict_log_to_json(verdict_log));
        }
        Json decisions = Json::array();
        for (const DecisionLog& decision_log : log.decisions) {
            decisions.push_back(decision_log_to_json(decision_log));
        }
        logs.push_back(Json{{"trial", log.trial},
                            {"verdicts", verdicts},
                            {"decisions", decisions},
                            {"doxastic_report", doxastic_report_to_json(log.doxastic)}});
    }
    return Json{{"schema", "epistate.run_report.v1"},
                {"scenario", report.scenario},
                {"policy", report.policy},
                {"corpus_fingerprint", report.fingerprint},
                {"master_seed", report.master_seed},
                {"trials", report.trials},
                {"redacted", report.redacted},
                {"effective_config", report.effective_config},
                {"aggregates", aggregates_to_json(report.aggregates)},
                {"trial_logs", logs}};
}

RunReport run_report_from_json(const Json& document) {
    if (!document.is_object() || document.value("schema", std::string()) != "epistate.run_report.v1") {
        fail(ErrorCode::SchemaError, "not an epistate.run_report.v1 document");
    }
    RunReport report;
    report.scenario = document.value("scenario", std::string());
    report.policy = document.value("policy", std::string());
    report.fingerprint = document.value("corpus_fingerprint", std::string());
    report.master_seed = document.value("master_seed", 0ULL);
    report.trials = document.value("trials", 0);
    report.redacted = document.value("redacted", false);
    report.effective_config = document.value("effective_config", Json::object());

    const Json& agg = document.value("aggregates", Json::object());
    Aggregates& a = report.aggregates;
    a.decisions = agg.value("decisions", 0L);
    a.executes = agg.value("executes", 0L);
    a.withholds = agg.value("withholds", 0L);
    a.withdraws = agg.value("withdraws", 0L);
    a.aborts = agg.value("aborts", 0L);
    a.retargets = agg.value("retargets", 0L);
    a.lethal_decisions = agg.value("lethal_decisions", 0L);
    a.lethal_executes = agg.value("lethal_executes", 0L);
    a.legitimate_lethal_executes = agg.value("legitimate_lethal_executes", 0L);
    a.false_positive_lethal = agg.value("false_positive_lethal", 0L);
    a.civilian_harm = agg.value("civilian_harm", 0L);
    a.envelope_violations = agg.value("envelope_violations", 0L);
    a.legitimate_engagement_rate = agg.value("legitimate_engagement_rate", 0.0);
    a.withdrawal_rate = agg.value("withdrawal_rate", 0.0);
    a.gate_record_completeness = agg.value("gate_record_completeness", 1.0);
    a.mean_process_reliability = agg.value("mean_process_reliability", 0.0);
    const Json items_node_2 = agg.value("verdict_histogram", Json::object());
    for (const auto& [kind, count] : items_node_2.items()) {
        a.verdict_histogram[kind] = count.get<long>();
    }
    for (const Json& log_node : document.value("trial_logs", Json::array())) {
        TrialLog log;
        log.trial = log_node.value("trial", 0);
        for (const Json& v : log_node.value("verdicts", Json::array())) {
            log.verdicts.push_back(verdict_log_from_json(v));
        }
        for (const Json& d : log_node.value("decisions", Json::array())) {
            log.decisions.push_back(decision_log_from_json(d));
        }
        const Json& dox = log_node.value("doxastic_report", Json::object());
        log.doxastic.agent_id = dox.value("agent", std::string());
        log.doxastic.tick = dox.value("tick", 0);
        for (const Json& record_node : dox.value("records", Json::array())) {
            DoxasticRecord record;
            record.proposition = record_node.value("proposition", std::string());
            record.credence = record_node.value("credence", 0.0);
            record.attitude = record_node.value("attitude", std::string());
            for (const Json& channel : record_node.value("top_channels", Json::array())) {
                record.top_channels.push_back(channel.get<std::string>());
            }
            record.justified = record_node.value("justified", false);
            log.doxastic.records.push_back(std::move(record));
        }
        report.logs.push_back(std::move(log));
    }
    return report;
}

std::string emit_report(const RunReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) {
        return run_report_to_json(report).dump(2) + "\n";
    }

    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "# metrics\nmetric,value\n";
        out << "scenario," << csv_escape(report.scenario) << "\n";
        out << "policy," << report.policy << "\n";
        out << "corpus_fingerprint," << report.fingerprint << "\n";
        out << "trials," << report.trials << "\n";
        for (const auto& [metric, value] : metric_rows(report.aggregates)) {
            out << metric << "," << format_double(value) << "\n";
        }
        out << "\n# verdict_histogram\nverdict,count\n";
        for (const auto& [kind, count] : report.aggregates.verdict_histogram) {
            out << kind << "," << count << "\n";
        }
        out << "\n# verdicts\n"
            << "trial,name,kind,truth,attitude,justified,credence,condition_c_pass_rate,"
               "condition_d_pass_rate,tracking_samples,apt,reflective\n";
        for (const TrialLog& log : report.logs) {
            for (const VerdictLog& v : log.verdicts) {
                out << log.trial << "," << csv_escape(v.name) << "," << to_string(v.verdict.kind)
                    << "," << (v.verdict.truth ? "true" : "false") << ","
                    << to_string(v.verdict.attitude) << ","
                    << (v.verdict.justified ? "true" : "false") << ","
                    << format_double(v.credence) << ","
                    << format_double(v.verdict.tracking.condition_c_pass_rate) << ","
                    << format_double(v.verdict.tracking.condition_d_pass_rate) << ","
                    << v.verdict.tracking.samples << ","
                    << (v.verdict.aaa && v.verdict.aaa->apt ? "true" : "false") << ","
                    << (v.verdict.reflective && v.verdict.reflective->reflective ? "true" : "false")
                    << "\n";
            }
        }
        out << "\n# decisions\n"
            << "trial,action,chosen,outcome,mechanism,verdict,lethal,gate_label_true,"
               "legitimate_engagement,false_positive_lethal,civilian_harm,envelope_violation,"
               "target,target_class_at_impact\n";
        for (const TrialLog& log : report.logs) {
            for (const DecisionLog& d : log.decisions) {
                out << log.trial << "," << csv_escape(d.decision.action_id) << ","
                    << csv_escape(d.decision.chosen_action) << "," << to_string(d.decision.outcome)
                    << "," << d.decision.mechanism << "," << d.decision.verdict_kind << ","
                    << (d.lethal ? "true" : "false") << ","
                    << (d.gate_label_true ? "true" : "false") << ","
                    << (d.legitimate_engagement ? "true" : "false") << ","
                    << (d.false_positive_lethal ? "true" : "false") << ","
                    << (d.civilian_harm ? "true" : "false") << ","
                    << (d.envelope_violation ? "true" : "false") << ","
                    << csv_escape(d.target_entity) << "," << d.target_class_at_impact << "\n";
            }
        }
        return out.str();
    }

    // Text summary.
    out << "run report: scenario=" << report.scenario << " policy=" << report.policy
        << " trials=" << report.trials << " seed=" << report.master_seed << "\n";
    out << "corpus fingerprint: " << report.fingerprint << "\n\n";
    out << "aggregates:\n";
    for (const auto& [metric, value] : metric_rows(report.aggregates)) {
        out << "  " << metric << " = " << format_double(value) << "\n";
    }
    out << "verdict histogram:\n";
    for (const auto& [kind, count] : report.aggregates.verdict_histogram) {
        out << "  " << kind << " = " << count << "\n";
    }
    if (!report.logs.empty() && !report.logs.front().verdicts.empty()) {
        out << "\nverdicts (trial 0):\n";
        out << "  name | kind | truth | attitude | justified | safe_not_lucky | "
               "contextually_valid | available_for_scrutiny\n";
        for (const VerdictLog& v : report.logs.front().verdicts) {
            const bool safe_not_lucky = v.verdict.tracking.passes(v.verdict.tau_track) &&
                                        v.verdict.aaa && v.verdict.aaa->apt;
            out << "  " << v.name << " | " << to_string(v.verdict.kind) << " | "
                << (v.verdict.truth ? "T" : "F") << " | " << to_string(v.verdict.attitude) << " | "
                << (v.verdict.justified ? "T" : "F") << " | " << (safe_not_lucky ? "T" : "F")
                << " | " << (v.verdict.justified ? "T" : "F") << " | T\n";
        }
    }
    return out.str();
}

ReviewReport compare_policies(const std::vector<RunReport>& reports,
                              const std::vector<ReviewCriterion>& criteria) {
    if (reports.empty()) fail(ErrorCode::InvalidArgument, "compare_policies needs >= 1 report");
    ReviewReport review;
    review.fingerprint = reports.front().fingerprint;
    for (const RunReport& report : reports) {
        if (report.fingerprint != review.fingerprint) {
            fail(ErrorCode::CorpusMismatch,
                 "report for policy '" + report.policy + "' comes from a different corpus (" +
                     report.fingerprint + " != " + review.fingerprint + ")");
        }
        if (std::find(review.policies.begin(), review.policies.end(), report.policy) !=
            review.policies.end()) {
            fail(ErrorCode::InvalidArgument, "duplicate report for policy '" + report.policy + "'");
        }
        review.policies.push_back(report.policy);
        for (const auto& [metric, value] : metric_rows(report.aggregates)) {
            review.metrics[metric][report.policy] = value;
        }
    }

    if (review.policies.size() > 1) {
        for (const auto& [metric, by_policy] : review.metrics) {
            const int valence = metric_valence(metric);
            if (valence == 0) continue;
            std::string winner;
            double best = 0.0;
            bool tie = false;
            for (const std::string& policy : review.policies) {
                const double value = by_policy.at(policy);
                if (winner.empty()) {
                    winner = policy;
                    best = value;
                } else if (value * valence > best * valence) {
                    winner = policy;
                    best = value;
                    tie = false;
                } else if (value == best) {
                    tie = true;
                }
            }
            review.winners[metric] = tie ? "tie" : winner;
        }
    }

    for (const ReviewCriterion& criterion : criteria) {
        auto metric_it = review.metrics.find(criterion.metric);
        if (metric_it == review.metrics.end()) {
            fail(ErrorCode::DanglingReference, "unknown review metric '" + criterion.metric + "'");
        }
        auto lhs_it = metric_it->second.find(criterion.policy);
        if (lhs_it == metric_it->second.end()) {
            fail(ErrorCode::DanglingReference,
                 "criterion '" + criterion.name + "' references policy '" + criterion.policy +
                     "' with no report");
        }
        ReviewReport::CriterionResult result;
        result.criterion = criterion;
        result.lhs = lhs_it->second;
        if (criterion.value) {
            result.rhs = *criterion.value;
        } else {
            auto rhs_it = metric_it->second.find(criterion.other_policy);
            if (rhs_it == metric_it->second.end()) {
                fail(ErrorCode::DanglingReference,
                     "criterion '" + criterion.name + "' references policy '" +
                         criterion.other_policy + "' with no report");
            }
            result.rhs = rhs_it->second;
        }
        if (criterion.cmp == "lt") result.pass = result.lhs < result.rhs;
        else if (criterion.cmp == "le") result.pass = result.lhs <= result.rhs;
        else if (criterion.cmp == "gt") result.pass = result.lhs > result.rhs;
        else if (criterion.cmp == "ge") result.pass = result.lhs >= result.rhs;
        else result.pass = result.lhs == result.rhs;
        review.all_pass = review.all_pass && result.pass;
        review.criteria.push_back(std::move(result));
    }
    return review;
}

Json review_report_to_json(const ReviewReport& review) {
    Json metrics = Json::object();
    for (const auto& [metric, by_policy] : review.metrics) {
        metrics[metric] = by_policy;
    }
    Json criteria = Json::array();
    for (const ReviewReport::CriterionResult& result : review.criteria) {
        Json node{{"name", result.criterion.name},
                  {"metric", result.criterion.metric},
                  {"policy", result.criterion.policy},
                  {"cmp", result.criterion.cmp},
                  {"lhs", result.lhs},
                  {"rhs", result.rhs},
                  {"pass", result.pass}};
        if (!result.criterion.other_policy.empty()) {
            node["other_policy"] = result.criterion.other_policy;
        }
        if (result.criterion.value) node["value"] = *result.criterion.value;
        criteria.push_back(std::move(node));
    }
    return Json{{"schema", "epistate.review_report.v1"},
                {"corpus_fingerprint", review.fingerprint},
                {"policies", review.policies},
                {"metrics", metrics},
                {"winners", review.winners},
                {"criteria", criteria},
                {"all_pass", review.all_pass}};
}

std::string emit_review(const ReviewReport& review, ReportFormat format) {
    if (format == ReportFormat::Json) return review_report_to_json(review).dump(2) + "\n";

    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "# metrics\nmetric";
        for (const std::string& policy : review.policies) out << "," << policy;
        out << ",winner\n";
        for (const auto& [metric, by_policy] : review.metrics) {
            out << metric;
            for (const std::string& policy : review.policies) {
                out << "," << format_double(by_policy.at(policy));
            }
            auto winner = review.winners.find(metric);
            out << "," << (winner == review.winners.end() ? "" : winner->second) << "\n";
        }
        out << "\n# criteria\nname,metric,policy,cmp,lhs,rhs,pass\n";
        for (const ReviewReport::CriterionResult& result : review.criteria) {
            out << csv_escape(result.criterion.name) << "," << result.criterion.metric << ","
                << result.criterion.policy << "," << result.criterion.cmp << ","
                << format_double(result.lhs) << "," << format_double(result.rhs) << ","
                << (result.pass ? "true" : "false") << "\n";
        }
        return out.str();
    }

    out << "policy review (corpus " << review.fingerprint << ")\n";
    out << "policies:";
    for (const std::string& policy : review.policies) out << " " << policy;
    out << "\n\nmetric";
    for (const std::string& policy : review.policies) out << " | " << policy;
    out << " | winner\n";
    for (const auto& [metric, by_policy] : review.metrics) {
        out << metric;
        for (const std::string& policy : review.policies) {
            out << " | " << format_double(by_policy.at(policy));
        }
        auto winner = review.winners.find(metric);
        out << " | " << (winner == review.winners.end() ? "-" : winner->second) << "\n";
    }
    if (!review.criteria.empty()) {
        out << "\ncriteria:\n";
        for (const ReviewReport::CriterionResult& result : review.criteria) {
            out << "  [" << (result.pass ? "PASS" : "FAIL") << "] " << result.criterion.name << ": "
                << result.criterion.metric << "(" << result.criterion.policy
                << ")=" << format_double(result.lhs) << " " << result.criterion.cmp << " "
                << format_double(result.rhs) << "\n";
        }
        out << (review.all_pass ? "review: PASS\n" : "review: FAIL\n");
    }
    return out.str();
}

Json competence_profile_to_json(const CompetenceProfile& profile) {
    Json rows = Json::array();
    for (const CompetenceProfile::Row& row : profile.rows) {
        rows.push_back(Json{{"stage", row.stage},
                            {"difficulty", row.difficulty},
                            {"policy", row.policy},
                            {"trials", row.trials},
                            {"decisions", row.decisions},
                            {"success_rate", row.success_rate},
                            {"harm_rate", row.harm_rate}});
    }
    return Json{{"schema", "epistate.competence_profile.v1"}, {"rows", rows}};
}

std::string emit_profile(const CompetenceProfile& profile, ReportFormat format) {
    if (format == ReportFormat::Json) return competence_profile_to_json(profile).dump(2) + "\n";
    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "stage,difficulty,policy,trials,decisions,success_rate,harm_rate\n";
        for (const CompetenceProfile::Row& row : profile.rows) {
            out << csv_escape(row.stage) << "," << row.difficulty << "," << row.policy << ","
                << row.trials << "," << row.decisions << "," << format_double(row.success_rate)
                << "," << format_double(row.harm_rate) << "\n";
        }
        return out.str();
    }
    out << "competence profile:\n";
    for (const CompetenceProfile::Row& row : profile.rows) {
        out << "  " << row.stage << " (difficulty " << row.difficulty
            << "): success=" << format_double(row.success_rate)
            << " harm=" << format_double(row.harm_rate) << " over " << row.trials << " trials\n";
    }
    return out.str();
}

}  // namespace epistate
