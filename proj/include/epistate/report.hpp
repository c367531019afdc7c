#pragma once

#include <string>
#include <vector>

#include "epistate/runner.hpp"

namespace epistate {

enum class ReportFormat { Json, Csv, Text };

ReportFormat report_format_from_string(std::string_view name);

Json run_report_to_json(const RunReport& report);
Json doxastic_report_to_json(const DoxasticReport& report);
// Reads back the fields compare_policies needs (policy, fingerprint,
// aggregates); trial logs are not reconstructed.
RunReport run_report_from_json(const Json& document);

std::string emit_report(const RunReport& report, ReportFormat format);

struct ReviewReport {
    std::string fingerprint;
    std::vector<std::string> policies;  // column order = input order
    // metric -> policy -> value; metric set fixed by the report schema.
    std::map<std::string, std::map<std::string, double>> metrics;
    std::map<std::string, std::string> winners;  // valenced metrics only; "tie" on ties

    struct CriterionResult {
        ReviewCriterion criterion;
        double lhs = 0.0;
        double rhs = 0.0;
        bool pass = false;
    };
    std::vector<CriterionResult> criteria;
    bool all_pass = true;
};

// Side-by-side review table over reports generated from one corpus
// (fingerprints must match), with per-criterion pass/fail.
ReviewReport compare_policies(const std::vector<RunReport>& reports,
                              const std::vector<ReviewCriterion>& criteria);

Json review_report_to_json(const ReviewReport& review);
std::string emit_review(const ReviewReport& review, ReportFormat format);

Json competence_profile_to_json(const CompetenceProfile& profile);
std::string emit_profile(const CompetenceProfile& profile, ReportFormat format);

}  // namespace epistate
