#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "epistate/report.hpp"

namespace {

using namespace epistate;

Json load_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::SchemaError, "cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        fail(ErrorCode::SchemaError, "'" + path + "' is not valid JSON: " + e.what());
    }
}

ScenarioSpec load_with_overrides(const std::string& path, std::optional<uint64_t> seed,
                                 std::optional<int> trials) {
    Json document = load_document(path);
    if (seed) document["master_seed"] = *seed;
    if (trials) document["trials"] = *trials;
    return load_scenario(document);
}

void write_output(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write '" + out_path + "'");
    out << content;
}

struct CommonArgs {
    std::string scenario_path;
    std::string policy_name;
    std::string out_path;
    std::string format_name = "json";
    std::optional<uint64_t> seed;
    std::optional<int> trials;
    int threads = 1;
    bool redact = false;
};

RunOptions make_options(const CommonArgs& args) {
    RunOptions options;
    if (!args.policy_name.empty()) {
        options.policy_override = policy_kind_from_string(args.policy_name);
    }
    options.threads = args.threads;
    options.redact_gate_records = args.redact;
    return options;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"epistate: epistemic-state engine and scenario simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> report_paths;
    std::string criteria_path;
    std::string in_path;

    auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
        if (needs_scenario) {
            cmd->add_option("-s,--scenario", args.scenario_path, "scenario document path")
                ->required();
            cmd->add_option("-p,--policy", args.policy_name,
                            "policy override: AS1v | AS2b | AS3bv");
            cmd->add_option("--seed", args.seed, "master seed override");
            cmd->add_option("-n,--trials", args.trials, "trial count override");
            cmd->add_option("-j,--threads", args.threads, "trial execution threads");
        }
        cmd->add_option("-o,--out", args.out_path, "output path (default: stdout)");
        cmd->add_option("-f,--format", args.format_name, "output format: json | csv | text");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run a scenario's trials and emit a run report");
    add_common(run_cmd, true);
    run_cmd->add_flag("--redact", args.redact, "drop gate records from the logs (behavioral view)");

    CLI::App* classify_cmd =
        app.add_subcommand("classify", "run one trial and print its epistemic verdicts");
    add_common(classify_cmd, true);

    CLI::App* assay_cmd =
        app.add_subcommand("assay", "run the scenario's staged know-how assay");
    add_common(assay_cmd, true);

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "compare stored run reports from one corpus");
    compare_cmd->add_option("-r,--reports", report_paths, "run report JSON paths")
        ->required()
        ->expected(-1);
    compare_cmd->add_option("-c,--criteria", criteria_path,
                            "criteria JSON (defaults to the scenario's review_criteria)");
    add_common(compare_cmd, false);

    CLI::App* report_cmd = app.add_subcommand("report", "re-emit a stored run report");
    report_cmd->add_option("-i,--in", in_path, "run report JSON path")->required();
    add_common(report_cmd, false);

    CLI11_PARSE(app, argc, argv);

    try {
        const ReportFormat format = report_format_from_string(args.format_name);

        if (run_cmd->parsed()) {
            const ScenarioSpec spec = load_with_overrides(args.scenario_path, args.seed, args.trials);
            const RunReport report = run_trials(spec, make_options(args));
            write_output(emit_report(report, format), args.out_path);
        } else if (classify_cmd->parsed()) {
            ScenarioSpec spec = load_with_overrides(args.scenario_path, args.seed, args.trials);
            spec.trials = std::max(1, std::min(spec.trials, 1));
            spec.effective["trials"] = spec.trials;
            RunOptions options = make_options(args);
            options.threads = 1;
            const RunReport report = run_trials(spec, options);
            if (format == ReportFormat::Json) {
                Json verdicts = Json::array();
                for (const TrialLog& log : report.logs) {
                    for (const VerdictLog& v : log.verdicts) {
                        verdicts.push_back(Json{{"name", v.name},
                                                {"kind", to_string(v.verdict.kind)},
                                                {"truth", v.verdict.truth},
                                                {"attitude", to_string(v.verdict.attitude)},
                                                {"justified", v.verdict.justified},
                                                {"credence", v.credence},
                                                {"condition_c_pass_rate",
                                                 v.verdict.tracking.condition_c_pass_rate},
                                                {"condition_d_pass_rate",
                                                 v.verdict.tracking.condition_d_pass_rate}});
                    }
                }
                write_output(verdicts.dump(2) + "\n", args.out_path);
            } else {
                write_output(emit_report(report, ReportFormat::Text), args.out_path);
            }
        } else if (assay_cmd->parsed()) {
            const ScenarioSpec spec = load_with_overrides(args.scenario_path, args.seed, args.trials);
            const CompetenceProfile profile = assay_know_how(spec, make_options(args));
            write_output(emit_profile(profile, format), args.out_path);
        } else if (compare_cmd->parsed()) {
            std::vector<RunReport> reports;
            for (const std::string& path : report_paths) {
                reports.push_back(run_report_from_json(load_document(path)));
            }
            std::vector<ReviewCriterion> criteria;
            Json criteria_json = Json::array();
            if (!criteria_path.empty()) {
                criteria_json = load_document(criteria_path);
            } else if (!reports.empty()) {
                criteria_json =
                    reports.front().effective_config.value("review_criteria", Json::array());
            }
            if (!criteria_json.empty()) {
                Json wrapper{{"master_seed", 0},
                             {"world", Json{{"entities", Json::array()}}},
                             {"review_criteria", criteria_json}};
                criteria = load_scenario(wrapper).review_criteria;
            }
            const ReviewReport review = compare_policies(reports, criteria);
            write_output(emit_review(review, format), args.out_path);
        } else if (report_cmd->parsed()) {
            const RunReport report = run_report_from_json(load_document(in_path));
            write_output(emit_report(report, format), args.out_path);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return error_exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
