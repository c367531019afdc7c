#include "epistate/hnpm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace epistate {

namespace {

void check_distribution(const std::vector<double>& dist, const std::string& what) {
    if (dist.empty()) fail(ErrorCode::NonNormalized, what + " is empty");
    double sum = 0.0;
    for (double p : dist) {
        if (p < 0.0 || p > 1.0) fail(ErrorCode::NonNormalized, what + " has entry outside [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        fail(ErrorCode::NonNormalized, what + " sums to " + format_double(sum));
    }
}

std::size_t index_of(const std::vector<Hypothesis>& hyps, const std::string& name,
                     const std::string& what) {
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        if (hyps[i].name == name) return i;
    }
    fail(ErrorCode::UnknownHypothesis, what + " '" + name + "' not in hierarchy");
}

// Ordered union of observation groups and query groups.
std::vector<std::string> collect_groups(const std::vector<GroupedObservation>& observations,
                                        const std::vector<std::string>& query_groups) {
    std::set<std::string> seen;
    std::vector<std::string> groups;
    for (const GroupedObservation& obs : observations) {
        if (seen.insert(obs.group).second) groups.push_back(obs.group);
    }
    for (const std::string& g : query_groups) {
        if (seen.insert(g).second) groups.push_back(g);
    }
    if (groups.empty()) groups.push_back("default");
    return groups;
}

// Per-group level-3 observation counts, indexed by level-3 hypothesis.
std::map<std::string, std::vector<int>> tally(const HnpmModel& model,
                                              const std::vector<GroupedObservation>& observations,
                                              const std::vector<std::string>& groups) {
    std::map<std::string, std::vector<int>> counts;
    for (const std::string& g : groups) counts[g].assign(model.level3.hypotheses.size(), 0);
    for (const GroupedObservation& obs : observations) {
        if (obs.count < 0) fail(ErrorCode::InvalidArgument, "negative observation count");
        counts[obs.group][model.index3(obs.value)] += obs.count;
    }
    return counts;
}

double group_likelihood(const HnpmModel& model, std::size_t h2, const std::vector<int>& counts) {
    double like = 1.0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
        if (counts[v] == 0) continue;
        like *= std::pow(model.level3.link[h2][v], counts[v]);
    }
    return like;
}

void finish_table(const HnpmModel& model, PosteriorTable& table,
                  const std::vector<std::string>& groups) {
    // Predictive for the next level-3 draw in each group.
    for (const std::string& g : groups) {
        const std::vector<double>& post2 = table.level2.at(g);
        std::vector<double> predictive(model.level3.hypotheses.size(), 0.0);
        for (std::size_t h2 = 0; h2 < post2.size(); ++h2) {
            for (std::size_t v = 0; v < predictive.size(); ++v) {
                predictive[v] += post2[h2] * model.level3.link[h2][v];
            }
        }
        table.level3_predictive[g] = std::move(predictive);
    }
}

}  // namespace

std::size_t HnpmModel::index2(const std::string& name) const {
    return index_of(level2.hypotheses, name, "level-2 hypothesis");
}

std::size_t HnpmModel::index3(const std::string& name) const {
    return index_of(level3.hypotheses, name, "level-3 hypothesis");
}

HnpmModel build_hierarchy(const std::vector<HypothesisLevel>& levels) {
    HnpmModel model;
    bool have[4] = {false, false, false, false};
    for (const HypothesisLevel& level : levels) {
        if (level.rank < 1 || level.rank > 3) {
            fail(ErrorCode::InvalidArgument, "level rank must be 1..3");
        }
        if (have[level.rank]) fail(ErrorCode::InvalidArgument, "duplicate level rank");
        have[level.rank] = true;
        if (level.rank == 1) model.level1 = level;
        if (level.rank == 2) model.level2 = level;
        if (level.rank == 3) model.level3 = level;
    }
    for (int r = 1; r <= 3; ++r) {
        if (!have[r]) fail(ErrorCode::MissingLevel, "hierarchy missing rank " + std::to_string(r));
    }

    if (model.level1.hypotheses.empty() || model.level2.hypotheses.empty() ||
        model.level3.hypotheses.empty()) {
        fail(ErrorCode::InvalidArgument, "every level needs at least one hypothesis");
    }
    check_distribution(model.level1.prior, "level-1 prior");
    if (model.level1.prior.size() != model.level1.hypotheses.size()) {
        fail(ErrorCode::NonNormalized, "level-1 prior length mismatch");
    }
    if (model.level2.link.size() != model.level1.hypotheses.size()) {
        fail(ErrorCode::MissingLevel, "level-2 link needs one row per level-1 hypothesis");
    }
    for (std::size_t r = 0; r < model.level2.link.size(); ++r) {
        if (model.level2.link[r].size() != model.level2.hypotheses.size()) {
            fail(ErrorCode::NonNormalized, "level-2 link row width mismatch");
        }
        check_distribution(model.level2.link[r], "level-2 link row " + std::to_string(r));
    }
    if (model.level3.link.size() != model.level2.hypotheses.size()) {
        fail(ErrorCode::MissingLevel, "level-3 link needs one row per level-2 hypothesis");
    }
    for (std::size_t r = 0; r < model.level3.link.size(); ++r) {
        if (model.level3.link[r].size() != model.level3.hypotheses.size()) {
            fail(ErrorCode::NonNormalized, "level-3 link row width mismatch");
        }
        check_distribution(model.level3.link[r], "level-3 link row " + std::to_string(r));
    }
    return model;
}

PosteriorTable hierarchical_update(const HnpmModel& model,
                                   const std::vector<GroupedObservation>& observations,
                                   const std::vector<std::string>& query_groups) {
    const std::vector<std::string> groups = collect_groups(observations, query_groups);
    const auto counts = tally(model, observations, groups);
    const std::size_t n1 = model.level1.hypotheses.size();
    const std::size_t n2 = model.level2.hypotheses.size();

    // Per (h1, group): marginal likelihood of the group's data summed over its
    // level-2 variable. Groups are conditionally independent given h1, so the
    // joint factorizes; this is algebraically the full enumeration.
    std::map<std::string, std::vector<std::vector<double>>> joint2;  // group -> [h1][h2]
    std::map<std::string, std::vector<double>> evidence;             // group -> per-h1 sum
    for (const std::string& g : groups) {
        auto& j2 = joint2[g];
        auto& ev = evidence[g];
        j2.assign(n1, std::vector<double>(n2, 0.0));
        ev.assign(n1, 0.0);
        for (std::size_t h1 = 0; h1 < n1; ++h1) {
            for (std::size_t h2 = 0; h2 < n2; ++h2) {
                j2[h1][h2] = model.level2.link[h1][h2] * group_likelihood(model, h2, counts.at(g));
                ev[h1] += j2[h1][h2];
            }
        }
    }

    std::vector<double> weight1(n1, 0.0);
    double normalizer = 0.0;
    for (std::size_t h1 = 0; h1 < n1; ++h1) {
        double w = model.level1.prior[h1];
        for (const std::string& g : groups) w *= evidence.at(g)[h1];
        weight1[h1] = w;
        normalizer += w;
    }
    if (normalizer <= 0.0) {
        fail(ErrorCode::ZeroProbabilityObservation, "observations have zero prior probability");
    }

    PosteriorTable table;
    table.marginal_likelihood = normalizer;
    table.level1.assign(n1, 0.0);
    for (std::size_t h1 = 0; h1 < n1; ++h1) table.level1[h1] = weight1[h1] / normalizer;

    for (const std::string& g : groups) {
        std::vector<double> post2(n2, 0.0);
        for (std::size_t h1 = 0; h1 < n1; ++h1) {
            if (weight1[h1] <= 0.0) continue;
            const double other = weight1[h1] / evidence.at(g)[h1];  // evidence > 0 when weight > 0
            for (std::size_t h2 = 0; h2 < n2; ++h2) {
                post2[h2] += other * joint2.at(g)[h1][h2];
            }
        }
        for (double& p : post2) p /= normalizer;
        table.level2[g] = std::move(post2);
    }
    finish_table(model, table, groups);
    return table;
}

PosteriorTable exact_posterior_oracle(const HnpmModel& model,
                                      const std::vector<GroupedObservation>& observations,
                                      const std::vector<std::string>& query_groups) {
    const std::vector<std::string> groups = collect_groups(observations, query_groups);
    const auto counts = tally(model, observations, groups);
    const std::size_t n1 = model.level1.hypotheses.size();
    const std::size_t n2 = model.level2.hypotheses.size();
    const std::size_t n_groups = groups.size();

    double support = static_cast<double>(n1);
    for (std::size_t g = 0; g < n_groups; ++g) support *= static_cast<double>(n2);
    if (support > 10000.0) {
        fail(ErrorCode::SupportTooLarge,
             "joint support " + format_double(support) + " exceeds oracle bound 10000");
    }

    std::vector<double> weight1(n1, 0.0);
    std::map<std::string, std::vector<double>> weight2;
    for (const std::string& g : groups) weight2[g].assign(n2, 0.0);
    double normalizer = 0.0;

    // Odometer over every (h1, h2 per group) configuration.
    std::vector<std::size_t> assignment(n_groups, 0);
    for (std::size_t h1 = 0; h1 < n1; ++h1) {
        std::fill(assignment.begin(), assignment.end(), 0);
        while (true) {
            double joint = model.level1.prior[h1];
            for (std::size_t g = 0; g < n_groups; ++g) {
                const std::size_t h2 = assignment[g];
                joint *= model.level2.link[h1][h2] *
                         group_likelihood(model, h2, counts.at(groups[g]));
            }
            normalizer += joint;
            weight1[h1] += joint;
            for (std::size_t g = 0; g < n_groups; ++g) {
                weight2[groups[g]][assignment[g]] += joint;
            }

            std::size_t pos = 0;
            while (pos < n_groups) {
                if (++assignment[pos] < n2) break;
                assignment[pos] = 0;
                ++pos;
            }
            if (pos == n_groups) break;
        }
    }
    if (normalizer <= 0.0) {
        fail(ErrorCode::ZeroProbabilityObservation, "observations have zero prior probability");
    }

    PosteriorTable table;
    table.marginal_likelihood = normalizer;
    table.level1.assign(n1, 0.0);
    for (std::size_t h1 = 0; h1 < n1; ++h1) table.level1[h1] = weight1[h1] / normalizer;
    for (const std::string& g : groups) {
        std::vector<double> post2 = weight2.at(g);
        for (double& p : post2) p /= normalizer;
        table.level2[g] = std::move(post2);
    }
    finish_table(model, table, groups);
    return table;
}

std::vector<double> level_posterior(const PosteriorTable& table, int rank) {
    if (rank == 1) return table.level1;
    if (rank == 2 || rank == 3) {
        const auto& by_group = rank == 2 ? table.level2 : table.level3_predictive;
        if (by_group.size() != 1) {
            fail(ErrorCode::InvalidArgument,
                 "level_posterior on rank " + std::to_string(rank) +
                     " needs a single-group table; read the per-group map instead");
        }
        return by_group.begin()->second;
    }
    fail(ErrorCode::InvalidArgument, "rank must be 1..3");
}

double level2_mass_at_least(const HnpmModel& model, const PosteriorTable& table,
                            const std::string& group, double threshold) {
    auto it = table.level2.find(group);
    if (it == table.level2.end()) {
        fail(ErrorCode::UnknownHypothesis, "group '" + group + "' not in posterior table");
    }
    double mass = 0.0;
    for (std::size_t h2 = 0; h2 < it->second.size(); ++h2) {
        if (model.level2.hypotheses[h2].value >= threshold) mass += it->second[h2];
    }
    return mass;
}

double level2_mean_value(const HnpmModel& model, const PosteriorTable& table,
                         const std::string& group) {
    auto it = table.level2.find(group);
    if (it == table.level2.end()) {
        fail(ErrorCode::UnknownHypothesis, "group '" + group + "' not in posterior table");
    }
    double mean = 0.0;
    for (std::size_t h2 = 0; h2 < it->second.size(); ++h2) {
        mean += model.level2.hypotheses[h2].value * it->second[h2];
    }
    return mean;
}

}  // namespace epistate
