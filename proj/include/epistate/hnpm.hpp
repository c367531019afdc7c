#pragma once

#include <map>
#include <string>
#include <vector>

#include "epistate/common.hpp"

namespace epistate {

struct Hypothesis {
    std::string name;
    // Optional numeric reading of the hypothesis (e.g. the reliability a level-2
    // bin stands for). Used for threshold masses and posterior means.
    double value = 0.0;
};

// One level of the hierarchy. Rank 1 carries a prior; ranks 2 and 3 carry a
// conditional row per parent hypothesis.
struct HypothesisLevel {
    int rank = 1;
    std::vector<Hypothesis> hypotheses;
    std::vector<double> prior;               // rank 1
    std::vector<std::vector<double>> link;   // rank 2/3: link[parent][child]
};

// Three-level nested model: rank-1 abstract principles, rank-2 theories about
// instance sets, rank-3 particular experiences. Each observation group (an
// instance set: a bag, a channel) gets its own rank-2 variable drawn from the
// rank-1-conditioned link, which is how upper levels constrain lower-level
// interpretation across sets.
struct HnpmModel {
    HypothesisLevel level1, level2, level3;

    std::size_t index2(const std::string& name) const;
    std::size_t index3(const std::string& name) const;
};

HnpmModel build_hierarchy(const std::vector<HypothesisLevel>& levels);

struct GroupedObservation {
    std::string group;
    std::string value;  // a level-3 hypothesis name
    int count = 1;
};

struct PosteriorTable {
    std::vector<double> level1;                                   // marginal over level-1 hypotheses
    std::map<std::string, std::vector<double>> level2;            // per group
    std::map<std::string, std::vector<double>> level3_predictive; // per group, next-draw distribution
    double marginal_likelihood = 0.0;                             // joint normalizing constant
};

// Exact posterior given conditionally independent level-3 observations.
// query_groups lists groups the table must report level-2/3 marginals for even
// when they carry no observations yet (a fresh instance set).
PosteriorTable hierarchical_update(const HnpmModel& model,
                                   const std::vector<GroupedObservation>& observations,
                                   const std::vector<std::string>& query_groups = {});

// Reference implementation: enumerates every (level-1, per-group level-2)
// configuration outright, then marginalizes. No factorization. Refuses joint
// supports above 10,000 configurations.
PosteriorTable exact_posterior_oracle(const HnpmModel& model,
                                      const std::vector<GroupedObservation>& observations,
                                      const std::vector<std::string>& query_groups = {});

// Stored marginal for a rank. Rank 2/3 require the table to hold exactly one
// group; multi-group tables are read through the per-group maps.
std::vector<double> level_posterior(const PosteriorTable& table, int rank);

// Posterior mass of a group's level-2 marginal on bins whose value >= threshold.
double level2_mass_at_least(const HnpmModel& model, const PosteriorTable& table,
                            const std::string& group, double threshold);

// Posterior mean of a group's level-2 bin values.
double level2_mean_value(const HnpmModel& model, const PosteriorTable& table,
                         const std::string& group);

}  // namespace epistate
