#include "doctest.h"

#include <cmath>

#include "epistate/hnpm.hpp"

using namespace epistate;

namespace {

HypothesisLevel level1(std::vector<std::string> names, std::vector<double> prior) {
    HypothesisLevel level;
    level.rank = 1;
    for (auto& name : names) level.hypotheses.push_back({std::move(name), 0.0});
    level.prior = std::move(prior);
    return level;
}

HypothesisLevel level_n(int rank, std::vector<Hypothesis> hypotheses,
                        std::vector<std::vector<double>> link) {
    HypothesisLevel level;
    level.rank = rank;
    level.hypotheses = std::move(hypotheses);
    level.link = std::move(link);
    return level;
}

// 2x2x2 toy: level1 {A,B}, level2 {X,Y}, level3 {c,i}.
HnpmModel toy_model() {
    return build_hierarchy({
        level1({"A", "B"}, {0.6, 0.4}),
        level_n(2, {{"X", 0.0}, {"Y", 0.0}}, {{0.7, 0.3}, {0.2, 0.8}}),
        level_n(3, {{"c", 0.0}, {"i", 0.0}}, {{0.9, 0.1}, {0.5, 0.5}}),
    });
}

// Overhypothesis structure: are instance sets internally uniform or mixed?
// level2 is each set's composition; level3 is a draw from the set.
HnpmModel bags_model() {
    return build_hierarchy({
        level1({"uniform_sets", "mixed_sets"}, {0.5, 0.5}),
        level_n(2, {{"all_black", 1.0}, {"all_white", 1.0}, {"mixed", 0.0}},
                {{0.45, 0.45, 0.1}, {0.1, 0.1, 0.8}}),
        level_n(3, {{"black", 0.0}, {"white", 0.0}},
                {{0.99, 0.01}, {0.01, 0.99}, {0.5, 0.5}}),
    });
}

// Channel-reliability hierarchy: are channels generally reliable, which
// reliability bin does each channel sit in, and is each report correct?
HnpmModel reliability_model() {
    return build_hierarchy({
        level1({"generally_reliable", "generally_unreliable"}, {0.5, 0.5}),
        level_n(2, {{"r55", 0.55}, {"r75", 0.75}, {"r95", 0.95}},
                {{0.1, 0.3, 0.6}, {0.6, 0.3, 0.1}}),
        level_n(3, {{"correct", 0.0}, {"incorrect", 0.0}},
                {{0.55, 0.45}, {0.75, 0.25}, {0.95, 0.05}}),
    });
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    return diff;
}

void check_tables_close(const PosteriorTable& a, const PosteriorTable& b, double tol) {
    CHECK(max_abs_diff(a.level1, b.level1) <= tol);
    REQUIRE(a.level2.size() == b.level2.size());
    for (const auto& [group, dist] : a.level2) {
        CHECK(max_abs_diff(dist, b.level2.at(group)) <= tol);
    }
    for (const auto& [group, dist] : a.level3_predictive) {
        CHECK(max_abs_diff(dist, b.level3_predictive.at(group)) <= tol);
    }
}

void check_proper(const PosteriorTable& table) {
    double sum1 = 0.0;
    for (double p : table.level1) sum1 += p;
    CHECK(std::abs(sum1 - 1.0) <= 1e-9);
    for (const auto& [group, dist] : table.level2) {
        double sum = 0.0;
        for (double p : dist) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
    for (const auto& [group, dist] : table.level3_predictive) {
        double sum = 0.0;
        for (double p : dist) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

// Baseline with the hierarchy collapsed: a fixed level-2 prior (level-1
// marginalized out once) updated only on the queried group's own data.
std::vector<double> flat_predictive(const HnpmModel& model,
                                    const std::vector<GroupedObservation>& own_observations) {
    const std::size_t n2 = model.level2.hypotheses.size();
    const std::size_t n3 = model.level3.hypotheses.size();
    std::vector<double> prior2(n2, 0.0);
    for (std::size_t h1 = 0; h1 < model.level1.hypotheses.size(); ++h1) {
        for (std::size_t h2 = 0; h2 < n2; ++h2) {
            prior2[h2] += model.level1.prior[h1] * model.level2.link[h1][h2];
        }
    }
    std::vector<double> weights = prior2;
    for (const GroupedObservation& obs : own_observations) {
        for (std::size_t h2 = 0; h2 < n2; ++h2) {
            weights[h2] *= std::pow(model.level3.link[h2][model.index3(obs.value)], obs.count);
        }
    }
    double normalizer = 0.0;
    for (double w : weights) normalizer += w;
    std::vector<double> predictive(n3, 0.0);
    for (std::size_t h2 = 0; h2 < n2; ++h2) {
        for (std::size_t v = 0; v < n3; ++v) {
            predictive[v] += (weights[h2] / normalizer) * model.level3.link[h2][v];
        }
    }
    return predictive;
}

}  // namespace

TEST_CASE("build_hierarchy validates structure") {
    CHECK_NOTHROW((void)toy_model());

    SUBCASE("a link row summing to 0.9 is rejected") {
        CHECK_THROWS_WITH_AS(
            (void)build_hierarchy({
                level1({"A", "B"}, {0.6, 0.4}),
                level_n(2, {{"X", 0.0}, {"Y", 0.0}}, {{0.6, 0.3}, {0.2, 0.8}}),
                level_n(3, {{"c", 0.0}, {"i", 0.0}}, {{0.9, 0.1}, {0.5, 0.5}}),
            }),
            doctest::Contains("NonNormalized"), Error);
    }
    SUBCASE("missing rank is rejected") {
        CHECK_THROWS_WITH_AS((void)build_hierarchy({
                                 level1({"A", "B"}, {0.6, 0.4}),
                                 level_n(3, {{"c", 0.0}}, {{1.0}, {1.0}}),
                             }),
                             doctest::Contains("MissingLevel"), Error);
    }
    SUBCASE("the reliability hierarchy is well-formed") { CHECK_NOTHROW((void)reliability_model()); }
}

TEST_CASE("hierarchical_update matches hand-computed joint enumeration") {
    // One 'c' in a single group. Joint weights:
    //   (A,X)=.6*.7*.9=.378  (A,Y)=.6*.3*.5=.090
    //   (B,X)=.4*.2*.9=.072  (B,Y)=.4*.8*.5=.160   Z=.700
    HnpmModel model = toy_model();
    PosteriorTable table = hierarchical_update(model, {{"g", "c", 1}});
    CHECK(table.marginal_likelihood == doctest::Approx(0.700).epsilon(1e-12));
    CHECK(table.level1[0] == doctest::Approx(0.468 / 0.700).epsilon(1e-12));
    CHECK(table.level2.at("g")[0] == doctest::Approx(0.450 / 0.700).epsilon(1e-12));
    // predictive(c) = (.45*.9 + .25*.5)/.70
    CHECK(table.level3_predictive.at("g")[0] ==
          doctest::Approx((0.45 * 0.9 + 0.25 * 0.5) / 0.70).epsilon(1e-12));
    check_proper(table);
}

TEST_CASE("uniform symmetric models stay uniform") {
    HnpmModel model = build_hierarchy({
        level1({"A", "B"}, {0.5, 0.5}),
        level_n(2, {{"X", 0.0}, {"Y", 0.0}}, {{0.5, 0.5}, {0.5, 0.5}}),
        level_n(3, {{"c", 0.0}, {"i", 0.0}}, {{0.5, 0.5}, {0.5, 0.5}}),
    });
    PosteriorTable table = hierarchical_update(model, {{"g", "c", 3}});
    CHECK(table.level1[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(table.level2.at("g")[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("oracle equivalence on assorted fixtures") {
    SUBCASE("toy model, several groups and counts") {
        HnpmModel model = toy_model();
        const std::vector<GroupedObservation> observations = {
            {"g1", "c", 3}, {"g1", "i", 1}, {"g2", "c", 2}, {"g3", "i", 4}};
        check_tables_close(hierarchical_update(model, observations),
                           exact_posterior_oracle(model, observations), 1e-12);
    }
    SUBCASE("reliability model with a fresh query group") {
        HnpmModel model = reliability_model();
        const std::vector<GroupedObservation> observations = {
            {"isr", "correct", 9}, {"isr", "incorrect", 1}, {"visual", "correct", 4}};
        check_tables_close(hierarchical_update(model, observations, {"operator"}),
                           exact_posterior_oracle(model, observations, {"operator"}), 1e-12);
    }
    SUBCASE("empty observation list returns the priors") {
        HnpmModel model = toy_model();
        PosteriorTable table = exact_posterior_oracle(model, {});
        CHECK(table.level1[0] == doctest::Approx(0.6).epsilon(1e-12));
        // level2 prior for the default group: .6*.7+.4*.2 = .5
        CHECK(level_posterior(table, 2)[0] == doctest::Approx(0.5).epsilon(1e-12));
        check_tables_close(table, hierarchical_update(model, {}), 1e-12);
    }
}

TEST_CASE("observation errors") {
    HnpmModel model = toy_model();
    SUBCASE("zero-probability observation") {
        HnpmModel dogmatic = build_hierarchy({
            level1({"A"}, {1.0}),
            level_n(2, {{"X", 0.0}}, {{1.0}}),
            level_n(3, {{"c", 0.0}, {"i", 0.0}}, {{1.0, 0.0}}),
        });
        CHECK_THROWS_WITH_AS((void)hierarchical_update(dogmatic, {{"g", "i", 1}}),
                             doctest::Contains("ZeroProbabilityObservation"), Error);
        CHECK_THROWS_WITH_AS((void)exact_posterior_oracle(dogmatic, {{"g", "i", 1}}),
                             doctest::Contains("ZeroProbabilityObservation"), Error);
    }
    SUBCASE("a value outside level-3 support is rejected") {
        CHECK_THROWS_AS((void)hierarchical_update(model, {{"g", "nope", 1}}), Error);
    }
    SUBCASE("the oracle refuses joint supports above 10000") {
        std::vector<GroupedObservation> observations;
        for (int g = 0; g < 9; ++g) {
            observations.push_back({"g" + std::to_string(g), "correct", 1});
        }
        // 2 * 3^9 = 39366 configurations.
        CHECK_THROWS_WITH_AS((void)exact_posterior_oracle(reliability_model(), observations),
                             doctest::Contains("SupportTooLarge"), Error);
    }
}

TEST_CASE("overhypothesis learning transfers to a new set") {
    HnpmModel model = bags_model();
    // Four sets, three same-colored draws each (colors alternate across sets).
    std::vector<GroupedObservation> observations;
    for (int bag = 0; bag < 4; ++bag) {
        observations.push_back(
            {"bag" + std::to_string(bag), bag % 2 == 0 ? "black" : "white", 3});
    }
    // One draw from a brand-new set.
    observations.push_back({"bag_new", "black", 1});

    PosteriorTable table = hierarchical_update(model, observations);
    check_tables_close(table, exact_posterior_oracle(model, observations), 1e-9);
    check_proper(table);

    // The uniform-sets overhypothesis dominates...
    CHECK(table.level1[0] > 0.9);
    // ...so the next draw from the new set is predicted black far beyond the
    // flat baseline that never learned across sets.
    const double hierarchical = table.level3_predictive.at("bag_new")[0];
    const double flat = flat_predictive(model, {{"bag_new", "black", 1}})[0];
    CHECK(hierarchical > flat);
    CHECK(hierarchical > 0.9);
}

TEST_CASE("level-1 reliability marginal rises monotonically with correct reports") {
    HnpmModel model = reliability_model();
    double previous = 0.0;
    for (int n = 1; n <= 12; ++n) {
        PosteriorTable table = hierarchical_update(model, {{"isr", "correct", n}});
        const double reliable_mass = table.level1[0];
        CHECK(reliable_mass > previous);
        previous = reliable_mass;
    }
}

TEST_CASE("evidence order does not matter for grouped observations") {
    HnpmModel model = reliability_model();
    const std::vector<GroupedObservation> forward = {
        {"isr", "correct", 5}, {"visual", "incorrect", 2}, {"isr", "incorrect", 1}};
    const std::vector<GroupedObservation> shuffled = {
        {"isr", "incorrect", 1}, {"isr", "correct", 5}, {"visual", "incorrect", 2}};
    check_tables_close(hierarchical_update(model, forward), hierarchical_update(model, shuffled),
                       1e-12);
}

TEST_CASE("level_posterior projects stored marginals") {
    HnpmModel model = toy_model();
    PosteriorTable table = hierarchical_update(model, {{"g", "c", 1}});
    CHECK(level_posterior(table, 1) == table.level1);
    CHECK(level_posterior(table, 2) == table.level2.at("g"));
    CHECK(level_posterior(table, 3) == table.level3_predictive.at("g"));
    CHECK_THROWS_AS((void)level_posterior(table, 4), Error);

    SUBCASE("rank-2 projection is ambiguous with several groups") {
        PosteriorTable multi = hierarchical_update(model, {{"g1", "c", 1}, {"g2", "i", 1}});
        CHECK_THROWS_AS((void)level_posterior(multi, 2), Error);
    }
}

TEST_CASE("level-2 threshold masses feed the meta credence") {
    HnpmModel model = reliability_model();
    PosteriorTable table = hierarchical_update(model, {{"isr", "correct", 90}, {"isr", "incorrect", 10}});
    const double mass = level2_mass_at_least(model, table, "isr", 0.8);
    const auto& dist = table.level2.at("isr");
    CHECK(mass == doctest::Approx(dist[2]).epsilon(1e-12));  // only the 0.95 bin clears 0.8
    const double mean = level2_mean_value(model, table, "isr");
    CHECK(mean == doctest::Approx(0.55 * dist[0] + 0.75 * dist[1] + 0.95 * dist[2]).epsilon(1e-12));
}
