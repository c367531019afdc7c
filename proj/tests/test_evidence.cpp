#include "doctest.h"

#include <cmath>

#include "epistate/evidence.hpp"
#include "epistate/rng.hpp"

using namespace epistate;

namespace {

const std::vector<std::string> kClassLabels = {"Civilian", "Belligerent"};

WorldState one_civilian_world(uint64_t root = 3) {
    return make_world({Entity{"p1", EntityClass::Civilian, {0, 0}, {0, 0}}}, {}, root);
}

Channel honest_channel(double accuracy, double availability = 1.0) {
    Channel channel;
    channel.id = "visual";
    channel.process_id = "visual_feed";
    channel.confusion = ConfusionMatrix::symmetric(kClassLabels, accuracy);
    channel.availability = availability;
    return channel;
}

ObservationTarget entity_target(std::string id) {
    ObservationTarget target;
    target.kind = ObservationTarget::Kind::Entity;
    target.entity_id = std::move(id);
    return target;
}

ObservationTarget region_target(EntityClass cls, GridPos center, int radius) {
    ObservationTarget target;
    target.kind = ObservationTarget::Kind::Region;
    target.cls = cls;
    target.center = center;
    target.radius = radius;
    return target;
}

}  // namespace

TEST_CASE("a noiseless available channel reports the true class") {
    Channel channel = honest_channel(1.0);
    channel.confusion = ConfusionMatrix::identity(kClassLabels);
    WorldState world = one_civilian_world();
    for (uint64_t seed = 0; seed < 16; ++seed) {
        auto item = observe(channel, world, entity_target("p1"), seed);
        REQUIRE(item);
        CHECK(item->reported_label == "Civilian");
        CHECK(likelihood_of(*item, "Civilian") == 1.0);
        CHECK(likelihood_of(*item, "Belligerent") == 0.0);
    }
}

TEST_CASE("a spoofed feed fabricates reports regardless of truth") {
    // No civilians anywhere near the watched region.
    WorldState world = make_world({Entity{"b1", EntityClass::Belligerent, {50, 50}, {0, 0}}}, {}, 9);
    Channel channel;
    channel.id = "isr";
    channel.process_id = "isr_feed";
    channel.confusion = ConfusionMatrix::symmetric({kPresentLabel, kAbsentLabel}, 0.95);
    SpoofRule rule;
    rule.from_tick = 0;
    rule.to_tick = 10;
    rule.fabricated_label = kPresentLabel;
    Channel compromised = spoof(channel, rule);
    CHECK_FALSE(channel.compromise);  // source channel untouched

    auto item = observe(compromised, world, region_target(EntityClass::Civilian, {5, 0}, 5), 1);
    REQUIRE(item);
    CHECK(item->reported_label == kPresentLabel);
    // Likelihoods still carry the honest confusion model.
    CHECK(likelihood_of(*item, kPresentLabel) == doctest::Approx(0.95));
    CHECK(likelihood_of(*item, kAbsentLabel) == doctest::Approx(0.05));

    SUBCASE("outside the window the channel behaves honestly") {
        WorldState later = advance(world, 20);
        // Truth is Absent; over many seeds the honest channel must say Absent
        // most of the time, which the spoofed window never does.
        int absent = 0;
        for (uint64_t seed = 0; seed < 200; ++seed) {
            auto honest = observe(compromised, later,
                                  region_target(EntityClass::Civilian, {5, 0}, 5), seed);
            REQUIRE(honest);
            if (honest->reported_label == kAbsentLabel) ++absent;
        }
        CHECK(absent > 150);
    }
}

TEST_CASE("fabricated reports are independent of counterfactual truth") {
    // Same seeds, truth toggled by fork: spoofed outputs must match exactly.
    WorldState world = make_world({Entity{"w1", EntityClass::Civilian, {5, 0}, {0, 0}}}, {}, 4);
    Intervention iv;
    iv.kind = InterventionKind::ReplaceClass;
    iv.target = "w1";
    iv.new_class = EntityClass::Belligerent;
    WorldState fork = fork_counterfactual(world, iv, 77);

    Channel channel;
    channel.id = "isr";
    channel.process_id = "isr_feed";
    channel.confusion = ConfusionMatrix::symmetric({kPresentLabel, kAbsentLabel}, 0.9);
    SpoofRule rule;
    rule.from_tick = 0;
    rule.to_tick = 100;
    rule.fabricated_label = kPresentLabel;
    Channel compromised = spoof(channel, rule);

    const ObservationTarget target = region_target(EntityClass::Civilian, {5, 0}, 5);
    for (uint64_t seed = 0; seed < 64; ++seed) {
        auto base_item = observe(compromised, world, target, seed);
        auto fork_item = observe(compromised, fork, target, seed);
        REQUIRE(base_item.has_value() == fork_item.has_value());
        if (base_item) CHECK(base_item->reported_label == fork_item->reported_label);
    }
}

TEST_CASE("honest-channel empirical accuracy converges to the confusion diagonal") {
    const double accuracy = 0.9;
    Channel channel = honest_channel(accuracy);
    WorldState world = one_civilian_world();
    const int n = 10000;
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        auto item = observe(channel, world, entity_target("p1"),
                            derive_seed(20240501, static_cast<uint64_t>(i)));
        REQUIRE(item);
        if (item->reported_label == "Civilian") ++correct;
    }
    const double fraction = static_cast<double>(correct) / n;
    CHECK(std::abs(fraction - accuracy) <= 0.01);
    const double standard_error = std::sqrt(accuracy * (1 - accuracy) / n);
    CHECK(std::abs(fraction - accuracy) <= 3 * standard_error);
}

TEST_CASE("degrade reshapes availability") {
    Channel channel = honest_channel(1.0);
    WorldState world = one_civilian_world();

    SUBCASE("offline channels never report") {
        Channel offline = degrade(channel, DegradeMode::Offline);
        for (uint64_t seed = 0; seed < 200; ++seed) {
            CHECK_FALSE(observe(offline, world, entity_target("p1"), seed));
        }
    }
    SUBCASE("reduced availability hits its rate") {
        Channel reduced = degrade(channel, DegradeMode::ReducedAvailability, 0.5);
        const int n = 10000;
        int reports = 0;
        for (int i = 0; i < n; ++i) {
            if (observe(reduced, world, entity_target("p1"),
                        derive_seed(777, static_cast<uint64_t>(i)))) {
                ++reports;
            }
        }
        CHECK(std::abs(static_cast<double>(reports) / n - 0.5) <= 0.02);
    }
    SUBCASE("availability outside [0,1] is rejected") {
        CHECK_THROWS_AS((void)degrade(channel, DegradeMode::ReducedAvailability, 1.5), Error);
    }
}

TEST_CASE("likelihood_of is a checked map read") {
    EvidenceItem item;
    item.likelihoods = {{"Civilian", 0.9}, {"Belligerent", 0.3}};
    CHECK(likelihood_of(item, "Civilian") == 0.9);
    CHECK(likelihood_of(item, "Belligerent") == 0.3);
    CHECK_THROWS_AS((void)likelihood_of(item, "ProtectedObject"), Error);
}

TEST_CASE("confusion matrices are validated row-stochastic") {
    ConfusionMatrix bad;
    bad.labels = kClassLabels;
    bad.rows = {{0.9, 0.2}, {0.1, 0.9}};
    CHECK_THROWS_AS(bad.validate(), Error);

    ConfusionMatrix good = ConfusionMatrix::symmetric(kClassLabels, 0.9);
    CHECK_NOTHROW(good.validate());
    CHECK(good.prob("Civilian", "Civilian") == doctest::Approx(0.9));
    CHECK(good.prob("Civilian", "Belligerent") == doctest::Approx(0.1));
}

TEST_CASE("observing a missing subject raises UnknownEntity") {
    Channel channel = honest_channel(0.9);
    WorldState world = one_civilian_world();
    CHECK_THROWS_AS((void)observe(channel, world, entity_target("ghost"), 1), Error);
}
