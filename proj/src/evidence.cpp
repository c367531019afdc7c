#include "epistate/evidence.hpp"

#include <cmath>

#include "epistate/rng.hpp"

namespace epistate {

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return i;
    }
    fail(ErrorCode::UnknownHypothesis, "label '" + label + "' not in confusion matrix");
}

double ConfusionMatrix::prob(const std::string& true_label, const std::string& reported) const {
    return rows[index_of(true_label)][index_of(reported)];
}

void ConfusionMatrix::validate() const {
    if (labels.size() < 2) fail(ErrorCode::SchemaError, "confusion matrix needs >= 2 labels");
    if (rows.size() != labels.size()) {
        fail(ErrorCode::SchemaError, "confusion matrix row count != label count");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != labels.size()) {
            fail(ErrorCode::SchemaError, "confusion row width != label count");
        }
        double sum = 0.0;
        for (double p : rows[i]) {
            if (p < 0.0 || p > 1.0) fail(ErrorCode::SchemaError, "confusion entry outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            fail(ErrorCode::SchemaError, "confusion row for '" + labels[i] + "' does not sum to 1");
        }
    }
}

ConfusionMatrix ConfusionMatrix::identity(std::vector<std::string> labels) {
    ConfusionMatrix m;
    m.labels = std::move(labels);
    m.rows.assign(m.labels.size(), std::vector<double>(m.labels.size(), 0.0));
    for (std::size_t i = 0; i < m.labels.size(); ++i) m.rows[i][i] = 1.0;
    return m;
}

ConfusionMatrix ConfusionMatrix::symmetric(std::vector<std::string> labels, double accuracy) {
    ConfusionMatrix m;
    m.labels = std::move(labels);
    const std::size_t n = m.labels.size();
    const double off = n > 1 ? (1.0 - accuracy) / static_cast<double>(n - 1) : 0.0;
    m.rows.assign(n, std::vector<double>(n, off));
    for (std::size_t i = 0; i < n; ++i) m.rows[i][i] = accuracy;
    return m;
}

std::string ObservationTarget::key() const {
    if (kind == Kind::Entity) return "entity:" + entity_id;
    return "region:" + std::string(to_string(cls)) + "@(" + std::to_string(center.x) + "," +
           std::to_string(center.y) + ")r" + std::to_string(radius);
}

std::string ObservationTarget::truth_label(const WorldState& world) const {
    if (kind == Kind::Entity) {
        const Entity* entity = world.find_entity(entity_id);
        if (!entity) fail(ErrorCode::UnknownEntity, "observation subject '" + entity_id + "' missing");
        return to_string(entity->true_class);
    }
    return truth_of(world, region_proposition(cls, center, radius)) ? kPresentLabel : kAbsentLabel;
}

Proposition ObservationTarget::proposition_for_label(const std::string& label) const {
    if (kind == Kind::Entity) {
        return class_proposition(entity_id, entity_class_from_string(label));
    }
    Proposition p = region_proposition(cls, center, radius);
    if (label == kAbsentLabel) p.negated = true;
    else if (label != kPresentLabel) fail(ErrorCode::UnknownHypothesis, "region label '" + label + "'");
    return p;
}

namespace {

EvidenceItem make_item(const Channel& channel, int tick, const ObservationTarget& target,
                       const std::string& reported) {
    EvidenceItem item;
    item.id = channel.id + "@" + std::to_string(tick);
    item.channel_id = channel.id;
    item.process_id = channel.process_id;
    item.source_tag = channel.source_tag;
    item.tick = tick;
    item.subject = target.key();
    item.reported_label = reported;
    // Likelihood column for the reported label under the honest model.
    const std::size_t reported_idx = channel.confusion.index_of(reported);
    for (std::size_t h = 0; h < channel.confusion.labels.size(); ++h) {
        item.likelihoods[channel.confusion.labels[h]] = channel.confusion.rows[h][reported_idx];
    }
    return item;
}

}  // namespace

std::optional<EvidenceItem> observe(const Channel& channel, const WorldState& world,
                                    const ObservationTarget& target, uint64_t seed) {
    Rng rng(seed);
    if (!rng.bernoulli(channel.availability)) return std::nullopt;

    if (channel.compromise && channel.compromise->active_at(world.time)) {
        return make_item(channel, world.time, target, channel.compromise->fabricated_label);
    }

    const std::string truth = target.truth_label(world);
    const std::size_t truth_idx = channel.confusion.index_of(truth);
    const std::size_t reported_idx = rng.pick_weighted(channel.confusion.rows[truth_idx]);
    return make_item(channel, world.time, target, channel.confusion.labels[reported_idx]);
}

Channel spoof(const Channel& channel, const SpoofRule& rule) {
    if (rule.to_tick < rule.from_tick) {
        fail(ErrorCode::InvalidArgument, "spoof window is empty");
    }
    channel.confusion.index_of(rule.fabricated_label);  // must be a known label
    Channel compromised = channel;
    compromised.compromise = rule;
    return compromised;
}

Channel degrade(const Channel& channel, DegradeMode mode, double p) {
    Channel degraded = channel;
    if (mode == DegradeMode::Offline) {
        degraded.availability = 0.0;
    } else {
        if (p < 0.0 || p > 1.0) fail(ErrorCode::InvalidArgument, "availability outside [0,1]");
        degraded.availability = p;
    }
    return degraded;
}

double likelihood_of(const EvidenceItem& item, const std::string& hypothesis) {
    auto it = item.likelihoods.find(hypothesis);
    if (it == item.likelihoods.end()) {
        fail(ErrorCode::UnknownHypothesis, "hypothesis '" + hypothesis + "' not in evidence item");
    }
    return it->second;
}

}  // namespace epistate
