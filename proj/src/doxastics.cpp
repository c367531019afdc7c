#include "epistate/doxastics.hpp"

#include <algorithm>
#include <cmath>

namespace epistate {

const char* to_string(DoxasticAttitude attitude) {
    switch (attitude) {
        case DoxasticAttitude::Belief: return "Belief";
        case DoxasticAttitude::Disbelief: return "Disbelief";
        case DoxasticAttitude::Suspension: return "Suspension";
        case DoxasticAttitude::Ignorance: return "Ignorance";
    }
    return "?";
}

void LockeanThresholds::validate() const {
    if (!(disbelief < belief) || belief <= 0.0 || belief >= 1.0 || disbelief <= 0.0 ||
        disbelief >= 1.0) {
        fail(ErrorCode::InvalidArgument, "Lockean thresholds must satisfy 0 < disbelief < belief < 1");
    }
}

const CredenceFunction::Block* CredenceFunction::find_block(const std::string& partition_id) const {
    for (const Block& block : blocks) {
        if (block.partition.id == partition_id) return &block;
    }
    return nullptr;
}

std::optional<double> CredenceFunction::lookup(const Proposition& prop) const {
    const std::string key = prop.key();
    for (const Block& block : blocks) {
        for (std::size_t i = 0; i < block.partition.labels.size(); ++i) {
            if (block.partition.proposition(block.partition.labels[i]).key() == key) {
                return block.credences[i];
            }
        }
    }
    return std::nullopt;
}

CredenceFunction prior_init(const std::vector<Partition>& partitions,
                            const std::map<std::string, std::map<std::string, double>>& prior_spec) {
    CredenceFunction c;
    for (const Partition& partition : partitions) {
        if (partition.labels.size() < 2) {
            fail(ErrorCode::InvalidArgument, "partition '" + partition.id + "' needs >= 2 labels");
        }
        CredenceFunction::Block block;
        block.partition = partition;

        auto spec_it = prior_spec.find(partition.id);
        if (spec_it == prior_spec.end()) {
            block.credences.assign(partition.labels.size(),
                                   1.0 / static_cast<double>(partition.labels.size()));
        } else {
            double sum = 0.0;
            for (const std::string& label : partition.labels) {
                auto entry = spec_it->second.find(label);
                if (entry == spec_it->second.end()) {
                    fail(ErrorCode::NonNormalizedPrior,
                         "prior for partition '" + partition.id + "' missing label '" + label + "'");
                }
                const double p = entry->second;
                // Regularity: contingent hypotheses start strictly inside (0,1).
                if (p <= 0.0 || p >= 1.0) {
                    fail(ErrorCode::ZeroPriorOnContingent,
                         "prior " + format_double(p) + " on contingent '" + label + "'");
                }
                block.credences.push_back(p);
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                fail(ErrorCode::NonNormalizedPrior,
                     "priors for partition '" + partition.id + "' sum to " + format_double(sum));
            }
        }
        c.blocks.push_back(std::move(block));
    }
    std::sort(c.blocks.begin(), c.blocks.end(),
              [](const auto& a, const auto& b) { return a.partition.id < b.partition.id; });
    return c;
}

CredenceFunction update_credence(const CredenceFunction& c, const EvidenceItem& item) {
    CredenceFunction next = c;
    CredenceFunction::Block* block = nullptr;
    for (CredenceFunction::Block& b : next.blocks) {
        if (b.partition.target.key() == item.subject) {
            block = &b;
            break;
        }
    }
    if (!block) {
        fail(ErrorCode::UnknownHypothesis,
             "evidence subject '" + item.subject + "' has no declared partition");
    }

    std::vector<double> posterior(block->credences.size());
    double normalizer = 0.0;
    for (std::size_t i = 0; i < block->partition.labels.size(); ++i) {
        const double like = likelihood_of(item, block->partition.labels[i]);
        posterior[i] = block->credences[i] * like;
        normalizer += posterior[i];
    }
    if (normalizer <= 0.0) {
        fail(ErrorCode::IncoherentEvidence,
             "evidence '" + item.id + "' has zero likelihood under every hypothesis");
    }
    for (double& p : posterior) p /= normalizer;
    block->credences = std::move(posterior);
    return next;
}

DoxasticAttitude attitude_of(const CredenceFunction& c, const Proposition& prop,
                             const LockeanThresholds& thresholds) {
    const std::optional<double> credence = c.lookup(prop);
    if (!credence) return DoxasticAttitude::Ignorance;
    if (*credence >= thresholds.belief) return DoxasticAttitude::Belief;
    if (*credence <= thresholds.disbelief) return DoxasticAttitude::Disbelief;
    return DoxasticAttitude::Suspension;
}

}  // namespace epistate
