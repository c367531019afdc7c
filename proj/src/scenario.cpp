#include "epistate/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "epistate/rng.hpp"

namespace epistate {

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& message) {
    fail(ErrorCode::SchemaError, path + ": " + message);
}

const Json& require_field(const Json& node, const std::string& key, const std::string& path) {
    if (!node.is_object() || !node.contains(key)) schema_fail(path, "missing field '" + key + "'");
    return node.at(key);
}

GridPos parse_pos(const Json& node, const std::string& path) {
    if (!node.is_array() || node.size() != 2) schema_fail(path, "expected [x, y]");
    return {node.at(0).get<int>(), node.at(1).get<int>()};
}

Json pos_to_json(const GridPos& pos) { return Json::array({pos.x, pos.y}); }

Entity parse_entity(const Json& node, const std::string& path) {
    Entity entity;
    entity.id = require_field(node, "id", path).get<std::string>();
    entity.true_class =
        entity_class_from_string(require_field(node, "class", path).get<std::string>());
    entity.position = parse_pos(require_field(node, "pos", path), path + ".pos");
    entity.motion = node.contains("motion") ? parse_pos(node.at("motion"), path + ".motion")
                                            : GridPos{0, 0};
    return entity;
}

Json entity_to_json(const Entity& entity) {
    return Json{{"id", entity.id},
                {"class", to_string(entity.true_class)},
                {"pos", pos_to_json(entity.position)},
                {"motion", pos_to_json(entity.motion)}};
}

EventEffect parse_effect(const Json& node, const std::string& path) {
    EventEffect effect;
    const std::string kind = require_field(node, "kind", path).get<std::string>();
    if (kind == "add_entity") {
        effect.kind = EventEffectKind::AddEntity;
        effect.entity = parse_entity(require_field(node, "entity", path), path + ".entity");
    } else if (kind == "remove_entity") {
        effect.kind = EventEffectKind::RemoveEntity;
        effect.target = require_field(node, "target", path).get<std::string>();
    } else if (kind == "set_class") {
        effect.kind = EventEffectKind::SetClass;
        effect.target = require_field(node, "target", path).get<std::string>();
        effect.new_class =
            entity_class_from_string(require_field(node, "class", path).get<std::string>());
    } else if (kind == "nudge") {
        effect.kind = EventEffectKind::Nudge;
        effect.target = require_field(node, "target", path).get<std::string>();
        effect.delta = parse_pos(require_field(node, "delta", path), path + ".delta");
    } else {
        schema_fail(path, "unknown effect kind '" + kind + "'");
    }
    return effect;
}

Json effect_to_json(const EventEffect& effect) {
    switch (effect.kind) {
        case EventEffectKind::AddEntity:
            return Json{{"kind", "add_entity"}, {"entity", entity_to_json(effect.entity)}};
        case EventEffectKind::RemoveEntity:
            return Json{{"kind", "remove_entity"}, {"target", effect.target}};
        case EventEffectKind::SetClass:
            return Json{{"kind", "set_class"},
                        {"target", effect.target},
                        {"class", to_string(effect.new_class)}};
        case EventEffectKind::Nudge:
            return Json{{"kind", "nudge"},
                        {"target", effect.target},
                        {"delta", pos_to_json(effect.delta)}};
    }
    return Json::object();
}

ObservationTarget parse_target(const Json& node, const std::string& path) {
    ObservationTarget target;
    const std::string kind = require_field(node, "kind", path).get<std::string>();
    if (kind == "entity") {
        target.kind = ObservationTarget::Kind::Entity;
        target.entity_id = require_field(node, "entity", path).get<std::string>();
    } else if (kind == "region") {
        target.kind = ObservationTarget::Kind::Region;
        target.cls = entity_class_from_string(require_field(node, "class", path).get<std::string>());
        target.center = parse_pos(require_field(node, "center", path), path + ".center");
        target.radius = require_field(node, "radius", path).get<int>();
    } else {
        schema_fail(path, "partition kind must be 'entity' or 'region'");
    }
    return target;
}

PolicyThresholds parse_thresholds(const Json& node) {
    PolicyThresholds t;
    t.theta_rel = node.value("theta_rel", t.theta_rel);
    t.tau_track = node.value("tau_track", t.tau_track);
    t.theta_meta = node.value("theta_meta", t.theta_meta);
    t.delta_coh = node.value("delta_coh", t.delta_coh);
    t.phi_apt = node.value("phi_apt", t.phi_apt);
    t.theta_eu = node.value("theta_eu", t.theta_eu);
    t.machine_rel_multiplier = node.value("machine_rel_multiplier", t.machine_rel_multiplier);
    return t;
}

EnvelopePredicateKind envelope_kind_from_string(const std::string& name, const std::string& path) {
    if (name == "range_closing") return EnvelopePredicateKind::RangeClosing;
    if (name == "velocity_band") return EnvelopePredicateKind::VelocityBand;
    if (name == "maneuver_capable") return EnvelopePredicateKind::ManeuverCapable;
    if (name == "range_below") return EnvelopePredicateKind::RangeBelow;
    schema_fail(path, "unknown envelope predicate '" + name + "'");
}

const char* envelope_kind_name(EnvelopePredicateKind kind) {
    switch (kind) {
        case EnvelopePredicateKind::RangeClosing: return "range_closing";
        case EnvelopePredicateKind::VelocityBand: return "velocity_band";
        case EnvelopePredicateKind::ManeuverCapable: return "maneuver_capable";
        case EnvelopePredicateKind::RangeBelow: return "range_below";
    }
    return "?";
}

HypothesisLevel parse_level(const Json& node, int rank, const std::string& path) {
    HypothesisLevel level;
    level.rank = rank;
    for (const Json& h : require_field(node, "hypotheses", path)) {
        Hypothesis hyp;
        if (h.is_string()) {
            hyp.name = h.get<std::string>();
        } else {
            hyp.name = require_field(h, "name", path).get<std::string>();
            hyp.value = h.value("value", 0.0);
        }
        level.hypotheses.push_back(std::move(hyp));
    }
    if (rank == 1) {
        for (const Json& p : require_field(node, "prior", path)) {
            level.prior.push_back(p.get<double>());
        }
    } else {
        for (const Json& row : require_field(node, "link", path)) {
            std::vector<double> r;
            for (const Json& p : row) r.push_back(p.get<double>());
            level.link.push_back(std::move(r));
        }
    }
    return level;
}

Json level_to_json(const HypothesisLevel& level) {
    Json hyps = Json::array();
    for (const Hypothesis& h : level.hypotheses) {
        hyps.push_back(Json{{"name", h.name}, {"value", h.value}});
    }
    Json node{{"hypotheses", hyps}};
    if (level.rank == 1) node["prior"] = level.prior;
    else node["link"] = level.link;
    return node;
}

// Utility invariant for effect-causing actions: protected-class harm is
// non-positive and strictly worse than the no-presence outcome when the row
// prices one. Non-effect rows (watching, navigating) are unconstrained.
void validate_effect_utilities(const UtilityModel& model, const ActionSpec& action,
                               const Partition& partition) {
    if (action.tier != ActionTier::LethalEffect && action.tier != ActionTier::NonLethalEffect) {
        return;
    }
    auto row_it = model.table.find(action.utility_key);
    if (row_it == model.table.end()) return;
    const auto& row = row_it->second;
    std::vector<const char*> harm_labels = {"Civilian", "ProtectedObject"};
    // A region watching a protected class: its Present outcome is the harm case.
    if (partition.target.kind == ObservationTarget::Kind::Region &&
        (partition.target.cls == EntityClass::Civilian ||
         partition.target.cls == EntityClass::ProtectedObject)) {
        harm_labels.push_back("Present");
    }
    for (const char* harmed : harm_labels) {
        auto harm = row.find(harmed);
        if (harm == row.end()) continue;
        if (harm->second > 0.0) {
            fail(ErrorCode::SchemaError, "utility row '" + action.utility_key + "' prices " +
                                             harmed + " harm above zero");
        }
        auto miss = row.find("Absent");
        if (miss != row.end() && !(harm->second < miss->second)) {
            fail(ErrorCode::SchemaError, "utility row '" + action.utility_key +
                                             "' must price " + harmed + " harm below a miss");
        }
    }
}

}  // namespace

WorldState ScenarioSpec::initial_world(uint64_t rng_root, const std::string& stream_name) const {
    return make_world(entities, events, rng_root, stream_name);
}

const Partition* ScenarioSpec::find_partition(const std::string& id) const {
    for (const Partition& p : partitions) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

ScenarioSpec load_scenario(const Json& document) {
    if (!document.is_object()) fail(ErrorCode::SchemaError, "document: not an object");
    ScenarioSpec spec;
    Json effective = Json::object();

    spec.name = document.value("name", std::string("unnamed"));
    effective["name"] = spec.name;
    if (!document.contains("master_seed")) {
        fail(ErrorCode::SchemaError, "document: missing field 'master_seed'");
    }
    spec.master_seed = document.at("master_seed").get<uint64_t>();
    effective["master_seed"] = spec.master_seed;

    spec.trials = document.value("trials", 1);
    if (spec.trials < 0) fail(ErrorCode::SchemaError, "trials: must be >= 0");
    spec.horizon = document.value("horizon", 1);
    if (spec.horizon < 1) fail(ErrorCode::SchemaError, "horizon: must be >= 1");
    spec.tracking_samples = document.value("tracking_samples", 32);
    spec.apt_reruns = document.value("apt_reruns", 8);
    spec.record_in_run = document.value("record_in_run", true);
    effective["trials"] = spec.trials;
    effective["horizon"] = spec.horizon;
    effective["tracking_samples"] = spec.tracking_samples;
    effective["apt_reruns"] = spec.apt_reruns;
    effective["record_in_run"] = spec.record_in_run;

    // --- world ---
    const Json& world_node = require_field(document, "world", "document");
    std::set<std::string> known_entities;
    for (const Json& e : world_node.value("entities", Json::array())) {
        Entity entity = parse_entity(e, "world.entities");
        known_entities.insert(entity.id);
        spec.entities.push_back(std::move(entity));
    }
    for (const Json& ev_node : world_node.value("events", Json::array())) {
        ExogenousEvent event;
        event.id = require_field(ev_node, "id", "world.events").get<std::string>();
        event.at_tick = require_field(ev_node, "at", "world.events").get<int>();
        event.luck = ev_node.value("luck", false);
        event.probability = ev_node.value("probability", 1.0);
        if (event.probability < 0.0 || event.probability > 1.0) {
            schema_fail("world.events", "probability outside [0,1]");
        }
        event.effect = parse_effect(require_field(ev_node, "effect", "world.events"),
                                    "world.events.effect");
        if (event.effect.kind == EventEffectKind::AddEntity) {
            known_entities.insert(event.effect.entity.id);
        } else if (!known_entities.contains(event.effect.target)) {
            fail(ErrorCode::DanglingReference,
                 "event '" + event.id + "' targets unknown entity '" + event.effect.target + "'");
        }
        spec.events.push_back(std::move(event));
    }
    {
        Json entities_json = Json::array();
        std::vector<Entity> sorted_entities = spec.entities;
        std::sort(sorted_entities.begin(), sorted_entities.end(),
                  [](const Entity& a, const Entity& b) { return a.id < b.id; });
        for (const Entity& e : sorted_entities) entities_json.push_back(entity_to_json(e));
        Json events_json = Json::array();
        for (const ExogenousEvent& ev : spec.events) {
            events_json.push_back(Json{{"id", ev.id},
                                       {"at", ev.at_tick},
                                       {"luck", ev.luck},
                                       {"probability", ev.probability},
                                       {"effect", effect_to_json(ev.effect)}});
        }
        effective["world"] = Json{{"entities", entities_json}, {"events", events_json}};
    }
    // Validate entity uniqueness and event ids up front.
    spec.initial_world(0, "validate");

    // --- partitions ---
    Json partitions_json = Json::array();
    for (const Json& node : document.value("partitions", Json::array())) {
        Partition partition;
        partition.id = require_field(node, "id", "partitions").get<std::string>();
        if (spec.find_partition(partition.id)) {
            schema_fail("partitions", "duplicate partition id '" + partition.id + "'");
        }
        partition.target = parse_target(node, "partitions." + partition.id);
        if (partition.target.kind == ObservationTarget::Kind::Entity &&
            !known_entities.contains(partition.target.entity_id)) {
            fail(ErrorCode::DanglingReference, "partition '" + partition.id +
                                                   "' watches unknown entity '" +
                                                   partition.target.entity_id + "'");
        }
        for (const Json& label : require_field(node, "labels", "partitions")) {
            partition.labels.push_back(label.get<std::string>());
        }
        if (partition.labels.size() < 2) {
            schema_fail("partitions." + partition.id, "needs >= 2 labels");
        }
        // Labels must be producible by the target.
        for (const std::string& label : partition.labels) {
            partition.target.proposition_for_label(label);
        }
        Json pj{{"id", partition.id}, {"labels", partition.labels}};
        if (partition.target.kind == ObservationTarget::Kind::Entity) {
            pj["kind"] = "entity";
            pj["entity"] = partition.target.entity_id;
        } else {
            pj["kind"] = "region";
            pj["class"] = to_string(partition.target.cls);
            pj["center"] = pos_to_json(partition.target.center);
            pj["radius"] = partition.target.radius;
        }
        partitions_json.push_back(std::move(pj));
        spec.partitions.push_back(std::move(partition));
    }
    effective["partitions"] = partitions_json;

    // --- channels ---
    Json channels_json = Json::array();
    std::set<std::string> channel_ids;
    for (const Json& node : document.value("channels", Json::array())) {
        BoundChannel bound;
        Channel& channel = bound.channel;
        channel.id = require_field(node, "id", "channels").get<std::string>();
        const std::string path = "channels." + channel.id;
        if (!channel_ids.insert(channel.id).second) {
            schema_fail("channels", "duplicate channel id '" + channel.id + "'");
        }
        channel.process_id = node.value("process", channel.id);
        channel.source_tag = node.value("source_tag", std::string());
        channel.availability = node.value("availability", 1.0);
        if (channel.availability < 0.0 || channel.availability > 1.0) {
            schema_fail(path, "availability outside [0,1]");
        }
        bound.partition_id = require_field(node, "partition", path).get<std::string>();
        const Partition* partition = spec.find_partition(bound.partition_id);
        if (!partition) {
            fail(ErrorCode::DanglingReference,
                 "channel '" + channel.id + "' bound to unknown partition '" + bound.partition_id +
                     "'");
        }

        const Json& confusion = require_field(node, "confusion", path);
        if (confusion.contains("accuracy")) {
            channel.confusion = ConfusionMatrix::symmetric(partition->labels,
                                                           confusion.at("accuracy").get<double>());
        } else {
            channel.confusion.labels = partition->labels;
            for (const Json& row : require_field(confusion, "rows", path + ".confusion")) {
                std::vector<double> r;
                for (const Json& p : row) r.push_back(p.get<double>());
                channel.confusion.rows.push_back(std::move(r));
            }
        }
        channel.confusion.validate();

        Json cj{{"id", channel.id},
                {"process", channel.process_id},
                {"partition", bound.partition_id},
                {"availability", channel.availability},
                {"source_tag", channel.source_tag},
                {"confusion", Json{{"rows", channel.confusion.rows}}}};

        if (node.contains("spoof")) {
            const Json& spoof_node = node.at("spoof");
            SpoofRule rule;
            rule.from_tick = require_field(spoof_node, "from", path + ".spoof").get<int>();
            rule.to_tick = require_field(spoof_node, "to", path + ".spoof").get<int>();
            rule.fabricated_label =
                require_field(spoof_node, "report", path + ".spoof").get<std::string>();
            channel = spoof(channel, rule);
            cj["spoof"] =
                Json{{"from", rule.from_tick}, {"to", rule.to_tick}, {"report", rule.fabricated_label}};
        }
        Json degrade_json = Json::array();
        for (const Json& step_node : node.value("degrade", Json::array())) {
            DegradeStep step;
            step.at_tick = require_field(step_node, "at", path + ".degrade").get<int>();
            const std::string mode =
                require_field(step_node, "mode", path + ".degrade").get<std::string>();
            if (mode == "offline") {
                step.mode = DegradeMode::Offline;
            } else if (mode == "reduced") {
                step.mode = DegradeMode::ReducedAvailability;
                step.availability =
                    require_field(step_node, "availability", path + ".degrade").get<double>();
            } else {
                schema_fail(path + ".degrade", "mode must be 'offline' or 'reduced'");
            }
            degrade_json.push_back(Json{{"at", step.at_tick},
                                        {"mode", mode},
                                        {"availability", step.availability}});
            bound.schedule.push_back(step);
        }
        cj["degrade"] = degrade_json;
        channels_json.push_back(std::move(cj));
        spec.channels.push_back(std::move(bound));
    }
    effective["channels"] = channels_json;

    // --- ledger preload ---
    Json ledger_json = Json::object();
    const Json items_node_1 = document.value("ledger", Json::object());
    for (const auto& [process_id, counts_node] : items_node_1.items()) {
        ProcessLedger::Counts counts;
        counts.successes = require_field(counts_node, "successes", "ledger").get<long>();
        counts.trials = require_field(counts_node, "trials", "ledger").get<long>();
        if (counts.successes < 0 || counts.trials < counts.successes) {
            schema_fail("ledger." + process_id, "successes must be within [0, trials]");
        }
        spec.ledger.processes[process_id] = counts;
        ledger_json[process_id] = Json{{"successes", counts.successes}, {"trials", counts.trials}};
    }
    effective["ledger"] = ledger_json;

    // --- agent ---
    const Json& agent_node = document.value("agent", Json::object());
    spec.agent.id = agent_node.value("id", std::string("agent"));
    std::vector<std::string> consumed;
    if (agent_node.contains("channels")) {
        for (const Json& id : agent_node.at("channels")) consumed.push_back(id.get<std::string>());
    } else {
        for (const BoundChannel& bound : spec.channels) consumed.push_back(bound.channel.id);
    }
    for (const std::string& id : consumed) {
        if (!channel_ids.contains(id)) {
            fail(ErrorCode::DanglingReference, "agent consumes unknown channel '" + id + "'");
        }
    }
    for (const Json& id : agent_node.value("distrusted", Json::array())) {
        const std::string channel_id = id.get<std::string>();
        if (std::find(consumed.begin(), consumed.end(), channel_id) == consumed.end()) {
            fail(ErrorCode::DanglingReference,
                 "agent distrusts channel '" + channel_id + "' it does not consume");
        }
        spec.agent.distrusted_channels.insert(channel_id);
    }
    spec.agent.thresholds.belief = agent_node.value("belief_threshold", 0.9);
    spec.agent.thresholds.disbelief = agent_node.value("disbelief_threshold", 0.1);
    spec.agent.thresholds.validate();
    const Json items_node_2 = agent_node.value("priors", Json::object());
    for (const auto& [partition_id, priors] : items_node_2.items()) {
        const Partition* partition = spec.find_partition(partition_id);
        if (!partition) {
            fail(ErrorCode::DanglingReference,
                 "priors reference unknown partition '" + partition_id + "'");
        }
        for (const auto& [label, p] : priors.items()) {
            if (std::find(partition->labels.begin(), partition->labels.end(), label) ==
                partition->labels.end()) {
                fail(ErrorCode::DanglingReference,
                     "prior label '" + label + "' not in partition '" + partition_id + "'");
            }
            spec.agent.prior_spec[partition_id][label] = p.get<double>();
        }
    }
    // Keep only channels the agent consumes, in declared order.
    {
        std::vector<BoundChannel> filtered;
        for (const std::string& id : consumed) {
            for (const BoundChannel& bound : spec.channels) {
                if (bound.channel.id == id) filtered.push_back(bound);
            }
        }
        spec.channels = std::move(filtered);
    }
    effective["agent"] = Json{{"id", spec.agent.id},
                              {"channels", consumed},
                              {"distrusted", spec.agent.distrusted_channels},
                              {"belief_threshold", spec.agent.thresholds.belief},
                              {"disbelief_threshold", spec.agent.thresholds.disbelief},
                              {"priors", spec.agent.prior_spec}};

    // --- policy ---
    const Json& policy_node = document.value("policy", Json::object());
    const std::string kind_name = policy_node.value("kind", std::string("AS3bv"));
    spec.policy = make_policy(policy_kind_from_string(kind_name));
    spec.policy.thresholds = parse_thresholds(policy_node);
    spec.policy.thresholds.lockean = spec.agent.thresholds;
    for (const Json& node : policy_node.value("envelope", Json::array())) {
        EnvelopePredicate predicate;
        const std::string kind =
            require_field(node, "kind", "policy.envelope").get<std::string>();
        predicate.kind = envelope_kind_from_string(kind, "policy.envelope");
        predicate.name = node.value("name", kind);
        predicate.min_value = node.value("min", 0.0);
        predicate.max_value = node.value("max", 0.0);
        spec.policy.envelope.push_back(std::move(predicate));
    }
    const Json items_node_3 = policy_node.value("tier_map", Json::object());
    for (const auto& [tier_name, mech] : items_node_3.items()) {
        const std::string mech_name = mech.get<std::string>();
        if (mech_name != "bayesian" && mech_name != "reflective") {
            schema_fail("policy.tier_map", "mechanism must be 'bayesian' or 'reflective'");
        }
        spec.policy.tier_map[action_tier_from_string(tier_name)] =
            mech_name == "bayesian" ? GateMechanism::BayesianGate : GateMechanism::ReflectiveGate;
    }
    const Json items_node_4 = policy_node.value("authorization_required", Json::object());
    for (const auto& [tier_name, flag] : items_node_4.items()) {
        spec.policy.authorization_required[action_tier_from_string(tier_name)] = flag.get<bool>();
    }
    const Json items_node_5 = policy_node.value("min_redundancy", Json::object());
    for (const auto& [tier_name, floor] : items_node_5.items()) {
        spec.policy.min_redundancy[action_tier_from_string(tier_name)] = floor.get<int>();
    }
    spec.policy.validate();
    {
        Json tier_map_json = Json::object();
        Json auth_json = Json::object();
        Json redundancy_json = Json::object();
        for (const auto& [tier, mech] : spec.policy.tier_map) {
            tier_map_json[to_string(tier)] =
                mech == GateMechanism::BayesianGate ? "bayesian" : "reflective";
        }
        for (const auto& [tier, flag] : spec.policy.authorization_required) {
            auth_json[to_string(tier)] = flag;
        }
        for (const auto& [tier, floor] : spec.policy.min_redundancy) {
            redundancy_json[to_string(tier)] = floor;
        }
        Json envelope_json = Json::array();
        for (const EnvelopePredicate& predicate : spec.policy.envelope) {
            envelope_json.push_back(Json{{"kind", envelope_kind_name(predicate.kind)},
                                         {"name", predicate.name},
                                         {"min", predicate.min_value},
                                         {"max", predicate.max_value}});
        }
        effective["policy"] = Json{{"kind", to_string(spec.policy.kind)},
                                   {"theta_rel", spec.policy.thresholds.theta_rel},
                                   {"tau_track", spec.policy.thresholds.tau_track},
                                   {"theta_meta", spec.policy.thresholds.theta_meta},
                                   {"delta_coh", spec.policy.thresholds.delta_coh},
                                   {"phi_apt", spec.policy.thresholds.phi_apt},
                                   {"theta_eu", spec.policy.thresholds.theta_eu},
                                   {"machine_rel_multiplier",
                                    spec.policy.thresholds.machine_rel_multiplier},
                                   {"envelope", envelope_json},
                                   {"tier_map", tier_map_json},
                                   {"authorization_required", auth_json},
                                   {"min_redundancy", redundancy_json}};
    }

    // --- track state ---
    if (document.contains("track")) {
        const Json& track_node = document.at("track");
        if (track_node.contains("range")) spec.track.range = track_node.at("range").get<double>();
        if (track_node.contains("range_rate")) {
            spec.track.range_rate = track_node.at("range_rate").get<double>();
        }
        if (track_node.contains("speed")) spec.track.speed = track_node.at("speed").get<double>();
        if (track_node.contains("can_maneuver")) {
            spec.track.can_maneuver = track_node.at("can_maneuver").get<bool>();
        }
    }
    {
        Json track_json = Json::object();
        if (spec.track.range) track_json["range"] = *spec.track.range;
        if (spec.track.range_rate) track_json["range_rate"] = *spec.track.range_rate;
        if (spec.track.speed) track_json["speed"] = *spec.track.speed;
        if (spec.track.can_maneuver) track_json["can_maneuver"] = *spec.track.can_maneuver;
        effective["track"] = track_json;
    }

    // --- verdict requests ---
    Json verdicts_json = Json::array();
    for (const Json& node : document.value("verdicts", Json::array())) {
        VerdictRequest request;
        request.partition_id = require_field(node, "partition", "verdicts").get<std::string>();
        request.label = require_field(node, "label", "verdicts").get<std::string>();
        request.name = node.value("name", request.partition_id + "=" + request.label);
        request.min_redundancy = node.value("min_redundancy", 1);
        const Partition* partition = spec.find_partition(request.partition_id);
        if (!partition) {
            fail(ErrorCode::DanglingReference,
                 "verdict '" + request.name + "' references unknown partition '" +
                     request.partition_id + "'");
        }
        if (std::find(partition->labels.begin(), partition->labels.end(), request.label) ==
            partition->labels.end()) {
            fail(ErrorCode::DanglingReference,
                 "verdict '" + request.name + "' references unknown label '" + request.label + "'");
        }
        verdicts_json.push_back(Json{{"name", request.name},
                                     {"partition", request.partition_id},
                                     {"label", request.label},
                                     {"min_redundancy", request.min_redundancy}});
        spec.verdicts.push_back(std::move(request));
    }
    effective["verdicts"] = verdicts_json;

    // --- utilities ---
    Json utilities_json = Json::object();
    const Json items_node_6 = document.value("utilities", Json::object());
    for (const auto& [key, row] : items_node_6.items()) {
        for (const auto& [outcome, value] : row.items()) {
            spec.utilities.table[key][outcome] = value.get<double>();
        }
        utilities_json[key] = spec.utilities.table[key];
    }
    effective["utilities"] = utilities_json;

    // --- actions ---
    Json actions_json = Json::array();
    std::set<std::string> action_ids;
    for (const Json& node : document.value("actions", Json::array())) {
        ActionSpec action;
        action.id = require_field(node, "id", "actions").get<std::string>();
        if (!action_ids.insert(action.id).second) {
            schema_fail("actions", "duplicate action id '" + action.id + "'");
        }
        action.tier =
            action_tier_from_string(require_field(node, "tier", "actions").get<std::string>());
        action.target_entity = node.value("target", std::string());
        action.outcome_partition =
            require_field(node, "partition", "actions." + action.id).get<std::string>();
        action.gate_label =
            require_field(node, "gate_label", "actions." + action.id).get<std::string>();
        action.utility_key = node.value("utility", action.id);
        action.flight_ticks = node.value("flight_ticks", 0);
        action.validate();
        const Partition* partition = spec.find_partition(action.outcome_partition);
        if (!partition) {
            fail(ErrorCode::DanglingReference, "action '" + action.id +
                                                   "' references unknown partition '" +
                                                   action.outcome_partition + "'");
        }
        if (std::find(partition->labels.begin(), partition->labels.end(), action.gate_label) ==
            partition->labels.end()) {
            fail(ErrorCode::DanglingReference,
                 "action '" + action.id + "' gate label '" + action.gate_label +
                     "' not in partition '" + action.outcome_partition + "'");
        }
        if (!action.target_entity.empty() && !known_entities.contains(action.target_entity)) {
            fail(ErrorCode::DanglingReference,
                 "action '" + action.id + "' targets unknown entity '" + action.target_entity + "'");
        }
        if (!spec.utilities.table.empty() && !spec.utilities.table.contains(action.utility_key)) {
            fail(ErrorCode::DanglingReference,
                 "action '" + action.id + "' references unknown utility row '" +
                     action.utility_key + "'");
        }
        validate_effect_utilities(spec.utilities, action, *partition);
        actions_json.push_back(Json{{"id", action.id},
                                    {"tier", to_string(action.tier)},
                                    {"target", action.target_entity},
                                    {"partition", action.outcome_partition},
                                    {"gate_label", action.gate_label},
                                    {"utility", action.utility_key},
                                    {"flight_ticks", action.flight_ticks}});
        spec.actions.push_back(std::move(action));
    }
    effective["actions"] = actions_json;

    // --- decision request ---
    if (document.contains("decision") || !spec.actions.empty()) {
        DecisionRequest request;
        const Json& node = document.value("decision", Json::object());
        if (node.contains("request")) {
            request.request_action = node.at("request").get<std::string>();
        } else if (!spec.actions.empty()) {
            request.request_action =
                std::min_element(spec.actions.begin(), spec.actions.end(),
                                 [](const ActionSpec& a, const ActionSpec& b) {
                                     return a.id < b.id;
                                 })
                    ->id;
        }
        if (node.contains("authorization")) {
            request.authorization = node.at("authorization").get<bool>();
        }
        if (!request.request_action.empty()) {
            if (!action_ids.contains(request.request_action)) {
                fail(ErrorCode::DanglingReference,
                     "decision requests unknown action '" + request.request_action + "'");
            }
            Json dj{{"request", request.request_action}};
            if (request.authorization) dj["authorization"] = *request.authorization;
            effective["decision"] = dj;
            spec.decision = request;
        }
    }

    // --- hierarchy (meta model) ---
    if (document.contains("hierarchy")) {
        const Json& h = document.at("hierarchy");
        std::vector<HypothesisLevel> levels;
        levels.push_back(parse_level(require_field(h, "level1", "hierarchy"), 1, "hierarchy.level1"));
        levels.push_back(parse_level(require_field(h, "level2", "hierarchy"), 2, "hierarchy.level2"));
        levels.push_back(parse_level(require_field(h, "level3", "hierarchy"), 3, "hierarchy.level3"));
        spec.hierarchy = build_hierarchy(levels);
        effective["hierarchy"] = Json{{"level1", level_to_json(spec.hierarchy->level1)},
                                      {"level2", level_to_json(spec.hierarchy->level2)},
                                      {"level3", level_to_json(spec.hierarchy->level3)}};
    }

    // --- assays ---
    Json assays_json = Json::array();
    for (const Json& node : document.value("assays", Json::array())) {
        AssayStage stage;
        stage.name = require_field(node, "name", "assays").get<std::string>();
        stage.difficulty = require_field(node, "difficulty", "assays").get<int>();
        stage.overrides = node.value("overrides", Json::object());
        assays_json.push_back(
            Json{{"name", stage.name}, {"difficulty", stage.difficulty}, {"overrides", stage.overrides}});
        spec.assays.push_back(std::move(stage));
    }
    effective["assays"] = assays_json;

    // --- review criteria ---
    Json criteria_json = Json::array();
    for (const Json& node : document.value("review_criteria", Json::array())) {
        ReviewCriterion criterion;
        criterion.name = require_field(node, "name", "review_criteria").get<std::string>();
        criterion.metric = require_field(node, "metric", "review_criteria").get<std::string>();
        criterion.policy = require_field(node, "policy", "review_criteria").get<std::string>();
        criterion.cmp = require_field(node, "cmp", "review_criteria").get<std::string>();
        if (criterion.cmp != "lt" && criterion.cmp != "le" && criterion.cmp != "gt" &&
            criterion.cmp != "ge" && criterion.cmp != "eq") {
            schema_fail("review_criteria", "cmp must be lt|le|gt|ge|eq");
        }
        criterion.other_policy = node.value("other_policy", std::string());
        if (node.contains("value")) criterion.value = node.at("value").get<double>();
        if (criterion.other_policy.empty() && !criterion.value) {
            schema_fail("review_criteria",
                        "criterion '" + criterion.name + "' needs 'value' or 'other_policy'");
        }
        Json cj{{"name", criterion.name},
                {"metric", criterion.metric},
                {"policy", criterion.policy},
                {"cmp", criterion.cmp}};
        if (!criterion.other_policy.empty()) cj["other_policy"] = criterion.other_policy;
        if (criterion.value) cj["value"] = *criterion.value;
        criteria_json.push_back(std::move(cj));
        spec.review_criteria.push_back(std::move(criterion));
    }
    effective["review_criteria"] = criteria_json;

    spec.effective = effective;

    // Corpus identity: everything but the policy block and review criteria, so
    // that policy-override runs of the same corpus remain comparable.
    Json identity = effective;
    identity.erase("policy");
    identity.erase("review_criteria");
    char hex[17];
    snprintf(hex, sizeof(hex), "%016llx",
             static_cast<unsigned long long>(fnv1a64(identity.dump())));
    spec.fingerprint = hex;
    return spec;
}

ScenarioSpec load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::SchemaError, "cannot open scenario file '" + path + "'");
    Json document;
    try {
        document = Json::parse(in);
    } catch (const Json::parse_error& e) {
        fail(ErrorCode::SchemaError, "scenario '" + path + "' is not valid JSON: " + e.what());
    }
    return load_scenario(document);
}

ScenarioSpec with_policy_override(const ScenarioSpec& spec, PolicyKind kind) {
    ScenarioSpec overridden = spec;
    PolicyConfig policy = make_policy(kind);
    policy.thresholds = spec.policy.thresholds;
    policy.envelope = spec.policy.envelope;
    if (kind != PolicyKind::AS1v && kind != PolicyKind::AS2b) {
        policy.authorization_required = spec.policy.authorization_required;
    }
    policy.min_redundancy = spec.policy.min_redundancy;
    policy.validate();
    overridden.policy = std::move(policy);

    overridden.effective["policy"]["kind"] = to_string(kind);
    Json tier_map_json = Json::object();
    for (const auto& [tier, mech] : overridden.policy.tier_map) {
        tier_map_json[to_string(tier)] =
            mech == GateMechanism::BayesianGate ? "bayesian" : "reflective";
    }
    overridden.effective["policy"]["tier_map"] = tier_map_json;
    return overridden;
}

Json world_to_json(const WorldState& world) {
    Json entities = Json::array();
    for (const Entity& entity : world.entities) entities.push_back(entity_to_json(entity));
    Json events = Json::array();
    for (const ExogenousEvent& event : world.pending) {
        events.push_back(Json{{"id", event.id},
                              {"at", event.at_tick},
                              {"luck", event.luck},
                              {"probability", event.probability},
                              {"effect", effect_to_json(event.effect)}});
    }
    return Json{{"time", world.time},
                {"entities", entities},
                {"events", events},
                {"applied_events", world.applied_events},
                {"stream_name", world.stream_name},
                {"rng_root", world.rng_root}};
}

}  // namespace epistate
