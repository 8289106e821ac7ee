#include "cqa/report.hpp"

namespace cqa {

nlohmann::json classification_json(const Query& q, const Classification& c) {
    nlohmann::json evidence;
    if (c.cls == QueryClass::fo) {
        nlohmann::json order = nlohmann::json::array();
        for (int i : c.topo_order) order.push_back(q.at(i).relation());
        evidence["topological_order"] = order;
    } else if (c.cycle_pair) {
        auto strength = [](AttackStrength s) {
            return s == AttackStrength::strong ? "strong" : "weak";
        };
        evidence["cycle"] = {
            {"atoms", {q.at(c.cycle_pair->first).relation(),
                       q.at(c.cycle_pair->second).relation()}},
            {"forward", strength(c.forward_strength)},
            {"backward", strength(c.backward_strength)},
        };
    }
    return evidence;
}

nlohmann::json report_envelope(const std::string& command) {
    return nlohmann::json{{"command", command},
                          {"class", nullptr},
                          {"evidence", nlohmann::json::object()},
                          {"result", nullptr},
                          {"stats", nlohmann::json::object()}};
}

} // namespace cqa
