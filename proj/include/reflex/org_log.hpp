#pragma once

#include "reflex/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace reflex {

// One organization event: a feedback delivery, a tracker move, or a topology
// change. Records are the audit trail for the escalation ladder, so every
// rung leaves one.
struct OrgRecord {
    SimTime t = 0.0;
    std::string kind;
    nlohmann::json fields;

    nlohmann::json to_json() const {
        nlohmann::json j = fields;
        j["t"] = t;
        j["event"] = kind;
        return j;
    }
};

class OrganizationLog {
public:
    using Sink = std::function<void(const OrgRecord &)>;

    void set_sink(Sink sink) { sink_ = std::move(sink); }

    void append(SimTime t, std::string kind, nlohmann::json fields) {
        OrgRecord rec{t, std::move(kind), std::move(fields)};
        counts_[rec.kind] += 1;
        if (sink_) {
            sink_(rec);
        }
        records_.push_back(std::move(rec));
    }

    const std::vector<OrgRecord> &records() const { return records_; }
    const std::map<std::string, std::int64_t> &counts() const { return counts_; }

    std::int64_t count(const std::string &kind) const {
        auto it = counts_.find(kind);
        return it == counts_.end() ? 0 : it->second;
    }

    // Number of link additions/removals the log accounts for; must match the
    // network's own mutation counter at all times.
    std::int64_t link_mutations_accounted() const {
        std::int64_t n = 0;
        for (const auto &rec : records_) {
            if (rec.kind == "reorganize") {
                const std::string action = rec.fields.value("action", "");
                if (action == "add_link" || action == "remove_link") {
                    n += 1;
                }
            } else if (rec.kind == "evolve") {
                const std::string action = rec.fields.value("action", "");
                if (action == "create_interneuron") {
                    n += 3; // one neuron, two links
                } else if (action == "retire_interneuron") {
                    n += 1 + rec.fields.value("links_removed", std::int64_t{0});
                }
            }
        }
        return n;
    }

private:
    std::vector<OrgRecord> records_;
    std::map<std::string, std::int64_t> counts_;
    Sink sink_;
};

} // namespace reflex
