#include "gpv/core.hpp"

#include <algorithm>
#include <set>

#include "gpv/error.hpp"
#include "gpv/records.hpp"

namespace gpv {

ValueSystem::ValueSystem(std::string name, std::vector<ValueDef> values,
                         std::vector<HigherOrderGroup> higher_order)
    : name_(std::move(name)), values_(std::move(values)), higher_order_(std::move(higher_order)) {
    if (name_.empty()) throw ValidationError("value system name must be non-empty");
    if (values_.empty()) throw ValidationError("value system '" + name_ + "' has no values");
    std::set<std::string_view> seen;
    for (const auto& v : values_) {
        if (v.name.empty()) throw ValidationError("value system '" + name_ + "' has an unnamed value");
        if (!seen.insert(v.name).second) {
            throw ValidationError("value '" + v.name + "' appears twice in system '" + name_ + "'");
        }
    }
    std::set<std::string_view> grouped;
    std::set<std::string_view> group_names;
    for (const auto& g : higher_order_) {
        if (g.name.empty()) throw ValidationError("higher-order group without a name in '" + name_ + "'");
        if (!group_names.insert(g.name).second) {
            throw ValidationError("higher-order group '" + g.name + "' declared twice");
        }
        for (const auto& m : g.members) {
            if (!seen.contains(m)) {
                throw ValidationError("higher-order group '" + g.name + "' references unknown value '" + m + "'");
            }
            if (!grouped.insert(m).second) {
                throw ValidationError("value '" + m + "' belongs to two higher-order groups");
            }
        }
    }
}

const ValueDef* ValueSystem::find(std::string_view value_name) const {
    for (const auto& v : values_) {
        if (v.name == value_name) return &v;
    }
    return nullptr;
}

std::optional<std::size_t> ValueSystem::index_of(std::string_view value_name) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i].name == value_name) return i;
    }
    return std::nullopt;
}

std::vector<std::string> ValueSystem::value_names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.push_back(v.name);
    return out;
}

std::vector<ValueSystem> load_value_systems(const std::filesystem::path& path) {
    struct Pending {
        std::vector<ValueDef> values;
        std::vector<HigherOrderGroup> groups;
    };
    std::vector<std::string> order;
    std::map<std::string, Pending> pending;
    for (const auto& rec : records::read_records(path)) {
        const std::string& system = rec.require("system");
        const std::string& value = rec.require("value");
        if (system.empty()) rec.fail("empty system name");
        if (value.empty()) rec.fail("empty value name");
        auto [it, inserted] = pending.try_emplace(system);
        if (inserted) order.push_back(system);
        it->second.values.push_back({value, rec.get("description").value_or("")});
        const std::string group = rec.get("higher_order_group").value_or("");
        if (!group.empty()) {
            auto& groups = it->second.groups;
            auto g = std::find_if(groups.begin(), groups.end(),
                                  [&](const HigherOrderGroup& h) { return h.name == group; });
            if (g == groups.end()) {
                groups.push_back({group, {value}});
            } else {
                g->members.push_back(value);
            }
        }
    }
    std::vector<ValueSystem> out;
    for (const auto& name : order) {
        auto& p = pending.at(name);
        out.emplace_back(name, std::move(p.values), std::move(p.groups));
    }
    return out;
}

ValueSystem resolve_system(std::string_view spec) {
    const auto names = builtin_system_names();
    if (std::find(names.begin(), names.end(), spec) != names.end()) return builtin_system(spec);

    std::string path(spec);
    std::string wanted;
    if (!std::filesystem::exists(path)) {
        const auto colon = spec.rfind(':');
        if (colon != std::string_view::npos) {
            path = std::string(spec.substr(0, colon));
            wanted = std::string(spec.substr(colon + 1));
        }
    }
    if (!std::filesystem::exists(path)) return builtin_system(spec);  // raises the unknown-system error
    auto systems = load_value_systems(path);
    if (wanted.empty()) {
        if (systems.size() != 1) {
            throw ValidationError(path + " defines " + std::to_string(systems.size()) +
                                  " systems; use " + path + ":<system> to pick one");
        }
        return systems.front();
    }
    for (auto& s : systems) {
        if (s.name() == wanted) return s;
    }
    throw ValidationError("system '" + wanted + "' not found in " + path);
}

std::string_view to_string(Tool tool) noexcept {
    switch (tool) {
        case Tool::gpv: return "gpv";
        case Tool::self_report: return "self_report";
        case Tool::valuebench: return "valuebench";
        case Tool::dictionary: return "dictionary";
    }
    return "gpv";
}

Tool tool_from_string(std::string_view name) {
    if (name == "gpv") return Tool::gpv;
    if (name == "self_report" || name == "self-report") return Tool::self_report;
    if (name == "valuebench") return Tool::valuebench;
    if (name == "dictionary") return Tool::dictionary;
    throw ValidationError("unknown tool '" + std::string(name) +
                          "' (expected gpv, self_report, valuebench, dictionary)");
}

ScoreRange range_for(Tool tool) noexcept {
    switch (tool) {
        case Tool::gpv: return {-1.0, 1.0};
        case Tool::self_report: return {0.0, 1.0};
        case Tool::valuebench: return {0.0, 10.0};
        case Tool::dictionary: return {0.0, std::numeric_limits<double>::infinity()};
    }
    return {-1.0, 1.0};
}

ValueVector::ValueVector(std::string subject_id, std::string system_name, Tool tool)
    : subject_id_(std::move(subject_id)),
      system_name_(std::move(system_name)),
      tool_(tool),
      range_(range_for(tool)) {}

ValueVector ValueVector::for_system(std::string subject_id, const ValueSystem& system, Tool tool) {
    ValueVector v(std::move(subject_id), system.name(), tool);
    v.entries_.reserve(system.size());
    for (const auto& def : system.values()) v.entries_.push_back({def.name, std::nullopt});
    return v;
}

std::optional<double> ValueVector::get(std::string_view value) const {
    for (const auto& e : entries_) {
        if (e.value == value) return e.score;
    }
    return std::nullopt;
}

bool ValueVector::contains(std::string_view value) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const ValueEntry& e) { return e.value == value; });
}

std::size_t ValueVector::measured_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](const ValueEntry& e) { return e.score.has_value(); }));
}

void ValueVector::set(std::string_view value, std::optional<double> score) {
    if (score && !range_.contains(*score)) {
        throw ValidationError("score " + records::format_number(score) + " for '" + std::string(value) +
                              "' outside range [" + records::format_number(range_.lo) + ", " +
                              records::format_number(range_.hi) + "]");
    }
    for (auto& e : entries_) {
        if (e.value == value) {
            e.score = score;
            return;
        }
    }
    entries_.push_back({std::string(value), score});
}

void ValueVector::set_range(ScoreRange range) {
    for (const auto& e : entries_) {
        if (e.score && !range.contains(*e.score)) {
            throw ValidationError("entry '" + e.value + "' falls outside the new range");
        }
    }
    range_ = range;
}

namespace {

std::optional<double> mean_of_members(const ValueVector& v, const HigherOrderGroup& group) {
    std::vector<double> present;
    for (const auto& m : group.members) {
        if (auto s = v.get(m)) present.push_back(*s);
    }
    if (present.empty()) return std::nullopt;
    // Sorting first makes the sum independent of member order.
    std::sort(present.begin(), present.end());
    double sum = 0.0;
    for (double x : present) sum += x;
    return sum / static_cast<double>(present.size());
}

void check_aggregatable(const ValueVector& v, const ValueSystem& system) {
    if (v.system_name() != system.name()) {
        throw ValidationError("vector measured under '" + v.system_name() + "' cannot be aggregated with system '" +
                              system.name() + "'");
    }
    if (system.higher_order().empty()) {
        throw ValidationError("system '" + system.name() + "' declares no higher-order values");
    }
}

}  // namespace

ValueVector aggregate_higher_order(const ValueVector& v, const ValueSystem& system) {
    check_aggregatable(v, system);
    ValueVector out = v;
    for (const auto& group : system.higher_order()) out.set(group.name, mean_of_members(v, group));
    return out;
}

ValueVector higher_order_only(const ValueVector& v, const ValueSystem& system, std::string target_system) {
    check_aggregatable(v, system);
    ValueVector out(v.subject_id(), std::move(target_system), v.tool());
    out.set_range(v.range());
    for (const auto& group : system.higher_order()) out.set(group.name, mean_of_members(v, group));
    return out;
}

}  // namespace gpv
