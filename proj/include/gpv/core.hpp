#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpv {

/// One value dimension: its name and the definition text shown to raters.
struct ValueDef {
    std::string name;
    std::string description;

    bool operator==(const ValueDef&) const = default;
};

struct HigherOrderGroup {
    std::string name;
    std::vector<std::string> members;

    bool operator==(const HigherOrderGroup&) const = default;
};

/// A named, ordered set of values used as the measurement reference frame.
///
/// Construction validates: at least one value, unique non-empty names, and
/// higher-order groups that reference existing values with no value shared
/// between two groups. Instances are immutable afterwards.
class ValueSystem {
public:
    ValueSystem(std::string name, std::vector<ValueDef> values,
                std::vector<HigherOrderGroup> higher_order = {});

    const std::string& name() const noexcept { return name_; }
    const std::vector<ValueDef>& values() const noexcept { return values_; }
    const std::vector<HigherOrderGroup>& higher_order() const noexcept { return higher_order_; }
    std::size_t size() const noexcept { return values_.size(); }

    const ValueDef* find(std::string_view value_name) const;
    std::optional<std::size_t> index_of(std::string_view value_name) const;
    std::vector<std::string> value_names() const;

    bool operator==(const ValueSystem&) const = default;

private:
    std::string name_;
    std::vector<ValueDef> values_;
    std::vector<HigherOrderGroup> higher_order_;
};

/// Names accepted by builtin_system().
std::vector<std::string> builtin_system_names();

/// Built-in inventories: schwartz10, schwartz4, vsm13, lvi, nfcc2000.
/// Throws ValidationError listing the available names for anything else.
ValueSystem builtin_system(std::string_view name);

/// Loads systems from a record file with fields
/// {system, value, description, higher_order_group (optional)}.
std::vector<ValueSystem> load_value_systems(const std::filesystem::path& path);

/// Resolves a built-in name, or "path/to/file.csv:system_name" / a file holding one system.
ValueSystem resolve_system(std::string_view spec);

/// One measurement subject: a corpus entry (e.g. a blog) or an LLM response transcript.
struct SubjectRecord {
    std::string subject_id;
    std::string text;
    std::map<std::string, std::string> metadata;

    bool operator==(const SubjectRecord&) const = default;
};

enum class Tool { gpv, self_report, valuebench, dictionary };

std::string_view to_string(Tool tool) noexcept;
Tool tool_from_string(std::string_view name);

struct ScoreRange {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const noexcept { return x >= lo && x <= hi; }
    bool bounded() const noexcept { return hi < std::numeric_limits<double>::infinity(); }
    bool operator==(const ScoreRange&) const = default;
};

/// gpv [-1, 1], self_report [0, 1], valuebench [0, 10], dictionary [0, inf).
ScoreRange range_for(Tool tool) noexcept;

struct ValueEntry {
    std::string value;
    std::optional<double> score;  // nullopt = unmeasured

    bool operator==(const ValueEntry&) const = default;
};

/// Per-subject measurement: one optional score per value, in system order.
class ValueVector {
public:
    ValueVector() = default;
    ValueVector(std::string subject_id, std::string system_name, Tool tool);

    /// Vector with one unmeasured entry per value of `system`.
    static ValueVector for_system(std::string subject_id, const ValueSystem& system, Tool tool);

    const std::string& subject_id() const noexcept { return subject_id_; }
    const std::string& system_name() const noexcept { return system_name_; }
    Tool tool() const noexcept { return tool_; }
    const ScoreRange& range() const noexcept { return range_; }
    const std::vector<ValueEntry>& entries() const noexcept { return entries_; }

    std::optional<double> get(std::string_view value) const;
    bool contains(std::string_view value) const;
    std::size_t measured_count() const;

    /// Sets or appends an entry. Throws ValidationError when score is outside range().
    void set(std::string_view value, std::optional<double> score);

    /// Overrides the declared range (used when reloading persisted vectors).
    void set_range(ScoreRange range);

    bool operator==(const ValueVector&) const = default;

private:
    std::string subject_id_;
    std::string system_name_;
    Tool tool_ = Tool::gpv;
    ScoreRange range_ = range_for(Tool::gpv);
    std::vector<ValueEntry> entries_;
};

/// Adds (or recomputes) one entry per higher-order group: the mean of the
/// group's measured members, absent when none is measured. Basic entries are
/// kept, so applying it twice gives the same vector.
ValueVector aggregate_higher_order(const ValueVector& v, const ValueSystem& system);

/// Only the higher-order entries of aggregate_higher_order(v, system), labelled
/// with `target_system` as system name.
ValueVector higher_order_only(const ValueVector& v, const ValueSystem& system,
                              std::string target_system);

}  // namespace gpv
