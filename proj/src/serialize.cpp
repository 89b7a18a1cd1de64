#include "gpv/serialize.hpp"

#include <cmath>
#include <limits>

#include "gpv/error.hpp"

namespace gpv::serialize {

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_number()) throw ValidationError("expected a number or null, got " + j.dump());
    return j.get<double>();
}

// Wraps json access errors so callers see one error type with the offending row.
template <typename Fn>
auto guarded(const char* what, const json& j, Fn fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid ") + what + " record " + j.dump() + ": " + e.what());
    }
}

json cells_json(const analysis::Cells& cells) {
    json rows = json::array();
    for (const auto& row : cells) {
        json r = json::array();
        for (const auto& c : row) r.push_back(opt(c));
        rows.push_back(std::move(r));
    }
    return rows;
}

analysis::Cells cells_from(const json& j) {
    analysis::Cells cells;
    for (const auto& row : j) {
        std::vector<std::optional<double>> r;
        for (const auto& c : row) r.push_back(opt_double(c));
        cells.push_back(std::move(r));
    }
    return cells;
}

}  // namespace

json to_json(const ValueSystem& s) {
    json values = json::array();
    for (const auto& v : s.values()) values.push_back({{"name", v.name}, {"description", v.description}});
    json groups = json::array();
    for (const auto& g : s.higher_order()) groups.push_back({{"name", g.name}, {"members", g.members}});
    return {{"name", s.name()}, {"values", values}, {"higher_order", groups}};
}

ValueSystem value_system_from_json(const json& j) {
    return guarded("value system", j, [&] {
        std::vector<ValueDef> values;
        for (const auto& v : j.at("values")) values.push_back({v.at("name").get<std::string>(), v.value("description", std::string{})});
        std::vector<HigherOrderGroup> groups;
        if (auto it = j.find("higher_order"); it != j.end()) {
            for (const auto& g : *it) groups.push_back({g.at("name").get<std::string>(), g.at("members").get<std::vector<std::string>>()});
        }
        return ValueSystem(j.at("name").get<std::string>(), std::move(values), std::move(groups));
    });
}

json to_json(const SubjectRecord& r) {
    json meta = json::object();
    for (const auto& [k, v] : r.metadata) meta[k] = v;
    return {{"subject_id", r.subject_id}, {"text", r.text}, {"metadata", meta}};
}

SubjectRecord subject_from_json(const json& j) {
    return guarded("subject", j, [&] {
        SubjectRecord r;
        r.subject_id = j.at("subject_id").get<std::string>();
        r.text = j.at("text").get<std::string>();
        if (auto it = j.find("metadata"); it != j.end()) {
            for (const auto& [k, v] : it->items()) r.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
        return r;
    });
}

json to_json(const ValueVector& v) {
    json entries = json::array();
    for (const auto& e : v.entries()) entries.push_back({{"value", e.value}, {"score", opt(e.score)}});
    const auto r = v.range();
    return {
        {"subject_id", v.subject_id()},
        {"system", v.system_name()},
        {"tool", std::string(to_string(v.tool()))},
        {"range", json::array({r.lo, r.bounded() ? json(r.hi) : json(nullptr)})},
        {"entries", entries},
    };
}

ValueVector value_vector_from_json(const json& j) {
    return guarded("value vector", j, [&] {
        ValueVector v(j.at("subject_id").get<std::string>(), j.at("system").get<std::string>(),
                      tool_from_string(j.at("tool").get<std::string>()));
        if (auto it = j.find("range"); it != j.end()) {
            const auto& r = *it;
            const double hi = r.at(1).is_null() ? std::numeric_limits<double>::infinity() : r.at(1).get<double>();
            v.set_range({r.at(0).get<double>(), hi});
        }
        for (const auto& e : j.at("entries")) v.set(e.at("value").get<std::string>(), opt_double(e.at("score")));
        return v;
    });
}

json to_json(const ingest::Chunk& c) {
    json j = {{"subject_id", c.subject_id}, {"chunk_index", c.chunk_index}, {"text", c.text}, {"token_count", c.token_count}};
    if (c.oversize) j["oversize"] = true;
    return j;
}

ingest::Chunk chunk_from_json(const json& j) {
    return guarded("chunk", j, [&] {
        return ingest::Chunk{j.at("subject_id").get<std::string>(), j.at("chunk_index").get<std::size_t>(),
                             j.at("text").get<std::string>(), j.at("token_count").get<std::size_t>(),
                             j.value("oversize", false)};
    });
}

json to_json(const perception::Perception& p) {
    return {{"subject_id", p.subject_id}, {"chunk_index", p.chunk_index}, {"ordinal", p.ordinal}, {"text", p.text}};
}

perception::Perception perception_from_json(const json& j) {
    return guarded("perception", j, [&] {
        perception::Perception p{j.at("subject_id").get<std::string>(), j.at("chunk_index").get<std::size_t>(),
                                 j.at("ordinal").get<std::size_t>(), j.at("text").get<std::string>()};
        if (p.text.empty()) throw ValidationError("perception text is empty");
        return p;
    });
}

json to_json(const perception::SkipRecord& s) {
    return {{"subject_id", s.subject_id}, {"chunk_index", s.chunk_index}, {"reason", s.reason}, {"raw_response", s.raw_response}};
}

perception::SkipRecord skip_from_json(const json& j) {
    return guarded("skip", j, [&] {
        return perception::SkipRecord{j.at("subject_id").get<std::string>(), j.at("chunk_index").get<std::size_t>(),
                                      j.at("reason").get<std::string>(), j.value("raw_response", std::string{})};
    });
}

json to_json(const perception::ElicitationSet& e) { return {{"value", e.value_name}, {"questions", e.questions}}; }

perception::ElicitationSet elicitation_from_json(const json& j) {
    return guarded("elicitation", j, [&] {
        return perception::ElicitationSet{j.at("value").get<std::string>(), j.at("questions").get<std::vector<std::string>>()};
    });
}

json to_json(const backend::LabelDistribution& d) {
    json j = json::object();
    for (const auto& [label, p] : d.probs()) j[label] = p;
    return j;
}

backend::LabelDistribution distribution_from_json(const json& j) {
    return guarded("label distribution", j, [&] {
        std::vector<std::pair<std::string, double>> probs;
        for (const auto& [k, v] : j.items()) probs.emplace_back(k, v.get<double>());
        return backend::LabelDistribution(std::move(probs));
    });
}

json to_json(const scoring::PerceptionScore& s) {
    json j = {
        {"subject_id", s.subject_id},
        {"value", s.value_name},
        {"chunk_index", s.chunk_index},
        {"ordinal", s.ordinal},
        {"relevance", opt(s.relevance)},
        {"valence", s.valence ? to_json(*s.valence) : json(nullptr)},
        {"w", opt(s.w)},
    };
    if (s.error) j["error"] = *s.error;
    return j;
}

scoring::PerceptionScore score_from_json(const json& j) {
    return guarded("perception score", j, [&] {
        scoring::PerceptionScore s;
        s.subject_id = j.at("subject_id").get<std::string>();
        s.value_name = j.at("value").get<std::string>();
        s.chunk_index = j.at("chunk_index").get<std::size_t>();
        s.ordinal = j.at("ordinal").get<std::size_t>();
        s.relevance = opt_double(j.at("relevance"));
        if (!j.at("valence").is_null()) s.valence = distribution_from_json(j.at("valence"));
        s.w = opt_double(j.at("w"));
        if (auto it = j.find("error"); it != j.end()) s.error = it->get<std::string>();
        if (s.w && (s.valence.has_value() != true || !s.relevance)) throw ValidationError("score has w without its probabilities");
        return s;
    });
}

json to_json(const baselines::ItemLog& l) {
    return {{"item_id", l.item_id}, {"value", l.value_name}, {"subject_answer", l.subject_answer},
            {"reply", l.reply}, {"raw", opt(l.raw)}, {"score", opt(l.score)}};
}

baselines::ItemLog item_log_from_json(const json& j) {
    return guarded("item log", j, [&] {
        return baselines::ItemLog{j.at("item_id").get<std::string>(), j.at("value").get<std::string>(),
                                  j.at("reply").get<std::string>(), j.value("subject_answer", std::string{}),
                                  opt_double(j.at("raw")), opt_double(j.at("score"))};
    });
}

json to_json(const analysis::Matrix& m) {
    return {{"kind", std::string(analysis::to_string(m.kind))}, {"labels", m.labels}, {"cells", cells_json(m.cells)}};
}

analysis::Matrix matrix_from_json(const json& j) {
    return guarded("matrix", j, [&] {
        analysis::Matrix m;
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "pearson") m.kind = analysis::MatrixKind::pearson;
        else if (kind == "cosine") m.kind = analysis::MatrixKind::cosine;
        else if (kind == "distance") m.kind = analysis::MatrixKind::distance;
        else throw ValidationError("unknown matrix kind '" + kind + "'");
        m.labels = j.at("labels").get<std::vector<std::string>>();
        m.cells = cells_from(j.at("cells"));
        if (m.cells.size() != m.labels.size()) throw ValidationError("matrix cells do not match labels");
        for (const auto& row : m.cells) {
            if (row.size() != m.labels.size()) throw ValidationError("matrix is not square");
        }
        return m;
    });
}

json to_json(const analysis::Embedding& e) {
    json points = json::array();
    for (std::size_t i = 0; i < e.labels.size(); ++i) points.push_back({{"label", e.labels[i]}, {"coords", e.coords[i]}});
    return {{"points", points}, {"eigenvalues", e.eigenvalues}};
}

analysis::Embedding embedding_from_json(const json& j) {
    return guarded("embedding", j, [&] {
        analysis::Embedding e;
        for (const auto& p : j.at("points")) {
            e.labels.push_back(p.at("label").get<std::string>());
            e.coords.push_back(p.at("coords").get<std::vector<double>>());
        }
        e.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        return e;
    });
}

json to_json(const analysis::StabilityTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"value", r.value}, {"ss", r.counts.ss}, {"oo", r.counts.oo}, {"so", r.counts.so},
                        {"os", r.counts.os}, {"p_ss", opt(r.p_ss())}, {"p_oo", opt(r.p_oo())}, {"p_same", opt(r.p_same())}});
    }
    const auto s = t.sum();
    return {{"rows", rows},
            {"sum", {{"ss", s.counts.ss}, {"oo", s.counts.oo}, {"so", s.counts.so}, {"os", s.counts.os},
                     {"p_ss", opt(s.p_ss())}, {"p_oo", opt(s.p_oo())}, {"p_same", opt(s.p_same())}}}};
}

analysis::StabilityTable stability_from_json(const json& j) {
    return guarded("stability table", j, [&] {
        analysis::StabilityTable t;
        for (const auto& r : j.at("rows")) {
            t.rows.push_back({r.at("value").get<std::string>(),
                              {r.at("ss").get<std::size_t>(), r.at("oo").get<std::size_t>(),
                               r.at("so").get<std::size_t>(), r.at("os").get<std::size_t>()}});
        }
        return t;
    });
}

json to_json(const probe::ExperimentReport& r) {
    json weights = json::array();
    for (std::size_t k = 0; k < r.feature_names.size(); ++k) weights.push_back({{"value", r.feature_names[k]}, {"mean_weight", r.mean_weights[k]}});
    json repeats = json::array();
    for (const auto& rep : r.repeats) {
        repeats.push_back({{"train", rep.split.train}, {"val", rep.split.val}, {"test", rep.split.test},
                           {"best_epoch", rep.training.best_epoch}, {"best_val_accuracy", rep.training.best_val_accuracy},
                           {"test_accuracy", rep.test_accuracy}, {"weights", rep.training.probe.weights}});
    }
    return {{"mean_acc", r.mean_accuracy}, {"std_acc", r.std_accuracy}, {"weights", weights}, {"repeats", repeats}};
}

}  // namespace gpv::serialize
