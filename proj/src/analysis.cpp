#include "gpv/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "gpv/error.hpp"
#include "gpv/records.hpp"

namespace gpv::analysis {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::size_t parse_count(const records::Record& rec, std::string_view key) {
    const auto& v = rec.require(key);
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) rec.fail("field '" + std::string(key) + "' is not a count: '" + v + "'");
    return out;
}

void pairwise(const std::vector<std::optional<double>>& a, const std::vector<std::optional<double>>& b,
              std::vector<double>& x, std::vector<double>& y) {
    x.clear();
    y.clear();
    for (std::size_t s = 0; s < a.size(); ++s) {
        if (a[s] && b[s]) {
            x.push_back(*a[s]);
            y.push_back(*b[s]);
        }
    }
}

std::string cell_text(const std::optional<double>& v) { return records::format_number(v); }

// Subjects of B indexed by id, for cross-batch joins.
std::map<std::string, const ValueVector*> index_by_subject(std::span<const ValueVector> batch) {
    std::map<std::string, const ValueVector*> out;
    for (const auto& v : batch) {
        if (!out.emplace(v.subject_id(), &v).second) throw ValidationError("subject '" + v.subject_id() + "' appears twice in a batch");
    }
    return out;
}

}  // namespace

StabilityCounts& StabilityCounts::operator+=(const StabilityCounts& o) noexcept {
    ss += o.ss;
    oo += o.oo;
    so += o.so;
    os += o.os;
    return *this;
}

std::optional<double> StabilityRow::p_ss() const { return ratio(counts.ss, counts.ss + counts.so); }
std::optional<double> StabilityRow::p_oo() const { return ratio(counts.oo, counts.oo + counts.os); }
std::optional<double> StabilityRow::p_same() const { return ratio(counts.ss + counts.oo, counts.total()); }

StabilityRow StabilityTable::sum() const {
    StabilityRow total{"Sum", {}};
    for (const auto& r : rows) total.counts += r.counts;
    return total;
}

StabilityTable stability(std::span<const ValueVector> vectors, std::span<const scoring::PerceptionScore> scores) {
    StabilityTable table;
    std::map<std::string, std::size_t> row_of;
    std::map<std::pair<std::string, std::string>, double> aggregate;
    for (const auto& v : vectors) {
        for (const auto& e : v.entries()) {
            if (row_of.emplace(e.value, table.rows.size()).second) table.rows.push_back({e.value, {}});
            if (e.score) aggregate[{v.subject_id(), e.value}] = *e.score;
        }
    }
    for (const auto& s : scores) {
        if (!s.w || *s.w == 0.0) continue;
        auto agg = aggregate.find({s.subject_id, s.value_name});
        if (agg == aggregate.end() || agg->second == 0.0) continue;
        auto& c = table.rows[row_of.at(s.value_name)].counts;
        const bool subject_supports = agg->second > 0.0;
        const bool perception_supports = *s.w > 0.0;
        if (subject_supports && perception_supports) ++c.ss;
        else if (!subject_supports && !perception_supports) ++c.oo;
        else if (subject_supports) ++c.so;
        else ++c.os;
    }
    return table;
}

StabilityTable stability_from_counts(const std::filesystem::path& path) {
    StabilityTable table;
    for (const auto& rec : records::read_records(path)) {
        StabilityRow row;
        row.value = rec.require("value");
        row.counts = {parse_count(rec, "ss"), parse_count(rec, "oo"), parse_count(rec, "so"), parse_count(rec, "os")};
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------

std::string_view to_string(MatrixKind kind) noexcept {
    switch (kind) {
        case MatrixKind::pearson: return "pearson";
        case MatrixKind::cosine: return "cosine";
        case MatrixKind::distance: return "distance";
    }
    return "?";
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> cosine(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::string> batch_labels(std::span<const ValueVector> batch) {
    std::vector<std::string> labels;
    if (batch.empty()) return labels;
    for (const auto& e : batch.front().entries()) labels.push_back(e.value);
    for (const auto& v : batch) {
        if (v.system_name() != batch.front().system_name()) {
            throw ValidationError("batch mixes systems " + batch.front().system_name() + " and " + v.system_name());
        }
    }
    return labels;
}

namespace detail {

Columns columns_of(std::span<const ValueVector> batch, std::size_t min_subjects) {
    if (batch.size() < min_subjects) {
        throw ValidationError("need at least " + std::to_string(min_subjects) + " subjects, got " + std::to_string(batch.size()));
    }
    Columns c;
    c.labels = batch_labels(batch);
    c.cols.assign(c.labels.size(), std::vector<std::optional<double>>(batch.size()));
    for (std::size_t s = 0; s < batch.size(); ++s) {
        for (std::size_t i = 0; i < c.labels.size(); ++i) c.cols[i][s] = batch[s].get(c.labels[i]);
    }
    return c;
}

std::optional<double> pearson_cell(const Columns& c, std::size_t i, std::size_t j) {
    std::vector<double> x, y;
    pairwise(c.cols[i], c.cols[j], x, y);
    auto r = pearson(x, y);
    if (r && i == j) return 1.0;
    return r;
}

std::optional<double> cosine_cell(const Columns& c, std::size_t i, std::size_t j) {
    std::vector<double> x, y;
    pairwise(c.cols[i], c.cols[j], x, y);
    auto r = cosine(x, y);
    if (r && i == j) return 1.0;
    return r;
}

}  // namespace detail

namespace {

template <typename CellFn>
Matrix build_parallel(std::span<const ValueVector> batch, MatrixKind kind, CellFn cell) {
    const auto c = detail::columns_of(batch, 3);
    const std::size_t n = c.labels.size();
    Matrix m{c.labels, Cells(n, std::vector<std::optional<double>>(n)), kind};
    // Upper triangle flattened so the work splits evenly across threads.
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) cells.emplace_back(i, j);
    }
    const auto total = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < total; ++k) {
        const auto [i, j] = cells[static_cast<std::size_t>(k)];
        const auto v = cell(c, i, j);
        m.cells[i][j] = v;
        m.cells[j][i] = v;
    }
    return m;
}

}  // namespace

Matrix pearson_matrix(std::span<const ValueVector> batch) {
    return build_parallel(batch, MatrixKind::pearson, detail::pearson_cell);
}

Matrix cosine_matrix(std::span<const ValueVector> batch) {
    return build_parallel(batch, MatrixKind::cosine, detail::cosine_cell);
}

Matrix to_distance(const Matrix& similarity) {
    if (similarity.kind != MatrixKind::cosine) throw ValidationError("to_distance requires a cosine similarity matrix");
    Matrix d = similarity;
    d.kind = MatrixKind::distance;
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (i == j) d.cells[i][j] = 0.0;
            else if (auto& v = d.cells[i][j]) v = std::clamp(1.0 - *v, 0.0, 2.0);
        }
    }
    return d;
}

std::vector<ValueVector> center_rows(std::span<const ValueVector> batch) {
    std::vector<ValueVector> out;
    out.reserve(batch.size());
    for (const auto& v : batch) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& e : v.entries()) {
            if (e.score) {
                sum += *e.score;
                ++n;
            }
        }
        ValueVector c(v.subject_id(), v.system_name(), v.tool());
        const auto r = v.range();
        c.set_range({r.lo - r.hi, r.hi - r.lo});
        const double mean = n ? sum / static_cast<double>(n) : 0.0;
        for (const auto& e : v.entries()) {
            c.set(e.value, e.score ? std::optional<double>(*e.score - mean) : std::nullopt);
        }
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::size_t impute_absent(Matrix& distance) {
    double sum = 0.0;
    std::size_t present = 0;
    std::size_t absent = 0;
    for (std::size_t i = 0; i < distance.size(); ++i) {
        for (std::size_t j = 0; j < distance.size(); ++j) {
            if (i == j) continue;
            if (distance.cells[i][j]) {
                sum += *distance.cells[i][j];
                ++present;
            } else {
                ++absent;
            }
        }
    }
    if (absent == 0) return 0;
    const double fill = present ? sum / static_cast<double>(present) : 1.0;
    for (std::size_t i = 0; i < distance.size(); ++i) {
        for (std::size_t j = 0; j < distance.size(); ++j) {
            if (i == j && !distance.cells[i][j]) distance.cells[i][j] = 0.0;
            else if (!distance.cells[i][j]) distance.cells[i][j] = fill;
        }
    }
    return absent;
}

std::vector<std::vector<double>> double_center(const std::vector<std::vector<double>>& d) {
    const std::size_t n = d.size();
    std::vector<std::vector<double>> sq(n, std::vector<double>(n));
    std::vector<double> row(n, 0.0);
    double all = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            sq[i][j] = d[i][j] * d[i][j];
            row[i] += sq[i][j];
        }
        all += row[i];
        row[i] /= static_cast<double>(n);
    }
    all /= static_cast<double>(n * n);
    // D is symmetric, so column means equal row means.
    std::vector<std::vector<double>> b(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) b[i][j] = -0.5 * (sq[i][j] - row[i] - row[j] + all);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (b[i][j] + b[j][i]);
            b[i][j] = b[j][i] = avg;
        }
    }
    return b;
}

Embedding classical_mds(const Matrix& distance, std::size_t dims) {
    if (distance.kind != MatrixKind::distance) throw ValidationError("classical_mds requires a distance matrix");
    const std::size_t n = distance.size();
    if (dims == 0 || dims > n) throw ValidationError("embedding dimension must be in [1, n]");
    Matrix d = distance;
    if (auto k = impute_absent(d)) spdlog::warn("imputed {} absent distance cells before MDS", k);
    std::vector<std::vector<double>> full(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) full[i][j] = *d.cells[i][j];
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(full[i][j] - full[j][i]) > 1e-9) {
                throw ValidationError("distance matrix is not symmetric at (" + d.labels[i] + ", " + d.labels[j] + ")");
            }
        }
    }
    const auto eig = jacobi_eigen(double_center(full));
    Embedding e{d.labels, std::vector<std::vector<double>>(n, std::vector<double>(dims, 0.0)), eig.values};
    for (std::size_t k = 0; k < dims; ++k) {
        const double scale = std::sqrt(std::max(eig.values[k], 0.0));
        for (std::size_t i = 0; i < n; ++i) e.coords[i][k] = eig.vectors[k][i] * scale;
    }
    return e;
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> attribute_groups(std::span<const SubjectRecord> subjects, const std::string& attr) {
    std::map<std::string, std::string> out;
    for (const auto& s : subjects) {
        auto it = s.metadata.find(attr);
        if (it == s.metadata.end() || it->second.empty()) {
            throw ValidationError("subject '" + s.subject_id + "' has no attribute '" + attr + "'");
        }
        out[s.subject_id] = it->second;
    }
    return out;
}

std::map<std::string, ValueVector> group_means(std::span<const ValueVector> batch,
                                               const std::map<std::string, std::string>& group_of) {
    if (batch.empty()) return {};
    const auto labels = batch_labels(batch);
    struct Acc {
        std::vector<double> sum;
        std::vector<std::size_t> n;
    };
    std::map<std::string, Acc> acc;
    for (const auto& v : batch) {
        auto g = group_of.find(v.subject_id());
        if (g == group_of.end()) throw ValidationError("subject '" + v.subject_id() + "' has no group");
        auto& a = acc[g->second];
        a.sum.resize(labels.size(), 0.0);
        a.n.resize(labels.size(), 0);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (auto s = v.get(labels[i])) {
                a.sum[i] += *s;
                ++a.n[i];
            }
        }
    }
    std::map<std::string, ValueVector> out;
    const auto& proto = batch.front();
    for (const auto& [group, a] : acc) {
        ValueVector m(group, proto.system_name(), proto.tool());
        m.set_range(proto.range());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            m.set(labels[i], a.n[i] ? std::optional<double>(a.sum[i] / static_cast<double>(a.n[i])) : std::nullopt);
        }
        out.emplace(group, std::move(m));
    }
    return out;
}

std::vector<CrossSystemPairs> builtin_cross_pairs() {
    return {
        {"vsm13", "nfcc2000", {{"Uncertainty Avoidance", "Discomfort with Ambiguity"}}},
        {"vsm13", "schwartz10", {{"Individualism", "Self-Direction"}, {"Indulgence", "Hedonism"}}},
        {"lvi", "schwartz10", {{"Concern for Others", "Benevolence"}}},
    };
}

std::vector<std::optional<double>> cross_system_correlation(std::span<const ValueVector> batch_a,
                                                            std::span<const ValueVector> batch_b,
                                                            std::span<const CrossPair> pairs) {
    const auto b_index = index_by_subject(batch_b);
    std::vector<std::optional<double>> out;
    for (const auto& pair : pairs) {
        std::vector<double> x, y;
        for (const auto& a : batch_a) {
            auto b = b_index.find(a.subject_id());
            if (b == b_index.end()) continue;
            auto va = a.get(pair.value_a);
            auto vb = b->second->get(pair.value_b);
            if (va && vb) {
                x.push_back(*va);
                y.push_back(*vb);
            }
        }
        out.push_back(x.size() < 3 ? std::nullopt : pearson(x, y));
    }
    return out;
}

CrossMatrix cross_matrix(std::span<const ValueVector> batch_a, std::span<const ValueVector> batch_b) {
    CrossMatrix m{batch_labels(batch_a), batch_labels(batch_b), {}};
    std::vector<CrossPair> pairs;
    for (const auto& r : m.row_labels) {
        for (const auto& c : m.col_labels) pairs.push_back({r, c});
    }
    const auto flat = cross_system_correlation(batch_a, batch_b, pairs);
    m.cells.assign(m.row_labels.size(), std::vector<std::optional<double>>(m.col_labels.size()));
    for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
        for (std::size_t j = 0; j < m.col_labels.size(); ++j) m.cells[i][j] = flat[i * m.col_labels.size() + j];
    }
    return m;
}

// ---------------------------------------------------------------------------

std::string stability_csv(const StabilityTable& table) {
    std::string out = "value,ss,oo,so,os,p_ss,p_oo,p_same\n";
    auto emit = [&](const StabilityRow& r) {
        const std::vector<std::string> cells{r.value,
                                             std::to_string(r.counts.ss),
                                             std::to_string(r.counts.oo),
                                             std::to_string(r.counts.so),
                                             std::to_string(r.counts.os),
                                             cell_text(r.p_ss()),
                                             cell_text(r.p_oo()),
                                             cell_text(r.p_same())};
        out += records::csv_row(cells);
    };
    for (const auto& r : table.rows) emit(r);
    emit(table.sum());
    return out;
}

std::string matrix_csv(const Matrix& m) {
    std::vector<std::string> header{""};
    header.insert(header.end(), m.labels.begin(), m.labels.end());
    std::string out = records::csv_row(header);
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::vector<std::string> row{m.labels[i]};
        for (const auto& c : m.cells[i]) row.push_back(cell_text(c));
        out += records::csv_row(row);
    }
    return out;
}

std::string embedding_csv(const Embedding& e) {
    std::string out = "label,x,y\n";
    for (std::size_t i = 0; i < e.labels.size(); ++i) {
        const std::vector<std::string> row{e.labels[i], cell_text(e.coords[i][0]),
                                           cell_text(e.coords[i].size() > 1 ? e.coords[i][1] : 0.0)};
        out += records::csv_row(row);
    }
    return out;
}

std::string cross_matrix_csv(const CrossMatrix& m) {
    std::vector<std::string> header{""};
    header.insert(header.end(), m.col_labels.begin(), m.col_labels.end());
    std::string out = records::csv_row(header);
    for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
        std::vector<std::string> row{m.row_labels[i]};
        for (const auto& c : m.cells[i]) row.push_back(cell_text(c));
        out += records::csv_row(row);
    }
    return out;
}

std::string cross_pairs_csv(const CrossSystemPairs& spec, std::span<const std::optional<double>> r) {
    std::string out = records::csv_row(std::vector<std::string>{spec.system_a, spec.system_b, "pearson"});
    for (std::size_t i = 0; i < spec.pairs.size(); ++i) {
        out += records::csv_row(std::vector<std::string>{spec.pairs[i].value_a, spec.pairs[i].value_b,
                                                         cell_text(i < r.size() ? r[i] : std::nullopt)});
    }
    return out;
}

std::string group_means_csv(const std::map<std::string, ValueVector>& groups) {
    if (groups.empty()) return "group\n";
    std::vector<std::string> header{"group"};
    for (const auto& e : groups.begin()->second.entries()) header.push_back(e.value);
    std::string out = records::csv_row(header);
    for (const auto& [g, v] : groups) {
        std::vector<std::string> row{g};
        for (const auto& e : v.entries()) row.push_back(cell_text(e.score));
        out += records::csv_row(row);
    }
    return out;
}

}  // namespace gpv::analysis
