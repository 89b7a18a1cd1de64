#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpv/core.hpp"
#include "gpv/scoring.hpp"

namespace gpv::analysis {

// ---------------------------------------------------------------------------
// Stability

/// Sign agreement counts. First letter: subject-level aggregate; second: perception.
struct StabilityCounts {
    std::size_t ss = 0;
    std::size_t oo = 0;
    std::size_t so = 0;
    std::size_t os = 0;

    std::size_t total() const noexcept { return ss + oo + so + os; }
    StabilityCounts& operator+=(const StabilityCounts& o) noexcept;
    bool operator==(const StabilityCounts&) const = default;
};

struct StabilityRow {
    std::string value;
    StabilityCounts counts;

    std::optional<double> p_ss() const;    // ss / (ss + so)
    std::optional<double> p_oo() const;    // oo / (oo + os)
    std::optional<double> p_same() const;  // (ss + oo) / total
    bool operator==(const StabilityRow&) const = default;
};

struct StabilityTable {
    std::vector<StabilityRow> rows;

    StabilityRow sum() const;  // labelled "Sum"
    bool operator==(const StabilityTable&) const = default;
};

/// Classifies every measured perception score against its subject's aggregate for the
/// same value. Zero on either side, and pairs whose aggregate is absent, are left out.
/// Rows follow the value order of the vectors.
StabilityTable stability(std::span<const ValueVector> vectors, std::span<const scoring::PerceptionScore> scores);

/// Reads rows {value, ss, oo, so, os}, e.g. previously tabulated counts.
StabilityTable stability_from_counts(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Matrices

enum class MatrixKind { pearson, cosine, distance };
std::string_view to_string(MatrixKind kind) noexcept;

using Cells = std::vector<std::vector<std::optional<double>>>;

/// Square labelled matrix; nullopt marks an undefined cell.
struct Matrix {
    std::vector<std::string> labels;
    Cells cells;
    MatrixKind kind = MatrixKind::pearson;

    std::size_t size() const noexcept { return labels.size(); }
    bool operator==(const Matrix&) const = default;
};

/// Pearson r over the pairs where both are present; nullopt for < 2 pairs or zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
/// Cosine similarity; nullopt when either vector has zero norm or is empty.
std::optional<double> cosine(std::span<const double> x, std::span<const double> y);

/// Value columns of a batch (all vectors must share one system); entries in value order.
std::vector<std::string> batch_labels(std::span<const ValueVector> batch);

/// Pairwise-complete Pearson matrix; requires >= 3 subjects. Computed in parallel over cells.
Matrix pearson_matrix(std::span<const ValueVector> batch);
/// Pairwise-complete cosine similarity over subjects; requires >= 3 subjects.
Matrix cosine_matrix(std::span<const ValueVector> batch);
/// 1 - similarity, diagonal 0. Requires a cosine matrix.
Matrix to_distance(const Matrix& similarity);

/// Per subject, subtracts the mean of present entries from each present entry.
/// The declared range widens to [lo - hi, hi - lo] to hold the differences.
std::vector<ValueVector> center_rows(std::span<const ValueVector> batch);

// ---------------------------------------------------------------------------
// Eigen / MDS

struct EigenDecomposition {
    std::vector<double> values;                // descending
    std::vector<std::vector<double>> vectors;  // vectors[k] is the unit eigenvector of values[k]
    int sweeps = 0;
};

/// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal Frobenius
/// norm falls below tol * max(1, ||A||_F). Each eigenvector's largest-magnitude
/// component is made positive. Throws ValidationError if the input is not symmetric.
EigenDecomposition jacobi_eigen(const std::vector<std::vector<double>>& a, double tol = 1e-12, int max_sweeps = 100);

struct Embedding {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> coords;  // coords[i] has `dims` entries
    std::vector<double> eigenvalues;           // all eigenvalues of B, descending, unclipped

    bool operator==(const Embedding&) const = default;
};

/// Replaces absent off-diagonal cells with the mean of the present ones. Returns the
/// number replaced.
std::size_t impute_absent(Matrix& distance);

/// B = -1/2 J D^2 J, eigendecomposed; coordinates are the top `dims` eigenvectors
/// scaled by sqrt(max(lambda, 0)). Absent cells are imputed with a warning.
Embedding classical_mds(const Matrix& distance, std::size_t dims = 2);

/// -1/2 J D^2 J for a complete distance matrix.
std::vector<std::vector<double>> double_center(const std::vector<std::vector<double>>& d);

// ---------------------------------------------------------------------------
// Group means and cross-system correlation

/// subject_id -> value of metadata attribute `attr`. Throws ValidationError when a
/// subject lacks the attribute.
std::map<std::string, std::string> attribute_groups(std::span<const SubjectRecord> subjects, const std::string& attr);

/// Per group, per value: the mean of present entries (absent when none).
std::map<std::string, ValueVector> group_means(std::span<const ValueVector> batch,
                                               const std::map<std::string, std::string>& group_of);

struct CrossPair {
    std::string value_a;
    std::string value_b;
};

/// Theoretically aligned value pairs across the built-in systems.
struct CrossSystemPairs {
    std::string system_a;
    std::string system_b;
    std::vector<CrossPair> pairs;
};
std::vector<CrossSystemPairs> builtin_cross_pairs();

/// Pearson per pair over subjects present in both batches with both values measured;
/// nullopt for fewer than 3 such subjects.
std::vector<std::optional<double>> cross_system_correlation(std::span<const ValueVector> batch_a,
                                                            std::span<const ValueVector> batch_b,
                                                            std::span<const CrossPair> pairs);

/// Rectangular Pearson matrix between every value of batch A and every value of batch B.
struct CrossMatrix {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    Cells cells;

    bool operator==(const CrossMatrix&) const = default;
};
CrossMatrix cross_matrix(std::span<const ValueVector> batch_a, std::span<const ValueVector> batch_b);

// ---------------------------------------------------------------------------
// Delimited output

std::string stability_csv(const StabilityTable& table);
std::string matrix_csv(const Matrix& m);
std::string embedding_csv(const Embedding& e);
std::string cross_matrix_csv(const CrossMatrix& m);
std::string cross_pairs_csv(const CrossSystemPairs& spec, std::span<const std::optional<double>> r);
std::string group_means_csv(const std::map<std::string, ValueVector>& groups);

namespace reference {
/// Single-threaded versions of the matrix builders, kept to check the parallel ones.
Matrix pearson_matrix(std::span<const ValueVector> batch);
Matrix cosine_matrix(std::span<const ValueVector> batch);
}  // namespace reference

namespace detail {
/// Column-major value table with presence flags, shared by both matrix builders.
struct Columns {
    std::vector<std::string> labels;
    std::vector<std::vector<std::optional<double>>> cols;  // cols[value][subject]
};
Columns columns_of(std::span<const ValueVector> batch, std::size_t min_subjects);
std::optional<double> pearson_cell(const Columns& c, std::size_t i, std::size_t j);
std::optional<double> cosine_cell(const Columns& c, std::size_t i, std::size_t j);
}  // namespace detail

}  // namespace gpv::analysis
