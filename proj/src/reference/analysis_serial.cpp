#include "gpv/analysis.hpp"

namespace gpv::analysis::reference {

namespace {

template <typename CellFn>
Matrix build_serial(std::span<const ValueVector> batch, MatrixKind kind, CellFn cell) {
    const auto c = detail::columns_of(batch, 3);
    const std::size_t n = c.labels.size();
    Matrix m{c.labels, Cells(n, std::vector<std::optional<double>>(n)), kind};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            m.cells[i][j] = cell(c, i, j);
            m.cells[j][i] = m.cells[i][j];
        }
    }
    return m;
}

}  // namespace

Matrix pearson_matrix(std::span<const ValueVector> batch) {
    return build_serial(batch, MatrixKind::pearson, detail::pearson_cell);
}

Matrix cosine_matrix(std::span<const ValueVector> batch) {
    return build_serial(batch, MatrixKind::cosine, detail::cosine_cell);
}

}  // namespace gpv::analysis::reference
