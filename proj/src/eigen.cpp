#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpv/analysis.hpp"
#include "gpv/error.hpp"

namespace gpv::analysis {

namespace {

using Mat = std::vector<std::vector<double>>;

double off_norm(const Mat& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (i != j) s += a[i][j] * a[i][j];
        }
    }
    return std::sqrt(s);
}

double frobenius(const Mat& a) {
    double s = 0.0;
    for (const auto& row : a) {
        for (double x : row) s += x * x;
    }
    return std::sqrt(s);
}

}  // namespace

EigenDecomposition jacobi_eigen(const Mat& input, double tol, int max_sweeps) {
    const std::size_t n = input.size();
    for (const auto& row : input) {
        if (row.size() != n) throw ValidationError("eigendecomposition needs a square matrix");
    }
    const double scale = std::max(1.0, frobenius(input));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(input[i][j] - input[j][i]) > 1e-9 * scale) throw ValidationError("matrix is not symmetric");
        }
    }

    Mat a = input;
    Mat v(n, std::vector<double>(n, 0.0));  // columns accumulate the rotations
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    EigenDecomposition out;
    const double threshold = tol * scale;
    while (out.sweeps < max_sweeps && off_norm(a) > threshold) {
        ++out.sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p][q];
                if (apq == 0.0) continue;
                // Rotation angle that zeroes a[p][q]; t is the smaller root for stability.
                const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = a[q][p] = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p];
                    const double vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
    for (std::size_t k : order) {
        out.values.push_back(a[k][k]);
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
        std::size_t big = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (std::abs(col[i]) > std::abs(col[big])) big = i;
        }
        if (n > 0 && col[big] < 0.0) {
            for (double& x : col) x = -x;
        }
        out.vectors.push_back(std::move(col));
    }
    return out;
}

}  // namespace gpv::analysis
