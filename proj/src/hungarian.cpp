#include <kamsort/association.hpp>

#include <algorithm>
#include <limits>

namespace kamsort {

namespace {

// Shortest augmenting path with potentials, rows <= cols. a is 1-indexed
// internally; p[j] is the row assigned to column j.
std::vector<long> solve_wide(const Matrix& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    std::vector<double> minv(m + 1);
    std::vector<char> used(m + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<long> row_to_col(n, -1);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            row_to_col[p[j] - 1] = static_cast<long>(j - 1);
        }
    }
    return row_to_col;
}

}  // namespace

std::vector<long> hungarian(const Matrix& costs) {
    if (costs.empty()) {
        return std::vector<long>(costs.rows(), -1);
    }
    if (costs.rows() <= costs.cols()) {
        return solve_wide(costs);
    }
    Matrix t(costs.cols(), costs.rows());
    for (std::size_t i = 0; i < costs.rows(); ++i) {
        for (std::size_t j = 0; j < costs.cols(); ++j) {
            t(j, i) = costs(i, j);
        }
    }
    const auto col_to_row = solve_wide(t);
    std::vector<long> row_to_col(costs.rows(), -1);
    for (std::size_t j = 0; j < col_to_row.size(); ++j) {
        if (col_to_row[j] >= 0) {
            row_to_col[static_cast<std::size_t>(col_to_row[j])] = static_cast<long>(j);
        }
    }
    return row_to_col;
}

Assignment solve_assignment(const Matrix& costs, double forbid_threshold) {
    Assignment out;
    const auto row_to_col = hungarian(costs);
    std::vector<char> col_used(costs.cols(), 0);
    for (std::size_t i = 0; i < costs.rows(); ++i) {
        const long j = row_to_col[i];
        if (j >= 0 && costs(i, static_cast<std::size_t>(j)) < forbid_threshold) {
            out.matches.emplace_back(i, static_cast<std::size_t>(j));
            col_used[static_cast<std::size_t>(j)] = 1;
        } else {
            out.unmatched_rows.push_back(i);
        }
    }
    for (std::size_t j = 0; j < costs.cols(); ++j) {
        if (!col_used[j]) out.unmatched_cols.push_back(j);
    }
    return out;
}

}  // namespace kamsort
