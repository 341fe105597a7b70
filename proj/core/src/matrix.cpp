#include "civicrank/matrix.hpp"

#include "civicrank/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace civicrank {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw validation_error("ragged_matrix");
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

ColumnStats ColumnStats::fit(const Matrix& m) {
    ColumnStats st;
    st.means.assign(m.cols(), 0.0);
    st.stds.assign(m.cols(), 0.0);
    if (m.rows() == 0) return st;
    const auto n = static_cast<double>(m.rows());
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) sum += m(r, c);
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const double d = m(r, c) - mean;
            ss += d * d;
        }
        st.means[c] = mean;
        st.stds[c] = std::sqrt(ss / n);
    }
    return st;
}

ColumnStats ColumnStats::identity(std::size_t cols) {
    ColumnStats st;
    st.means.assign(cols, 0.0);
    st.stds.assign(cols, 1.0);
    return st;
}

void ColumnStats::apply_row(std::span<const double> in, std::span<double> out) const {
    if (in.size() != means.size()) throw validation_error("column_mismatch");
    for (std::size_t c = 0; c < in.size(); ++c) {
        out[c] = is_constant(c) ? 0.0 : (in[c] - means[c]) / stds[c];
    }
}

Matrix ColumnStats::apply(const Matrix& m) const {
    if (m.cols() != means.size()) throw validation_error("column_mismatch");
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) apply_row(m.row(r), out.row(r));
    return out;
}

void to_json(nlohmann::json& j, const Matrix& m) {
    j = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        j.push_back(std::vector<double>(row.begin(), row.end()));
    }
}

void from_json(const nlohmann::json& j, Matrix& m) {
    m = Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

void to_json(nlohmann::json& j, const ColumnStats& s) {
    j = nlohmann::json{{"means", s.means}, {"stds", s.stds}};
}

void from_json(const nlohmann::json& j, ColumnStats& s) {
    s.means = j.at("means").get<std::vector<double>>();
    s.stds = j.at("stds").get<std::vector<double>>();
    if (s.means.size() != s.stds.size()) throw validation_error("bad_column_stats");
}

}  // namespace civicrank
