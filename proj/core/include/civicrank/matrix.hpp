#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace civicrank {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    Matrix select_rows(std::span<const std::size_t> indices) const;

    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

// Per-column z-score statistics (population std). Columns whose std falls
// below kConstantTolerance are treated as constant and map to 0.
struct ColumnStats {
    static constexpr double kConstantTolerance = 1e-12;

    std::vector<double> means;
    std::vector<double> stds;

    static ColumnStats fit(const Matrix& m);
    static ColumnStats identity(std::size_t cols);

    bool is_constant(std::size_t c) const { return stds[c] < kConstantTolerance; }

    Matrix apply(const Matrix& m) const;
    void apply_row(std::span<const double> in, std::span<double> out) const;
};

void to_json(nlohmann::json& j, const Matrix& m);
void from_json(const nlohmann::json& j, Matrix& m);
void to_json(nlohmann::json& j, const ColumnStats& s);
void from_json(const nlohmann::json& j, ColumnStats& s);

}  // namespace civicrank
