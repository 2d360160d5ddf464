#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "perc/errors.hpp"

namespace perc {

// Dense row-major matrix of doubles. Rows are points, columns are coordinates.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rws) {
        Matrix m;
        m.rows = rws.size();
        for (const auto& r : rws) {
            if (m.cols == 0) m.cols = r.size();
            if (r.size() != m.cols)
                throw usage_error("Matrix::from_rows: ragged row lengths");
            m.data.insert(m.data.end(), r.begin(), r.end());
        }
        return m;
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

} // namespace perc
