#include "dmidas/matrix.hpp"

#include "dmidas/errors.hpp"

#include <algorithm>
#include <cmath>

namespace dmidas {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::row_vector(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

void Matrix::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

void Matrix::add_in_place(const Matrix& other) {
    if (!same_shape(other)) {
        throw DimensionError("add: " + shape_string() + " vs " + other.shape_string());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t n = a.rows(), inner = a.cols(), out = b.cols();
    for (std::size_t r = 0; r < n; ++r) {
        const double* arow = a.row(r).data();
        double* crow = c.row(r).data();
        for (std::size_t k = 0; k < inner; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k).data();
            for (std::size_t j = 0; j < out; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t n = a.rows(), inner = a.cols(), out = b.cols();
    for (std::size_t r = 0; r < n; ++r) {
        const double* arow = a.row(r).data();
        const double* brow = b.row(r).data();
        for (std::size_t i = 0; i < inner; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.row(i).data();
            for (std::size_t j = 0; j < out; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
    const std::size_t n = a.rows(), inner = a.cols(), out = b.rows();
    for (std::size_t r = 0; r < n; ++r) {
        const double* arow = a.row(r).data();
        double* crow = c.row(r).data();
        for (std::size_t i = 0; i < out; ++i) {
            const double* brow = b.row(i).data();
            // Four partial sums; fixed order keeps results deterministic.
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            std::size_t k = 0;
            for (; k + 4 <= inner; k += 4) {
                s0 += arow[k] * brow[k];
                s1 += arow[k + 1] * brow[k + 1];
                s2 += arow[k + 2] * brow[k + 2];
                s3 += arow[k + 3] * brow[k + 3];
            }
            for (; k < inner; ++k) s0 += arow[k] * brow[k];
            crow[i] += (s0 + s1) + (s2 + s3);
        }
    }
}

}  // namespace dmidas
