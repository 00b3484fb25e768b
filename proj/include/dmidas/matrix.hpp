#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dmidas {

/**
 * Dense row-major matrix of doubles.
 *
 * Vectors are represented as single-row matrices; batched signals carry one
 * sample per row.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    /// 1 x n matrix holding `values`.
    static Matrix row_vector(std::span<const double> values);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    [[nodiscard]] std::string shape_string() const;

    void fill(double value) noexcept;
    /// this += other (shapes must agree).
    void add_in_place(const Matrix& other);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Raw kernels used by the differentiable ops. All accumulate into `c`.

/// c[n x o] += a[n x i] * b[i x o]
void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& c);
/// c[i x o] += a[n x i]^T * b[n x o]
void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& c);
/// c[n x i] += a[n x o] * b[i x o]^T
void gemm_nt_accumulate(const Matrix& a, const Matrix& b, Matrix& c);

}  // namespace dmidas
