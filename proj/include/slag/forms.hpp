#pragma once

// Constant alternating forms on R^m, dense over sorted index subsets.
// Dimensions here are tiny (m <= 8), so simplicity beats cleverness.

#include <complex>
#include <vector>

#include "slag/errors.hpp"
#include "slag/util.hpp"

#include <Eigen/Dense>

namespace slag {

namespace detail {

inline std::vector<std::vector<int>> combinations(int m, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    if (k == 0) {
        out.push_back({});
        return out;
    }
    while (true) {
        out.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == m - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

// Merge two sorted index sets; returns 0 on repeated index, else the sign of the shuffle.
inline int merge_indices(const std::vector<int>& a, const std::vector<int>& b,
                         std::vector<int>& out) {
    out.clear();
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    int sign = 1;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return 0;
        if (a[i] < b[j]) {
            out.push_back(a[i++]);
        } else {
            // b[j] moves past the remaining a-entries
            if ((a.size() - i) % 2 == 1) sign = -sign;
            out.push_back(b[j++]);
        }
    }
    while (i < a.size()) out.push_back(a[i++]);
    while (j < b.size()) out.push_back(b[j++]);
    return sign;
}

} // namespace detail

/// A constant complex-coefficient k-form on R^m.
class AltForm {
public:
    AltForm() = default;
    AltForm(int m, int k) : m_(m), k_(k), subsets_(detail::combinations(m, k)) {
        coeff_.assign(subsets_.size(), Complex(0, 0));
    }

    static AltForm basis(int m, const std::vector<int>& indices) {
        AltForm f(m, static_cast<int>(indices.size()));
        f.set(indices, 1.0);
        return f;
    }

    int dim() const { return m_; }
    int degree() const { return k_; }

    void set(const std::vector<int>& indices, Complex c) {
        std::vector<int> sorted = indices;
        int sign = 1;
        for (std::size_t i = 0; i < sorted.size(); ++i)
            for (std::size_t j = i + 1; j < sorted.size(); ++j)
                if (sorted[i] > sorted[j]) {
                    std::swap(sorted[i], sorted[j]);
                    sign = -sign;
                }
        coeff_[index_of(sorted)] += static_cast<double>(sign) * c;
    }

    Complex coefficient(const std::vector<int>& sorted_indices) const {
        return coeff_[index_of(sorted_indices)];
    }

    AltForm operator+(const AltForm& o) const {
        check_same(o);
        AltForm r = *this;
        for (std::size_t i = 0; i < coeff_.size(); ++i) r.coeff_[i] += o.coeff_[i];
        return r;
    }

    AltForm operator-(const AltForm& o) const {
        check_same(o);
        AltForm r = *this;
        for (std::size_t i = 0; i < coeff_.size(); ++i) r.coeff_[i] -= o.coeff_[i];
        return r;
    }

    AltForm operator*(Complex c) const {
        AltForm r = *this;
        for (auto& v : r.coeff_) v *= c;
        return r;
    }

    AltForm wedge(const AltForm& o) const {
        if (m_ != o.m_) throw ArgumentError("wedge: dimension mismatch");
        AltForm r(m_, k_ + o.k_);
        std::vector<int> merged;
        for (std::size_t a = 0; a < subsets_.size(); ++a) {
            if (coeff_[a] == Complex(0, 0)) continue;
            for (std::size_t b = 0; b < o.subsets_.size(); ++b) {
                if (o.coeff_[b] == Complex(0, 0)) continue;
                const int sign = detail::merge_indices(subsets_[a], o.subsets_[b], merged);
                if (sign == 0) continue;
                r.coeff_[r.index_of(merged)] +=
                    static_cast<double>(sign) * coeff_[a] * o.coeff_[b];
            }
        }
        return r;
    }

    AltForm conj() const {
        AltForm r = *this;
        for (auto& v : r.coeff_) v = std::conj(v);
        return r;
    }

    AltForm real() const {
        AltForm r = *this;
        for (auto& v : r.coeff_) v = Complex(v.real(), 0);
        return r;
    }

    AltForm imag() const {
        AltForm r = *this;
        for (auto& v : r.coeff_) v = Complex(v.imag(), 0);
        return r;
    }

    /// Evaluate on k column vectors (each of size m).
    Complex eval(const Eigen::MatrixXd& vectors) const {
        if (vectors.rows() != m_ || vectors.cols() != k_)
            throw ArgumentError("AltForm::eval: expected " + std::to_string(m_) + "x" +
                                std::to_string(k_) + " frame, got " +
                                std::to_string(vectors.rows()) + "x" +
                                std::to_string(vectors.cols()));
        Complex total(0, 0);
        Eigen::MatrixXd minor(k_, k_);
        for (std::size_t a = 0; a < subsets_.size(); ++a) {
            if (coeff_[a] == Complex(0, 0)) continue;
            for (int i = 0; i < k_; ++i)
                for (int j = 0; j < k_; ++j) minor(i, j) = vectors(subsets_[a][i], j);
            total += coeff_[a] * minor.determinant();
        }
        return total;
    }

    double max_abs_coeff() const {
        double m = 0;
        for (const auto& v : coeff_) m = std::max(m, std::abs(v));
        return m;
    }

    const std::vector<std::vector<int>>& subsets() const { return subsets_; }
    const std::vector<Complex>& coefficients() const { return coeff_; }

private:
    void check_same(const AltForm& o) const {
        if (m_ != o.m_ || k_ != o.k_) throw ArgumentError("AltForm: degree/dimension mismatch");
    }

    std::size_t index_of(const std::vector<int>& sorted) const {
        for (std::size_t i = 0; i < subsets_.size(); ++i)
            if (subsets_[i] == sorted) return i;
        throw ArgumentError("AltForm: bad index set");
    }

    int m_ = 0, k_ = 0;
    std::vector<std::vector<int>> subsets_;
    std::vector<Complex> coeff_;
};

} // namespace slag
