#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rsoc {

using Vec = std::vector<double>;

// Dense row-major matrix, just big enough for n x d diffusions and n x n
// Hessians at desk scale.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Mat m(rows.size(), rows.begin()->size());
        std::size_t i = 0;
        for (const auto& r : rows) {
            std::size_t j = 0;
            for (double x : r) m(i, j++) = x;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vec col(std::size_t j) const {
        Vec c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// x^T M x
inline double quad_form(const Mat& m, const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) row += m(i, j) * x[j];
        s += x[i] * row;
    }
    return s;
}

// Closed interval per control component, standing in for the compact control
// set of the general problem.
struct ControlBox {
    double lo = -10.0;
    double hi = 10.0;
};

// Generic controlled diffusion with running/terminal cost and exponential
// risk weight mu:
//   dX = f(t, X, u) dt + sigma(t, X, u) dW,   cost  mu^{-1} log E exp{mu(int l + g(X_T))}.
struct GeneralProblem {
    std::size_t n = 1; // state dimension
    std::size_t d = 1; // noise dimension
    std::size_t m = 1; // control dimension
    std::function<Vec(double, const Vec&, const Vec&)> f;
    std::function<Mat(double, const Vec&, const Vec&)> sigma;
    std::function<double(double, const Vec&, const Vec&)> l;
    std::function<double(const Vec&)> g;
    double mu = 1.0;
    std::vector<ControlBox> control_box{ControlBox{}};

    void validate() const {
        if (!f || !sigma || !l || !g) throw std::invalid_argument("GeneralProblem: missing callable");
        if (control_box.size() != m)
            throw std::invalid_argument("GeneralProblem: need one control interval per component");
        for (const auto& bx : control_box)
            if (!(bx.lo < bx.hi)) throw std::invalid_argument("GeneralProblem: empty control interval");
    }
};

// First- and second-order adjoint values at one time point, plus the
// candidate-optimal diffusion value sigma_bar the Hamiltonian is anchored to.
struct AdjointState {
    Vec p;              // n
    Mat q;              // n x d, column j = q_j
    Mat P;              // n x n symmetric
    std::vector<Mat> Q; // d matrices, n x n symmetric
    Mat sigma_bar;      // n x d
    bool has_sigma_bar = false;

    void require_sigma_bar() const {
        if (!has_sigma_bar)
            throw std::logic_error("AdjointState: sigma_bar not set (required by H)");
    }
};

// Feedback control law u(t, x) with a label for reports.
struct FeedbackPolicy {
    std::function<Vec(double, const Vec&)> map;
    std::string label;
};

// Scalar-state convenience used throughout the portfolio example.
struct ScalarPolicy {
    std::function<double(double, double)> map;
    std::string label;

    double operator()(double t, double x) const { return map(t, x); }
};

} // namespace rsoc
