#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "glm_bandit/errors.hpp"

namespace glm_bandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A feature vector x_{t,a}; callers keep ||x|| <= 1.
using FeatureVector = Vector;

inline constexpr double kFeatureNormSlack = 1e-12;
inline constexpr double kInvertibleEigenvalue = 1e-10;

/// ||x||_A = sqrt(x' A x).
inline double weighted_norm(const Vector& x, const Matrix& a) {
    const double quad = x.dot(a * x);
    if (quad < -1e-12) throw NonPositiveDefinite("weighted_norm: x'Ax is negative");
    return std::sqrt(std::max(quad, 0.0));
}

/// Smallest eigenvalue of a symmetric matrix (only the lower triangle is read).
inline double min_eigenvalue(const Matrix& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

/// Inverse of a symmetric positive definite matrix, symmetrized.
inline Matrix spd_inverse(const Matrix& a) {
    Eigen::LDLT<Matrix> ldlt(a);
    Matrix inv = ldlt.solve(Matrix::Identity(a.rows(), a.cols()));
    return 0.5 * (inv + inv.transpose());
}

/// Growable row store of (X_i, Y_i) pairs; rows are contiguous so the MLE can
/// map them as one n x d matrix.
class ObservationLog {
  public:
    explicit ObservationLog(int dim = 0) : dim_(dim) {}

    int dim() const { return dim_; }
    std::size_t size() const { return rewards_.size(); }
    bool empty() const { return rewards_.empty(); }

    void append(const Vector& x, double y) {
        if (x.size() != dim_) throw InvalidConfig("observation has wrong dimension");
        features_.insert(features_.end(), x.data(), x.data() + dim_);
        rewards_.push_back(y);
    }

    Eigen::Map<const RowMatrix> features() const {
        return {features_.data(), static_cast<Eigen::Index>(size()), dim_};
    }

    Eigen::Map<const Vector> rewards() const {
        return {rewards_.data(), static_cast<Eigen::Index>(size())};
    }

    Vector feature(std::size_t i) const { return features().row(static_cast<Eigen::Index>(i)).transpose(); }
    double reward(std::size_t i) const { return rewards_[i]; }

    /// Observations at the given zero-based indices, in the given order.
    ObservationLog subset(const std::vector<std::size_t>& indices) const {
        ObservationLog out(dim_);
        out.features_.reserve(indices.size() * static_cast<std::size_t>(dim_));
        for (std::size_t i : indices) out.append(feature(i), rewards_[i]);
        return out;
    }

  private:
    int dim_;
    std::vector<double> features_;
    std::vector<double> rewards_;
};

/// Gram matrix V = V0 + sum X_i X_i', its inverse, and the log of absorbed
/// observations. The inverse is maintained by Sherman-Morrison once V is
/// invertible and refactorized from V every `refactor_interval` updates.
class DesignState {
  public:
    static constexpr int kDefaultRefactorInterval = 1000;

    explicit DesignState(int dim, double ridge = 0.0, int refactor_interval = kDefaultRefactorInterval)
        : DesignState(ridge * Matrix::Identity(dim, dim), refactor_interval) {}

    explicit DesignState(Matrix initial_gram, int refactor_interval = kDefaultRefactorInterval)
        : prior_(std::move(initial_gram)),
          gram_(prior_),
          inverse_(Matrix::Zero(prior_.rows(), prior_.cols())),
          log_(static_cast<int>(prior_.rows())),
          refactor_interval_(refactor_interval) {
        if (prior_.rows() != prior_.cols()) throw InvalidConfig("initial gram must be square");
        if (refactor_interval_ < 1) throw InvalidConfig("refactor interval must be positive");
        try_become_invertible();
    }

    int dim() const { return static_cast<int>(gram_.rows()); }
    std::size_t count() const { return log_.size(); }
    const Matrix& prior() const { return prior_; }
    const Matrix& gram() const { return gram_; }
    const ObservationLog& log() const { return log_; }
    bool invertible() const { return invertible_; }
    std::size_t updates_since_refactor() const { return since_refactor_; }

    const Matrix& inverse() const {
        if (!invertible_) throw SingularDesign("design matrix is singular");
        return inverse_;
    }

    double min_eigenvalue() const { return glm_bandit::min_eigenvalue(gram_); }

    /// ||x||_{V^{-1}}.
    double width(const Vector& x) const { return weighted_norm(x, inverse()); }

    void absorb(const Vector& x, double y) {
        log_.append(x, y);
        gram_.noalias() += x * x.transpose();
        if (!invertible_) {
            try_become_invertible();
            return;
        }
        const Vector u = inverse_ * x;
        const double denom = 1.0 + x.dot(u);
        inverse_.noalias() -= (u * u.transpose()) / denom;
        if (++since_refactor_ >= static_cast<std::size_t>(refactor_interval_)) refactor();
    }

    /// Recompute V^{-1} from V by direct factorization.
    void refactor() {
        inverse_ = spd_inverse(gram_);
        since_refactor_ = 0;
    }

    /// Adds `delta` to the maintained inverse. Exists to test that periodic
    /// refactorization removes accumulated drift.
    void perturb_inverse(const Matrix& delta) { inverse_ += delta; }

  private:
    void try_become_invertible() {
        if (dim() == 0) return;
        if (log_.size() < static_cast<std::size_t>(dim()) && prior_.isZero(0.0)) return;
        if (glm_bandit::min_eigenvalue(gram_) >= kInvertibleEigenvalue) {
            invertible_ = true;
            refactor();
        }
    }

    Matrix prior_;
    Matrix gram_;
    Matrix inverse_;
    ObservationLog log_;
    int refactor_interval_;
    std::size_t since_refactor_ = 0;
    bool invertible_ = false;
};

[[nodiscard]] inline DesignState rank_one_update(DesignState state, const Vector& x, double y) {
    state.absorb(x, y);
    return state;
}

}  // namespace glm_bandit
