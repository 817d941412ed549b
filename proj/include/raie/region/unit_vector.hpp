#ifndef RAIE_REGION_UNIT_VECTOR_HPP
#define RAIE_REGION_UNIT_VECTOR_HPP

#include <raie/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace raie {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kUnitNormTolerance = 1e-6;

/// A point on the unit hypersphere. Construction is the only way in, so every instance
/// satisfies |v| = 1 within kUnitNormTolerance.
class UnitVector {
public:
    /// Scales `raw` to unit length. Throws InvalidArgument when |raw| < min_norm.
    static UnitVector normalize(const Vector& raw, double min_norm = 1e-12) {
        const double n = raw.norm();
        if (!(n >= min_norm)) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero vector");
        return UnitVector(raw / n);
    }

    /// Wraps an already-normalized vector, checking the norm.
    static UnitVector from_unit(const Vector& v) {
        if (std::abs(v.norm() - 1.0) > kUnitNormTolerance)
            throw Error(ErrorCode::InvalidArgument, "vector is not unit-norm");
        return UnitVector(v);
    }

    const Vector& values() const { return v_; }
    Eigen::Index dim() const { return v_.size(); }
    double operator[](Eigen::Index i) const { return v_[i]; }

    double dot(const UnitVector& other) const { return v_.dot(other.v_); }

    friend bool operator==(const UnitVector& a, const UnitVector& b) {
        return a.v_.size() == b.v_.size() && a.v_ == b.v_;
    }

private:
    explicit UnitVector(Vector v) : v_(std::move(v)) {}

    Vector v_;
};

inline double clamped_cos(double dot) { return std::clamp(dot, -1.0, 1.0); }

/// Angle between two unit vectors, in radians.
inline double angular_distance(const UnitVector& a, const UnitVector& b) {
    return std::acos(clamped_cos(a.dot(b)));
}

}  // namespace raie

#endif  // RAIE_REGION_UNIT_VECTOR_HPP
