#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "stochdyn/geometry.hpp"

namespace stochdyn {

using ScalarField = std::function<double(const Point&)>;
using GradientField = std::function<Eigen::Vector2d(const Point&)>;

/// Coefficients of the quadratic surface plus shore repulsion
///   H(x, y) = b10 x + b01 y + b20 x^2 + b11 x y + b02 y^2 + C / d(x, y),
/// with d the distance to the shore polygon (an island).
struct PolynomialShore {
  Eigen::Matrix<double, 5, 1> beta = Eigen::Matrix<double, 5, 1>::Zero();
  double shore_coefficient = 0.0;
  Region shore;
};

/// User-supplied potential. Without an analytic gradient, central differences
/// are used.
struct GenericPotential {
  ScalarField value;
  std::optional<GradientField> gradient;
};

/// Within this distance of the shore the potential is treated as singular.
inline constexpr double kShoreGuard = 1e-9;

class PotentialSpec {
 public:
  PotentialSpec(PolynomialShore p);  // NOLINT
  PotentialSpec(GenericPotential g);  // NOLINT

  bool is_polynomial_shore() const noexcept { return std::holds_alternative<PolynomialShore>(*form_); }
  const PolynomialShore& polynomial_shore() const { return std::get<PolynomialShore>(*form_); }
  const GenericPotential& generic() const { return std::get<GenericPotential>(*form_); }

 private:
  std::shared_ptr<const std::variant<PolynomialShore, GenericPotential>> form_;
};

/// Gradients of the five polynomial basis functions x, y, x^2, xy, y^2 at q,
/// one per column.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 5> polynomial_basis_gradients(const Point2<Scalar>& q) {
  Eigen::Matrix<Scalar, 2, 5> g;
  const Scalar x = q.x(), y = q.y();
  g << Scalar(1), Scalar(0), Scalar(2) * x, y, Scalar(0),
       Scalar(0), Scalar(1), Scalar(0), x, Scalar(2) * y;
  return g;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 5, 1> polynomial_basis(const Point2<Scalar>& q) {
  Eigen::Matrix<Scalar, 5, 1> b;
  b << q.x(), q.y(), q.x() * q.x(), q.x() * q.y(), q.y() * q.y();
  return b;
}

/// Gradient of 1 / d(q) for the distance d to the shore polygon, via the
/// nearest boundary point: -d^-2 * (q - nearest) / d.
Eigen::Vector2d inverse_distance_gradient(const Region& shore, const Point& q);

double eval_potential(const PotentialSpec& spec, const Point& q);
Eigen::Vector2d grad_potential(const PotentialSpec& spec, const Point& q);

/// Central differences per coordinate.
Eigen::Vector2d finite_diff_grad(const ScalarField& h, const Point& q, double step);

/// `{variant, beta:[5], C, region_file}`; region_file is resolved relative to
/// the JSON file's directory.
PotentialSpec load_potential_spec(const std::filesystem::path& path);

}  // namespace stochdyn
