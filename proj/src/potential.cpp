#include "stochdyn/potential.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "stochdyn/error.hpp"
#include "stochdyn/region_io.hpp"
#include "stochdyn/trajectory.hpp"

namespace stochdyn {

PotentialSpec::PotentialSpec(PolynomialShore p) {
  if (!p.beta.allFinite() || !std::isfinite(p.shore_coefficient) || p.shore_coefficient < 0.0)
    throw Error(ErrorCode::parameter, "polynomial-shore coefficients must be finite with C >= 0");
  form_ = std::make_shared<const std::variant<PolynomialShore, GenericPotential>>(std::move(p));
}

PotentialSpec::PotentialSpec(GenericPotential g) {
  if (!g.value) throw Error(ErrorCode::parameter, "generic potential needs a value function");
  form_ = std::make_shared<const std::variant<PolynomialShore, GenericPotential>>(std::move(g));
}

namespace {

double checked_shore_distance(const PolynomialShore& p, const Point& q) {
  const double d = region_distance(p.shore, q);
  if (d < kShoreGuard || point_in_region(p.shore, q))
    throw Error(ErrorCode::singularity, "potential is singular on or inside the shore at (" +
                                            format_double(q.x()) + ", " + format_double(q.y()) + ")");
  return d;
}

}  // namespace

Eigen::Vector2d inverse_distance_gradient(const Region& shore, const Point& q) {
  const BoundaryProjection near = nearest_boundary_point(shore, q);
  if (near.distance < kShoreGuard)
    throw Error(ErrorCode::singularity, "distance gradient undefined on the shore");
  const Eigen::Vector2d unit = (q - near.point) / near.distance;
  return -unit / (near.distance * near.distance);
}

double eval_potential(const PotentialSpec& spec, const Point& q) {
  if (!spec.is_polynomial_shore()) {
    const double v = spec.generic().value(q);
    if (!std::isfinite(v)) throw Error(ErrorCode::evaluation, "potential is not finite");
    return v;
  }
  const auto& p = spec.polynomial_shore();
  const double d = checked_shore_distance(p, q);
  return p.beta.dot(polynomial_basis<double>(q)) + p.shore_coefficient / d;
}

Eigen::Vector2d grad_potential(const PotentialSpec& spec, const Point& q) {
  if (!spec.is_polynomial_shore()) {
    const auto& g = spec.generic();
    Eigen::Vector2d grad = g.gradient ? (*g.gradient)(q) : finite_diff_grad(g.value, q, 1e-5);
    if (!grad.allFinite()) throw Error(ErrorCode::evaluation, "potential gradient is not finite");
    return grad;
  }
  const auto& p = spec.polynomial_shore();
  checked_shore_distance(p, q);
  Eigen::Vector2d grad = polynomial_basis_gradients<double>(q) * p.beta;
  if (p.shore_coefficient != 0.0) grad += p.shore_coefficient * inverse_distance_gradient(p.shore, q);
  return grad;
}

Eigen::Vector2d finite_diff_grad(const ScalarField& h, const Point& q, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::parameter, "finite-difference step must be positive");
  Eigen::Vector2d g;
  for (int k = 0; k < 2; ++k) {
    Point plus = q, minus = q;
    plus(k) += step;
    minus(k) -= step;
    g(k) = (h(plus) - h(minus)) / (2.0 * step);
  }
  return g;
}

PotentialSpec load_potential_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  const std::string variant = j.value("variant", "polynomial-shore");
  if (variant != "polynomial-shore")
    throw Error(ErrorCode::parse, path.string() + ": only the polynomial-shore variant can be loaded");
  if (!j.contains("beta") || !j["beta"].is_array() || j["beta"].size() != 5)
    throw Error(ErrorCode::parse, path.string() + ": beta must be an array of 5 numbers");
  if (!j.contains("region_file"))
    throw Error(ErrorCode::parse, path.string() + ": missing region_file");
  PolynomialShore p{.beta = {}, .shore_coefficient = j.value("C", 0.0),
                    .shore = load_region(path.parent_path() / j["region_file"].get<std::string>())};
  for (int k = 0; k < 5; ++k) p.beta(k) = j["beta"][static_cast<std::size_t>(k)].get<double>();
  return PotentialSpec(std::move(p));
}

}  // namespace stochdyn
