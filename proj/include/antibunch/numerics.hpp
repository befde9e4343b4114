#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace antibunch {

/// Thrown when doubling the quadrature resolution moves a result by more than
/// the requested tolerance.
class QuadratureNonConvergence : public std::runtime_error {
 public:
  QuadratureNonConvergence(const std::string& what, double change, double allowed)
      : std::runtime_error(what), change_(change), allowed_(allowed) {}

  double change() const noexcept { return change_; }
  double allowed() const noexcept { return allowed_; }

 private:
  double change_;
  double allowed_;
};

/// sin(u)/u, with a series branch near the removable singularity.
inline double sinc(double u) noexcept {
  constexpr double kSeriesBound = 1e-4;
  if (std::abs(u) < kSeriesBound) {
    const double u2 = u * u;
    return 1.0 - u2 / 6.0 * (1.0 - u2 / 20.0);
  }
  return std::sin(u) / u;
}

enum class QuadratureRule { gauss_legendre, trapezoid };

/// Nodes and weights of a one-dimensional rule on [-half_width, half_width].
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Newton iteration on the Legendre recurrence; nodes come out symmetric.
inline Rule1D gauss_legendre_unit(std::size_t n) {
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double dj = static_cast<double>(j);
        const double p2 = ((2.0 * dj - 1.0) * x * p1 - (dj - 1.0) * p0) / dj;
        p0 = p1;
        p1 = p2;
      }
      dp = dn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double dj = static_cast<double>(j);
        const double p2 = ((2.0 * dj - 1.0) * x * p1 - (dj - 1.0) * p0) / dj;
        p0 = p1;
        p1 = p2;
      }
      dp = dn * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace detail

inline Rule1D make_rule(QuadratureRule kind, std::size_t n, double half_width) {
  if (n < 2) throw std::invalid_argument("quadrature rule needs at least 2 nodes");
  Rule1D rule;
  if (kind == QuadratureRule::gauss_legendre) {
    rule = detail::gauss_legendre_unit(n);
    for (std::size_t i = 0; i < n; ++i) {
      rule.nodes[i] *= half_width;
      rule.weights[i] *= half_width;
    }
  } else {
    rule.nodes.resize(n);
    rule.weights.assign(n, 2.0 * half_width / static_cast<double>(n - 1));
    for (std::size_t i = 0; i < n; ++i) {
      // (2i - (n-1)) keeps the node set exactly symmetric about zero.
      const double offset = 2.0 * static_cast<double>(i) - static_cast<double>(n - 1);
      rule.nodes[i] = half_width * offset / static_cast<double>(n - 1);
    }
    rule.weights.front() *= 0.5;
    rule.weights.back() *= 0.5;
  }
  return rule;
}

/// Tensor-product quadrature over a rectangle centred on the origin.
struct QuadratureSpec {
  std::array<double, 2> half_width{1.0, 1.0};  // per axis, in the integrand's units
  std::array<std::size_t, 2> nodes{64, 64};    // per axis, coarse level
  QuadratureRule rule = QuadratureRule::gauss_legendre;
  double tolerance = 1e-6;

  void validate() const {
    for (int axis = 0; axis < 2; ++axis) {
      if (!(half_width[axis] > 0.0) || !std::isfinite(half_width[axis]))
        throw std::invalid_argument("quadrature half-width must be positive and finite");
      if (nodes[axis] < 8) throw std::invalid_argument("quadrature needs at least 8 nodes per axis");
    }
    if (!(tolerance > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
  }

  /// Same domain and rule with the node count doubled on both axes.
  QuadratureSpec refined() const {
    QuadratureSpec out = *this;
    out.nodes = {2 * nodes[0], 2 * nodes[1]};
    return out;
  }
};

template <class F>
concept Integrand2D = std::invocable<F, double, double> &&
                      std::convertible_to<std::invoke_result_t<F, double, double>, std::complex<double>>;

struct QuadratureEstimate {
  std::complex<double> value;
  double mass = 0.0;  // integral of |f|, the reference scale for convergence checks
};

/// One tensor-product pass at the resolution given by `spec` (no convergence check).
template <Integrand2D F>
QuadratureEstimate tensor_quadrature(F&& f, const QuadratureSpec& spec) {
  const Rule1D u = make_rule(spec.rule, spec.nodes[0], spec.half_width[0]);
  const Rule1D v = make_rule(spec.rule, spec.nodes[1], spec.half_width[1]);
  QuadratureEstimate est;
  for (std::size_t i = 0; i < u.nodes.size(); ++i) {
    std::complex<double> row{};
    double row_mass = 0.0;
    for (std::size_t j = 0; j < v.nodes.size(); ++j) {
      const std::complex<double> value = f(u.nodes[i], v.nodes[j]);
      row += v.weights[j] * value;
      row_mass += v.weights[j] * std::abs(value);
    }
    est.value += u.weights[i] * row;
    est.mass += u.weights[i] * row_mass;
  }
  return est;
}

/// Integrates f over the spec's rectangle at the stated resolution and again at
/// double resolution. Returns the refined estimate; throws
/// QuadratureNonConvergence if the two differ by more than
/// tolerance * integral(|f|).
template <Integrand2D F>
std::complex<double> integrate_2d(F&& f, const QuadratureSpec& spec) {
  spec.validate();
  const QuadratureEstimate coarse = tensor_quadrature(f, spec);
  const QuadratureEstimate fine = tensor_quadrature(f, spec.refined());
  const double change = std::abs(fine.value - coarse.value);
  const double allowed = spec.tolerance * fine.mass;
  if (change > allowed) {
    throw QuadratureNonConvergence("integrate_2d: node doubling changed the result by " + std::to_string(change) +
                                       " (allowed " + std::to_string(allowed) + ")",
                                   change, allowed);
  }
  return fine.value;
}

}  // namespace antibunch
