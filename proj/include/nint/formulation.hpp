// SPDX-License-Identifier: Apache-2.0
//
// Per-pair quantities of the local-planarity formulation.
//
// For neighboring pixels a and b with normals n_a, n_b and rays tau_a, tau_b,
// the surface is modeled as two plane segments meeting on the ray tau_m, with
// an optional jump eps along the camera z axis there. That gives
//
//   z_a = omega_eps * eps + omega * z_b
//   omega_eps = n_az / (n_a . tau_a)
//   omega     = (n_a . tau_m)(n_b . tau_b) / ((n_a . tau_a)(n_b . tau_m))
//
// and, in log depth with eps = alpha * z_b,
//
//   z~_a - z~_b = log(omega + omega_eps * alpha * beta).

#ifndef NINT_FORMULATION_HPP
#define NINT_FORMULATION_HPP

#include <cmath>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "nint/common.hpp"

namespace nint {

inline constexpr double kDegenerateDenominator = 1e-14;
inline constexpr double kOmegaEpsGuard = 1e-12;

struct PairCoefficients {
  double omega_eps = 0.0;
  double omega = 0.0;
  /// Multiplier of the equation in the least-squares cost.
  double gamma = 0.0;
  /// Multiplier used for the bilateral-weight residuals.
  double gamma_weight = 0.0;
  Vec3 tau_m = Vec3::UnitZ();
  double n_dot_tau_a = 0.0;
  double n_dot_tau_b = 0.0;
  double n_dot_tau_m_a = 0.0;
  double n_dot_tau_m_b = 0.0;
  bool valid = false;

  /// Whether alpha may be updated for this pair (|omega_eps| not vanishing).
  bool alpha_eligible() const noexcept { return std::abs(omega_eps) >= kOmegaEpsGuard; }
};

// Interpolation weight of tau_m between tau_a (0) and tau_b (1).
namespace lambda_mode {
struct Constant {
  double lambda = 0.5;
};
/// sigma_k((n_a.tau_a)^2 - (n_b.tau_b)^2)
struct SigmoidNTau {
  double k = 1.0;
};
/// sigma_k(n_az^2 - n_bz^2)
struct SigmoidNz {
  double k = 1.0;
};
/// sigma_k((n_az n_a.tau_a)^2 - (n_bz n_b.tau_b)^2)
struct SigmoidProduct {
  double k = 1.0;
};
}  // namespace lambda_mode

using LambdaMode = std::variant<lambda_mode::Constant, lambda_mode::SigmoidNTau,
                                lambda_mode::SigmoidNz, lambda_mode::SigmoidProduct>;

namespace gamma_mode {
/// ||u_b - u_a|| / ||tau_b - tau_a|| * (n_a . tau_a) on both sides.
struct Full {};
/// Cost uses n_a . tau_a; weights use the full factor.
struct NoF {};
/// Cost uses n_a . tau_a; weights use value * (n_a . tau_a).
struct ConstF {
  double value = 1000.0;
};
/// Cost uses ||u_b - u_a|| / ||tau_b - tau_a|| only; weights use the full factor.
struct NoNdotT {};
}  // namespace gamma_mode

using GammaMode = std::variant<gamma_mode::Full, gamma_mode::NoF, gamma_mode::ConstF,
                               gamma_mode::NoNdotT>;

struct BetaParams {
  double q = 50.0;
  double rho = 0.25;
};

inline void validate(const LambdaMode& mode) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, lambda_mode::Constant>) {
          if (!(m.lambda >= 0.0 && m.lambda <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "constant lambda_m must lie in [0, 1]");
          }
        } else {
          if (!(m.k > 0.0) || !std::isfinite(m.k)) {
            throw Error(ErrorCode::InvalidArgument, "lambda_m sigmoid sharpness must be > 0");
          }
        }
      },
      mode);
}

inline void validate(const BetaParams& p) {
  if (!(p.q > 0.0) || !std::isfinite(p.q)) {
    throw Error(ErrorCode::InvalidArgument, "beta sharpness q must be > 0");
  }
  if (!(p.rho > 0.0 && p.rho < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "beta midpoint rho must lie in (0, 1)");
  }
}

/// Interpolation weight lambda for the directed pair b -> a.
inline double interp_lambda(const Vec3& tau_a, const Vec3& tau_b, const Vec3& n_a, const Vec3& n_b,
                            const LambdaMode& mode) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, lambda_mode::Constant>) {
          return m.lambda;
        } else if constexpr (std::is_same_v<T, lambda_mode::SigmoidNTau>) {
          const double da = n_a.dot(tau_a);
          const double db = n_b.dot(tau_b);
          return logistic(m.k, da * da - db * db);
        } else if constexpr (std::is_same_v<T, lambda_mode::SigmoidNz>) {
          return logistic(m.k, n_a.z() * n_a.z() - n_b.z() * n_b.z());
        } else {
          const double da = n_a.z() * n_a.dot(tau_a);
          const double db = n_b.z() * n_b.dot(tau_b);
          return logistic(m.k, da * da - db * db);
        }
      },
      mode);
}

/// tau_m = tau_a + lambda (tau_b - tau_a) with lambda chosen by `mode`.
inline Vec3 interp_tau_m(const Vec3& tau_a, const Vec3& tau_b, const Vec3& n_a, const Vec3& n_b,
                         const LambdaMode& mode) {
  const double lambda = interp_lambda(tau_a, tau_b, n_a, n_b, mode);
  return {tau_a.x() + lambda * (tau_b.x() - tau_a.x()),
          tau_a.y() + lambda * (tau_b.y() - tau_a.y()), 1.0};
}

/// Closed-form coefficients of z_a = omega_eps * eps + omega * z_b. The gamma
/// fields are left at zero; see gamma_factor().
inline PairCoefficients pair_coefficients(const Vec3& n_a, const Vec3& n_b, const Vec3& tau_a,
                                          const Vec3& tau_b, const Vec3& tau_m) {
  PairCoefficients c;
  c.tau_m = tau_m;
  c.n_dot_tau_a = n_a.dot(tau_a);
  c.n_dot_tau_b = n_b.dot(tau_b);
  c.n_dot_tau_m_a = n_a.dot(tau_m);
  c.n_dot_tau_m_b = n_b.dot(tau_m);
  if (std::abs(c.n_dot_tau_a) < kDegenerateDenominator) {
    throw Error(ErrorCode::DegenerateRay, "n_a . tau_a vanishes (occluding-boundary normal)");
  }
  if (std::abs(c.n_dot_tau_m_b) < kDegenerateDenominator) {
    throw Error(ErrorCode::DegenerateRay, "n_b . tau_m vanishes (occluding-boundary normal)");
  }
  c.omega_eps = n_a.z() / c.n_dot_tau_a;
  c.omega = (c.n_dot_tau_m_a * c.n_dot_tau_b) / (c.n_dot_tau_a * c.n_dot_tau_m_b);
  c.valid = c.n_dot_tau_a < 0.0 && c.n_dot_tau_b < 0.0 && c.omega > 0.0 &&
            std::isfinite(c.omega) && std::isfinite(c.omega_eps);
  return c;
}

/// Brute-force depth of a from the 6x6 local-planarity system in the unknowns
/// (dx_ma, dy_ma, dz_ma, dx_mb, dy_mb, dz_mb), solved densely.
inline double local_plane_oracle(const Vec3& n_a, const Vec3& n_b, const Vec3& tau_a,
                                 const Vec3& tau_b, const Vec3& tau_m, double z_b, double eps) {
  Eigen::Matrix<double, 6, 6> C;
  // clang-format off
  C << 0.0,      0.0,      0.0,        1.0,      0.0,      -tau_m.x(),
       0.0,      0.0,      0.0,        0.0,      1.0,      -tau_m.y(),
      -1.0,      0.0,      tau_a.x(),  1.0,      0.0,      -tau_a.x(),
       0.0,     -1.0,      tau_a.y(),  0.0,      1.0,      -tau_a.y(),
       0.0,      0.0,      0.0,        n_b.x(),  n_b.y(),   n_b.z(),
       n_a.x(),  n_a.y(),  n_a.z(),    0.0,      0.0,       0.0;
  // clang-format on
  Eigen::Matrix<double, 6, 1> d;
  d << (tau_m.x() - tau_b.x()) * z_b, (tau_m.y() - tau_b.y()) * z_b,
      (tau_a.x() - tau_b.x()) * z_b, (tau_a.y() - tau_b.y()) * z_b, 0.0, -n_a.z() * eps;

  Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(C);
  lu.setThreshold(1e-13);
  if (lu.rank() < 6) {
    throw Error(ErrorCode::SingularSystem, "local-planarity system is rank deficient");
  }
  const Eigen::Matrix<double, 6, 1> x = lu.solve(d);
  const double dz_ma = x(2);
  const double dz_mb = x(5);
  return z_b + dz_mb - dz_ma;
}

/// log(omega + omega_eps * alpha * beta). A non-positive argument is a broken
/// invariant and raises NonPositiveLogArgument.
inline double log_rhs(const PairCoefficients& coeffs, double alpha, double beta) {
  const double arg = coeffs.omega + coeffs.omega_eps * alpha * beta;
  if (!(arg > 0.0)) {
    throw Error(ErrorCode::NonPositiveLogArgument,
                "log argument " + std::to_string(arg) + " (omega=" + std::to_string(coeffs.omega) +
                    ", omega_eps=" + std::to_string(coeffs.omega_eps) +
                    ", alpha=" + std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  }
  return std::log(arg);
}

/// ||u_b - u_a|| / ||tau_b - tau_a||: the local focal length along the pair.
inline double pixel_to_ray_scale(Pixel u_a, Pixel u_b, const Vec3& tau_a, const Vec3& tau_b) {
  const double du = std::hypot(static_cast<double>(u_b.u - u_a.u), static_cast<double>(u_b.v - u_a.v));
  const double dtau = std::hypot(tau_b.x() - tau_a.x(), tau_b.y() - tau_a.y());
  if (du == 0.0) throw Error(ErrorCode::InvalidArgument, "gamma needs two distinct pixels");
  if (dtau < kDegenerateDenominator) {
    throw Error(ErrorCode::DegenerateRay, "identical rays for distinct pixels");
  }
  return du / dtau;
}

/// The gamma multiplier selected by `mode` (the factor each mode varies).
inline double gamma_factor(const Vec3& n_a, const Vec3& tau_a, Pixel u_a, Pixel u_b,
                           const Vec3& tau_b, const GammaMode& mode) {
  const double ndt = n_a.dot(tau_a);
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, gamma_mode::Full>) {
          return pixel_to_ray_scale(u_a, u_b, tau_a, tau_b) * ndt;
        } else if constexpr (std::is_same_v<T, gamma_mode::ConstF>) {
          return m.value * ndt;
        } else if constexpr (std::is_same_v<T, gamma_mode::NoF>) {
          return ndt;
        } else {
          return pixel_to_ray_scale(u_a, u_b, tau_a, tau_b);
        }
      },
      mode);
}

struct GammaTerms {
  double cost = 0.0;
  double weight = 0.0;
};

/// Splits gamma into its cost-side and bilateral-weight-side factors.
inline GammaTerms gamma_terms(const Vec3& n_a, const Vec3& tau_a, Pixel u_a, Pixel u_b,
                              const Vec3& tau_b, const GammaMode& mode) {
  const double full = gamma_factor(n_a, tau_a, u_a, u_b, tau_b, gamma_mode::Full{});
  return std::visit(
      [&](const auto& m) -> GammaTerms {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, gamma_mode::Full>) {
          return {full, full};
        } else if constexpr (std::is_same_v<T, gamma_mode::ConstF>) {
          return {n_a.dot(tau_a), gamma_factor(n_a, tau_a, u_a, u_b, tau_b, m)};
        } else {
          return {gamma_factor(n_a, tau_a, u_a, u_b, tau_b, m), full};
        }
      },
      mode);
}

/// Discontinuity activation sigma(q (rho - w_prev)).
inline double beta_activation(double w_prev, const BetaParams& params) {
  return logistic(params.q * (params.rho - w_prev));
}

}  // namespace nint

#endif  // NINT_FORMULATION_HPP
