#pragma once

#include <array>
#include <functional>
#include <vector>

#include "thetakit/theta.hpp"

namespace thetakit {

using Vec3 = Eigen::Vector3d;

struct RigidState {
  Vec3 p = Vec3::Zero();
  Vec3 l = Vec3::Zero();
};

struct StateRate {
  Vec3 p_dot, l_dot;
};

/// p' = p x dH/dl, l' = p x dH/dp + l x dH/dl.
StateRate kirchhoff_rhs(const RigidState& s, const Vec3& dH_dp, const Vec3& dH_dl);

struct ClebschParams {
  Vec3 a, b;
  double rho = 0.0;
};

/// Validates the Clebsch condition and the agreement of the rho quotients unless
/// enforce is false, in which case rho is taken from the first non-degenerate quotient.
ClebschParams make_clebsch(const Vec3& a, const Vec3& b, bool enforce = true);
/// Largest relative disagreement between the defining quotients of rho.
double clebsch_rho_spread(const ClebschParams& c);

struct SteklovParams {
  double A = 0.0, B = 0.0, C = 0.0;
  Vec3 b, a, c, d;
};

SteklovParams make_steklov(double A, double B, double C, const Vec3& b);

/// Hamiltonian gradient plus the energy and fourth integral used for diagnostics.
struct KirchhoffSystem {
  std::function<void(const RigidState&, Vec3& dH_dp, Vec3& dH_dl)> gradient;
  std::function<double(const RigidState&)> H1, H4;
};

KirchhoffSystem clebsch_system(const ClebschParams& c);
KirchhoffSystem steklov_system(const SteklovParams& s);

/// H1..H4 at a state; H2 = |p|^2, H3 = p.l.
std::array<double, 4> integrals(const KirchhoffSystem& sys, const RigidState& s);

enum class Integrator { RK4, RKF45 };

struct Trajectory {
  std::vector<double> t;
  std::vector<RigidState> states;
  std::vector<std::array<double, 4>> H;
  std::array<double, 4> drift{};  ///< max_t |H_i(t) - H_i(0)|
};

/// Fixed step for RK4; initial step for RKF45, which keeps the local error under abs_tol.
Trajectory integrate(const RigidState& initial, const KirchhoffSystem& sys, double t_end, double step,
                     Integrator method = Integrator::RK4, double abs_tol = 1e-9);

struct SpectralData {
  std::array<cplx, 4> z_roots;
  std::array<cplx, 3> nu;
  std::array<cplx, 6> p5_coeffs;  ///< ascending powers
};

/// Residual of A^2 (z^2 - z sum b) + B z - C + 2 D sqrt(prod (z - b_k)) for the better branch.
double spectral_residual(cplx z, double A, double B, double C, double D, const Vec3& b);

SpectralData clebsch_spectrum(double A, double B, double C, double D, const Vec3& b);

cplx eval_p5(const SpectralData& spec, cplx s);

struct SFlowSample {
  double t;
  cplx s1, s2;
  cplx root1, root2;  ///< sqrt(P5(s_i)) on the tracked branch
};

struct SFlowResult {
  std::vector<SFlowSample> samples;
  bool collided = false;
};

/// s1' = (a s1 + b) sqrt(P5(s1)) / (s2 - s1), s2' = (a s2 + b) sqrt(P5(s2)) / (s1 - s2), RK4.
/// Negative step integrates backward. Stops early when |s1 - s2| < 1e-8.
/// Initial branches default to the principal roots; signs +/-1 select the other.
SFlowResult s_flow(const SpectralData& spec, cplx a_const, cplx b_const, cplx s1, cplx s2,
                   double t_end, double step, std::array<int, 2> branch = {1, 1});

}  // namespace thetakit
