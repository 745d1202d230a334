#pragma once

#include <array>
#include <utility>
#include <vector>

#include "thetakit/theta.hpp"

namespace thetakit {

struct WaveData {
  RiemannMatrix B;
  CVector U, V, W;
  Characteristic characteristic;
  double C_offset = 0.0;
  int branch_integer = 0;
};

/// Checks sizes and finiteness.
void validate(const WaveData& wd);

/// ln(theta[alpha;beta](z) / theta(z)), principal branch. Throws ThetaZeroCrossing
/// when either theta is numerically zero.
cplx sine_gordon_log_ratio(const CVector& z, const WaveData& wd, const Tolerance& tol = {});

/// phi(x, t) with the principal logarithm.
cplx sine_gordon_eval(double x, double t, const WaveData& wd, const Tolerance& tol = {});

/// phi on xs (fast index) by ts, logarithm unwrapped along a row-major walk.
/// Result(i, j) is at (xs[j], ts[i]).
CMatrix sine_gordon_grid(const std::vector<double>& xs, const std::vector<double>& ts,
                         const WaveData& wd, const Tolerance& tol = {});

struct SampleGrid {
  std::vector<std::pair<double, double>> points;  ///< (x, t)
  static SampleGrid rectangle(double x0, double x1, int nx, double t0, double t1, int nt);
};

/// Default finite-difference step for the residual.
double default_fd_step(const WaveData& wd);

/// Mean of |phi_xx - phi_tt - sin phi| over the grid, central differences with step h
/// (h <= 0 selects default_fd_step).
double sine_gordon_residual(const WaveData& wd, const SampleGrid& grid, double h = 0.0,
                            const Tolerance& tol = {});

struct FitOptions {
  int starts = 8;
  double box = 2.0;          ///< search half-width for the components of U and V
  double min_wave = 0.1;     ///< lower bound on |U|
  double target = 1e-4;
  unsigned seed = 0;
  int threads = 0;           ///< 0: hardware concurrency
};

struct FitResult {
  WaveData data;
  double residual = 0.0;
  bool success = false;
  long evaluations = 0;
};

/// Genus-1 fit of (U, V, W, C) minimizing the residual on the grid.
FitResult fit_wave_vectors(const RiemannMatrix& B, const WaveData& initial, const SampleGrid& grid,
                           long budget, const FitOptions& opts = {});

struct LLData {
  RiemannMatrix B;
  CVector U, V;
  CVector d;
  CVector m_shift, r_shift;
};

void validate(const LLData& ld);

std::array<cplx, 3> landau_lifshitz_eval(double x, double t, const LLData& ld,
                                         const Tolerance& tol = {});

}  // namespace thetakit
