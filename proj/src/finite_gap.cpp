#include "thetakit/finite_gap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace thetakit {

namespace {

bool finite(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  return true;
}

void require_size(const CVector& v, int g, const char* name) {
  if (v.size() != g) throw Error(ErrorCode::InvalidArgument, std::string(name) + " has wrong length");
  if (!finite(v)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " is not finite");
}

// Genus-1 ratio theta[a;c](z) / theta(z) after reducing z into the fundamental cell.
class RatioG1 {
 public:
  RatioG1(cplx b, double a, double c) : b_(b), a_(a), c_(c) {
    double y = b.imag();
    n_ = static_cast<int>(std::ceil(std::sqrt(40.0 / (kPi * y)))) + 2;
    q2_ = std::exp(2.0 * kPi * kI * b);
  }

  cplx operator()(cplx z) const {
    double m0 = std::round(z.imag() / b_.imag());
    z -= m0 * b_;
    double n0 = std::round(z.real());
    z -= n0;
    cplx num = sum(a_, c_, z), den = sum(0.0, 0.0, z);
    if (den == cplx(0.0) || num == cplx(0.0))
      throw Error(ErrorCode::ThetaZeroCrossing, "theta vanishes on the evaluation point");
    return num / den * std::exp(2.0 * kPi * kI * (a_ * n0 - c_ * m0));
  }

 private:
  // Sum over n in [-N, N] by the quadratic-exponent recurrence; zero when cancelled.
  cplx sum(double a, double c, cplx z) const {
    auto expo = [&](double k) { return kPi * kI * k * k * b_ + 2.0 * kPi * kI * k * (z + c); };
    cplx t0 = std::exp(expo(a));
    cplx total = t0;
    double peak = std::norm(t0);
    // ratio term(n+1)/term(n) = exp(pi i b (2(n+a)+1) + 2 pi i (z+c)), times q2 per step
    cplx up = std::exp(kPi * kI * b_ * (2.0 * a + 1.0) + 2.0 * kPi * kI * (z + c));
    cplx down = std::exp(kPi * kI * b_ * (-2.0 * a + 1.0) - 2.0 * kPi * kI * (z + c));
    cplx tu = t0, td = t0;
    for (int k = 0; k < n_; ++k) {
      tu *= up;
      up *= q2_;
      td *= down;
      down *= q2_;
      total += tu + td;
      peak = std::max({peak, std::norm(tu), std::norm(td)});
    }
    if (std::norm(total) < 1e-24 * peak) return 0.0;
    return total;
  }

  cplx b_;
  double a_, c_;
  int n_;
  cplx q2_;
};

// theta[alpha;beta](z) / theta(z) for any genus.
class Ratio {
 public:
  Ratio(const WaveData& wd, const Tolerance& tol) : wd_(&wd), tol_(tol) {
    if (wd.B.genus() == 1)
      g1_.emplace_back(wd.B.matrix()(0, 0), wd.characteristic.alpha[0], wd.characteristic.beta[0]);
  }

  cplx operator()(const CVector& z) const {
    if (!g1_.empty()) return g1_[0](z[0]);
    Characteristic zero = Characteristic::zero(wd_->B.genus());
    ThetaEval num = theta_char_eval(wd_->characteristic, z, wd_->B, tol_);
    ThetaEval den = theta_char_eval(zero, z, wd_->B, tol_);
    if (den.relative_size() < 1e-12 || num.relative_size() < 1e-12)
      throw Error(ErrorCode::ThetaZeroCrossing, "theta vanishes on the evaluation point");
    return ratio(num.value, den.value);
  }

 private:
  const WaveData* wd_;
  Tolerance tol_;
  std::vector<RatioG1> g1_;
};

CVector argument(const WaveData& wd, double x, double t) {
  return wd.U * x + wd.V * t + wd.W;
}

double residual_with(const Ratio& R, const WaveData& wd, const SampleGrid& grid, double h) {
  if (grid.points.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  double total = 0.0;
  const cplx two_i = 2.0 * kI;
  const double shift = wd.C_offset + 2.0 * kPi * wd.branch_integer;
  for (auto [x, t] : grid.points) {
    CVector z = argument(wd, x, t);
    cplx r0 = R(z);
    CVector du = wd.U * h, dv = wd.V * h;
    cplx lxx = std::log(R(z + du) / r0) + std::log(R(z - du) / r0);
    cplx ltt = std::log(R(z + dv) / r0) + std::log(R(z - dv) / r0);
    cplx phi = two_i * std::log(r0) + shift;
    cplx res = two_i * (lxx - ltt) / (h * h) - std::sin(phi);
    total += std::abs(res);
  }
  double mean = total / static_cast<double>(grid.points.size());
  if (!std::isfinite(mean)) throw Error(ErrorCode::ThetaZeroCrossing, "non-finite residual");
  return mean;
}

}  // namespace

void validate(const WaveData& wd) {
  int g = wd.B.genus();
  if (g < 1) throw Error(ErrorCode::InvalidArgument, "empty period matrix");
  require_size(wd.U, g, "U");
  require_size(wd.V, g, "V");
  require_size(wd.W, g, "W");
  if (wd.characteristic.genus() != g)
    throw Error(ErrorCode::InvalidArgument, "characteristic has wrong genus");
  if (!std::isfinite(wd.C_offset)) throw Error(ErrorCode::InvalidArgument, "C is not finite");
}

cplx sine_gordon_log_ratio(const CVector& z, const WaveData& wd, const Tolerance& tol) {
  return std::log(Ratio(wd, tol)(z));
}

cplx sine_gordon_eval(double x, double t, const WaveData& wd, const Tolerance& tol) {
  validate(wd);
  cplx l = sine_gordon_log_ratio(argument(wd, x, t), wd, tol);
  return 2.0 * kI * l + wd.C_offset + 2.0 * kPi * wd.branch_integer;
}

CMatrix sine_gordon_grid(const std::vector<double>& xs, const std::vector<double>& ts,
                         const WaveData& wd, const Tolerance& tol) {
  validate(wd);
  Ratio R(wd, tol);
  CMatrix out(static_cast<Eigen::Index>(ts.size()), static_cast<Eigen::Index>(xs.size()));
  bool have_prev = false;
  double prev = 0.0, row_start = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    for (size_t j = 0; j < xs.size(); ++j) {
      cplx l = std::log(R(argument(wd, xs[j], ts[i])));
      double anchor = (j == 0) ? row_start : prev;
      if (have_prev) {
        double k = std::round((anchor - l.imag()) / (2.0 * kPi));
        l += 2.0 * kPi * kI * k;
        if (std::abs(l.imag() - anchor) > 0.9 * kPi)
          throw Error(ErrorCode::ThetaZeroCrossing, "ambiguous logarithm branch on the grid");
      }
      have_prev = true;
      prev = l.imag();
      if (j == 0) row_start = prev;
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          2.0 * kI * l + wd.C_offset + 2.0 * kPi * wd.branch_integer;
    }
  }
  return out;
}

SampleGrid SampleGrid::rectangle(double x0, double x1, int nx, double t0, double t1, int nt) {
  if (nx < 1 || nt < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one point");
  SampleGrid g;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nx; ++j) {
      double x = nx == 1 ? x0 : x0 + (x1 - x0) * j / (nx - 1);
      double t = nt == 1 ? t0 : t0 + (t1 - t0) * i / (nt - 1);
      g.points.emplace_back(x, t);
    }
  return g;
}

double default_fd_step(const WaveData& wd) {
  double s = std::max({1.0, wd.U.norm(), wd.V.norm()});
  return 0.25 * std::pow(std::numeric_limits<double>::epsilon(), 0.25) / s;
}

double sine_gordon_residual(const WaveData& wd, const SampleGrid& grid, double h,
                            const Tolerance& tol) {
  validate(wd);
  if (h <= 0.0) h = default_fd_step(wd);
  return residual_with(Ratio(wd, tol), wd, grid, h);
}

namespace {

constexpr int kDim = 7;
using Params = std::array<double, kDim>;

Params to_params(const WaveData& wd) {
  return {wd.U[0].real(), wd.U[0].imag(), wd.V[0].real(), wd.V[0].imag(),
          wd.W[0].real(), wd.W[0].imag(), wd.C_offset};
}

WaveData from_params(const WaveData& base, const Params& p) {
  WaveData wd = base;
  wd.U = CVector::Constant(1, cplx(p[0], p[1]));
  wd.V = CVector::Constant(1, cplx(p[2], p[3]));
  wd.W = CVector::Constant(1, cplx(p[4], p[5]));
  wd.C_offset = p[6];
  return wd;
}

struct Objective {
  const WaveData* base;
  const SampleGrid* grid;
  FitOptions opts;

  double operator()(const Params& p) const {
    WaveData wd = from_params(*base, p);
    double penalty = 0.0;
    double u = std::abs(wd.U[0]);
    if (u < opts.min_wave) penalty += 100.0 * (opts.min_wave - u) + 1.0;
    for (int k = 0; k < 4; ++k) {
      double excess = std::abs(p[k]) - opts.box;
      if (excess > 0.0) penalty += 100.0 * excess + 1.0;
    }
    try {
      return residual_with(Ratio(wd, {}), wd, *grid, default_fd_step(wd)) + penalty;
    } catch (const Error&) {
      return 1e3 + penalty;
    }
  }
};

struct StartResult {
  Params best;
  double value = 0.0;
  long evaluations = 0;
};

StartResult nelder_mead(const Objective& f, Params x0, Params step, long budget, double stop) {
  std::array<Params, kDim + 1> s;
  std::array<double, kDim + 1> v;
  long used = 0;
  StartResult out{x0, f(x0), 1};
  used = 1;
  auto eval = [&](const Params& p) {
    ++used;
    double y = f(p);
    if (y < out.value) {
      out.value = y;
      out.best = p;
    }
    return y;
  };
  while (used + kDim + 1 < budget && out.value > stop) {
    s[0] = out.best;
    v[0] = out.value;
    for (int i = 0; i < kDim; ++i) {
      s[i + 1] = out.best;
      s[i + 1][i] += step[i];
      v[i + 1] = eval(s[i + 1]);
    }
    double start_value = out.value;
    while (used < budget && out.value > stop) {
      std::array<int, kDim + 1> idx;
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
      auto s2 = s;
      auto v2 = v;
      for (int i = 0; i <= kDim; ++i) {
        s[i] = s2[idx[i]];
        v[i] = v2[idx[i]];
      }
      double size = 0.0;
      for (int i = 1; i <= kDim; ++i)
        for (int k = 0; k < kDim; ++k) size = std::max(size, std::abs(s[i][k] - s[0][k]));
      if (size < 1e-12 || v[kDim] - v[0] <= 1e-14 * (1.0 + std::abs(v[0]))) break;
      Params c{};
      for (int i = 0; i < kDim; ++i)
        for (int k = 0; k < kDim; ++k) c[k] += s[i][k] / kDim;
      auto along = [&](double a) {
        Params p;
        for (int k = 0; k < kDim; ++k) p[k] = c[k] + a * (s[kDim][k] - c[k]);
        return p;
      };
      Params xr = along(-1.0);
      double fr = eval(xr);
      if (fr < v[0]) {
        Params xe = along(-2.0);
        double fe = eval(xe);
        if (fe < fr) {
          s[kDim] = xe;
          v[kDim] = fe;
        } else {
          s[kDim] = xr;
          v[kDim] = fr;
        }
      } else if (fr < v[kDim - 1]) {
        s[kDim] = xr;
        v[kDim] = fr;
      } else {
        bool outside = fr < v[kDim];
        Params xc = along(outside ? -0.5 : 0.5);
        double fc = eval(xc);
        if (fc < std::min(fr, v[kDim])) {
          s[kDim] = xc;
          v[kDim] = fc;
        } else {
          for (int i = 1; i <= kDim && used < budget; ++i) {
            for (int k = 0; k < kDim; ++k) s[i][k] = s[0][k] + 0.5 * (s[i][k] - s[0][k]);
            v[i] = eval(s[i]);
          }
        }
      }
    }
    // restart around the best point with a step matched to the progress made
    double shrink = out.value < start_value ? 0.2 : 0.05;
    for (auto& d : step) d *= shrink;
    if (std::abs(step[0]) < 1e-10) break;
  }
  out.evaluations = used;
  return out;
}

int thread_count(int requested, int jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, std::max(1, jobs));
}

template <class Fn>
void parallel_for(int jobs, int threads, Fn fn) {
  threads = thread_count(threads, jobs);
  if (threads == 1) {
    for (int j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (int j = w; j < jobs; j += threads) fn(j);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

FitResult fit_wave_vectors(const RiemannMatrix& B, const WaveData& initial, const SampleGrid& grid,
                           long budget, const FitOptions& opts) {
  if (B.genus() != 1) throw Error(ErrorCode::GenusTooLarge, "the fitter supports genus 1 only");
  WaveData base = initial;
  base.B = B;
  validate(base);
  if (base.characteristic.alpha.cwiseAbs().sum() == 0.0 && base.characteristic.beta.cwiseAbs().sum() == 0.0)
    throw Error(ErrorCode::InvalidArgument, "zero characteristic gives a constant field");

  FitResult result;
  result.data = base;
  if (budget <= 0) {
    result.residual = sine_gordon_residual(base, grid);
    result.success = result.residual <= opts.target;
    return result;
  }
  const int starts = std::max(1, opts.starts);
  if (budget < static_cast<long>(starts) * (kDim + 2))
    throw Error(ErrorCode::BudgetExhausted, "budget too small for the simplex starts");

  // coarse sub-grid for the lattice pre-scan
  SampleGrid coarse;
  size_t stride = std::max<size_t>(1, grid.points.size() / 25);
  for (size_t i = 0; i < grid.points.size(); i += stride) coarse.points.push_back(grid.points[i]);

  Objective fine{&base, &grid, opts};
  Objective rough{&base, &coarse, opts};

  int levels = 0;
  const long reserve = static_cast<long>(starts) * 400;
  if (budget >= 78125 + reserve) levels = 5;
  else if (budget >= 2187 + reserve) levels = 3;

  double y = B.matrix()(0, 0).imag();
  std::vector<std::pair<double, Params>> ranked;
  long used = 0;
  Params spacing;
  if (levels > 0) {
    long total = 1;
    for (int k = 0; k < kDim; ++k) total *= levels;
    auto level = [&](int k, int i) {
      double u = levels == 1 ? 0.0 : -1.0 + 2.0 * i / (levels - 1);
      switch (k) {
        case 4: return 0.5 * (u + 1.0) * (levels - 1) / levels;
        case 5: return 0.4 * y * u;
        case 6: return 0.8 * kPi * u;
        default: return opts.box * u;
      }
    };
    for (int k = 0; k < kDim; ++k) spacing[k] = std::abs(level(k, 1) - level(k, 0));
    std::vector<double> values(static_cast<size_t>(total));
    parallel_for(static_cast<int>(total), opts.threads, [&](int id) {
      Params p;
      int r = id;
      for (int k = 0; k < kDim; ++k) {
        p[k] = level(k, r % levels);
        r /= levels;
      }
      values[static_cast<size_t>(id)] = rough(p);
    });
    used += total;
    std::vector<int> order(static_cast<size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    int keep = std::min<int>(starts, static_cast<int>(total));
    std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                      [&](int a, int b) { return values[a] < values[b]; });
    for (int i = 0; i < keep; ++i) {
      Params p;
      int r = order[static_cast<size_t>(i)];
      for (int k = 0; k < kDim; ++k) {
        p[k] = level(k, r % levels);
        r /= levels;
      }
      ranked.emplace_back(values[static_cast<size_t>(order[static_cast<size_t>(i)])], p);
    }
  } else {
    spacing = {0.5, 0.5, 0.5, 0.5, 0.2, 0.2 * y, 0.5};
  }

  std::vector<Params> seeds;
  seeds.push_back(to_params(base));
  for (auto& [v, p] : ranked)
    if (static_cast<int>(seeds.size()) < starts) seeds.push_back(p);
  std::mt19937 rng(opts.seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  while (static_cast<int>(seeds.size()) < starts) {
    Params p = seeds[0];
    for (int k = 0; k < kDim; ++k) p[k] += 0.5 * spacing[k] * jitter(rng);
    seeds.push_back(p);
  }

  long share = (budget - used - 1) / starts;
  std::vector<StartResult> runs(static_cast<size_t>(starts));
  Params step;
  for (int k = 0; k < kDim; ++k) step[k] = 0.5 * spacing[k];
  parallel_for(starts, opts.threads, [&](int i) {
    runs[static_cast<size_t>(i)] = nelder_mead(fine, seeds[static_cast<size_t>(i)], step, share,
                                               1e-2 * opts.target);
  });
  const StartResult* best = &runs[0];
  for (auto& r : runs) {
    used += r.evaluations;
    if (r.value < best->value) best = &r;
  }

  result.data = from_params(base, best->best);
  result.residual = sine_gordon_residual(result.data, grid);
  result.evaluations = used + 1;
  result.success = result.residual <= opts.target && std::abs(result.data.U[0]) >= opts.min_wave;
  return result;
}

void validate(const LLData& ld) {
  int g = ld.B.genus();
  if (g < 1) throw Error(ErrorCode::InvalidArgument, "empty period matrix");
  require_size(ld.U, g, "U");
  require_size(ld.V, g, "V");
  require_size(ld.d, g, "d");
  require_size(ld.m_shift, g, "m");
  require_size(ld.r_shift, g, "r");
  double scale = std::max(1.0, ld.r_shift.cwiseAbs().maxCoeff());
  for (int k = 0; k < g; ++k)
    if (std::abs(ld.d[k].imag() + 0.5 * ld.r_shift[k].imag()) > 1e-10 * scale)
      throw Error(ErrorCode::InvalidArgument, "Im d must equal -Im r / 2");
}

std::array<cplx, 3> landau_lifshitz_eval(double x, double t, const LLData& ld, const Tolerance& tol) {
  validate(ld);
  CVector w = (ld.U * x + ld.V * t) / (2.0 * kPi) + ld.d;
  auto th = [&](const CVector& z) { return theta(z, ld.B, tol); };
  ScaledComplex t_d = th(w), t_dm = th(w + ld.m_shift), t_dr = th(w + ld.r_shift),
                t_dmr = th(w + ld.m_shift + ld.r_shift);
  ScaledComplex A = t_dm * t_dmr, Bq = t_d * t_dr;
  ScaledComplex P1 = t_d * t_dmr, P2 = t_dr * t_dm;
  ScaledComplex E = P1 - P2;
  double scale = std::max(P1.log_abs(), P2.log_abs());
  if (E.is_zero() || E.log_abs() - scale < std::log(1e-12))
    throw Error(ErrorCode::DenominatorVanishes, "Landau-Lifshitz denominator vanishes");
  return {ratio(A - Bq, E), -kI * ratio(A + Bq, E), ratio(P1 + P2, E)};
}

}  // namespace thetakit
