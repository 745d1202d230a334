#include "thetakit/theta.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace thetakit {

RiemannMatrix validate_riemann_matrix(const CMatrix& entries, double symmetry_tol) {
  if (entries.rows() != entries.cols() || entries.rows() < 1)
    throw Error(ErrorCode::InvalidArgument, "Riemann matrix must be square with g >= 1");
  if (entries.rows() > kMaxGenus)
    throw Error(ErrorCode::GenusTooLarge, "genus above " + std::to_string(kMaxGenus));
  if (!entries.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite entries");
  double big = entries.cwiseAbs().maxCoeff();
  double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > symmetry_tol * (1.0 + big)) {
    std::ostringstream os;
    os << "asymmetry " << asym;
    throw Error(ErrorCode::NotSymmetric, os.str());
  }
  RiemannMatrix r;
  r.b_ = 0.5 * (entries + entries.transpose());
  r.y_ = r.b_.imag();
  Eigen::LLT<RMatrix> llt(r.y_);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "Cholesky of Im B failed");
  r.chol_ = llt.matrixL();
  if (r.chol_.diagonal().minCoeff() <= 0.0)
    throw Error(ErrorCode::NotPositiveDefinite, "non-positive Cholesky pivot");
  r.y_inv_ = llt.solve(RMatrix::Identity(r.genus(), r.genus()));
  return r;
}

Characteristic Characteristic::zero(int g) { return {RVector::Zero(g), RVector::Zero(g)}; }

Characteristic Characteristic::uniform(int g, double a, double b) {
  return {RVector::Constant(g, a), RVector::Constant(g, b)};
}

double ThetaEval::relative_size() const { return std::exp(value.log_abs() - log_abs_sum); }

namespace {

using MultiIndex = std::array<int, kMaxGenus>;

struct SumOutput {
  std::vector<cplx> sums;
  std::vector<double> abs_sums;
  double log_scale = 0.0;
};

// Sum over m of P_k(v) exp(pi i v.Bv + 2 pi i z.v), v = m + alpha, for each requested
// multi-index k, with P_k(v) = prod (2 pi i v_j)^k_j. Returned sums are scaled by
// exp(-log_scale), log_scale = pi y.Y^{-1}y.
class LatticeSummer {
 public:
  LatticeSummer(const RiemannMatrix& B, const CVector& z, const RVector& alpha,
                const std::vector<MultiIndex>& orders)
      : g_(B.genus()), orders_(orders) {
    RVector y = z.imag();
    RVector w = B.imag_inverse() * y;
    log_scale_ = kPi * y.dot(w);
    x_ = z.real();
    x_re_ = B.matrix().real();
    t_ = B.cholesky_im().transpose();
    for (int j = 0; j < g_; ++j) {
      alpha_[j] = alpha[j];
      shift_[j] = alpha[j] + w[j];
    }
  }

  SumOutput run(const Tolerance& tol) {
    int max_order = 0;
    for (const auto& k : orders_) {
      int s = 0;
      for (int j = 0; j < g_; ++j) s += k[j];
      max_order = std::max(max_order, s);
    }
    double r = 0.6 * std::sqrt(-std::log(tol.eps) / kPi + 1.0) + 0.5 + 0.25 * max_order;
    const size_t n = orders_.size();
    for (;;) {
      if (2.0 * r > tol.max_radius) {
        std::ostringstream os;
        os << "truncation radius " << 2.0 * r << " exceeds " << tol.max_radius;
        throw Error(ErrorCode::RadiusExceeded, os.str());
      }
      inner_.assign(n, 0.0);
      shell_.assign(n, 0.0);
      inner_abs_.assign(n, 0.0);
      shell_abs_.assign(n, 0.0);
      inner_r2_ = r * r;
      double outer = 2.0 * r;
      enumerate(g_ - 1, outer * outer, 0.0);
      bool done = true;
      for (size_t k = 0; k < n; ++k)
        if (shell_abs_[k] > tol.eps * inner_abs_[k]) done = false;
      if (done) break;
      r *= 2.0;
    }
    SumOutput out;
    out.log_scale = log_scale_;
    for (size_t k = 0; k < n; ++k) {
      out.sums.push_back(inner_[k] + shell_[k]);
      out.abs_sums.push_back(inner_abs_[k] + shell_abs_[k]);
    }
    return out;
  }

 private:
  // Fincke-Pohst style: choose m_i from the last coordinate down, with
  // ||T u||^2 = sum_i (T_ii u_i + sum_{j>i} T_ij u_j)^2, u = m + shift.
  void enumerate(int i, double remaining, double acc) {
    double partial = 0.0;
    for (int j = i + 1; j < g_; ++j) partial += t_(i, j) * (m_[j] + shift_[j]);
    double tii = t_(i, i);
    double s = std::sqrt(std::max(remaining, 0.0));
    double lo = (-s - partial) / tii - shift_[i];
    double hi = (s - partial) / tii - shift_[i];
    for (int mi = static_cast<int>(std::ceil(lo)); mi <= static_cast<int>(std::floor(hi)); ++mi) {
      m_[i] = mi;
      double e = tii * (mi + shift_[i]) + partial;
      double rem = remaining - e * e;
      if (rem < 0.0) continue;
      if (i == 0)
        accumulate(acc + e * e);
      else
        enumerate(i - 1, rem, acc + e * e);
    }
  }

  void accumulate(double norm2) {
    double v[kMaxGenus];
    for (int j = 0; j < g_; ++j) v[j] = m_[j] + alpha_[j];
    double phase = 0.0;
    for (int j = 0; j < g_; ++j) {
      double row = 0.0;
      for (int k = 0; k < g_; ++k) row += x_re_(j, k) * v[k];
      phase += v[j] * (kPi * row + 2.0 * kPi * x_[j]);
    }
    cplx base = std::polar(std::exp(-kPi * norm2), phase);
    bool inner = norm2 <= inner_r2_;
    for (size_t k = 0; k < orders_.size(); ++k) {
      cplx term = base;
      for (int j = 0; j < g_; ++j)
        for (int p = 0; p < orders_[k][j]; ++p) term *= cplx(0.0, 2.0 * kPi * v[j]);
      if (inner) {
        inner_[k] += term;
        inner_abs_[k] += std::abs(term);
      } else {
        shell_[k] += term;
        shell_abs_[k] += std::abs(term);
      }
    }
  }

  int g_;
  const std::vector<MultiIndex>& orders_;
  double log_scale_ = 0.0;
  RVector x_;
  RMatrix x_re_, t_;
  double alpha_[kMaxGenus] = {};
  double shift_[kMaxGenus] = {};
  int m_[kMaxGenus] = {};
  double inner_r2_ = 0.0;
  std::vector<cplx> inner_, shell_;
  std::vector<double> inner_abs_, shell_abs_;
};

void check_dims(const Characteristic& chr, const CVector& z, const RiemannMatrix& B) {
  int g = B.genus();
  if (z.size() != g || chr.alpha.size() != g || chr.beta.size() != g)
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch with genus");
  if (!z.allFinite() || !chr.alpha.allFinite() || !chr.beta.allFinite())
    throw Error(ErrorCode::InvalidArgument, "non-finite argument");
}

// theta[a,b](z) = prefactor * theta[a',b'](z0) with a', b' in [0,1) and z0 near the
// fundamental cell; prefactor = exp(log_factor), and dz0/dz = identity.
struct Reduced {
  RVector alpha, beta;
  CVector z0;
  RVector m;  // lattice multiple removed along B columns
  cplx log_factor;
};

Reduced reduce(const Characteristic& chr, const CVector& z, const RiemannMatrix& B) {
  Reduced r;
  RVector a_int = chr.alpha.array().floor();
  RVector b_int = chr.beta.array().floor();
  r.alpha = chr.alpha - a_int;
  r.beta = chr.beta - b_int;
  cplx lf = 2.0 * kPi * kI * r.alpha.dot(b_int);
  RVector m = (B.imag_inverse() * z.imag()).array().round();
  CVector z1 = z - B.matrix() * m.cast<cplx>();
  RVector n = z1.real().array().round();
  r.z0 = z1 - n.cast<cplx>();
  CVector mc = m.cast<cplx>();
  lf += -kPi * kI * mc.dot(B.matrix() * mc) - 2.0 * kPi * kI * mc.dot(r.z0)
        + 2.0 * kPi * kI * (r.alpha.dot(n) - r.beta.dot(m));
  r.m = m;
  r.log_factor = lf;
  return r;
}

MultiIndex to_multi(const std::vector<int>& k, int g) {
  MultiIndex out{};
  for (int j = 0; j < g; ++j) out[j] = k[j];
  return out;
}

}  // namespace

ThetaEval theta_char_eval(const Characteristic& chr, const CVector& z, const RiemannMatrix& B,
                          const Tolerance& tol) {
  check_dims(chr, z, B);
  Reduced r = reduce(chr, z, B);
  std::vector<MultiIndex> orders{MultiIndex{}};
  LatticeSummer summer(B, r.z0 + r.beta.cast<cplx>(), r.alpha, orders);
  SumOutput s = summer.run(tol);
  ThetaEval out;
  out.value = ScaledComplex(s.sums[0], s.log_scale) * ScaledComplex::exp(r.log_factor);
  out.log_abs_sum = std::log(s.abs_sums[0]) + s.log_scale + r.log_factor.real();
  return out;
}

ScaledComplex theta_char(const Characteristic& chr, const CVector& z, const RiemannMatrix& B,
                         const Tolerance& tol) {
  return theta_char_eval(chr, z, B, tol).value;
}

ScaledComplex theta(const CVector& z, const RiemannMatrix& B, const Tolerance& tol) {
  return theta_char(Characteristic::zero(B.genus()), z, B, tol);
}

ScaledComplex theta_derivative(const std::vector<int>& multi_index, const Characteristic& chr,
                               const CVector& z, const RiemannMatrix& B, const Tolerance& tol) {
  check_dims(chr, z, B);
  int g = B.genus();
  if (static_cast<int>(multi_index.size()) != g)
    throw Error(ErrorCode::InvalidArgument, "multi-index length differs from genus");
  int total = 0;
  for (int k : multi_index) {
    if (k < 0) throw Error(ErrorCode::InvalidArgument, "negative derivative order");
    total += k;
  }
  if (total > 3) throw Error(ErrorCode::OrderTooHigh, "total order above 3");

  // d^K [F theta(z0)] = sum_{J<=K} C(K,J) (-2 pi i m)^{K-J} F d^J theta(z0)
  Reduced r = reduce(chr, z, B);
  std::vector<MultiIndex> subs;
  MultiIndex kk = to_multi(multi_index, g);
  MultiIndex cur{};
  auto rec = [&](auto&& self, int j) -> void {
    if (j == g) {
      subs.push_back(cur);
      return;
    }
    for (int p = 0; p <= kk[j]; ++p) {
      cur[j] = p;
      self(self, j + 1);
    }
    cur[j] = 0;
  };
  rec(rec, 0);
  LatticeSummer summer(B, r.z0 + r.beta.cast<cplx>(), r.alpha, subs);
  SumOutput s = summer.run(tol);
  cplx total_sum = 0.0;
  for (size_t q = 0; q < subs.size(); ++q) {
    cplx coeff = 1.0;
    for (int j = 0; j < g; ++j) {
      int kj = kk[j], jj = subs[q][j];
      double binom = 1.0;
      for (int t = 0; t < jj; ++t) binom = binom * (kj - t) / (t + 1);
      coeff *= binom * std::pow(cplx(0.0, -2.0 * kPi * r.m[j]), kj - jj);
    }
    total_sum += coeff * s.sums[q];
  }
  return ScaledComplex(total_sum, s.log_scale) * ScaledComplex::exp(r.log_factor);
}

ThetaGradient theta_gradient(const Characteristic& chr, const CVector& z, const RiemannMatrix& B,
                             const Tolerance& tol) {
  check_dims(chr, z, B);
  int g = B.genus();
  Reduced r = reduce(chr, z, B);
  std::vector<MultiIndex> orders(g + 1, MultiIndex{});
  for (int j = 0; j < g; ++j) orders[j + 1][j] = 1;
  LatticeSummer summer(B, r.z0 + r.beta.cast<cplx>(), r.alpha, orders);
  SumOutput s = summer.run(tol);
  ScaledComplex f = ScaledComplex::exp(r.log_factor);
  ThetaGradient out;
  out.value = ScaledComplex(s.sums[0], s.log_scale) * f;
  for (int j = 0; j < g; ++j) {
    cplx d = s.sums[j + 1] - cplx(0.0, 2.0 * kPi * r.m[j]) * s.sums[0];
    out.gradient.push_back(ScaledComplex(d, s.log_scale) * f);
  }
  return out;
}

namespace {
bool is_half(double v) { return std::abs(v) < 1e-14 || std::abs(v - 0.5) < 1e-14; }
}  // namespace

Parity half_period_parity(const Characteristic& chr) {
  for (int j = 0; j < chr.genus(); ++j)
    if (!is_half(chr.alpha[j]) || !is_half(chr.beta[j]))
      throw Error(ErrorCode::NotHalfPeriod, "entries must be 0 or 1/2");
  long four_dot = std::lround(4.0 * chr.alpha.dot(chr.beta));
  return four_dot % 2 == 0 ? Parity::Even : Parity::Odd;
}

std::vector<HalfPeriod> enumerate_half_periods(int g) {
  if (g < 1) throw Error(ErrorCode::InvalidArgument, "genus must be positive");
  if (g > 8) throw Error(ErrorCode::GenusTooLarge, "half-period enumeration limited to g <= 8");
  std::vector<HalfPeriod> out;
  const long total = 1L << (2 * g);
  out.reserve(total);
  for (long idx = 0; idx < total; ++idx) {
    Characteristic c = Characteristic::zero(g);
    for (int j = 0; j < g; ++j) {
      c.alpha[j] = ((idx >> j) & 1) ? 0.5 : 0.0;
      c.beta[j] = ((idx >> (g + j)) & 1) ? 0.5 : 0.0;
    }
    out.push_back({c, half_period_parity(c)});
  }
  return out;
}

LatticeReduction reduce_mod_lattice(const CVector& v, const RiemannMatrix& B) {
  LatticeReduction out;
  out.m = (B.imag_inverse() * v.imag()).array().round();
  CVector rest = v - B.matrix() * out.m.cast<cplx>();
  out.n = rest.real().array().round();
  out.residual = rest - out.n.cast<cplx>();
  return out;
}

namespace {

const double kM[4][4] = {{0.5, 0.5, 0.5, 0.5},
                         {0.5, 0.5, -0.5, -0.5},
                         {0.5, -0.5, 0.5, -0.5},
                         {0.5, -0.5, -0.5, 0.5}};

double rel_residual(cplx lhs, cplx rhs) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
}

}  // namespace

double addition_identity_check(AdditionKind kind, const AdditionInputs& in, const RiemannMatrix& B,
                               const Tolerance& tol) {
  int g = B.genus();
  if (kind != AdditionKind::FourTermRiemann) {
    if (g != 1) throw Error(ErrorCode::BadConfiguration, "genus-1 identity needs g = 1");
    CVector z = kind == AdditionKind::JacobiAtZero ? CVector::Zero(1) : in.z;
    if (z.size() != 1) throw Error(ErrorCode::BadConfiguration, "z must be a 1-vector");
    CVector zero = CVector::Zero(1);
    auto th = [&](double a, double b, const CVector& arg) {
      return theta_char(Characteristic::uniform(1, a, b), arg, B, tol).value();
    };
    cplx t00 = th(0, 0, z), t01 = th(0, 0.5, z), t10 = th(0.5, 0, z);
    cplx c00 = th(0, 0, zero), c01 = th(0, 0.5, zero), c10 = th(0.5, 0, zero);
    switch (kind) {
      case AdditionKind::SquaredSum:
        return rel_residual(t00 * t00 * c00 * c00, t01 * t01 * c01 * c01 + t10 * t10 * c10 * c10);
      case AdditionKind::SquaredDiff: {
        cplx t11 = th(0.5, 0.5, z);
        return rel_residual(t11 * t11 * c00 * c00, t01 * t01 * c10 * c10 - t10 * t10 * c01 * c01);
      }
      default:
        return rel_residual(std::pow(c00, 4), std::pow(c01, 4) + std::pow(c10, 4));
    }
  }

  if (g > 2) throw Error(ErrorCode::BadConfiguration, "four-term identity supported for g <= 2");
  if (in.w.size() != 4 || in.right.size() != 4)
    throw Error(ErrorCode::BadConfiguration, "four w vectors and four (k,l) needed");
  std::vector<CVector> z(4, CVector::Zero(g));
  std::vector<Characteristic> left(4, Characteristic::zero(g));
  for (int i = 0; i < 4; ++i) {
    if (in.w[i].size() != g || in.right[i].genus() != g)
      throw Error(ErrorCode::BadConfiguration, "dimension mismatch");
    for (int j = 0; j < 4; ++j) {
      z[i] += kM[j][i] * in.w[j];
      left[i].alpha += kM[j][i] * in.right[j].alpha;
      left[i].beta += kM[j][i] * in.right[j].beta;
    }
  }
  if (!in.four_z.empty() || !in.left.empty()) {
    if (in.four_z.size() != 4 || in.left.size() != 4)
      throw Error(ErrorCode::BadConfiguration, "supplied (z, m, n) must have four entries");
    for (int i = 0; i < 4; ++i) {
      double dz = (in.four_z[i] - z[i]).cwiseAbs().maxCoeff();
      double da = (in.left[i].alpha - left[i].alpha).cwiseAbs().maxCoeff();
      double db = (in.left[i].beta - left[i].beta).cwiseAbs().maxCoeff();
      if (dz > 1e-12 * (1.0 + z[i].cwiseAbs().maxCoeff()) || da > 1e-12 || db > 1e-12)
        throw Error(ErrorCode::BadConfiguration, "vectors not related by M");
    }
  }
  ScaledComplex lhs(1.0);
  for (int i = 0; i < 4; ++i) lhs *= theta_char(left[i], z[i], B, tol);
  ScaledComplex rhs;
  const int combos = 1 << (2 * g);
  for (int idx = 0; idx < combos; ++idx) {
    RVector a1(g), a2(g);
    for (int j = 0; j < g; ++j) {
      a1[j] = ((idx >> j) & 1) ? 0.5 : 0.0;
      a2[j] = ((idx >> (g + j)) & 1) ? 0.5 : 0.0;
    }
    ScaledComplex term = ScaledComplex::exp(-4.0 * kPi * kI * left[0].alpha.dot(a2));
    for (int i = 0; i < 4; ++i) {
      Characteristic c{in.right[i].alpha + a1, in.right[i].beta + a2};
      term *= theta_char(c, in.w[i], B, tol);
    }
    rhs += term;
  }
  rhs *= cplx(1.0 / (1 << g));
  double top = std::max(lhs.log_abs(), rhs.log_abs());
  if (!std::isfinite(top)) return 0.0;
  // Scale-free comparison; equals the plain residual when values are O(1).
  double scale = std::max(top, 0.0);
  cplx l = lhs.mantissa() * std::exp(lhs.log_scale() - scale);
  cplx r = rhs.mantissa() * std::exp(rhs.log_scale() - scale);
  return rel_residual(l, r);
}

}  // namespace thetakit
