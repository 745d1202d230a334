#pragma once

#include <complex>

namespace thetakit {

using cplx = std::complex<double>;

/// mantissa * exp(log_scale), with |mantissa| kept in [1/2, 2] unless zero.
class ScaledComplex {
 public:
  ScaledComplex() = default;
  ScaledComplex(cplx mantissa, double log_scale);
  explicit ScaledComplex(cplx value) : ScaledComplex(value, 0.0) {}

  /// exp(w) without forming it.
  static ScaledComplex exp(cplx w);

  double log_scale() const { return log_scale_; }
  cplx mantissa() const { return mantissa_; }
  bool is_zero() const { return mantissa_ == cplx(0.0); }

  /// Plain value; may overflow to inf or underflow to 0.
  cplx value() const;
  double log_abs() const;
  /// Principal log, imaginary part in (-pi, pi].
  cplx log() const;

  ScaledComplex operator-() const { return {-mantissa_, log_scale_}; }
  ScaledComplex& operator*=(const ScaledComplex& o);
  ScaledComplex& operator/=(const ScaledComplex& o);
  ScaledComplex& operator*=(cplx c);
  ScaledComplex& operator+=(const ScaledComplex& o);
  ScaledComplex& operator-=(const ScaledComplex& o) { return *this += -o; }

  friend ScaledComplex operator*(ScaledComplex a, const ScaledComplex& b) { return a *= b; }
  friend ScaledComplex operator/(ScaledComplex a, const ScaledComplex& b) { return a /= b; }
  friend ScaledComplex operator*(ScaledComplex a, cplx c) { return a *= c; }
  friend ScaledComplex operator+(ScaledComplex a, const ScaledComplex& b) { return a += b; }
  friend ScaledComplex operator-(ScaledComplex a, const ScaledComplex& b) { return a -= b; }

 private:
  void normalize();

  cplx mantissa_{0.0};
  double log_scale_ = 0.0;
};

/// a / b as a plain complex (log-scales cancel first).
cplx ratio(const ScaledComplex& a, const ScaledComplex& b);

}  // namespace thetakit
