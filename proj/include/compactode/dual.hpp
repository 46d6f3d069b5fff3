#pragma once

#include <cmath>

namespace compactode {

/// Forward-mode dual number over an arbitrary scalar T. Nesting
/// (Dual<Dual<double>>) yields exact second derivatives with the same seed.
template <typename T>
struct Dual {
    T v{}; // value
    T d{}; // derivative along the seeded direction

    Dual() = default;
    Dual(T value) : v(value) {} // NOLINT: implicit from scalar is intended
    Dual(T value, T deriv) : v(value), d(deriv) {}
};

/// Underlying double of a possibly nested dual.
inline double value_of(double x) { return x; }
template <typename T>
double value_of(const Dual<T>& a) { return value_of(a.v); }

inline bool all_finite(double x) { return std::isfinite(x); }
template <typename T>
bool all_finite(const Dual<T>& a) { return all_finite(a.v) && all_finite(a.d); }

template <typename T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <typename T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <typename T>
Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <typename T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <typename T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    T q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
}

template <typename T>
Dual<T> operator+(const Dual<T>& a, double b) { return {a.v + T(b), a.d}; }
template <typename T>
Dual<T> operator+(double a, const Dual<T>& b) { return {T(a) + b.v, b.d}; }
template <typename T>
Dual<T> operator-(const Dual<T>& a, double b) { return {a.v - T(b), a.d}; }
template <typename T>
Dual<T> operator-(double a, const Dual<T>& b) { return {T(a) - b.v, -b.d}; }
template <typename T>
Dual<T> operator*(const Dual<T>& a, double b) { return {a.v * T(b), a.d * T(b)}; }
template <typename T>
Dual<T> operator*(double a, const Dual<T>& b) { return {T(a) * b.v, T(a) * b.d}; }
template <typename T>
Dual<T> operator/(const Dual<T>& a, double b) { return {a.v / T(b), a.d / T(b)}; }
template <typename T>
Dual<T> operator/(double a, const Dual<T>& b) { return Dual<T>(T(a)) / b; }

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tanh;

/// 1/cosh computed from exponentials of non-positive argument; avoids
/// overflow of cosh for large |x| and keeps accuracy in the tails.
inline double sech(double x) {
    double e = exp(-abs(x));
    return 2.0 * e / (1.0 + e * e);
}

template <typename T>
Dual<T> exp(const Dual<T>& a) {
    T e = exp(a.v);
    return {e, a.d * e};
}
template <typename T>
Dual<T> log(const Dual<T>& a) {
    return {log(a.v), a.d / a.v};
}
template <typename T>
Dual<T> sin(const Dual<T>& a) { return {sin(a.v), a.d * cos(a.v)}; }
template <typename T>
Dual<T> cos(const Dual<T>& a) { return {cos(a.v), -a.d * sin(a.v)}; }
template <typename T>
Dual<T> tanh(const Dual<T>& a) {
    // derivative via sech^2, not 1 - tanh^2: the latter cancels to 0 in the
    // tails where sech^2 is still a perfectly representable tiny number
    T t = tanh(a.v);
    T s = sech(a.v);
    return {t, a.d * s * s};
}
template <typename T>
Dual<T> sech(const Dual<T>& a) {
    T s = sech(a.v);
    return {s, -a.d * s * tanh(a.v)};
}
template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
    T r = sqrt(a.v);
    return {r, a.d / (2.0 * r)};
}
template <typename T>
Dual<T> abs(const Dual<T>& a) {
    // sign convention at 0: derivative 0 (callers sample away from the kink)
    double s = value_of(a.v) > 0.0 ? 1.0 : (value_of(a.v) < 0.0 ? -1.0 : 0.0);
    return {abs(a.v), a.d * s};
}
template <typename T>
Dual<T> pow(const Dual<T>& a, const Dual<T>& b) {
    // general power via exp(b log a); callers must ensure a.v > 0
    return exp(b * log(a));
}

/// Integer power by repeated squaring; valid for any base sign.
template <typename T>
T pow_int(const T& a, long long n) {
    if (n == 0) return T(1.0);
    bool neg = n < 0;
    auto k = static_cast<unsigned long long>(neg ? -n : n);
    T acc(1.0);
    T base = a;
    while (k) {
        if (k & 1ULL) acc = acc * base;
        base = base * base;
        k >>= 1ULL;
    }
    if (neg) return T(1.0) / acc;
    return acc;
}

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual<double>>;

/// Seeded first-order dual: value x, d/dx = 1.
inline Dual1 seed1(double x) { return {x, 1.0}; }
/// Seeded second-order dual: carries f, f', f'' through the evaluation.
inline Dual2 seed2(double x) { return {Dual1(x, 1.0), Dual1(1.0, 0.0)}; }

inline double first(const Dual1& a) { return a.d; }
inline double first(const Dual2& a) { return a.v.d; }
inline double second(const Dual2& a) { return a.d.d; }

} // namespace compactode
