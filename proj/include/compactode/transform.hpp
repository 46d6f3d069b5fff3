#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "compactode/expr.hpp"
#include "compactode/limitseq.hpp"
#include "compactode/problem.hpp"

namespace compactode {

enum class Sidedness { TwoSided, Right, Left };

inline Sides sidedness_as_sides(Sidedness s) {
    switch (s) {
        case Sidedness::TwoSided: return Sides::TwoSided;
        case Sidedness::Right: return Sides::FutureOnly;
        case Sidedness::Left: return Sides::PastOnly;
    }
    return Sides::TwoSided;
}

/// Closed s-interval of the extended phase space, with markers for which
/// ends image t = -inf / +inf (compact ends). A non-compact end is an
/// ordinary finite-time boundary.
struct SDomain {
    double lo = -1.0, hi = 1.0;
    bool lo_compact = true, hi_compact = true;
};

/// A compactification pair (g, h): s = g(t) squeezes the time line into the
/// s-interval, t = h(s) maps back, and gamma(s) = g'(h(s)) = 1/h'(s) drives
/// the autonomous s-dynamics. Immutable after construction.
class Transform {
public:
    enum class Kind {
        ExpSym,
        AlgSym,
        ExpRight,
        ExpLeft,
        AlgRight,
        AlgLeft,
        ExpTwoRate,
        AlgTwoRate,
        GammaBased,
        Custom
    };

    // ---- factories ----

    static Transform exponential(double alpha, Sidedness side = Sidedness::TwoSided) {
        if (!(alpha > 0.0)) throw NonPositiveRate("exponential rate must be positive");
        Transform t;
        t.am_ = t.ap_ = alpha;
        switch (side) {
            case Sidedness::TwoSided:
                t.kind_ = Kind::ExpSym;
                t.dom_ = {-1.0, 1.0, true, true};
                break;
            case Sidedness::Right:
                t.kind_ = Kind::ExpRight;
                t.dom_ = {-1.0, 1.0, false, true};
                break;
            case Sidedness::Left:
                t.kind_ = Kind::ExpLeft;
                t.dom_ = {-1.0, 1.0, true, false};
                break;
        }
        return t;
    }

    static Transform exponential_two_rate(double alpha_minus, double alpha_plus) {
        if (!(alpha_minus > 0.0) || !(alpha_plus > 0.0))
            throw NonPositiveRate("exponential rates must be positive");
        Transform t;
        t.kind_ = Kind::ExpTwoRate;
        t.am_ = alpha_minus;
        t.ap_ = alpha_plus;
        t.dom_ = {-1.0, 1.0, true, true};
        return t;
    }

    static Transform algebraic(double alpha, Sidedness side = Sidedness::TwoSided) {
        if (!(alpha > 0.0)) throw NonPositiveRate("algebraic order must be positive");
        Transform t;
        t.am_ = t.ap_ = alpha;
        switch (side) {
            case Sidedness::TwoSided:
                t.kind_ = Kind::AlgSym;
                t.dom_ = {-1.0, 1.0, true, true};
                break;
            case Sidedness::Right:
                t.kind_ = Kind::AlgRight;
                t.dom_ = {alg_one_sided_edge(alpha), 1.0, false, true};
                break;
            case Sidedness::Left:
                t.kind_ = Kind::AlgLeft;
                t.dom_ = {-1.0, -alg_one_sided_edge(alpha), true, false};
                break;
        }
        return t;
    }

    static Transform algebraic_two_rate(double alpha_minus, double alpha_plus) {
        if (!(alpha_minus > 0.0) || !(alpha_plus > 0.0))
            throw NonPositiveRate("algebraic orders must be positive");
        Transform t;
        t.kind_ = Kind::AlgTwoRate;
        t.am_ = alpha_minus;
        t.ap_ = alpha_plus;
        t.dom_ = {-1.0, 1.0, true, true};
        // h'(s) must stay positive: check the quadratic factor on [-1,1]
        double a = 1.0 / alpha_minus, b = 1.0 / alpha_plus;
        if (a + b > 1.0) {
            double sv = -(b - a) / (2.0 * (a + b - 1.0));
            if (sv > -1.0 && sv < 1.0 && t.alg2_quad(sv) <= 1e-9)
                throw NotMonotone("two-rate algebraic orders too asymmetric for a monotone h");
        }
        return t;
    }

    static Transform gamma_based(const ForcingProfile& p, std::size_t component,
                                 Sidedness side = Sidedness::TwoSided) {
        if (component >= p.dim()) throw Error("gamma-based component index out of range");
        Transform t;
        t.kind_ = Kind::GammaBased;
        t.profile_ = p;
        t.component_ = component;
        t.gb_side_ = side;
        auto& prof = *t.profile_;

        if (side == Sidedness::TwoSided || side == Sidedness::Left) {
            auto est = prof.estimate_limits(Side::Past);
            if (!est.found) throw NoLimit("gamma-based transform needs a past limit");
            t.gb_past_ = est.value[component];
        }
        if (side == Sidedness::TwoSided || side == Sidedness::Right) {
            auto est = prof.estimate_limits(Side::Future);
            if (!est.found) throw NoLimit("gamma-based transform needs a future limit");
            t.gb_future_ = est.value[component];
        }
        t.gb_at0_ = prof.component_value(component, 0.0);

        switch (side) {
            case Sidedness::TwoSided:
                t.gb_scale_ = t.gb_future_ - t.gb_past_;
                t.dom_ = {-1.0, 1.0, true, true};
                break;
            case Sidedness::Right:
                t.gb_scale_ = t.gb_future_ - t.gb_at0_;
                t.dom_ = {0.0, 1.0, false, true};
                break;
            case Sidedness::Left:
                t.gb_scale_ = t.gb_at0_ - t.gb_past_;
                t.dom_ = {-1.0, 0.0, true, false};
                break;
        }
        // monotone g: the component's derivative must keep one sign on the
        // sampling grid of the relevant side(s)
        int pos = 0, neg = 0;
        auto scan = [&](double sign) {
            for (int k = 0; k <= 40; ++k) {
                double tt = sign * std::ldexp(1.0, k);
                double r;
                try {
                    r = prof.component_rate(component, tt);
                } catch (const DomainError&) {
                    continue;
                }
                if (r > 0) ++pos;
                if (r < 0) ++neg;
            }
        };
        if (side != Sidedness::Left) scan(1.0);
        if (side != Sidedness::Right) scan(-1.0);
        if (pos > 0 && neg > 0)
            throw NotMonotone("forcing component is not monotone on the sampling grid");
        if (std::abs(t.gb_scale_) < 1e-12)
            throw DegenerateLimits("gamma-based transform has coincident limits");

        t.gb_endpoint_rates_ = t.sample_endpoint_rates();
        return t;
    }

    /// Escape hatch for user-supplied transforms. Either g(t), h(s), or
    /// both; the pair is validated numerically (monotone, vanishing first
    /// derivative at the compact ends).
    static Transform custom(std::optional<Expr> g_expr, std::optional<Expr> h_expr,
                            Sidedness side = Sidedness::TwoSided,
                            std::optional<std::pair<double, double>> s_range = {}) {
        if (!g_expr && !h_expr) throw Error("custom transform needs g(t) or h(s)");
        Transform t;
        t.kind_ = Kind::Custom;
        t.gb_side_ = side;
        if (g_expr) {
            for (const auto& v : g_expr->vars())
                if (v != "t") throw Error("custom g may only depend on t");
        }
        if (h_expr) {
            for (const auto& v : h_expr->vars())
                if (v != "s") throw Error("custom h may only depend on s");
        }
        t.custom_g_ = std::move(g_expr);
        t.custom_h_ = std::move(h_expr);
        switch (side) {
            case Sidedness::TwoSided: t.dom_ = {-1.0, 1.0, true, true}; break;
            case Sidedness::Right: t.dom_ = {0.0, 1.0, false, true}; break;
            case Sidedness::Left: t.dom_ = {-1.0, 0.0, true, false}; break;
        }
        if (s_range) {
            t.dom_.lo = s_range->first;
            t.dom_.hi = s_range->second;
            if (!(t.dom_.lo < t.dom_.hi) || t.dom_.lo < -1.0 || t.dom_.hi > 1.0)
                throw Error("custom transform s-domain must be a subinterval of [-1,1]");
            t.dom_.lo_compact = t.dom_.lo == -1.0 && side != Sidedness::Right;
            t.dom_.hi_compact = t.dom_.hi == 1.0 && side != Sidedness::Left;
        }
        t.validate_custom();
        t.gb_endpoint_rates_ = t.sample_endpoint_rates();
        return t;
    }

    // ---- queries ----

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const SDomain& domain() const { return dom_; }
    [[nodiscard]] double alpha_minus() const { return am_; }
    [[nodiscard]] double alpha_plus() const { return ap_; }
    [[nodiscard]] std::size_t component() const { return component_; }

    [[nodiscard]] bool side_compact(Side s) const {
        return s == Side::Past ? dom_.lo_compact : dom_.hi_compact;
    }

    [[nodiscard]] double end_s(Side s) const { return s == Side::Past ? dom_.lo : dom_.hi; }

    /// Sides on which this transform compactifies (for matching profiles).
    [[nodiscard]] Sides compact_sides() const {
        if (dom_.lo_compact && dom_.hi_compact) return Sides::TwoSided;
        if (dom_.hi_compact) return Sides::FutureOnly;
        return Sides::PastOnly;
    }

    // ---- the transformation pair ----

    /// t = h(s). Throws OutOfDomain at a compact end (no finite image).
    [[nodiscard]] double h(double s) const {
        check_interior(s);
        switch (kind_) {
            case Kind::ExpSym: return std::log((1.0 + s) / (1.0 - s)) / am_;
            case Kind::ExpRight: return -std::log(1.0 - s) / ap_;
            case Kind::ExpLeft: return std::log(1.0 + s) / am_;
            case Kind::ExpTwoRate: return std::log(1.0 + s) / am_ - std::log(1.0 - s) / ap_;
            case Kind::AlgSym: return s * std::pow(1.0 - s * s, -1.0 / ap_);
            case Kind::AlgRight: return s * std::pow(1.0 - s, -1.0 / ap_);
            case Kind::AlgLeft: return s * std::pow(1.0 + s, -1.0 / am_);
            case Kind::AlgTwoRate:
                return s * std::pow(1.0 + s, -1.0 / am_) * std::pow(1.0 - s, -1.0 / ap_);
            case Kind::GammaBased: return invert_g(s);
            case Kind::Custom:
                if (custom_h_) return custom_h_->eval_packed({s});
                return invert_g(s);
        }
        throw Error("unreachable");
    }

    [[nodiscard]] double h_prime(double s) const {
        check_interior(s);
        double gm = gamma_interior(s);
        if (gm <= 0.0) throw OutOfDomain("h'(s) undefined here");
        return 1.0 / gm;
    }

    /// s = g(t): closed-form where available, monotone inversion otherwise.
    [[nodiscard]] double g(double t) const {
        switch (kind_) {
            case Kind::ExpSym: return std::tanh(am_ * t / 2.0);
            case Kind::ExpRight: return 1.0 - std::exp(-ap_ * t);
            case Kind::ExpLeft: return -1.0 + std::exp(am_ * t);
            case Kind::AlgSym:
                if (ap_ == 1.0)
                    return 2.0 * t / (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                break;
            case Kind::AlgRight:
                if (ap_ == 1.0) {
                    if (t < h(dom_.lo) - 1e-12) throw OutOfDomain("t below the chart's domain");
                    return t / (1.0 + t);
                }
                break;
            case Kind::AlgLeft:
                if (am_ == 1.0) {
                    if (t > h(dom_.hi) + 1e-12) throw OutOfDomain("t above the chart's domain");
                    return t / (1.0 - t);
                }
                break;
            case Kind::GammaBased: {
                double gc = profile_->component_value(component_, t);
                if (gb_side_ == Sidedness::TwoSided)
                    return (2.0 * gc - gb_future_ - gb_past_) / gb_scale_;
                return (gc - gb_at0_) / gb_scale_;
            }
            case Kind::Custom:
                if (custom_g_) return custom_g_->eval_packed({t});
                return invert_h(t);
            default: break;
        }
        // families without a closed form: monotone inversion of h
        return invert_h(t);
    }

    /// dg/dt evaluated in t-space. Near the compact ends the boundary
    /// distance is solved for directly, so the value stays accurate long
    /// after s = g(t) has rounded to the endpoint. Returns nullopt when the
    /// value is numerically unavailable (underflow, custom-h wall).
    [[nodiscard]] std::optional<double> g_dot(double t) const {
        switch (kind_) {
            case Kind::ExpSym: {
                double c = sech(am_ * t / 2.0);
                return positive_or_nullopt(0.5 * am_ * c * c);
            }
            case Kind::ExpRight: return positive_or_nullopt(ap_ * std::exp(-ap_ * t));
            case Kind::ExpLeft: return positive_or_nullopt(am_ * std::exp(am_ * t));
            case Kind::GammaBased:
                return positive_or_nullopt(gb_gdot(t));
            case Kind::Custom:
                if (custom_g_) {
                    std::vector<double> tv{t};
                    return positive_or_nullopt(custom_g_->eval_dual(tv, 0).d);
                }
                return custom_h_gdot(t);
            default: break;
        }
        // algebraic / two-rate: s-space in the bulk, boundary-distance
        // solve in the tails
        double s = g(t);
        if (std::abs(s) <= 0.999 || !near_compact(s))
            return positive_or_nullopt(gamma_interior(s));
        Side side = s > 0 ? Side::Future : Side::Past;
        double u = boundary_distance(t, side);
        return positive_or_nullopt(gamma_from_distance(u, side));
    }

    /// gamma(s) = 1/h'(s); exactly zero at the compact ends. Evaluations
    /// beyond the closed domain clamp to the nearer edge (integrator
    /// overshoot guard).
    [[nodiscard]] double gamma(double s) const {
        if (s <= dom_.lo) return dom_.lo_compact ? 0.0 : gamma_interior(dom_.lo);
        if (s >= dom_.hi) return dom_.hi_compact ? 0.0 : gamma_interior(dom_.hi);
        return gamma_interior(s);
    }

    /// dgamma/ds with exact endpoint values per family.
    [[nodiscard]] double gamma_prime(double s) const {
        if (dom_.lo_compact && s <= dom_.lo) return endpoint_rate_or_throw(Side::Past);
        if (dom_.hi_compact && s >= dom_.hi) return endpoint_rate_or_throw(Side::Future);
        double sc = std::min(std::max(s, dom_.lo), dom_.hi);
        return gamma_prime_interior(sc);
    }

    /// Extra contraction/expansion rate gained at a compact end
    /// (gamma'(+-1)); nullopt when a sampled family did not converge.
    [[nodiscard]] std::optional<double> endpoint_rate(Side side) const {
        if (!side_compact(side)) return std::nullopt;
        switch (kind_) {
            case Kind::ExpSym: return side == Side::Future ? -ap_ : am_;
            case Kind::ExpRight: return -ap_;
            case Kind::ExpLeft: return am_;
            case Kind::ExpTwoRate: return side == Side::Future ? -ap_ : am_;
            case Kind::AlgSym:
            case Kind::AlgRight:
            case Kind::AlgLeft:
            case Kind::AlgTwoRate: return 0.0;
            case Kind::GammaBased:
            case Kind::Custom:
                return side == Side::Future ? gb_endpoint_rates_.second
                                            : gb_endpoint_rates_.first;
        }
        return std::nullopt;
    }

    /// Second-derivative ratio g''(t)/g'(t) sampled in t-space; feeds the
    /// smoothness check for sampled families. nullopt = unavailable sample.
    [[nodiscard]] std::optional<double> second_ratio(double t) const {
        switch (kind_) {
            case Kind::ExpSym: return -am_ * std::tanh(am_ * t / 2.0);
            case Kind::ExpRight: return -ap_;
            case Kind::ExpLeft: return am_;
            case Kind::GammaBased: {
                double r1 = profile_->component_rate(component_, t);
                if (r1 == 0.0 || !std::isfinite(r1)) return std::nullopt;
                double r2 = profile_->component_rate2(component_, t);
                return finite_or_nullopt(r2 / r1);
            }
            case Kind::Custom: {
                if (custom_g_) {
                    std::vector<double> tv{t};
                    Dual2 d;
                    try {
                        d = custom_g_->eval_dual2(tv, 0);
                    } catch (const DomainError&) {
                        return std::nullopt;
                    }
                    double g1 = first(d), g2 = second(d);
                    if (g1 == 0.0 || !std::isfinite(g1) || !std::isfinite(g2)) return std::nullopt;
                    return finite_or_nullopt(g2 / g1);
                }
                double s;
                try {
                    s = invert_h(t);
                } catch (const Error&) {
                    return std::nullopt;
                }
                // beyond this wall the inversion pins to the endpoint and
                // the sample would be meaningless
                if (std::min(s - dom_.lo, dom_.hi - s) <= 1e-13) return std::nullopt;
                return finite_or_nullopt(gamma_prime_interior(s));
            }
            default: break;
        }
        double s = g(t);
        if (std::abs(s) <= 0.999 || !near_compact(s))
            return finite_or_nullopt(gamma_prime_interior(s));
        Side side = s > 0 ? Side::Future : Side::Past;
        double u = boundary_distance(t, side);
        return finite_or_nullopt(gamma_prime_from_distance(u, side));
    }

private:
    Kind kind_ = Kind::ExpSym;
    SDomain dom_;
    double am_ = 1.0, ap_ = 1.0; // rates/orders (equal for symmetric kinds)

    // gamma-based data
    std::optional<ForcingProfile> profile_;
    std::size_t component_ = 0;
    Sidedness gb_side_ = Sidedness::TwoSided;
    double gb_past_ = 0.0, gb_future_ = 0.0, gb_at0_ = 0.0, gb_scale_ = 1.0;
    std::pair<std::optional<double>, std::optional<double>> gb_endpoint_rates_;

    // custom data
    std::optional<Expr> custom_g_, custom_h_;

    Transform() = default;

    static std::optional<double> finite_or_nullopt(double v) {
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    }

    /// g' is positive in exact arithmetic; 0 here means underflow, which
    /// carries no information for ratio sampling.
    static std::optional<double> positive_or_nullopt(double v) {
        if (!std::isfinite(v) || v <= 0.0) return std::nullopt;
        return v;
    }

    /// dg/dt for gamma-based charts: +-(1 or 2)/scale times the component
    /// rate; orientation makes it positive, so take magnitudes.
    [[nodiscard]] double gb_gdot(double t) const {
        double mult = gb_side_ == Sidedness::TwoSided ? 2.0 : 1.0;
        return std::abs(mult / gb_scale_) * std::abs(profile_->component_rate(component_, t));
    }

    /// Lower edge of the one-sided algebraic chart: h' changes sign at
    /// s = -alpha/(1-alpha) when alpha < 1, so the domain stops short.
    static double alg_one_sided_edge(double alpha) {
        if (alpha >= 1.0) return -1.0;
        double sc = -alpha / (1.0 - alpha);
        if (sc <= -1.02) return -1.0;
        return std::max(-1.0, 0.98 * sc);
    }

    void check_interior(double s) const {
        if (s < dom_.lo - 1e-12 || s > dom_.hi + 1e-12)
            throw OutOfDomain("s outside the transform domain");
        if ((dom_.lo_compact && s <= dom_.lo) || (dom_.hi_compact && s >= dom_.hi))
            throw OutOfDomain("compact end has no finite time image");
    }

    [[nodiscard]] bool near_compact(double s) const {
        return (s > 0 && dom_.hi_compact) || (s < 0 && dom_.lo_compact);
    }

    [[nodiscard]] double alg2_quad(double s) const {
        double a = 1.0 / am_, b = 1.0 / ap_;
        return 1.0 + (b - a) * s + (a + b - 1.0) * s * s;
    }

    // ---- gamma and gamma' in s-space ----

    [[nodiscard]] double gamma_interior(double s) const {
        switch (kind_) {
            case Kind::ExpSym: return 0.5 * am_ * (1.0 - s) * (1.0 + s);
            case Kind::ExpRight: return ap_ * (1.0 - s);
            case Kind::ExpLeft: return am_ * (1.0 + s);
            case Kind::ExpTwoRate: {
                double d = ap_ * (1.0 - s) + am_ * (1.0 + s);
                return am_ * ap_ * (1.0 - s) * (1.0 + s) / d;
            }
            case Kind::AlgSym: {
                double w = (1.0 - s) * (1.0 + s);
                return ap_ * std::pow(w, 1.0 + 1.0 / ap_) / (ap_ * w + 2.0 * s * s);
            }
            case Kind::AlgRight: {
                double u = 1.0 - s;
                return ap_ * std::pow(u, 1.0 + 1.0 / ap_) / (ap_ + (1.0 - ap_) * s);
            }
            case Kind::AlgLeft: {
                double v = 1.0 + s;
                return am_ * std::pow(v, 1.0 + 1.0 / am_) / (am_ - (1.0 - am_) * s);
            }
            case Kind::AlgTwoRate: {
                double a = 1.0 / am_, b = 1.0 / ap_;
                return std::pow(1.0 + s, 1.0 + a) * std::pow(1.0 - s, 1.0 + b) / alg2_quad(s);
            }
            case Kind::GammaBased: return gb_gdot(invert_g(s));
            case Kind::Custom: {
                if (custom_h_) {
                    std::vector<double> sv{s};
                    double hp = custom_h_->eval_dual(sv, 0).d;
                    if (!(hp > 0.0)) throw DomainError("custom h is not increasing here");
                    return 1.0 / hp;
                }
                double t = invert_h_of_custom_g(s);
                std::vector<double> tv{t};
                return custom_g_->eval_dual(tv, 0).d;
            }
        }
        throw Error("unreachable");
    }

    [[nodiscard]] double gamma_prime_interior(double s) const {
        switch (kind_) {
            case Kind::ExpSym: return -am_ * s;
            case Kind::ExpRight: return -ap_;
            case Kind::ExpLeft: return am_;
            case Kind::ExpTwoRate: {
                double d = ap_ * (1.0 - s) + am_ * (1.0 + s);
                double w = (1.0 - s) * (1.0 + s);
                return am_ * ap_ * (-2.0 * s * d - w * (am_ - ap_)) / (d * d);
            }
            case Kind::AlgSym: {
                double a = ap_;
                double w = (1.0 - s) * (1.0 + s);
                double den = a * w + 2.0 * s * s;
                return -(6.0 * a * s + 2.0 * (2.0 - a) * s * s * s) * std::pow(w, 1.0 / a) /
                       (den * den);
            }
            case Kind::AlgRight: {
                double a = ap_;
                double den = a + (1.0 - a) * s;
                return -std::pow(1.0 - s, 1.0 / a) * (2.0 * a + (1.0 - a) * s) / (den * den);
            }
            case Kind::AlgLeft: {
                double a = am_;
                double den = a - (1.0 - a) * s;
                return std::pow(1.0 + s, 1.0 / a) * (2.0 * a - (1.0 - a) * s) / (den * den);
            }
            case Kind::AlgTwoRate: {
                double a = 1.0 / am_, b = 1.0 / ap_;
                double nf = std::pow(1.0 + s, a) * std::pow(1.0 - s, b);
                double np = nf * ((1.0 + a) * (1.0 - s) - (1.0 + b) * (1.0 + s));
                double n = nf * (1.0 + s) * (1.0 - s);
                double dq = alg2_quad(s);
                double dqp = (b - a) + 2.0 * (a + b - 1.0) * s;
                return (np * dq - n * dqp) / (dq * dq);
            }
            case Kind::GammaBased: {
                double t = invert_g(s);
                double r1 = profile_->component_rate(component_, t);
                if (r1 == 0.0) throw DomainError("gamma-based derivative vanished in the interior");
                return profile_->component_rate2(component_, t) / r1;
            }
            case Kind::Custom: {
                if (custom_h_) {
                    std::vector<double> sv{s};
                    Dual2 d = custom_h_->eval_dual2(sv, 0);
                    double h1 = first(d), h2 = second(d);
                    if (!(h1 > 0.0)) throw DomainError("custom h is not increasing here");
                    return -h2 / (h1 * h1);
                }
                double t = invert_h_of_custom_g(s);
                std::vector<double> tv{t};
                Dual2 d = custom_g_->eval_dual2(tv, 0);
                double g1 = first(d);
                if (g1 == 0.0) throw DomainError("custom g has vanishing derivative here");
                return second(d) / g1;
            }
        }
        throw Error("unreachable");
    }

    [[nodiscard]] double endpoint_rate_or_throw(Side side) const {
        auto r = endpoint_rate(side);
        if (!r)
            throw OutOfDomain(std::string("endpoint rate at the ") + side_name(side) +
                              " end did not converge");
        return *r;
    }

    // ---- boundary-distance forms (u = 1 - s at the future end, v = 1 + s
    // at the past end); keep full precision where s would round to +-1 ----

    [[nodiscard]] double h_from_distance(double u, Side side) const {
        double sg = side == Side::Future ? 1.0 : -1.0;
        switch (kind_) {
            case Kind::ExpSym: return sg * std::log((2.0 - u) / u) / am_;
            case Kind::ExpRight: return -std::log(u) / ap_;
            case Kind::ExpLeft: return std::log(u) / am_;
            case Kind::ExpTwoRate:
                return side == Side::Future
                           ? std::log(2.0 - u) / am_ - std::log(u) / ap_
                           : std::log(u) / am_ - std::log(2.0 - u) / ap_;
            case Kind::AlgSym: {
                double w = u * (2.0 - u);
                return sg * (1.0 - u) * std::pow(w, -1.0 / ap_);
            }
            case Kind::AlgRight: return (1.0 - u) * std::pow(u, -1.0 / ap_);
            case Kind::AlgLeft: return -(1.0 - u) * std::pow(u, -1.0 / am_);
            case Kind::AlgTwoRate: {
                double a = 1.0 / am_, b = 1.0 / ap_;
                if (side == Side::Future)
                    return (1.0 - u) * std::pow(2.0 - u, -a) * std::pow(u, -b);
                return -(1.0 - u) * std::pow(u, -a) * std::pow(2.0 - u, -b);
            }
            default: break;
        }
        throw Error("no distance form for this kind");
    }

    [[nodiscard]] double gamma_from_distance(double u, Side side) const {
        switch (kind_) {
            case Kind::ExpSym: return 0.5 * am_ * u * (2.0 - u);
            case Kind::ExpRight: return ap_ * u;
            case Kind::ExpLeft: return am_ * u;
            case Kind::ExpTwoRate: {
                double d = side == Side::Future ? ap_ * u + am_ * (2.0 - u)
                                                : ap_ * (2.0 - u) + am_ * u;
                return am_ * ap_ * u * (2.0 - u) / d;
            }
            case Kind::AlgSym: {
                double w = u * (2.0 - u), s2 = (1.0 - u) * (1.0 - u);
                return ap_ * std::pow(w, 1.0 + 1.0 / ap_) / (ap_ * w + 2.0 * s2);
            }
            case Kind::AlgRight:
                return ap_ * std::pow(u, 1.0 + 1.0 / ap_) / (1.0 - (1.0 - ap_) * u);
            case Kind::AlgLeft:
                return am_ * std::pow(u, 1.0 + 1.0 / am_) / (1.0 - (1.0 - am_) * u);
            case Kind::AlgTwoRate: {
                double a = 1.0 / am_, b = 1.0 / ap_;
                double s = side == Side::Future ? 1.0 - u : u - 1.0;
                if (side == Side::Future)
                    return std::pow(2.0 - u, 1.0 + a) * std::pow(u, 1.0 + b) / alg2_quad(s);
                return std::pow(u, 1.0 + a) * std::pow(2.0 - u, 1.0 + b) / alg2_quad(s);
            }
            default: break;
        }
        throw Error("no distance form for this kind");
    }

    [[nodiscard]] double gamma_prime_from_distance(double u, Side side) const {
        double s = side == Side::Future ? 1.0 - u : u - 1.0;
        switch (kind_) {
            case Kind::ExpSym: return -am_ * s;
            case Kind::ExpRight: return -ap_;
            case Kind::ExpLeft: return am_;
            case Kind::ExpTwoRate: {
                double d = side == Side::Future ? ap_ * u + am_ * (2.0 - u)
                                                : ap_ * (2.0 - u) + am_ * u;
                double w = u * (2.0 - u);
                return am_ * ap_ * (-2.0 * s * d - w * (am_ - ap_)) / (d * d);
            }
            case Kind::AlgSym: {
                double a = ap_;
                double w = u * (2.0 - u);
                double den = a * w + 2.0 * s * s;
                return -(6.0 * a * s + 2.0 * (2.0 - a) * s * s * s) * std::pow(w, 1.0 / a) /
                       (den * den);
            }
            case Kind::AlgRight: {
                double a = ap_;
                double den = 1.0 - (1.0 - a) * u;
                return -std::pow(u, 1.0 / a) * (2.0 * a + (1.0 - a) * s) / (den * den);
            }
            case Kind::AlgLeft: {
                double a = am_;
                double den = 1.0 - (1.0 - a) * u;
                return std::pow(u, 1.0 / a) * (2.0 * a - (1.0 - a) * s) / (den * den);
            }
            case Kind::AlgTwoRate: {
                double a = 1.0 / am_, b = 1.0 / ap_;
                double up = side == Side::Future ? u : 2.0 - u;   // 1 - s
                double um = side == Side::Future ? 2.0 - u : u;   // 1 + s
                double nf = std::pow(um, a) * std::pow(up, b);
                double np = nf * ((1.0 + a) * up - (1.0 + b) * um);
                double n = nf * um * up;
                double dq = alg2_quad(s);
                double dqp = (b - a) + 2.0 * (a + b - 1.0) * s;
                return (np * dq - n * dqp) / (dq * dq);
            }
            default: break;
        }
        throw Error("no distance form for this kind");
    }

    /// First guess for the boundary distance at time t (asymptotics of the
    /// family), in log space.
    [[nodiscard]] double log_distance_guess(double t, Side side) const {
        double at = std::abs(t);
        switch (kind_) {
            case Kind::ExpSym: return std::log(2.0) - am_ * at;
            case Kind::ExpRight: return -ap_ * at;
            case Kind::ExpLeft: return -am_ * at;
            case Kind::ExpTwoRate:
                return side == Side::Future ? (ap_ / am_) * std::log(2.0) - ap_ * at
                                            : (am_ / ap_) * std::log(2.0) - am_ * at;
            case Kind::AlgSym: return -std::log(2.0) - ap_ * std::log(at);
            case Kind::AlgRight: return -ap_ * std::log(at);
            case Kind::AlgLeft: return -am_ * std::log(at);
            case Kind::AlgTwoRate:
                return side == Side::Future
                           ? -ap_ * (std::log(at) + std::log(2.0) / am_)
                           : -am_ * (std::log(at) + std::log(2.0) / ap_);
            default: break;
        }
        throw Error("no distance form for this kind");
    }

    /// Solve h(1 -+ u) = t for the boundary distance u by safeguarded
    /// Newton in log(u); dh/du = -1/gamma exactly for every family.
    [[nodiscard]] double boundary_distance(double t, Side side) const {
        double ell = log_distance_guess(t, side);
        double target = t;
        for (int it = 0; it < 60; ++it) {
            double u = std::exp(ell);
            if (!(u > 0.0) || u > 1.0) u = std::min(1.0, std::max(u, 1e-308));
            double f = h_from_distance(u, side) - target;
            if (std::abs(f) <= 1e-12 * std::max(1.0, std::abs(target))) return u;
            double gm = gamma_from_distance(u, side);
            // dh/d(log u) = u * dh/du = -+ u / gamma
            double dhdl = side == Side::Future ? -u / gm : u / gm;
            double step = f / dhdl;
            if (!std::isfinite(step)) break;
            if (step > 5.0) step = 5.0;
            if (step < -5.0) step = -5.0;
            ell -= step;
        }
        return std::exp(ell);
    }

    // ---- monotone inversions ----

    /// Invert h over the s-interior by bisection plus Newton polish.
    [[nodiscard]] double invert_h(double t) const {
        double lo = dom_.lo + (dom_.lo_compact ? 4e-16 : 0.0);
        double hi = dom_.hi - (dom_.hi_compact ? 4e-16 : 0.0);
        double flo = h(lo), fhi = h(hi);
        if (t <= flo) {
            if (!dom_.lo_compact && t < flo - 1e-9 * std::max(1.0, std::abs(flo)))
                throw OutOfDomain("t below the chart's domain");
            return dom_.lo_compact && t < flo ? dom_.lo : lo;
        }
        if (t >= fhi) {
            if (!dom_.hi_compact && t > fhi + 1e-9 * std::max(1.0, std::abs(fhi)))
                throw OutOfDomain("t above the chart's domain");
            return dom_.hi_compact && t > fhi ? dom_.hi : hi;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (h(mid) < t ? lo : hi) = mid;
        }
        double s = 0.5 * (lo + hi);
        for (int it = 0; it < 3; ++it) {
            double gm = gamma_interior(s);
            if (!(gm > 0.0)) break;
            double ds = (h(s) - t) * gm;
            double sn = s - ds;
            if (sn <= dom_.lo || sn >= dom_.hi) break;
            s = sn;
        }
        return s;
    }

    /// Invert the closed-form g over t (gamma-based kinds).
    [[nodiscard]] double invert_g(double s) const {
        check_interior(s);
        double lo = -1.0, hi = 1.0;
        if (!dom_.lo_compact) lo = 0.0; // right-sided charts start at t = 0
        if (!dom_.hi_compact) hi = 0.0;
        // expand until the bracket straddles s
        for (int k = 0; k < 80 && g(lo) > s; ++k) lo = lo == 0.0 ? -1.0 : lo * 2.0;
        for (int k = 0; k < 80 && g(hi) < s; ++k) hi = hi == 0.0 ? 1.0 : hi * 2.0;
        if (g(lo) > s || g(hi) < s) throw OutOfDomain("inversion bracket failed");
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (g(mid) < s ? lo : hi) = mid;
            if (hi - lo <= 1e-13 * std::max(1.0, std::abs(mid))) break;
        }
        return 0.5 * (lo + hi);
    }

    /// Inversion for custom transforms given only g(t).
    [[nodiscard]] double invert_h_of_custom_g(double s) const { return invert_g(s); }

    [[nodiscard]] std::optional<double> custom_h_gdot(double t) const {
        double s;
        try {
            s = invert_h(t);
        } catch (const Error&) {
            return std::nullopt;
        }
        if (std::min(s - dom_.lo, dom_.hi - s) <= 1e-13) return std::nullopt;
        std::vector<double> sv{s};
        double hp = custom_h_->eval_dual(sv, 0).d;
        if (!(hp > 0.0)) return std::nullopt;
        return finite_or_nullopt(1.0 / hp);
    }

    /// Numeric Assumption checks for user transforms: strictly increasing,
    /// first derivative vanishing at each compact end.
    void validate_custom() const {
        const int grid = 33;
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 1; i < grid; ++i) {
            double s = dom_.lo + (dom_.hi - dom_.lo) * i / grid;
            try {
                if (custom_h_) {
                    double t = custom_h_->eval_packed({s});
                    if (!(t > prev)) throw NotMonotone("custom h is not strictly increasing");
                    prev = t;
                }
                double gm = gamma_interior(s);
                if (!(gm > 0.0)) throw NotMonotone("custom transform has non-positive gamma");
            } catch (const DomainError&) {
                // h may be undefined on part of the default interval; the
                // user narrows the domain in that case
                continue;
            }
        }
        auto edge_small = [&](double s_edge, double inward) {
            for (double eps : {1e-6, 1e-8}) {
                try {
                    double gm = gamma_interior(s_edge + inward * eps);
                    if (gm < 1e-2) return true;
                } catch (const DomainError&) {
                    return true; // derivative blow-up of h counts as gamma -> 0
                }
            }
            return false;
        };
        if (dom_.hi_compact && !edge_small(dom_.hi, -1.0))
            throw NotMonotone("custom transform: gamma does not vanish at the future end");
        if (dom_.lo_compact && !edge_small(dom_.lo, 1.0))
            throw NotMonotone("custom transform: gamma does not vanish at the past end");
        if (custom_g_ && custom_h_) {
            for (int i = 1; i < 8; ++i) {
                double s = dom_.lo + (dom_.hi - dom_.lo) * i / 8.0;
                try {
                    double t = custom_h_->eval_packed({s});
                    double back = custom_g_->eval_packed({t});
                    if (std::abs(back - s) > 1e-6)
                        throw Error("custom g and h are not inverse to each other");
                } catch (const DomainError&) {
                    continue;
                }
            }
        }
    }

    /// Sample g''/g' toward each compact end and keep the classified limit.
    [[nodiscard]] std::pair<std::optional<double>, std::optional<double>>
    sample_endpoint_rates() const {
        std::pair<std::optional<double>, std::optional<double>> out;
        auto sample = [&](Side side) -> std::optional<double> {
            std::vector<double> r;
            // half-power grid: sampled transforms hit a representation wall
            // near the ends, so the usable window needs enough points for
            // the tail extrapolation
            for (int j = 0; j <= 60; ++j) {
                double t = side_sign(side) * std::exp2(0.5 * j);
                std::optional<double> v;
                try {
                    v = second_ratio(t);
                } catch (const Error&) {
                    v = std::nullopt;
                }
                if (!v) break;
                r.push_back(*v);
            }
            auto res = classify_sequence(r, 1e-6);
            if (res.verdict == SeqVerdict::Finite) return res.value;
            return std::nullopt;
        };
        if (dom_.lo_compact) out.first = sample(Side::Past);
        if (dom_.hi_compact) out.second = sample(Side::Future);
        return out;
    }
};

} // namespace compactode
