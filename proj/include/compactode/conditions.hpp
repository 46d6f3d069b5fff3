#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "compactode/limitseq.hpp"
#include "compactode/problem.hpp"
#include "compactode/transform.hpp"

namespace compactode {

// ---------------------------------------------------------------------------
// Reference envelopes: the nested-logarithm family bounding the slowest
// admissible decay of the forcing rate.
// ---------------------------------------------------------------------------

/// Domain threshold T_m: the (m-2)-fold iterated exponential of e.
inline double envelope_threshold(int m) {
    double v = std::exp(1.0);
    for (int i = 2; i > m; --i) v = std::log(v);
    for (int i = 2; i < m; ++i) v = std::exp(v);
    return v;
}

struct ReferenceEnvelope {
    int m = 0;
    double threshold = 0.0;

    explicit ReferenceEnvelope(int m_) : m(m_), threshold(envelope_threshold(m_)) {
        if (m_ < 0) throw Error("envelope index must be non-negative");
    }
};

namespace detail {

/// m-fold composed natural logarithm of |t| (identity for m = 0).
inline double iterated_ln(int m, double at) {
    double v = at;
    for (int i = 0; i < m; ++i) v = std::log(v);
    return v;
}

inline void check_envelope_domain(int m, double t) {
    if (!(std::abs(t) > envelope_threshold(m)))
        throw OutOfDomain("envelope undefined at |t| <= its threshold");
}

} // namespace detail

/// A(t, m) = -1 / ln^m |t|.
inline double envelope_value(int m, double t) {
    detail::check_envelope_domain(m, t);
    return -1.0 / detail::iterated_ln(m, std::abs(t));
}

/// dA/dt = ( t ln^m|t| prod_{k=1..m} ln^k|t| )^{-1}.
inline double envelope_rate(int m, double t) {
    detail::check_envelope_domain(m, t);
    double at = std::abs(t);
    double p = t * detail::iterated_ln(m, at);
    double lk = at;
    for (int k = 1; k <= m; ++k) {
        lk = std::log(lk);
        p *= lk;
    }
    return 1.0 / p;
}

/// Second-to-first derivative ratio of the envelope, -P'/P where P = 1/A';
/// tends to 0 at both infinities for every m.
inline double envelope_rate_ratio(int m, double t) {
    detail::check_envelope_domain(m, t);
    double at = std::abs(t);
    // P'(t)/P(t) = 1/t + L_m'/L_m + sum_k L_k'/L_k with L_k the k-fold log
    double sum = 1.0 / at;
    // derivative chain D_k = 1/(t * prod_{i<k} L_i)
    std::vector<double> logs(static_cast<std::size_t>(m) + 1);
    logs[0] = at;
    for (int k = 1; k <= m; ++k) logs[static_cast<std::size_t>(k)] = std::log(logs[static_cast<std::size_t>(k - 1)]);
    auto dk = [&](int k) {
        double denom = at;
        for (int i = 1; i < k; ++i) denom *= logs[static_cast<std::size_t>(i)];
        return 1.0 / denom;
    };
    if (m == 0) {
        sum += 1.0 / at; // L_0 = t, L_0' = 1
    } else {
        sum += dk(m) / logs[static_cast<std::size_t>(m)];
        for (int k = 1; k <= m; ++k) sum += dk(k) / logs[static_cast<std::size_t>(k)];
    }
    double ratio = -sum;
    return t > 0 ? ratio : -ratio;
}

// ---------------------------------------------------------------------------
// Condition checks
// ---------------------------------------------------------------------------

/// Outcome of sampling one of the two transformation-limit checks.
struct LimitReport {
    SeqVerdict verdict = SeqVerdict::Oscillates;
    bool converged = false;
    std::vector<double> value;                      // componentwise limit
    std::vector<std::pair<double, double>> samples; // (t, worst-component ratio)
    bool overflow = false;
    bool analytic = false; // value from the family's closed form
    Side side = Side::Future;

    [[nodiscard]] const char* verdict_name() const {
        switch (verdict) {
            case SeqVerdict::Finite: return "finite";
            case SeqVerdict::Diverges: return "diverges";
            case SeqVerdict::Oscillates: return "oscillates";
        }
        return "?";
    }
};

struct ConditionTolerances {
    double tol = 1e-6;          // settling tolerance on trailing samples
    double overflow = 1e12;     // ratio magnitude that reads as divergence
    int j_max = 80;             // half-power grid: t = 2^(j/2), j in [0, j_max]
};

/// First transformation condition: the forcing rate measured against the
/// chart speed, dGamma/ds = Gamma'(t)/g'(t), must settle toward the chosen
/// end. Componentwise; the report's verdict is the worst component.
inline LimitReport check_condition_one(const ForcingProfile& p, const Transform& tr,
                                       Side side, const ConditionTolerances& tols = {}) {
    if (!side_allowed(p.sides(), side))
        throw Error(std::string("profile has no ") + side_name(side) + " side");
    if (!tr.side_compact(side))
        throw Error(std::string("transform is not compact on the ") + side_name(side) + " side");

    LimitReport rep;
    rep.side = side;
    const std::size_t d = p.dim();
    std::vector<std::vector<double>> comp(d);
    for (int j = 0; j <= tols.j_max; ++j) {
        double t = side_sign(side) * std::exp2(0.5 * j);
        auto gd = tr.g_dot(t);
        if (!gd) break;
        bool bad = false;
        std::vector<double> row(d);
        try {
            for (std::size_t i = 0; i < d; ++i) row[i] = p.component_rate(i, t) / *gd;
        } catch (const DomainError&) {
            bad = true;
        }
        if (bad) break;
        double worst = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            comp[i].push_back(row[i]);
            if (std::abs(row[i]) > std::abs(worst)) worst = row[i];
        }
        rep.samples.emplace_back(t, worst);
        bool overflowed = false;
        for (double v : row)
            if (!std::isfinite(v) || std::abs(v) > tols.overflow) overflowed = true;
        if (overflowed) break;
    }

    rep.value.assign(d, 0.0);
    SeqVerdict worst = SeqVerdict::Finite;
    for (std::size_t i = 0; i < d; ++i) {
        auto res = classify_sequence(comp[i], tols.tol, tols.overflow);
        rep.value[i] = res.verdict == SeqVerdict::Finite
                           ? res.value
                           : (comp[i].empty() ? 0.0 : comp[i].back());
        rep.overflow = rep.overflow || res.overflowed;
        if (res.verdict == SeqVerdict::Diverges) worst = SeqVerdict::Diverges;
        else if (res.verdict == SeqVerdict::Oscillates && worst != SeqVerdict::Diverges)
            worst = SeqVerdict::Oscillates;
    }
    rep.verdict = worst;
    rep.converged = worst == SeqVerdict::Finite;
    return rep;
}

/// Second transformation condition: g''/g' must settle toward the chosen
/// end. Closed-form families answer analytically; sampled families are
/// classified from their t-space ratio.
inline LimitReport check_condition_two(const Transform& tr, Side side,
                                       const ConditionTolerances& tols = {}) {
    if (!tr.side_compact(side))
        throw Error(std::string("transform is not compact on the ") + side_name(side) + " side");
    LimitReport rep;
    rep.side = side;
    switch (tr.kind()) {
        case Transform::Kind::ExpSym:
        case Transform::Kind::ExpRight:
        case Transform::Kind::ExpLeft:
        case Transform::Kind::ExpTwoRate:
        case Transform::Kind::AlgSym:
        case Transform::Kind::AlgRight:
        case Transform::Kind::AlgLeft:
        case Transform::Kind::AlgTwoRate: {
            rep.analytic = true;
            rep.converged = true;
            rep.verdict = SeqVerdict::Finite;
            rep.value = {*tr.endpoint_rate(side)};
            return rep;
        }
        default: break;
    }
    std::vector<double> r;
    for (int j = 0; j <= tols.j_max; ++j) {
        double t = side_sign(side) * std::exp2(0.5 * j);
        std::optional<double> v;
        try {
            v = tr.second_ratio(t);
        } catch (const Error&) {
            v = std::nullopt;
        }
        if (!v) break;
        r.push_back(*v);
        rep.samples.emplace_back(t, *v);
        if (std::abs(*v) > tols.overflow) break;
    }
    auto res = classify_sequence(r, tols.tol, tols.overflow);
    rep.verdict = res.verdict;
    rep.converged = res.verdict == SeqVerdict::Finite;
    rep.overflow = res.overflowed;
    rep.value = {res.verdict == SeqVerdict::Finite ? res.value : (r.empty() ? 0.0 : r.back())};
    return rep;
}

// ---------------------------------------------------------------------------
// Decay classification
// ---------------------------------------------------------------------------

struct DecayClass {
    enum class Kind { Exponential, Algebraic, Envelope, Nondecaying, Pathological };
    Side side = Side::Future;
    Kind kind = Kind::Pathological;
    double rho = 0.0;      // exponential rate
    double m = 0.0;        // algebraic order, or envelope index
    double slope = 0.0;    // fitted slope of the accepted model
    double residual = 0.0; // RMS residual of the accepted model (log units)

    [[nodiscard]] const char* kind_name() const {
        switch (kind) {
            case Kind::Exponential: return "exponential";
            case Kind::Algebraic: return "algebraic";
            case Kind::Envelope: return "envelope";
            case Kind::Nondecaying: return "nondecaying";
            case Kind::Pathological: return "pathological";
        }
        return "?";
    }
};

struct DecayFitOptions {
    int k0 = 4;
    int kmax = 40;
    double fit_tol = 0.05; // RMS residual bound in log units
    int m_max = 4;         // envelope search bound
};

namespace detail {

struct LineFit {
    double slope = 0.0, intercept = 0.0, rms = 1e300;
    std::size_t count = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    f.count = x.size();
    if (x.size() < 2) return f;
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double den = n * sxx - sx * sx;
    if (den == 0) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (f.slope * x[i] + f.intercept);
        ss += r * r;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

} // namespace detail

/// Fit the decay of ||Gamma'|| toward one infinity: exponential and
/// algebraic regressions first, then the envelope ladder, with
/// non-decaying/pathological as fallbacks.
inline DecayClass classify_decay(const ForcingProfile& p, Side side,
                                 const DecayFitOptions& opt = {}) {
    if (!side_allowed(p.sides(), side))
        throw Error(std::string("profile has no ") + side_name(side) + " side");

    std::vector<double> ts, mags; // |t| and ||Gamma'(t)||, valid prefix only
    bool all_zero = true;
    auto collect = [&](int k0) {
        ts.clear();
        mags.clear();
        for (int k = k0; k <= opt.kmax; ++k) {
            double t = side_sign(side) * std::ldexp(1.0, k);
            double norm2 = 0.0;
            try {
                for (std::size_t i = 0; i < p.dim(); ++i) {
                    double r = p.component_rate(i, t);
                    norm2 += r * r;
                }
            } catch (const DomainError&) {
                break;
            }
            double mag = std::sqrt(norm2);
            if (!std::isfinite(mag)) break;
            if (mag > 0.0) all_zero = false;
            if (mag <= 0.0) break;
            ts.push_back(std::abs(t));
            mags.push_back(mag);
        }
    };
    collect(opt.k0);
    // fast decay underflows the default window; retry from t = 1
    if (ts.size() < 4 && opt.k0 > 0) collect(0);

    DecayClass out;
    out.side = side;
    if (all_zero && ts.empty()) {
        // constant forcing: any chart admits it; report a unit-rate
        // exponential class by convention
        out.kind = DecayClass::Kind::Exponential;
        out.rho = 1.0;
        return out;
    }
    if (ts.size() < 4)
        throw InsufficientDecayWindow("fewer than four usable forcing-rate samples");

    std::vector<double> lnm(mags.size()), lnt(ts.size());
    for (std::size_t i = 0; i < mags.size(); ++i) {
        lnm[i] = std::log(mags[i]);
        lnt[i] = std::log(ts[i]);
    }
    auto fe = detail::fit_line(ts, lnm);  // ln||G'|| ~ c - rho t
    auto fa = detail::fit_line(lnt, lnm); // ln||G'|| ~ c - m ln t

    bool exp_ok = fe.rms < opt.fit_tol && fe.slope < 0;
    bool alg_ok = fa.rms < opt.fit_tol && fa.slope < 0;
    if (exp_ok && (!alg_ok || fe.rms <= fa.rms)) {
        out.kind = DecayClass::Kind::Exponential;
        out.rho = -fe.slope;
        out.slope = fe.slope;
        out.residual = fe.rms;
        return out;
    }
    if (alg_ok) {
        out.kind = DecayClass::Kind::Algebraic;
        out.m = -fa.slope;
        out.slope = fa.slope;
        out.residual = fa.rms;
        return out;
    }

    // envelope ladder: smallest m whose rate envelope the samples track
    for (int m = 0; m <= opt.m_max; ++m) {
        double thr = envelope_threshold(m) * (1.0 + 1e-9);
        std::vector<double> ratios;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (!(ts[i] > thr)) continue;
            ratios.push_back(mags[i] / std::abs(envelope_rate(m, side_sign(side) * ts[i])));
        }
        if (ratios.size() < 4) continue;
        auto res = classify_sequence(ratios, opt.fit_tol);
        if (res.verdict == SeqVerdict::Finite && std::isfinite(res.value)) {
            out.kind = DecayClass::Kind::Envelope;
            out.m = m;
            return out;
        }
    }

    // plateau reads as non-decaying; anything else is pathological
    std::size_t n = mags.size();
    bool plateau = std::abs(mags[n - 1] - mags[n - 2]) <= 0.05 * mags[n - 1] &&
                   std::abs(mags[n - 2] - mags[n - 3]) <= 0.05 * mags[n - 1];
    out.kind = plateau ? DecayClass::Kind::Nondecaying : DecayClass::Kind::Pathological;
    return out;
}

// ---------------------------------------------------------------------------
// Transform recommendation
// ---------------------------------------------------------------------------

struct Recommendation {
    enum class Status { Ok, EnvelopeDeclined };
    Status status = Status::Ok;
    std::optional<Transform> transform;
    std::vector<DecayClass> classes;  // per required side
    std::string rationale;
    std::vector<LimitReport> condition_one, condition_two; // verification runs
};

namespace detail {

inline constexpr double kRecommendSafety = 0.9;

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace detail

/// Pick a transform family and rate from the fitted decay classes, then
/// re-verify both transformation conditions on the candidate.
inline Recommendation recommend(const ForcingProfile& p, const DecayFitOptions& opt = {},
                                const ConditionTolerances& tols = {}) {
    Recommendation rec;
    std::vector<Side> sides;
    if (side_allowed(p.sides(), Side::Past)) sides.push_back(Side::Past);
    if (side_allowed(p.sides(), Side::Future)) sides.push_back(Side::Future);

    for (Side s : sides) rec.classes.push_back(classify_decay(p, s, opt));

    for (const auto& c : rec.classes) {
        if (c.kind == DecayClass::Kind::Pathological || c.kind == DecayClass::Kind::Nondecaying)
            throw Unrecommendable(std::string(side_name(c.side)) + "-side forcing rate is " +
                                  c.kind_name());
    }
    for (const auto& c : rec.classes) {
        if (c.kind == DecayClass::Kind::Envelope) {
            rec.status = Recommendation::Status::EnvelopeDeclined;
            rec.rationale = std::string("forcing decays in the reference-envelope class (m = ") +
                            detail::fmt(c.m) +
                            ") on the " + side_name(c.side) +
                            " side; no closed-form chart is constructed for this class";
            return rec;
        }
    }
    for (const auto& c : rec.classes) {
        if (c.kind == DecayClass::Kind::Algebraic && !(c.m > 1.0))
            throw Unrecommendable(std::string("algebraic order m = ") + detail::fmt(c.m) +
                                  " on the " + side_name(c.side) +
                                  " side leaves no admissible chart order (need m > 1)");
    }

    const double safety = detail::kRecommendSafety;
    auto alpha_exp = [&](const DecayClass& c) { return safety * c.rho; };
    auto alpha_alg = [&](const DecayClass& c) { return safety * (c.m - 1.0); };

    Transform tr = Transform::exponential(1.0);
    std::string why;
    if (sides.size() == 1) {
        const auto& c = rec.classes[0];
        Sidedness sd = c.side == Side::Future ? Sidedness::Right : Sidedness::Left;
        if (c.kind == DecayClass::Kind::Exponential) {
            tr = Transform::exponential(alpha_exp(c), sd);
            why = std::string("one-sided exponential chart, rate ") + detail::fmt(alpha_exp(c)) +
                  " from fitted rho = " + detail::fmt(c.rho);
        } else {
            tr = Transform::algebraic(alpha_alg(c), sd);
            why = std::string("one-sided algebraic chart, order ") + detail::fmt(alpha_alg(c)) +
                  " from fitted m = " + detail::fmt(c.m);
        }
    } else {
        const auto& cp = rec.classes[0]; // past
        const auto& cf = rec.classes[1]; // future
        bool both_exp = cp.kind == DecayClass::Kind::Exponential &&
                        cf.kind == DecayClass::Kind::Exponential;
        bool both_alg = cp.kind == DecayClass::Kind::Algebraic &&
                        cf.kind == DecayClass::Kind::Algebraic;
        if (both_exp) {
            if (std::abs(cp.rho - cf.rho) <= 0.05 * std::max(cp.rho, cf.rho)) {
                double a = safety * std::min(cp.rho, cf.rho);
                tr = Transform::exponential(a);
                why = std::string("symmetric exponential chart, rate ") + detail::fmt(a) +
                      " from fitted rho = " + detail::fmt(std::min(cp.rho, cf.rho));
            } else {
                tr = Transform::exponential_two_rate(alpha_exp(cp), alpha_exp(cf));
                why = std::string("two-rate exponential chart, rates ") +
                      detail::fmt(alpha_exp(cp)) + " / " + detail::fmt(alpha_exp(cf));
            }
        } else if (both_alg) {
            if (std::abs(cp.m - cf.m) <= 0.05 * std::max(cp.m, cf.m)) {
                double a = safety * (std::min(cp.m, cf.m) - 1.0);
                tr = Transform::algebraic(a);
                why = std::string("symmetric algebraic chart, order ") + detail::fmt(a);
            } else {
                tr = Transform::algebraic_two_rate(alpha_alg(cp), alpha_alg(cf));
                why = std::string("two-rate algebraic chart, orders ") +
                      detail::fmt(alpha_alg(cp)) + " / " + detail::fmt(alpha_alg(cf));
            }
        } else {
            // mixed decay types: an algebraic chart also admits the
            // exponentially decaying side (its ratio tends to zero for any
            // order), so use a two-rate algebraic chart
            double a_past = cp.kind == DecayClass::Kind::Algebraic ? alpha_alg(cp) : 1.0;
            double a_future = cf.kind == DecayClass::Kind::Algebraic ? alpha_alg(cf) : 1.0;
            tr = Transform::algebraic_two_rate(a_past, a_future);
            why = "mixed decay types: two-rate algebraic chart (exponential side admits any order)";
        }
    }

    // re-verify both conditions on every compact side before accepting
    for (Side s : sides) {
        if (!tr.side_compact(s)) continue;
        auto c1 = check_condition_one(p, tr, s, tols);
        auto c2 = check_condition_two(tr, s, tols);
        rec.condition_one.push_back(c1);
        rec.condition_two.push_back(c2);
        if (!c1.converged || !c2.converged)
            throw Unrecommendable(std::string("candidate chart failed verification on the ") +
                                  side_name(s) + " side (condition " +
                                  (!c1.converged ? "one" : "two") + " " +
                                  (!c1.converged ? c1.verdict_name() : c2.verdict_name()) + ")");
    }
    rec.transform = tr;
    rec.rationale = why;
    return rec;
}

} // namespace compactode
