#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "compactode/expr.hpp"
#include "compactode/linalg.hpp"

namespace compactode {

enum class Side { Past, Future };

inline const char* side_name(Side s) { return s == Side::Past ? "past" : "future"; }
inline double side_sign(Side s) { return s == Side::Past ? -1.0 : 1.0; }

enum class Sides { TwoSided, FutureOnly, PastOnly };

inline bool side_allowed(Sides sides, Side s) {
    switch (sides) {
        case Sides::TwoSided: return true;
        case Sides::FutureOnly: return s == Side::Future;
        case Sides::PastOnly: return s == Side::Past;
    }
    return false;
}

using Params = std::map<std::string, double>;

/// Limit-sampling grid: t = +/- 2^k for k in [k0, kmax], absolute tolerance
/// on the trailing samples. The grid covers the double-precision range.
struct LimitSampling {
    int k0 = 4;
    int kmax = 40;
    double tol = 1e-8;
};

struct LimitEstimate {
    bool found = false;
    std::vector<double> value;
    enum class Failure { None, Divergent, Oscillatory, NonFinite } failure = Failure::None;
};

/// The d-component nonautonomous term: expressions in t (and parameters),
/// optional declared limits, and the sides on which limits are expected.
/// time_scale r makes the profile evaluate as t -> Gamma(r t).
class ForcingProfile {
public:
    ForcingProfile(std::vector<Expr> components, Sides sides = Sides::TwoSided,
                   Params params = {},
                   std::optional<std::vector<double>> declared_past = {},
                   std::optional<std::vector<double>> declared_future = {},
                   double time_scale = 1.0)
        : components_(std::move(components)),
          sides_(sides),
          params_(std::move(params)),
          declared_past_(std::move(declared_past)),
          declared_future_(std::move(declared_future)),
          time_scale_(time_scale) {
        if (components_.empty()) throw Error("forcing profile needs at least one component");
        for (const auto& c : components_) {
            Plan plan;
            plan.base.assign(c.vars().size(), 0.0);
            plan.t_slot = -1;
            for (std::size_t i = 0; i < c.vars().size(); ++i) {
                const std::string& v = c.vars()[i];
                if (v == "t") {
                    plan.t_slot = static_cast<int>(i);
                    continue;
                }
                auto it = params_.find(v);
                if (it == params_.end())
                    throw Error("forcing component uses undeclared variable '" + v + "'");
                plan.base[i] = it->second;
            }
            plans_.push_back(std::move(plan));
        }
        auto check_declared = [&](const std::optional<std::vector<double>>& lim, const char* which) {
            if (!lim) return;
            if (lim->size() != components_.size())
                throw Error(std::string("declared ") + which + " limit has wrong dimension");
            for (double v : *lim)
                if (!std::isfinite(v)) throw Error(std::string("declared ") + which + " limit not finite");
        };
        check_declared(declared_past_, "past");
        check_declared(declared_future_, "future");
    }

    [[nodiscard]] std::size_t dim() const { return components_.size(); }
    [[nodiscard]] Sides sides() const { return sides_; }
    [[nodiscard]] const Params& params() const { return params_; }
    [[nodiscard]] double time_scale() const { return time_scale_; }
    [[nodiscard]] const std::vector<Expr>& components() const { return components_; }
    [[nodiscard]] const std::optional<std::vector<double>>& declared(Side s) const {
        return s == Side::Past ? declared_past_ : declared_future_;
    }

    [[nodiscard]] ForcingProfile with_time_scale(double r) const {
        ForcingProfile p = *this;
        p.time_scale_ = r;
        return p;
    }

    [[nodiscard]] double component_value(std::size_t i, double t) const {
        return components_[i].eval_packed(fill(i, t));
    }

    [[nodiscard]] double component_rate(std::size_t i, double t) const {
        const Plan& plan = plans_[i];
        if (plan.t_slot < 0) return 0.0;
        auto vals = fill(i, t);
        return time_scale_ * components_[i].eval_dual(vals, plan.t_slot).d;
    }

    /// Second time derivative (used by Gamma-based transforms).
    [[nodiscard]] double component_rate2(std::size_t i, double t) const {
        const Plan& plan = plans_[i];
        if (plan.t_slot < 0) return 0.0;
        auto vals = fill(i, t);
        return time_scale_ * time_scale_ * second(components_[i].eval_dual2(vals, plan.t_slot));
    }

    [[nodiscard]] std::vector<double> value(double t) const {
        std::vector<double> out(dim());
        for (std::size_t i = 0; i < dim(); ++i) out[i] = component_value(i, t);
        return out;
    }

    [[nodiscard]] std::vector<double> rate(double t) const {
        std::vector<double> out(dim());
        for (std::size_t i = 0; i < dim(); ++i) out[i] = component_rate(i, t);
        return out;
    }

    /// Sample toward the requested infinity and look for a settled value.
    /// A declared limit, when present, is verified and preferred.
    [[nodiscard]] LimitEstimate estimate_limits(Side side,
                                                const LimitSampling& grid = {}) const {
        if (!side_allowed(sides_, side))
            throw Error(std::string("profile has no ") + side_name(side) + " side");
        LimitEstimate est = sample_limit(side, grid);
        const auto& decl = declared(side);
        if (decl) {
            if (!est.found)
                throw Disagreement(std::string("declared ") + side_name(side) +
                                   " limit but samples do not settle");
            for (std::size_t i = 0; i < dim(); ++i) {
                double tol = grid.tol * std::max(1.0, std::abs((*decl)[i]));
                if (std::abs((*decl)[i] - est.value[i]) > tol)
                    throw Disagreement(std::string("declared ") + side_name(side) +
                                       " limit disagrees with sampled estimate in component " +
                                       std::to_string(i + 1));
            }
            est.value = *decl;
        }
        return est;
    }

    /// Limit vector for a side; throws NoLimit when sampling found none.
    [[nodiscard]] std::vector<double> limits(Side side) const {
        LimitEstimate est = estimate_limits(side);
        if (!est.found)
            throw NoLimit(std::string("forcing has no ") + side_name(side) + " limit");
        return est.value;
    }

private:
    struct Plan {
        std::vector<double> base;
        int t_slot = -1;
    };

    std::vector<Expr> components_;
    Sides sides_;
    Params params_;
    std::optional<std::vector<double>> declared_past_, declared_future_;
    double time_scale_;
    std::vector<Plan> plans_;

    [[nodiscard]] std::vector<double> fill(std::size_t i, double t) const {
        std::vector<double> vals = plans_[i].base;
        if (plans_[i].t_slot >= 0)
            vals[static_cast<std::size_t>(plans_[i].t_slot)] = time_scale_ * t;
        return vals;
    }

    [[nodiscard]] LimitEstimate sample_limit(Side side, const LimitSampling& grid) const {
        LimitEstimate est;
        std::vector<std::vector<double>> samples;
        for (int k = grid.k0; k <= grid.kmax; ++k) {
            double t = side_sign(side) * std::ldexp(1.0, k);
            std::vector<double> v(dim());
            try {
                for (std::size_t i = 0; i < dim(); ++i) v[i] = component_value(i, t);
            } catch (const DomainError&) {
                est.failure = LimitEstimate::Failure::NonFinite;
                return est;
            }
            samples.push_back(std::move(v));
            if (samples.size() >= 3) {
                bool settled = true;
                for (std::size_t i = 0; i < dim() && settled; ++i) {
                    const auto& s0 = samples[samples.size() - 3];
                    const auto& s1 = samples[samples.size() - 2];
                    const auto& s2 = samples[samples.size() - 1];
                    settled = std::abs(s0[i] - s1[i]) <= grid.tol &&
                              std::abs(s1[i] - s2[i]) <= grid.tol &&
                              std::abs(s0[i] - s2[i]) <= grid.tol;
                }
                if (settled) {
                    est.found = true;
                    est.value = samples.back();
                    return est;
                }
            }
        }
        // Distinguish the failure mode from the last eight samples: monotone
        // drift reads as divergent, sign-flipping spread as oscillatory.
        est.failure = LimitEstimate::Failure::Divergent;
        if (samples.size() >= 8) {
            bool any_monotone = false;
            for (std::size_t i = 0; i < dim(); ++i) {
                bool inc = true, dec = true;
                for (std::size_t k = samples.size() - 7; k < samples.size(); ++k) {
                    inc = inc && samples[k][i] >= samples[k - 1][i];
                    dec = dec && samples[k][i] <= samples[k - 1][i];
                }
                any_monotone = any_monotone || inc || dec;
            }
            if (!any_monotone) est.failure = LimitEstimate::Failure::Oscillatory;
        }
        return est;
    }
};

/// The n expressions of the vector field over x1..xn, Gamma1..Gammad and
/// named parameters.
class VectorFieldDef {
public:
    VectorFieldDef(std::vector<Expr> components, std::size_t n, std::size_t d,
                   Params params = {})
        : components_(std::move(components)), n_(n), d_(d), params_(std::move(params)) {
        if (components_.size() != n_) throw Error("field component count must equal n");
        for (const auto& c : components_) {
            Plan plan;
            plan.base.assign(c.vars().size(), 0.0);
            plan.x_slot.assign(n_, -1);
            plan.g_slot.assign(d_, -1);
            for (std::size_t i = 0; i < c.vars().size(); ++i) {
                const std::string& v = c.vars()[i];
                int idx = axis_index(v, "x", n_);
                if (idx >= 0) {
                    plan.x_slot[static_cast<std::size_t>(idx)] = static_cast<int>(i);
                    continue;
                }
                idx = axis_index(v, "Gamma", d_);
                if (idx >= 0) {
                    plan.g_slot[static_cast<std::size_t>(idx)] = static_cast<int>(i);
                    continue;
                }
                auto it = params_.find(v);
                if (it == params_.end())
                    throw Error("field component uses undeclared variable '" + v + "'");
                plan.base[i] = it->second;
            }
            plans_.push_back(std::move(plan));
        }
    }

    [[nodiscard]] std::size_t n() const { return n_; }
    [[nodiscard]] std::size_t d() const { return d_; }
    [[nodiscard]] const Params& params() const { return params_; }
    [[nodiscard]] const std::vector<Expr>& components() const { return components_; }

    [[nodiscard]] std::vector<double> value(const std::vector<double>& x,
                                            const std::vector<double>& gamma) const {
        std::vector<double> out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = components_[i].eval_packed(fill(i, x, gamma));
        return out;
    }

    [[nodiscard]] Matrix jac_x(const std::vector<double>& x,
                               const std::vector<double>& gamma) const {
        Matrix j(n_, n_);
        for (std::size_t i = 0; i < n_; ++i) {
            auto vals = fill(i, x, gamma);
            for (std::size_t k = 0; k < n_; ++k) {
                int slot = plans_[i].x_slot[k];
                if (slot >= 0) j(i, k) = components_[i].eval_dual(vals, slot).d;
            }
        }
        return j;
    }

    [[nodiscard]] Matrix jac_gamma(const std::vector<double>& x,
                                   const std::vector<double>& gamma) const {
        Matrix j(n_, d_);
        for (std::size_t i = 0; i < n_; ++i) {
            auto vals = fill(i, x, gamma);
            for (std::size_t k = 0; k < d_; ++k) {
                int slot = plans_[i].g_slot[k];
                if (slot >= 0) j(i, k) = components_[i].eval_dual(vals, slot).d;
            }
        }
        return j;
    }

private:
    struct Plan {
        std::vector<double> base;
        std::vector<int> x_slot, g_slot;
    };

    std::vector<Expr> components_;
    std::size_t n_, d_;
    Params params_;
    std::vector<Plan> plans_;

    static int axis_index(const std::string& name, const std::string& prefix, std::size_t count) {
        if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return -1;
        std::size_t idx = 0;
        for (std::size_t i = prefix.size(); i < name.size(); ++i) {
            char c = name[i];
            if (c < '0' || c > '9') return -1;
            idx = idx * 10 + static_cast<std::size_t>(c - '0');
        }
        if (idx < 1 || idx > count)
            throw Error("variable '" + name + "' is out of range for dimension " +
                        std::to_string(count));
        return static_cast<int>(idx - 1);
    }

    [[nodiscard]] std::vector<double> fill(std::size_t i, const std::vector<double>& x,
                                           const std::vector<double>& gamma) const {
        std::vector<double> vals = plans_[i].base;
        for (std::size_t k = 0; k < n_; ++k)
            if (plans_[i].x_slot[k] >= 0) vals[static_cast<std::size_t>(plans_[i].x_slot[k])] = x[k];
        for (std::size_t k = 0; k < d_; ++k)
            if (plans_[i].g_slot[k] >= 0) vals[static_cast<std::size_t>(plans_[i].g_slot[k])] = gamma[k];
        return vals;
    }
};

/// Autonomous field obtained by freezing the forcing at one of its limits.
class LimitSystem {
public:
    LimitSystem(VectorFieldDef field, std::vector<double> frozen_gamma, Side side)
        : field_(std::move(field)), gamma_(std::move(frozen_gamma)), side_(side) {}

    [[nodiscard]] std::vector<double> value(const std::vector<double>& x) const {
        return field_.value(x, gamma_);
    }
    [[nodiscard]] Matrix jacobian(const std::vector<double>& x) const {
        return field_.jac_x(x, gamma_);
    }
    [[nodiscard]] const std::vector<double>& frozen_gamma() const { return gamma_; }
    [[nodiscard]] Side side() const { return side_; }
    [[nodiscard]] const VectorFieldDef& field() const { return field_; }

private:
    VectorFieldDef field_;
    std::vector<double> gamma_;
    Side side_;
};

inline LimitSystem limit_system(const VectorFieldDef& v, const ForcingProfile& p, Side side) {
    return {v, p.limits(side), side};
}

} // namespace compactode
