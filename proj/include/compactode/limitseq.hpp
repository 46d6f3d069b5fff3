#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace compactode {

enum class SeqVerdict { Finite, Diverges, Oscillates };

struct SeqOutcome {
    SeqVerdict verdict = SeqVerdict::Oscillates;
    double value = 0.0; // meaningful for Finite
    bool overflowed = false;
    bool extrapolated = false; // value came from Aitken acceleration
};

/// Decide whether a sampled ratio sequence (taken on a geometric t-grid)
/// has a limit. Plain settling is accepted first. When the successive
/// differences shrink, the tail is accelerated with Aitken's delta-squared
/// rule, which maps geometrically approaching tails (both saturating growth
/// and decay, e.g. t^(-q) on a 2^k grid) to their limit; when both the
/// samples and their differences grow, the sequence reads as divergent.
inline SeqOutcome classify_sequence(const std::vector<double>& r, double tol = 1e-6,
                                    double overflow = 1e12) {
    SeqOutcome out;
    const std::size_t n = r.size();
    for (double v : r) {
        if (!std::isfinite(v) || std::abs(v) > overflow) {
            out.verdict = SeqVerdict::Diverges;
            out.overflowed = true;
            return out;
        }
    }
    if (n == 0) return out;
    if (n < 3) {
        if (n == 1 || std::abs(r[0] - r[n - 1]) <= tol * std::max(1.0, std::abs(r[n - 1]))) {
            out.verdict = SeqVerdict::Finite;
            out.value = r[n - 1];
        }
        return out;
    }

    auto close = [&](double a, double b) {
        return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
    };
    if (close(r[n - 1], r[n - 2]) && close(r[n - 2], r[n - 3]) && close(r[n - 1], r[n - 3])) {
        out.verdict = SeqVerdict::Finite;
        out.value = r[n - 1];
        return out;
    }

    const std::size_t w = std::min<std::size_t>(8, n);
    bool signflip = false;
    bool mag_grow = true, mag_shrink = true;
    for (std::size_t i = n - w + 1; i < n; ++i) {
        signflip = signflip || (r[i] * r[i - 1] < 0);
        mag_grow = mag_grow && std::abs(r[i]) >= std::abs(r[i - 1]);
        mag_shrink = mag_shrink && std::abs(r[i]) <= std::abs(r[i - 1]);
    }
    double d_first = std::abs(r[n - w + 1] - r[n - w]);
    double d_last = std::abs(r[n - 1] - r[n - 2]);
    bool diffs_shrink = d_last <= d_first;

    if (!signflip) {
        if (diffs_shrink) {
            // Aitken acceleration over the tail
            std::vector<double> acc;
            std::size_t start = n > 10 ? n - 10 : 0;
            for (std::size_t i = start; i + 2 < n; ++i) {
                double d1 = r[i + 1] - r[i];
                double d2 = r[i + 2] - r[i + 1];
                double den = d2 - d1;
                if (std::abs(den) < 1e-300) continue;
                acc.push_back(r[i + 2] - d2 * d2 / den);
            }
            if (acc.size() >= 2) {
                double a1 = acc[acc.size() - 2], a2 = acc.back();
                double atol = 1e-3 * std::max(1.0, std::abs(a2));
                bool stable = std::abs(a1 - a2) <= atol;
                if (stable && acc.size() >= 3) {
                    double a0 = acc[acc.size() - 3];
                    stable = std::abs(a1 - a2) <= 1.5 * std::abs(a0 - a1) + atol;
                }
                if (stable) {
                    out.verdict = SeqVerdict::Finite;
                    out.value = a2;
                    out.extrapolated = true;
                    return out;
                }
            }
        }
        if (mag_shrink &&
            std::abs(r[n - 1]) <= 0.1 * std::max(std::abs(r[n - w]), 1e-300)) {
            // steady decay without a stable extrapolant: slowly attained 0
            out.verdict = SeqVerdict::Finite;
            out.value = r[n - 1];
            out.extrapolated = true;
            return out;
        }
        if (mag_grow && !diffs_shrink &&
            std::abs(r[n - 1]) >= 1.5 * std::max(std::abs(r[n - w]), 1e-300)) {
            out.verdict = SeqVerdict::Diverges;
            return out;
        }
    }

    out.verdict = SeqVerdict::Oscillates;
    return out;
}

} // namespace compactode
