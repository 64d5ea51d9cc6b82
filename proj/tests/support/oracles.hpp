#pragma once

// Independent plain-double oracle for the canonical single-patch SEIRM
// Euler step. Deliberately implemented without the engine's tensor or
// interpreter machinery so the two routes can disagree.

#include <algorithm>
#include <cmath>

namespace epitwin::testsupport {

struct SeirmState {
    double S, E, I, R, M;
    double sum() const { return S + E + I + R + M; }
};

struct SeirmParams {
    double beta, alpha, gamma, delta, mor;
};

/// One Euler step, single patch, contact matrix [1].
inline SeirmState seirm_hand_step(const SeirmState& s, const SeirmParams& p, double population)
{
    const double lambda = p.beta * (s.I / std::max(population, 1e-8));
    const double s_to_e = lambda * s.S;
    const double e_to_i = p.alpha * s.E;
    const double i_to_r = p.gamma * s.I;
    const double i_to_m = p.mor * s.I;
    const double r_to_s = p.delta * s.R;
    SeirmState n;
    n.S = std::max(0.0, s.S - s_to_e + r_to_s);
    n.E = std::max(0.0, s.E + s_to_e - e_to_i);
    n.I = std::max(0.0, s.I + e_to_i - i_to_r - i_to_m);
    n.R = std::max(0.0, s.R + i_to_r - r_to_s);
    n.M = std::max(0.0, s.M + i_to_m);
    return n;
}

} // namespace epitwin::testsupport
