#pragma once

// Classical mean-field dynamics of the driven-dissipative lattice.
//
// For cavity j:    d(alpha_j)/dt = -i*D_j*alpha_j - i*Omega_j(t) - (kappa_j/2)*alpha_j
//                  D_j = delta_j + g_{j-1}*2Re(beta_{j-1}) - g_j*2Re(beta_j)
// For resonator j: d(beta_j)/dt  = -i*(w_j*beta_j - g_j|alpha_j|^2 + g_j|alpha_{j+1}|^2) - (gamma_j/2)*beta_j
// Terms referring to a neighbour that does not exist are dropped.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "omtopo/error.hpp"
#include "omtopo/model.hpp"

namespace omtopo {

namespace detail {

/// Flat layout: y = [alpha_0..alpha_{N-1}, beta_0..beta_{R-1}].
class MeanFieldSystem {
public:
    explicit MeanFieldSystem(const LatticeSpec& spec)
        : spec_(spec), nc_(spec.num_cavities()), nr_(spec.num_resonators()) {
        check_dimensions(spec);
    }

    std::size_t size() const noexcept { return nc_ + nr_; }
    std::size_t num_cavities() const noexcept { return nc_; }

    void derivative(const cplx* y, double t, cplx* dy) const {
        constexpr cplx I{0.0, 1.0};
        const cplx* alpha = y;
        const cplx* beta = y + nc_;
        for (std::size_t j = 0; j < nc_; ++j) {
            double shift = spec_.delta_a[j];
            if (j > 0) shift += spec_.g[j - 1] * 2.0 * beta[j - 1].real();
            if (j < nr_) shift -= spec_.g[j] * 2.0 * beta[j].real();
            const cplx omega = drive_amplitude(spec_.drive[j], t);
            dy[j] = -I * shift * alpha[j] - I * omega - 0.5 * spec_.kappa[j] * alpha[j];
        }
        for (std::size_t j = 0; j < nr_; ++j) {
            double force = spec_.g[j] * std::norm(alpha[j]);
            if (j + 1 < nc_) force -= spec_.g[j] * std::norm(alpha[j + 1]);
            dy[nc_ + j] = -I * (spec_.omega_b[j] * beta[j] - force) - 0.5 * spec_.gamma[j] * beta[j];
        }
    }

    /// max over amplitudes of |dX/dt| / (1 + |X|)
    double normalized_residual(const cplx* y, double t) const {
        scratch_.resize(size());
        derivative(y, t, scratch_.data());
        double r = 0.0;
        for (std::size_t i = 0; i < size(); ++i) r = std::max(r, std::abs(scratch_[i]) / (1.0 + std::abs(y[i])));
        return r;
    }

    std::vector<cplx> pack(const MeanFieldState& s) const {
        std::vector<cplx> y(size());
        std::copy(s.alpha.begin(), s.alpha.end(), y.begin());
        std::copy(s.beta.begin(), s.beta.end(), y.begin() + static_cast<std::ptrdiff_t>(nc_));
        return y;
    }

    MeanFieldState unpack(const std::vector<cplx>& y, double t) const {
        MeanFieldState s;
        s.t = t;
        s.alpha.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(nc_));
        s.beta.assign(y.begin() + static_cast<std::ptrdiff_t>(nc_), y.end());
        return s;
    }

private:
    const LatticeSpec& spec_;
    std::size_t nc_, nr_;
    mutable std::vector<cplx> scratch_;
};

/// Classical 4th-order Runge-Kutta with preallocated stages.
class Rk4 {
public:
    explicit Rk4(const MeanFieldSystem& sys)
        : sys_(sys), k1_(sys.size()), k2_(sys.size()), k3_(sys.size()), k4_(sys.size()), tmp_(sys.size()) {}

    void step(std::vector<cplx>& y, double t, double h) {
        const std::size_t n = y.size();
        sys_.derivative(y.data(), t, k1_.data());
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
        sys_.derivative(tmp_.data(), t + 0.5 * h, k2_.data());
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
        sys_.derivative(tmp_.data(), t + 0.5 * h, k3_.data());
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
        sys_.derivative(tmp_.data(), t + h, k4_.data());
        for (std::size_t i = 0; i < n; ++i) y[i] += (h / 6.0) * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

private:
    const MeanFieldSystem& sys_;
    std::vector<cplx> k1_, k2_, k3_, k4_, tmp_;
};

inline constexpr double divergence_threshold = 1e12;

inline void check_divergence(const std::vector<cplx>& y, double t) {
    for (const auto& z : y) {
        if (!(std::abs(z) <= divergence_threshold)) {
            std::ostringstream os;
            os << "mean-field amplitudes diverged at t=" << t << " (|X|=" << std::abs(z)
               << "); reduce dt or check parameters";
            throw Divergence(os.str());
        }
    }
}

inline void require_constant_drives(const LatticeSpec& s, const char* who) {
    for (const auto& d : s.drive)
        if (!is_constant(d))
            throw InvalidArgument(std::string(who) + ": needs constant drives (use periodic_steady_state for cosine drives)");
}

inline void require_positive_kappa(const LatticeSpec& s, const char* who) {
    for (double k : s.kappa)
        if (!(k > 0.0)) throw InvalidArgument(std::string(who) + ": every kappa must be > 0");
}

} // namespace detail

/// Time derivative of the mean-field amplitudes; the returned state's t is `t`.
inline MeanFieldState rhs(const LatticeSpec& spec, const MeanFieldState& state, double t) {
    detail::MeanFieldSystem sys(spec);
    check_state(spec, state);
    if (!state.finite() || !std::isfinite(t)) throw InvalidArgument("rhs: non-finite input");
    const auto y = sys.pack(state);
    std::vector<cplx> dy(y.size());
    sys.derivative(y.data(), t, dy.data());
    return sys.unpack(dy, t);
}

/// max over amplitudes of |dX/dt| / (1 + |X|), evaluated at state.t.
inline double normalized_residual(const LatticeSpec& spec, const MeanFieldState& state) {
    detail::MeanFieldSystem sys(spec);
    check_state(spec, state);
    const auto y = sys.pack(state);
    return sys.normalized_residual(y.data(), state.t);
}

/// Step size resolving the fastest rate: 0.005 for kappa <= 1, never above
/// 0.01/max(|delta|, kappa, omega_b), and 0.001 once any kappa >= 5.
inline double default_dt(const LatticeSpec& spec) {
    double fastest = 1.0;
    for (double d : spec.delta_a) fastest = std::max(fastest, std::abs(d));
    for (double k : spec.kappa) fastest = std::max(fastest, k);
    for (double w : spec.omega_b) fastest = std::max(fastest, w);
    double dt = std::min(0.005, 0.01 / fastest);
    for (double k : spec.kappa)
        if (k >= 5.0) dt = std::min(dt, 0.001);
    return dt;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<MeanFieldState> states;
};

/// Fixed-step RK4 from state0 to t_end. The step is shrunk to (t_end - t0)/n with
/// n = ceil((t_end - t0)/dt) so the last sample lands exactly on t_end. The
/// initial state, every `sample_every`-th step and the final step are recorded.
inline Trajectory integrate(const LatticeSpec& spec, const MeanFieldState& state0, double t_end, double dt,
                            int sample_every = 1) {
    detail::MeanFieldSystem sys(spec);
    check_state(spec, state0);
    if (!(dt > 0.0)) throw InvalidArgument("integrate: dt must be > 0");
    if (!(t_end > state0.t)) throw InvalidArgument("integrate: t_end must exceed the initial time");
    if (sample_every < 1) throw InvalidArgument("integrate: sample_every must be >= 1");
    if (!state0.finite()) throw InvalidArgument("integrate: non-finite initial state");

    const double span = t_end - state0.t;
    const auto steps = static_cast<long long>(std::ceil(span / dt - 1e-9));
    const double h = span / static_cast<double>(steps);

    Trajectory out;
    out.times.push_back(state0.t);
    out.states.push_back(state0);

    auto y = sys.pack(state0);
    detail::Rk4 rk(sys);
    for (long long k = 1; k <= steps; ++k) {
        const double t_prev = state0.t + static_cast<double>(k - 1) * h;
        rk.step(y, t_prev, h);
        const double t = k == steps ? t_end : state0.t + static_cast<double>(k) * h;
        detail::check_divergence(y, t);
        if (k % sample_every == 0 || k == steps) {
            out.times.push_back(t);
            out.states.push_back(sys.unpack(y, t));
        }
    }
    return out;
}

enum class SteadyMethod { OdeRelaxation, FixedPoint };

inline std::string to_string(SteadyMethod m) {
    return m == SteadyMethod::OdeRelaxation ? "OdeRelaxation" : "FixedPoint";
}

struct SteadyStateReport {
    MeanFieldState state;
    SteadyMethod method = SteadyMethod::FixedPoint;
    double residual = 0.0; ///< normalized: max |dX/dt| / (1 + |X|)
    double iterations_or_time = 0.0;
};

struct OdeSteadyOptions {
    double dt = 0.0;        ///< 0 selects default_dt(spec)
    double max_time = 0.0;  ///< 0 selects 50 / min(kappa)
    int check_every = 50;   ///< steps between residual checks
};

/// Relax from the vacuum with RK4 until the normalized residual drops below tol.
inline SteadyStateReport find_steady_state_ode(const LatticeSpec& spec, double tol, OdeSteadyOptions opt = {}) {
    detail::MeanFieldSystem sys(spec);
    detail::require_constant_drives(spec, "find_steady_state_ode");
    detail::require_positive_kappa(spec, "find_steady_state_ode");
    if (!(tol > 0.0)) throw InvalidArgument("find_steady_state_ode: tol must be > 0");

    const double dt = opt.dt > 0.0 ? opt.dt : default_dt(spec);
    const double max_time =
        opt.max_time > 0.0 ? opt.max_time : 50.0 / *std::min_element(spec.kappa.begin(), spec.kappa.end());
    const int check_every = std::max(1, opt.check_every);

    std::vector<cplx> y(sys.size());
    detail::Rk4 rk(sys);
    double best = std::numeric_limits<double>::infinity();
    long long k = 0;
    double t = 0.0;
    while (true) {
        rk.step(y, t, dt);
        ++k;
        t = static_cast<double>(k) * dt;
        if (k % check_every != 0) continue;
        detail::check_divergence(y, t);
        const double r = sys.normalized_residual(y.data(), t);
        best = std::min(best, r);
        if (r < tol) return {sys.unpack(y, t), SteadyMethod::OdeRelaxation, r, t};
        if (t >= max_time) {
            std::ostringstream os;
            os << "ODE relaxation did not reach residual " << tol << " by t=" << t << " (best " << best
               << ", last " << r << ")";
            throw NonConvergence(os.str(), best);
        }
    }
}

/// Under-relaxed self-consistent iteration of the steady-state equations,
/// starting from the vacuum:
///   beta_j  <- g_j(|alpha_j|^2 - |alpha_{j+1}|^2) / (w_j - i*gamma_j/2)
///   alpha_j <- -i*Omega_j / (i*D_j(beta) + kappa_j/2)
/// Stops once the normalized residual of the new iterate is below tol.
inline SteadyStateReport find_steady_state_fixed_point(const LatticeSpec& spec, double tol, double damping = 0.5,
                                                       long long max_iterations = 100000) {
    detail::MeanFieldSystem sys(spec);
    detail::require_constant_drives(spec, "find_steady_state_fixed_point");
    if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("fixed point: damping must be in (0, 1]");
    if (!(tol > 0.0)) throw InvalidArgument("fixed point: tol must be > 0");

    constexpr cplx I{0.0, 1.0};
    const std::size_t nc = spec.num_cavities();
    const std::size_t nr = spec.num_resonators();
    std::vector<cplx> y(nc + nr), next(nc + nr);
    double best = std::numeric_limits<double>::infinity();
    for (long long it = 1; it <= max_iterations; ++it) {
        for (std::size_t j = 0; j < nr; ++j) {
            double force = std::norm(y[j]);
            if (j + 1 < nc) force -= std::norm(y[j + 1]);
            next[nc + j] = spec.g[j] * force / cplx(spec.omega_b[j], -0.5 * spec.gamma[j]);
        }
        for (std::size_t j = 0; j < nc; ++j) {
            double shift = spec.delta_a[j];
            if (j > 0) shift += spec.g[j - 1] * 2.0 * next[nc + j - 1].real();
            if (j < nr) shift -= spec.g[j] * 2.0 * next[nc + j].real();
            next[j] = -I * drive_amplitude(spec.drive[j], 0.0) / (I * shift + 0.5 * spec.kappa[j]);
        }
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = (1.0 - damping) * y[i] + damping * next[i];
        for (const auto& z : y)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw Divergence("fixed point iteration produced non-finite amplitudes; try a smaller damping");
        const double r = sys.normalized_residual(y.data(), 0.0);
        best = std::min(best, r);
        if (r < tol) return {sys.unpack(y, 0.0), SteadyMethod::FixedPoint, r, static_cast<double>(it)};
    }
    std::ostringstream os;
    os << "fixed point iteration did not converge in " << max_iterations << " iterations (best residual " << best
       << "); try a smaller damping";
    throw NonConvergence(os.str(), best);
}

/// Fixed point with automatic fallback to stronger under-relaxation.
inline SteadyStateReport find_steady_state(const LatticeSpec& spec, double tol) {
    const double dampings[] = {0.5, 0.2, 0.05};
    for (std::size_t i = 0; i < std::size(dampings); ++i) {
        try {
            return find_steady_state_fixed_point(spec, tol, dampings[i], i + 1 < std::size(dampings) ? 20000 : 200000);
        } catch (const SolverError&) {
            if (i + 1 == std::size(dampings)) throw;
        }
    }
    throw NonConvergence("unreachable", 0.0);
}

/// |G_a| == |G_b| for two bond indices of the effective chain (0-based).
struct CouplingEquality {
    std::size_t bond_a = 0;
    std::size_t bond_b = 2;
    friend bool operator==(const CouplingEquality&, const CouplingEquality&) = default;
};

struct CalibrationOptions {
    double steady_tol = 1e-13;
    double scan_low = 0.5;   ///< scan range, as multiples of the starting g
    double scan_high = 3.0;
    int scan_points = 26;
    int widenings = 2;       ///< extra scans over [low/f^k, high*f^k], log-spaced
    double widen_factor = 4.0;
    int max_iterations = 80;
};

struct Calibration {
    LatticeSpec spec;
    double g = 0.0;
    int iterations = 0;
    double mismatch = 0.0; ///< ||G_a| - |G_b|| / |G_b| at the returned spec
};

/// Adjust g[adjustable_index] until the steady-state bonds satisfy the target.
///
/// The root is bracketed by scanning g over [scan_low, scan_high] times the
/// starting value (the bracket nearest the start wins), widening the window if
/// no sign change is seen, and then refined with a bracketed secant (Illinois)
/// iteration.
inline Calibration calibrate_g(const LatticeSpec& spec, std::size_t adjustable_index, CouplingEquality target,
                               double tol, CalibrationOptions opt = {}) {
    check_dimensions(spec);
    if (spec.topology.kind() != Topology::Kind::CellChain)
        throw InvalidArgument("calibrate_g: needs a CellChain topology");
    if (adjustable_index >= spec.g.size()) throw InvalidArgument("calibrate_g: adjustable index out of range");
    if (target.bond_a >= spec.topology.num_bonds() || target.bond_b >= spec.topology.num_bonds())
        throw InvalidArgument("calibrate_g: target bond index out of range");

    LatticeSpec work = spec;
    struct Eval {
        double f;
        double gb;
    };
    auto evaluate = [&](double g) -> Eval {
        work.g[adjustable_index] = g;
        const auto ss = find_steady_state(work, opt.steady_tol);
        const auto chain = effective_chain(work, ss.state);
        const double ga = std::abs(chain.couplings[target.bond_a]);
        const double gb = std::abs(chain.couplings[target.bond_b]);
        return {ga - gb, gb};
    };
    auto finish = [&](double g, int iterations, const Eval& e) {
        Calibration c;
        c.spec = spec;
        c.spec.g[adjustable_index] = g;
        c.g = g;
        c.iterations = iterations;
        c.mismatch = std::abs(e.f) / e.gb;
        return c;
    };

    const double g_ref = spec.g[adjustable_index];
    if (!(g_ref > 0.0)) throw InvalidArgument("calibrate_g: starting g must be > 0");
    const Eval at_ref = evaluate(g_ref);
    if (std::abs(at_ref.f) < tol * at_ref.gb) return finish(g_ref, 0, at_ref);

    const int n = std::max(2, opt.scan_points);
    std::vector<double> xs, fs;
    std::size_t pick = 0;
    for (int k = 0; k <= std::max(0, opt.widenings); ++k) {
        xs.clear();
        fs.clear();
        const double lo = opt.scan_low / std::pow(opt.widen_factor, k);
        const double hi = opt.scan_high * std::pow(opt.widen_factor, k);
        const int m = k == 0 ? n : 2 * n * (k + 1);
        for (int i = 0; i < m; ++i) {
            const double u = static_cast<double>(i) / (m - 1);
            const double x = g_ref * (k == 0 ? lo + (hi - lo) * u : lo * std::pow(hi / lo, u));
            xs.push_back(x);
            try {
                fs.push_back(evaluate(x).f);
            } catch (const SolverError&) {
                fs.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        pick = xs.size();
        double pick_distance = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            if (!std::isfinite(fs[i]) || !std::isfinite(fs[i + 1])) continue;
            if ((fs[i] < 0.0) == (fs[i + 1] < 0.0)) continue;
            const double d = std::abs(std::log(0.5 * (xs[i] + xs[i + 1]) / g_ref));
            if (d < pick_distance) {
                pick_distance = d;
                pick = i;
            }
        }
        if (pick < xs.size()) break;
    }
    if (pick == xs.size()) {
        std::ostringstream os;
        os << "calibrate_g: no sign change of |G" << target.bond_a + 1 << "|-|G" << target.bond_b + 1 << "| for g["
           << adjustable_index << "] in [" << xs.front() << ", " << xs.back() << "]";
        throw NonConvergence(os.str(), std::abs(at_ref.f) / at_ref.gb);
    }

    double a = xs[pick], b = xs[pick + 1];
    double fa = fs[pick], fb = fs[pick + 1];
    int side = 0;
    Eval last = at_ref;
    double best_mismatch = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_iterations; ++it) {
        double c = (a * fb - b * fa) / (fb - fa);
        if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
        last = evaluate(c);
        best_mismatch = std::min(best_mismatch, std::abs(last.f) / last.gb);
        if (std::abs(last.f) < tol * last.gb) return finish(c, it, last);
        if ((last.f < 0.0) == (fb < 0.0)) {
            b = c;
            fb = last.f;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = c;
            fa = last.f;
            if (side == 1) fb *= 0.5;
            side = 1;
        }
        if (std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(c))
            throw NonConvergence("calibrate_g: bracket collapsed before reaching the tolerance", best_mismatch);
    }
    throw NonConvergence("calibrate_g: secant refinement did not converge", best_mismatch);
}

} // namespace omtopo
