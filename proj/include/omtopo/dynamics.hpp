#pragma once

// Periodic driving: the mean field's periodic steady state, the time-dependent
// effective chain it induces, and coherent single-excitation transport along it.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "omtopo/error.hpp"
#include "omtopo/meanfield.hpp"
#include "omtopo/model.hpp"
#include "omtopo/spectral.hpp"

namespace omtopo {

struct PeriodicSteadyState {
    double period = 0.0;
    Trajectory samples;            ///< exactly one period, [t0, t0 + period]
    double convergence_error = 0.0;
    int periods_integrated = 0;    ///< relaxation periods before the recorded one
};

/// Common drive frequency of the Cosine drives; nullopt when every drive is constant.
inline std::optional<double> drive_frequency(const LatticeSpec& spec) {
    std::optional<double> nu;
    for (const auto& d : spec.drive) {
        if (const auto* c = std::get_if<CosineDrive>(&d)) {
            if (nu && *nu != c->nu) throw InvalidArgument("periodic drives must share a common frequency");
            nu = c->nu;
        }
    }
    return nu;
}

/// Copy of spec with every Cosine drive set to frequency nu.
inline LatticeSpec with_drive_frequency(LatticeSpec spec, double nu) {
    for (auto& d : spec.drive)
        if (auto* c = std::get_if<CosineDrive>(&d)) c->nu = nu;
    return spec;
}

struct PeriodicOptions {
    double dt = 0.0;        ///< 0 selects default_dt(spec); shrunk so a period is a whole number of steps
    int sample_every = 10;  ///< RK4 steps between recorded samples of the final period
};

namespace detail {
/// Largest |X_i(new) - X_i(old)| relative to the largest amplitude of the same kind.
inline double period_mismatch(const std::vector<cplx>& now, const std::vector<cplx>& before, std::size_t nc) {
    double scale_a = 1.0, scale_b = 1.0;
    for (std::size_t i = 0; i < now.size(); ++i) (i < nc ? scale_a : scale_b) = std::max(i < nc ? scale_a : scale_b, std::abs(now[i]));
    double err = 0.0;
    for (std::size_t i = 0; i < now.size(); ++i)
        err = std::max(err, std::abs(now[i] - before[i]) / (i < nc ? scale_a : scale_b));
    return err;
}
} // namespace detail

/// Relax from the vacuum period by period until stroboscopic snapshots agree to
/// tol, then record one more period. Constant drives are accepted as a degenerate
/// case with period 2*pi / min(omega_b).
inline PeriodicSteadyState periodic_steady_state(const LatticeSpec& spec, double tol, int max_periods,
                                                 PeriodicOptions opt = {}) {
    detail::MeanFieldSystem sys(spec);
    detail::require_positive_kappa(spec, "periodic_steady_state");
    if (!(tol > 0.0) || max_periods < 1) throw InvalidArgument("periodic_steady_state: need tol > 0 and max_periods >= 1");

    double period = 0.0;
    if (const auto nu = drive_frequency(spec)) {
        period = 2.0 * std::numbers::pi / *nu;
    } else {
        period = 2.0 * std::numbers::pi / *std::min_element(spec.omega_b.begin(), spec.omega_b.end());
    }
    const double dt = opt.dt > 0.0 ? opt.dt : default_dt(spec);
    const auto steps = static_cast<long long>(std::ceil(period / dt - 1e-9));
    const double h = period / static_cast<double>(steps);
    const int every = std::max(1, opt.sample_every);

    std::vector<cplx> y(sys.size());
    detail::Rk4 rk(sys);
    auto run_period = [&](int index, Trajectory* record) {
        const double t0 = static_cast<double>(index) * period;
        if (record) {
            record->times.push_back(t0);
            record->states.push_back(sys.unpack(y, t0));
        }
        for (long long k = 1; k <= steps; ++k) {
            rk.step(y, t0 + static_cast<double>(k - 1) * h, h);
            if (record && (k % every == 0 || k == steps)) {
                const double t = k == steps ? t0 + period : t0 + static_cast<double>(k) * h;
                record->times.push_back(t);
                record->states.push_back(sys.unpack(y, t));
            }
        }
        detail::check_divergence(y, t0 + period);
    };

    double err = std::numeric_limits<double>::infinity();
    for (int p = 0; p < max_periods; ++p) {
        const auto before = y;
        run_period(p, nullptr);
        err = detail::period_mismatch(y, before, sys.num_cavities());
        if (err < tol) {
            PeriodicSteadyState out;
            out.period = period;
            out.periods_integrated = p + 1;
            const auto start = y;
            run_period(p + 1, &out.samples);
            out.convergence_error = detail::period_mismatch(y, start, sys.num_cavities());
            return out;
        }
    }
    std::ostringstream os;
    os << "periodic steady state not reached in " << max_periods << " periods (last mismatch " << err << ")";
    throw NonConvergence(os.str(), err);
}

/// Effective chain as a function of time.
using CouplingSchedule = std::function<EffectiveChain(double)>;

/// Chain built from the recorded periodic steady state, extended periodically
/// and linearly interpolated between samples. Gauge-fixed unless asked otherwise.
inline CouplingSchedule steady_state_schedule(const LatticeSpec& spec, const PeriodicSteadyState& pss,
                                              bool fix_gauge = true) {
    if (pss.samples.times.size() < 2) throw InvalidArgument("steady_state_schedule: empty periodic steady state");
    auto data = std::make_shared<const std::pair<LatticeSpec, PeriodicSteadyState>>(spec, pss);
    return [data, fix_gauge](double t) {
        const auto& [sp, ps] = *data;
        const auto& times = ps.samples.times;
        const double t0 = times.front();
        double tau = std::fmod(t - t0, ps.period);
        if (tau < 0.0) tau += ps.period;
        const double tt = t0 + tau;
        auto hi = std::upper_bound(times.begin(), times.end(), tt);
        if (hi == times.end()) hi = std::prev(times.end());
        if (hi == times.begin()) hi = std::next(times.begin());
        const auto i1 = static_cast<std::size_t>(hi - times.begin());
        const auto i0 = i1 - 1;
        const double w = (tt - times[i0]) / (times[i1] - times[i0]);
        MeanFieldState s = ps.samples.states[i0];
        const auto& s1 = ps.samples.states[i1];
        for (std::size_t j = 0; j < s.alpha.size(); ++j) s.alpha[j] = (1.0 - w) * s.alpha[j] + w * s1.alpha[j];
        for (std::size_t j = 0; j < s.beta.size(); ++j) s.beta[j] = (1.0 - w) * s.beta[j] + w * s1.beta[j];
        s.t = t;
        auto chain = effective_chain(sp, s);
        return fix_gauge ? gauge_fix(chain) : chain;
    };
}

/// Idealized three-site schedule: bonds -scale*(1 - cos nu t) and +scale*(1 + cos nu t).
inline CouplingSchedule analytic_schedule(double nu, double scale = 0.1) {
    return [nu, scale](double t) {
        const double c = std::cos(nu * t);
        auto chain = EffectiveChain::from_couplings({-scale * (1.0 - c), scale * (1.0 + c)});
        chain.gauge_fixed = true;
        return chain;
    };
}

struct SpectrumSample {
    double t = 0.0;
    SpectrumResult spectrum;
};

/// Spectra at n_samples uniformly spaced times t0 + k*period/(n_samples-1).
inline std::vector<SpectrumSample> instantaneous_spectrum_series(const CouplingSchedule& schedule, double t0,
                                                                 double period, int n_samples) {
    if (n_samples < 2) throw InvalidArgument("spectrum series needs at least two samples");
    std::vector<SpectrumSample> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k) {
        const double t = t0 + period * static_cast<double>(k) / static_cast<double>(n_samples - 1);
        out.push_back({t, chain_spectrum(schedule(t))});
    }
    return out;
}

inline std::vector<SpectrumSample> instantaneous_spectrum_series(const LatticeSpec& spec,
                                                                 const PeriodicSteadyState& pss, int n_samples) {
    return instantaneous_spectrum_series(steady_state_schedule(spec, pss), 0.0, pss.period, n_samples);
}

struct ZeroModeSample {
    double t = 0.0;
    double energy = 0.0;
    std::vector<double> weights; ///< |v_i|^2 per site
};

/// Site distribution of the instantaneous zero mode of an odd chain.
inline std::vector<ZeroModeSample> zero_mode_trajectory(const CouplingSchedule& schedule, double t0, double period,
                                                        int n_samples) {
    std::vector<ZeroModeSample> out;
    for (const auto& [t, spec] : instantaneous_spectrum_series(schedule, t0, period, n_samples)) {
        const auto chain = schedule(t);
        if (chain.num_sites() % 2 == 0) throw InvalidArgument("zero_mode_trajectory: needs an odd chain");
        const std::size_t k = spec.gap_state_indices.front();
        out.push_back({t, spec.eigenvalues[k], site_weights(spec.eigenvectors[k])});
    }
    return out;
}

inline std::vector<ZeroModeSample> zero_mode_trajectory(const LatticeSpec& spec, const PeriodicSteadyState& pss,
                                                        int n_samples) {
    if (spec.topology.kind() != Topology::Kind::OddChain)
        throw InvalidArgument("zero_mode_trajectory: needs an OddChain topology");
    return zero_mode_trajectory(steady_state_schedule(spec, pss), 0.0, pss.period, n_samples);
}

struct TransferResult {
    std::vector<double> times;
    std::vector<std::vector<double>> populations; ///< populations[k][i] = |psi_i(times[k])|^2
    std::vector<double> norms;                    ///< ||psi||^2 at each recorded time
    double fidelity = 0.0;                        ///< population on the last site at the final time
    double norm_drift = 0.0;                      ///< max | ||psi||^2 - 1 | over recorded times
    std::vector<cplx> final_state;
};

namespace detail {
/// psi <- exp(-i H h) psi using the eigendecomposition of H (exactly unitary).
inline double apply_propagator(const SquareMatrix& hmat, double h, std::vector<cplx>& psi) {
    const auto es = eigh(hmat);
    const std::size_t n = psi.size();
    std::vector<cplx> coeff(n);
    double radius = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& v = es.eigenvectors[k];
        cplx c{};
        for (std::size_t i = 0; i < n; ++i) c += std::conj(v[i]) * psi[i];
        coeff[k] = c * std::polar(1.0, -es.eigenvalues[k] * h);
        radius = std::max(radius, std::abs(es.eigenvalues[k]));
    }
    std::fill(psi.begin(), psi.end(), cplx{});
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) psi[i] += coeff[k] * es.eigenvectors[k][i];
    return radius;
}
} // namespace detail

/// Integrates i dpsi/dt = H(t) psi from t_start to t_end (either direction).
///
/// Each step applies the exact exponential of the midpoint Hamiltonian, so the
/// propagator is unitary to rounding. Steps with ||H||*|dt| > 0.05 are rejected.
inline TransferResult schrodinger_propagate(const CouplingSchedule& schedule, std::vector<cplx> psi0, double t_start,
                                            double t_end, double dt, int record_every = 1) {
    if (std::abs(norm_squared(psi0) - 1.0) > 1e-10) throw InvalidArgument("schrodinger_propagate: psi0 must be normalized");
    if (!(dt > 0.0)) throw InvalidArgument("schrodinger_propagate: dt must be > 0");
    if (record_every < 1) throw InvalidArgument("schrodinger_propagate: record_every must be >= 1");

    TransferResult out;
    auto record = [&](double t, const std::vector<cplx>& psi) {
        out.times.push_back(t);
        out.populations.push_back(site_weights(psi));
        const double nrm = norm_squared(psi);
        out.norms.push_back(nrm);
        out.norm_drift = std::max(out.norm_drift, std::abs(nrm - 1.0));
        if (out.norm_drift > 1e-6) {
            std::ostringstream os;
            os << "norm drift " << out.norm_drift << " at t=" << t << "; step size too large";
            throw SolverError(os.str());
        }
    };

    std::vector<cplx> psi = std::move(psi0);
    record(t_start, psi);
    const double span = t_end - t_start;
    if (span != 0.0) {
        const auto steps = static_cast<long long>(std::ceil(std::abs(span) / dt - 1e-9));
        const double h = span / static_cast<double>(steps);
        for (long long k = 1; k <= steps; ++k) {
            const double t_mid = t_start + (static_cast<double>(k) - 0.5) * h;
            const auto hmat = build_hamiltonian(schedule(t_mid));
            if (hmat.size() != psi.size()) throw InvalidArgument("schrodinger_propagate: state and chain sizes differ");
            const double radius = detail::apply_propagator(hmat, h, psi);
            if (radius * std::abs(h) > 0.05) {
                std::ostringstream os;
                os << "schrodinger_propagate: ||H||*dt = " << radius * std::abs(h) << " exceeds 0.05 at t=" << t_mid;
                throw InvalidArgument(os.str());
            }
            if (k % record_every == 0 || k == steps) record(k == steps ? t_end : t_start + static_cast<double>(k) * h, psi);
        }
    }
    out.fidelity = out.populations.back().back();
    out.final_state = std::move(psi);
    return out;
}

/// Excitation starts on the first cavity and is carried for half a drive period
/// (t in [0, pi/nu]); fidelity is the final population on the last cavity. For
/// nu == 0 the schedule is frozen and `static_horizon` sets the duration.
inline TransferResult transfer_fidelity(const CouplingSchedule& schedule, double nu, double dt,
                                        int record_every = 1, double static_horizon = 1000.0) {
    if (nu < 0.0) throw InvalidArgument("transfer_fidelity: nu must be >= 0");
    const auto sites = schedule(0.0).num_sites();
    if (sites % 2 == 0) throw InvalidArgument("transfer_fidelity: needs an odd chain");
    std::vector<cplx> psi0(sites);
    psi0[0] = 1.0;
    const double t_end = nu > 0.0 ? std::numbers::pi / nu : static_horizon;
    return schrodinger_propagate(schedule, std::move(psi0), 0.0, t_end, dt, record_every);
}

enum class CouplingSource { SteadyState, Analytic };

/// Full pipeline for an OddChain spec: retune the drives to nu, find the periodic
/// steady state, and transfer along its chain (or the idealized analytic one).
inline TransferResult transfer_fidelity(const LatticeSpec& spec, double nu, double dt,
                                        CouplingSource source = CouplingSource::SteadyState, int record_every = 1,
                                        double pss_tol = 1e-10, int max_periods = 60) {
    if (spec.topology.kind() != Topology::Kind::OddChain)
        throw InvalidArgument("transfer_fidelity: needs an OddChain topology");
    if (source == CouplingSource::Analytic) return transfer_fidelity(analytic_schedule(nu), nu, dt, record_every);
    const auto tuned = with_drive_frequency(spec, nu);
    const auto pss = periodic_steady_state(tuned, pss_tol, max_periods);
    return transfer_fidelity(steady_state_schedule(tuned, pss), nu, dt, record_every);
}

} // namespace omtopo
