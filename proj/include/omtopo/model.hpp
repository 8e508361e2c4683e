#pragma once

// Lattice description, drive laws, effective tight-binding chain and its
// Hamiltonian, and the two-band phase classifier.
//
// Units: every frequency is measured in units of the mechanical frequency
// (omega_b = 1), times in 1/omega_b.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "omtopo/error.hpp"
#include "omtopo/matrix.hpp"

namespace omtopo {

/// Site ordering a1,b1,a2,b2,... A CellChain has N cavities and N resonators
/// (2N sites); an OddChain has N cavities and N-1 resonators and ends on a cavity.
class Topology {
public:
    enum class Kind { CellChain, OddChain };

    static Topology cell_chain(int cells) { return Topology(Kind::CellChain, cells); }
    static Topology odd_chain(int cavities) { return Topology(Kind::OddChain, cavities); }

    Kind kind() const noexcept { return kind_; }
    /// N: cells for CellChain, cavities for OddChain.
    int n() const noexcept { return n_; }

    std::size_t num_cavities() const noexcept { return static_cast<std::size_t>(n_); }
    std::size_t num_resonators() const noexcept {
        return kind_ == Kind::CellChain ? static_cast<std::size_t>(n_) : static_cast<std::size_t>(n_ - 1);
    }
    std::size_t num_sites() const noexcept { return num_cavities() + num_resonators(); }
    std::size_t num_bonds() const noexcept { return num_sites() - 1; }

    friend bool operator==(const Topology&, const Topology&) = default;

private:
    Topology(Kind k, int n) : kind_(k), n_(n) {
        const int minimum = k == Kind::CellChain ? 1 : 2;
        if (n < minimum)
            throw InvalidParameter("topology", "needs at least " + std::to_string(minimum) + " cavities");
    }

    Kind kind_;
    int n_;
};

inline std::string to_string(Topology::Kind k) {
    return k == Topology::Kind::CellChain ? "CellChain" : "OddChain";
}

/// Omega(t) = amplitude * exp(i*phase)
struct ConstantDrive {
    double amplitude = 0.0;
    double phase = 0.0;
    friend bool operator==(const ConstantDrive&, const ConstantDrive&) = default;
};

/// Omega(t) = base * (1 + sign*cos(nu*t))
struct CosineDrive {
    double base = 0.0;
    int sign = 1;
    double nu = 0.0;
    friend bool operator==(const CosineDrive&, const CosineDrive&) = default;
};

using DriveProtocol = std::variant<ConstantDrive, CosineDrive>;

inline cplx drive_amplitude(const DriveProtocol& p, double t) {
    if (const auto* c = std::get_if<ConstantDrive>(&p)) {
        if (c->phase == 0.0) return {c->amplitude, 0.0};
        return std::polar(c->amplitude, c->phase);
    }
    const auto& cs = std::get<CosineDrive>(p);
    return {cs.base * (1.0 + cs.sign * std::cos(cs.nu * t)), 0.0};
}

inline bool is_constant(const DriveProtocol& p) { return std::holds_alternative<ConstantDrive>(p); }

struct LatticeSpec {
    Topology topology = Topology::cell_chain(1);
    std::vector<double> delta_a; ///< bare detunings, one per cavity
    std::vector<double> omega_b; ///< resonator frequencies, one per resonator
    std::vector<double> g;       ///< single-photon couplings, one per resonator
    std::vector<double> kappa;   ///< cavity decays, one per cavity
    std::vector<double> gamma;   ///< resonator dampings, one per resonator
    std::vector<DriveProtocol> drive; ///< one per cavity

    std::size_t num_cavities() const noexcept { return topology.num_cavities(); }
    std::size_t num_resonators() const noexcept { return topology.num_resonators(); }

    friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

namespace detail {

inline void expect_length(const char* field, std::size_t got, std::size_t want) {
    if (got != want)
        throw DimensionMismatch(field, "expected " + std::to_string(want) + " entries, got " + std::to_string(got));
}

} // namespace detail

/// Throws DimensionMismatch unless every sequence matches the topology.
/// Every numerical routine calls this; physical ranges are left to validate_spec.
inline void check_dimensions(const LatticeSpec& s) {
    const auto nc = s.num_cavities();
    const auto nr = s.num_resonators();
    detail::expect_length("delta_a", s.delta_a.size(), nc);
    detail::expect_length("omega_b", s.omega_b.size(), nr);
    detail::expect_length("g", s.g.size(), nr);
    detail::expect_length("kappa", s.kappa.size(), nc);
    detail::expect_length("gamma", s.gamma.size(), nr);
    detail::expect_length("drive", s.drive.size(), nc);
}

/// Full check of the lattice invariants. Returns the spec unchanged on success.
inline const LatticeSpec& validate_spec(const LatticeSpec& s) {
    check_dimensions(s);
    auto field = [](const char* name, std::size_t i) { return std::string(name) + "[" + std::to_string(i) + "]"; };
    auto finite = [&](const char* name, const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!std::isfinite(v[i])) throw InvalidParameter(field(name, i), "must be finite");
    };
    finite("delta_a", s.delta_a);
    finite("omega_b", s.omega_b);
    finite("g", s.g);
    finite("kappa", s.kappa);
    finite("gamma", s.gamma);
    for (std::size_t i = 0; i < s.g.size(); ++i) {
        if (!(s.g[i] > 0.0)) throw InvalidParameter(field("g", i), "must be > 0");
        if (!(s.omega_b[i] > 0.0)) throw InvalidParameter(field("omega_b", i), "must be > 0");
        if (s.gamma[i] < 0.0) throw InvalidParameter(field("gamma", i), "must be >= 0");
    }
    for (std::size_t i = 0; i < s.kappa.size(); ++i)
        if (s.kappa[i] < 0.0) throw InvalidParameter(field("kappa", i), "must be >= 0");
    for (std::size_t i = 0; i < s.drive.size(); ++i) {
        if (const auto* c = std::get_if<ConstantDrive>(&s.drive[i])) {
            if (!std::isfinite(c->amplitude) || !std::isfinite(c->phase))
                throw InvalidParameter(field("drive", i), "amplitude and phase must be finite");
        } else {
            const auto& cs = std::get<CosineDrive>(s.drive[i]);
            if (!(cs.base > 0.0)) throw InvalidParameter(field("drive", i) + ".base", "must be > 0");
            if (!(cs.nu > 0.0)) throw InvalidParameter(field("drive", i) + ".nu", "must be > 0");
            if (cs.sign != 1 && cs.sign != -1) throw InvalidParameter(field("drive", i) + ".sign", "must be +1 or -1");
        }
    }
    return s;
}

/// Classical amplitudes <a_j> = alpha_j and <b_j> = beta_j at time t.
struct MeanFieldState {
    double t = 0.0;
    std::vector<cplx> alpha;
    std::vector<cplx> beta;

    static MeanFieldState vacuum(const LatticeSpec& s, double t = 0.0) {
        return {t, std::vector<cplx>(s.num_cavities()), std::vector<cplx>(s.num_resonators())};
    }

    bool finite() const {
        auto ok = [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
        for (const auto& z : alpha)
            if (!ok(z)) return false;
        for (const auto& z : beta)
            if (!ok(z)) return false;
        return true;
    }

    friend bool operator==(const MeanFieldState&, const MeanFieldState&) = default;
};

inline void check_state(const LatticeSpec& s, const MeanFieldState& st) {
    detail::expect_length("state.alpha", st.alpha.size(), s.num_cavities());
    detail::expect_length("state.beta", st.beta.size(), s.num_resonators());
}

struct SiteLabel {
    enum class Kind { Cavity, Resonator };
    Kind kind;
    std::size_t index; ///< 0-based within its kind

    bool is_cavity() const noexcept { return kind == Kind::Cavity; }
    std::string name() const { return (is_cavity() ? "a" : "b") + std::to_string(index + 1); }
    friend bool operator==(const SiteLabel&, const SiteLabel&) = default;
};

inline std::vector<SiteLabel> site_labels(const Topology& top) {
    std::vector<SiteLabel> out;
    out.reserve(top.num_sites());
    for (std::size_t j = 0; j < top.num_cavities(); ++j) {
        out.push_back({SiteLabel::Kind::Cavity, j});
        if (j < top.num_resonators()) out.push_back({SiteLabel::Kind::Resonator, j});
    }
    return out;
}

/// Nearest-neighbour chain: couplings[i] is the bond between sites i and i+1.
struct EffectiveChain {
    std::vector<cplx> couplings;
    std::vector<SiteLabel> sites;
    bool gauge_fixed = false;

    std::size_t num_sites() const noexcept { return couplings.size() + 1; }

    /// Chain built from bare couplings with generic labels (a1,b1,a2,...).
    static EffectiveChain from_couplings(std::vector<cplx> couplings) {
        EffectiveChain c;
        c.sites.reserve(couplings.size() + 1);
        for (std::size_t i = 0; i <= couplings.size(); ++i)
            c.sites.push_back({i % 2 == 0 ? SiteLabel::Kind::Cavity : SiteLabel::Kind::Resonator, i / 2});
        c.couplings = std::move(couplings);
        return c;
    }
};

/// Bonds from a mean-field state: resonator b_j couples to a_j with -g_j*alpha_j
/// and to a_{j+1} (when present) with +g_j*alpha_{j+1}.
inline EffectiveChain effective_chain(const LatticeSpec& s, const MeanFieldState& st) {
    check_dimensions(s);
    check_state(s, st);
    EffectiveChain c;
    c.sites = site_labels(s.topology);
    c.couplings.reserve(s.topology.num_bonds());
    for (std::size_t j = 0; j < s.num_resonators(); ++j) {
        c.couplings.push_back(-s.g[j] * st.alpha[j]);
        if (j + 1 < s.num_cavities()) c.couplings.push_back(s.g[j] * st.alpha[j + 1]);
    }
    return c;
}

inline SquareMatrix build_hamiltonian(const EffectiveChain& chain) {
    if (chain.couplings.empty()) throw InvalidArgument("build_hamiltonian: chain has no bonds");
    SquareMatrix h(chain.num_sites());
    for (std::size_t i = 0; i < chain.couplings.size(); ++i) {
        h(i, i + 1) = chain.couplings[i];
        h(i + 1, i) = std::conj(chain.couplings[i]);
    }
    return h;
}

enum class Phase { Nontrivial, Critical, Trivial };

inline std::string to_string(Phase p) {
    switch (p) {
    case Phase::Nontrivial: return "Nontrivial";
    case Phase::Critical: return "Critical";
    case Phase::Trivial: return "Trivial";
    }
    return "?";
}

/// mean |intra-cell bond| / mean |inter-cell bond| for a two-band chain.
inline double coupling_ratio(const EffectiveChain& chain) {
    if (chain.num_sites() % 2 != 0)
        throw InvalidArgument("phase classification needs an even number of sites (two-band chain)");
    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < chain.couplings.size(); ++i) {
        if (i % 2 == 0) {
            intra += std::abs(chain.couplings[i]);
            ++n_intra;
        } else {
            inter += std::abs(chain.couplings[i]);
            ++n_inter;
        }
    }
    if (n_inter == 0) throw InvalidArgument("phase classification needs at least two cells");
    return (intra / static_cast<double>(n_intra)) / (inter / static_cast<double>(n_inter));
}

inline Phase classify_phase(const EffectiveChain& chain, double rel_tol = 0.02) {
    const double r = coupling_ratio(chain);
    if (r < 1.0 - rel_tol) return Phase::Nontrivial;
    if (r > 1.0 + rel_tol) return Phase::Trivial;
    return Phase::Critical;
}

} // namespace omtopo
