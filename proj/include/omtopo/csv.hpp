#pragma once

// CSV writers for every artifact the CLI emits. Numbers are printed with 17
// significant digits so a parse of the file recovers the exact doubles.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omtopo/dynamics.hpp"
#include "omtopo/error.hpp"
#include "omtopo/meanfield.hpp"
#include "omtopo/model.hpp"
#include "omtopo/spectral.hpp"

namespace omtopo::csv {

inline std::string format(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Accumulates a CSV document in memory; written in one go by save().
class Table {
public:
    explicit Table(std::vector<std::string> header) : columns_(header.size()) { add_row_text(header); }

    std::size_t columns() const noexcept { return columns_; }

    Table& row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format(v));
        return add_row_text(cells);
    }

    /// Row of preformatted cells.
    Table& add_row_text(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw InvalidArgument("csv: row width does not match the header");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
        return *this;
    }

    const std::string& str() const noexcept { return text_; }

    void save(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + path.string() + " for writing");
        out << text_;
        if (!out) throw Error("failed writing " + path.string());
    }

private:
    std::size_t columns_;
    std::string text_;
};

inline std::vector<std::string> numbered(std::string_view stem, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= n; ++i) out.push_back(std::string(stem) + std::to_string(i));
    return out;
}

/// t, re/im of every alpha, re/im of every beta, then |alpha_j|.
inline Table trajectory_table(const Trajectory& traj) {
    if (traj.states.empty()) throw InvalidArgument("csv: empty trajectory");
    const std::size_t nc = traj.states.front().alpha.size();
    const std::size_t nr = traj.states.front().beta.size();
    std::vector<std::string> header{"t"};
    for (std::size_t j = 1; j <= nc; ++j) {
        header.push_back("re_alpha_" + std::to_string(j));
        header.push_back("im_alpha_" + std::to_string(j));
    }
    for (std::size_t j = 1; j <= nr; ++j) {
        header.push_back("re_beta_" + std::to_string(j));
        header.push_back("im_beta_" + std::to_string(j));
    }
    for (const auto& h : numbered("abs_alpha_", nc)) header.push_back(h);
    Table t(header);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const auto& s = traj.states[k];
        std::vector<double> row{traj.times[k]};
        for (const auto& a : s.alpha) {
            row.push_back(a.real());
            row.push_back(a.imag());
        }
        for (const auto& b : s.beta) {
            row.push_back(b.real());
            row.push_back(b.imag());
        }
        for (const auto& a : s.alpha) row.push_back(std::abs(a));
        t.row(row);
    }
    return t;
}

/// One row per amplitude: mode ("alpha" or "beta"), 1-based index, re, im, abs.
inline Table steady_state_table(const MeanFieldState& st) {
    Table t({"mode", "index", "re", "im", "abs"});
    auto rows = [&](const char* mode, const std::vector<cplx>& v) {
        for (std::size_t j = 0; j < v.size(); ++j)
            t.add_row_text({mode, std::to_string(j + 1), format(v[j].real()), format(v[j].imag()), format(std::abs(v[j]))});
    };
    rows("alpha", st.alpha);
    rows("beta", st.beta);
    return t;
}

inline Table spectrum_table(const SpectrumResult& r) {
    Table t({"index", "eigenvalue"});
    for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) t.row({static_cast<double>(k + 1), r.eigenvalues[k]});
    return t;
}

/// site (1-based), weight = |v_i|^2
inline Table distribution_table(std::span<const cplx> v) {
    Table t({"site", "weight"});
    for (std::size_t i = 0; i < v.size(); ++i) t.row({static_cast<double>(i + 1), std::norm(v[i])});
    return t;
}

inline Table couplings_table(const EffectiveChain& c) {
    Table t({"bond", "re", "im", "abs"});
    for (std::size_t i = 0; i < c.couplings.size(); ++i)
        t.row({static_cast<double>(i + 1), c.couplings[i].real(), c.couplings[i].imag(), std::abs(c.couplings[i])});
    return t;
}

inline Table transfer_table(const TransferResult& r) {
    const std::size_t m = r.populations.empty() ? 0 : r.populations.front().size();
    auto header = numbered("pop_site_", m);
    header.insert(header.begin(), "t");
    header.push_back("norm");
    Table t(header);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        std::vector<double> row{r.times[k]};
        row.insert(row.end(), r.populations[k].begin(), r.populations[k].end());
        row.push_back(r.norms[k]);
        t.row(row);
    }
    return t;
}

inline Table zero_mode_table(const std::vector<ZeroModeSample>& z) {
    const std::size_t m = z.empty() ? 0 : z.front().weights.size();
    auto header = numbered("w_site_", m);
    header.insert(header.begin(), "t");
    Table t(header);
    for (const auto& s : z) {
        std::vector<double> row{s.t};
        row.insert(row.end(), s.weights.begin(), s.weights.end());
        t.row(row);
    }
    return t;
}

inline Table spectrum_series_table(const std::vector<SpectrumSample>& series) {
    const std::size_t m = series.empty() ? 0 : series.front().spectrum.eigenvalues.size();
    auto header = numbered("lambda_", m);
    header.insert(header.begin(), "t");
    Table t(header);
    for (const auto& s : series) {
        std::vector<double> row{s.t};
        row.insert(row.end(), s.spectrum.eigenvalues.begin(), s.spectrum.eigenvalues.end());
        t.row(row);
    }
    return t;
}

} // namespace omtopo::csv
