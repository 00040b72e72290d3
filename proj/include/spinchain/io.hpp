#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinchain/parallel.hpp"
#include "spinchain/regime_analysis.hpp"

// Configuration, CSV/JSON export, and the four command drivers behind the CLI.
// Data files are deterministic: fixed 17-significant-digit formatting, LF line
// endings, no timestamps; run metadata goes to JSON sidecars.

namespace spinchain::io {

using json = nlohmann::ordered_json;

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// ---- flat key=value config ------------------------------------------------

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::map<std::string, std::string> parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: missing '=' at " + path + ":" +
                                        std::to_string(lineno));
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

struct RunConfig {
    ChainParams params;  // validated
    double t_max = 15.0;
    int grid_points = 4000;
    double quadrature_tol = 1e-9;
    double convergence_tol = 1e-10;
    double fit_tol = 0.05;
    std::string output_dir = ".";
    bool write_csv = true;
    bool write_json = true;
    std::string method = "fourier";  // decay: diag | fourier | both
    int ldos_points = 2001;
    int j0_points = 2001;
    std::string series_csv;  // regimes: fit an injected series instead of generating
    double sweep_epsilon0_min = 0.4, sweep_epsilon0_max = 3.6;
    int sweep_epsilon0_steps = 17;
    double sweep_v0_min = 0.1, sweep_v0_max = 0.9;
    int sweep_v0_steps = 9;
};

inline RunConfig make_config(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    ChainParams p;
    auto dbl = [](const std::string& v, const std::string& key) {
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("");
            return x;
        } catch (...) {
            throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
        }
    };
    auto integer = [&](const std::string& v, const std::string& key) {
        const double x = dbl(v, key);
        if (x != static_cast<int>(x))
            throw std::invalid_argument("config: " + key + " must be an integer");
        return static_cast<int>(x);
    };
    for (const auto& [key, val] : kv) {
        if (key == "epsilon0") p.epsilon0 = dbl(val, key);
        else if (key == "v0") p.v0 = dbl(val, key);
        else if (key == "v") p.v = dbl(val, key);
        else if (key == "m_sites") p.m_sites = integer(val, key);
        else if (key == "hbar") p.hbar = dbl(val, key);
        else if (key == "t_max") cfg.t_max = dbl(val, key);
        else if (key == "grid_points") cfg.grid_points = integer(val, key);
        else if (key == "quadrature_tol") cfg.quadrature_tol = dbl(val, key);
        else if (key == "convergence_tol") cfg.convergence_tol = dbl(val, key);
        else if (key == "fit_tol") cfg.fit_tol = dbl(val, key);
        else if (key == "output_dir") cfg.output_dir = val;
        else if (key == "method") cfg.method = val;
        else if (key == "ldos_points") cfg.ldos_points = integer(val, key);
        else if (key == "j0_points") cfg.j0_points = integer(val, key);
        else if (key == "series_csv") cfg.series_csv = val;
        else if (key == "sweep_epsilon0_min") cfg.sweep_epsilon0_min = dbl(val, key);
        else if (key == "sweep_epsilon0_max") cfg.sweep_epsilon0_max = dbl(val, key);
        else if (key == "sweep_epsilon0_steps") cfg.sweep_epsilon0_steps = integer(val, key);
        else if (key == "sweep_v0_min") cfg.sweep_v0_min = dbl(val, key);
        else if (key == "sweep_v0_max") cfg.sweep_v0_max = dbl(val, key);
        else if (key == "sweep_v0_steps") cfg.sweep_v0_steps = integer(val, key);
        else if (key == "formats") {
            cfg.write_csv = val.find("csv") != std::string::npos;
            cfg.write_json = val.find("json") != std::string::npos;
            if (!cfg.write_csv && !cfg.write_json)
                throw std::invalid_argument("config: formats must name csv and/or json");
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    cfg.params = validate(p);
    if (cfg.t_max < 0.0) throw std::invalid_argument("config: t_max must be >= 0");
    if (cfg.grid_points < 2) throw std::invalid_argument("config: grid_points must be >= 2");
    if (!(cfg.quadrature_tol > 0.0 && cfg.convergence_tol > 0.0 && cfg.fit_tol > 0.0))
        throw std::invalid_argument("config: tolerances must be positive");
    if (cfg.method != "diag" && cfg.method != "fourier" && cfg.method != "both")
        throw std::invalid_argument("config: method must be diag, fourier or both");
    return cfg;
}

// ---- writers ----------------------------------------------------------------

inline std::ofstream open_output(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("io: cannot write " + path.string());
    return out;
}

inline void write_curve_csv(const std::string& dir, const std::string& name,
                            const std::string& xlabel, const std::vector<double>& x,
                            const std::vector<double>& y) {
    auto out = open_output(dir, name);
    out << xlabel << ",value\n";
    for (std::size_t i = 0; i < x.size(); ++i)
        out << fmt17(x[i]) << ',' << fmt17(y[i]) << '\n';
}

inline void write_amplitude_csv(const std::string& dir, const std::string& name,
                                const AmplitudeSeries& s) {
    auto out = open_output(dir, name);
    out << "t,re_amp,im_amp,p\n";
    for (std::size_t i = 0; i < s.times.size(); ++i)
        out << fmt17(s.times[i]) << ',' << fmt17(s.amplitude[i].real()) << ','
            << fmt17(s.amplitude[i].imag()) << ',' << fmt17(s.probability[i]) << '\n';
}

inline void write_decomposition_csv(const std::string& dir, const std::string& name,
                                    const DecayDecomposition& d) {
    auto out = open_output(dir, name);
    out << "t,re_psiS,im_psiS,re_psiR,im_psiR,p_total,interference,phi_return\n";
    for (std::size_t i = 0; i < d.times.size(); ++i)
        out << fmt17(d.times[i]) << ',' << fmt17(d.psi_survival[i].real()) << ','
            << fmt17(d.psi_survival[i].imag()) << ',' << fmt17(d.psi_return[i].real()) << ','
            << fmt17(d.psi_return[i].imag()) << ',' << fmt17(d.total_probability[i]) << ','
            << fmt17(d.interference[i]) << ',' << fmt17(d.return_phase[i]) << '\n';
}

inline json params_json(const ChainParams& p) {
    json j;
    j["epsilon0"] = p.epsilon0;
    j["v0"] = p.v0;
    j["v"] = p.v;
    if (p.m_sites) j["m_sites"] = *p.m_sites;
    else j["m_sites"] = nullptr;
    j["hbar"] = p.hbar;
    j["is_resonant"] = p.is_resonant;
    return j;
}

inline json resonance_json(const ResonanceData& rd) {
    json j;
    j["epsilon_r"] = rd.epsilon_r;
    j["delta0"] = rd.delta0;
    j["gamma0"] = rd.gamma0;
    j["gamma_c"] = rd.gamma_c;
    j["residue_re"] = rd.residue.real();
    j["residue_im"] = rd.residue.imag();
    j["phi_a"] = rd.phi_a;
    j["prefactor_A"] = rd.prefactor_A;
    j["delta_corr"] = rd.delta_corr;
    j["beta"] = rd.beta;
    j["tail_C"] = rd.tail_C;
    j["gamma_at_er"] = rd.gamma_at_er;
    return j;
}

inline void write_json_file(const std::string& dir, const std::string& name, const json& j) {
    auto out = open_output(dir, name);
    out << j.dump(2) << '\n';
}

// ---- commands ---------------------------------------------------------------

inline int run_ldos(const RunConfig& cfg) {
    const ChainParams& p = cfg.params;
    const BandSpec bs = band(p);
    const LdosCurve curve = sample_ldos(p, cfg.ldos_points, LdosKind::site0);
    if (cfg.write_csv) {
        write_curve_csv(cfg.output_dir, "ldos.csv", "epsilon", curve.energies, curve.values);
        const SpectralDensity dens = spectral_density_j0(p, cfg.j0_points);
        write_curve_csv(cfg.output_dir, "j0.csv", "omega", dens.omegas, dens.values);

        // |N0(z)| map on cell centers (band edges are branch points)
        auto out = open_output(cfg.output_dir, "ldos_complex.csv");
        out << "epsilon,epsilon_prime,abs_n0\n";
        const int nx = 121, ny = 41;
        double escale = 0.5 * p.v;
        if (p.is_resonant && p.v0 < p.v) {
            try {
                escale = 3.0 * pole_data(p).gamma0;
            } catch (const std::domain_error&) {
            }
        }
        for (int ix = 0; ix < nx; ++ix) {
            const double eps = bs.bandwidth * (ix + 0.5) / nx;
            for (int iy = 0; iy < ny; ++iy) {
                const double epsp = -escale + 2.0 * escale * iy / (ny - 1);
                const double v = std::abs(ldos_continued(p, complexd(eps, epsp)));
                out << fmt17(eps) << ',' << fmt17(epsp) << ',' << fmt17(v) << '\n';
            }
        }
    }
    if (cfg.write_json) {
        json j;
        j["params"] = params_json(p);
        j["band"] = {{"eps_lower", bs.eps_lower},
                     {"eps_upper", bs.eps_upper},
                     {"bandwidth", bs.bandwidth}};
        j["is_resonant"] = p.is_resonant;
        bool pole_ok = false;
        try {
            j["pole"] = resonance_json(pole_data(p));
            pole_ok = true;
        } catch (const std::domain_error& e) {
            j["pole"] = nullptr;
            j["pole_refused"] = e.what();
        }
        (void)pole_ok;
        double trap = 0.0;
        for (std::size_t i = 0; i + 1 < curve.energies.size(); ++i)
            trap += 0.5 * (curve.values[i] + curve.values[i + 1]) *
                    (curve.energies[i + 1] - curve.energies[i]);
        double simpson = 0.0;
        {
            const std::size_t n = curve.energies.size();
            const double h = curve.energies[1] - curve.energies[0];
            const std::size_t last = (n % 2 == 1) ? n - 1 : n - 2;
            for (std::size_t k = 0; k <= last; ++k) {
                const double w = (k == 0 || k == last) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
                simpson += w * h / 3.0 * curve.values[k];
            }
            if (n % 2 == 0)
                simpson += 0.5 * h * (curve.values[n - 2] + curve.values[n - 1]);
        }
        j["normalization"] = {{"adaptive", integrate_ldos(p, cfg.quadrature_tol)},
                              {"simpson_on_grid", simpson},
                              {"trapezoid_on_grid", trap}};
        j["grid"] = {{"points", cfg.ldos_points}};
        write_json_file(cfg.output_dir, "resonance.json", j);
    }
    return 0;
}

inline std::vector<double> decay_times(const RunConfig& cfg) {
    if (cfg.t_max <= 0.0) return {0.0};
    return quad::linspace(0.0, cfg.t_max, cfg.grid_points);
}

inline int run_decay(const RunConfig& cfg) {
    const ChainParams& p = cfg.params;
    const std::vector<double> times = decay_times(cfg);

    json meta;
    meta["params"] = params_json(p);
    meta["method"] = cfg.method;
    meta["grid"] = {{"points", static_cast<int>(times.size())}, {"t_max", cfg.t_max}};

    AmplitudeSeries diag_series, fourier_series;
    const bool want_diag = cfg.method == "diag" || cfg.method == "both";
    const bool want_fourier = cfg.method == "fourier" || cfg.method == "both";

    if (want_diag) {
        if (p.m_sites) {
            diag_series = evolve_finite(p, 0, 0, times);
            meta["diag"] = {{"source", to_string(diag_series.source_tag)},
                            {"m_sites", *p.m_sites}};
        } else {
            ConvergedReference ref = converged_reference(p, times, cfg.convergence_tol);
            diag_series = std::move(ref.series);
            meta["diag"] = {{"source", to_string(diag_series.source_tag)},
                            {"final_m", ref.final_m},
                            {"max_diff", ref.max_diff}};
        }
        if (cfg.write_csv) write_amplitude_csv(cfg.output_dir, "decay_diag.csv", diag_series);
    }
    if (want_fourier) {
        fourier_series = p00_fourier(p, times, cfg.quadrature_tol);
        meta["fourier"] = {{"source", to_string(fourier_series.source_tag)}};
        if (cfg.write_csv)
            write_amplitude_csv(cfg.output_dir, "decay_fourier.csv", fourier_series);
    }
    if (cfg.method == "both") {
        double dmax = 0.0;
        std::vector<double> diff(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            diff[i] = std::abs(diag_series.probability[i] - fourier_series.probability[i]);
            dmax = std::max(dmax, diff[i]);
        }
        if (cfg.write_csv)
            write_curve_csv(cfg.output_dir, "decay_diff.csv", "t", times, diff);
        meta["max_abs_dp"] = dmax;
    }

    if (p.m_sites && p.is_resonant && p.v0 < p.v) {
        const auto [e_lo, e_hi] = default_echo_window(p);
        if (cfg.t_max >= e_hi) {
            const int ne = static_cast<int>(std::ceil((e_hi - e_lo) / 0.002)) + 1;
            const AmplitudeSeries es = evolve_finite(p, 0, 0, quad::linspace(e_lo, e_hi, ne));
            const EchoScan echo = echo_time(es, p, e_lo, e_hi);
            meta["echo"] = {{"found", echo.found},
                            {"t_echo", echo.t_echo},
                            {"p_echo", echo.p_echo},
                            {"prominence", echo.prominence},
                            {"ratio_to_ballistic", echo.ratio_to_ballistic}};
        }
    }
    if (cfg.write_json) write_json_file(cfg.output_dir, "decay_meta.json", meta);
    return 0;
}

inline json regime_report_json(const RegimeReport& rep) {
    json j;
    j["params"] = params_json(rep.params);
    j["resonance"] = resonance_json(rep.resonance);
    j["t_s"] = {{"exact", rep.t_s.exact}, {"approx_pi_n1", rep.t_s.approx}};
    j["t_r"] = {{"iterates", rep.t_r_iterates}, {"converged", rep.t_r}};
    j["exponential_fit"] = {{"rate", rep.exp_fit.rate},
                            {"prefactor", rep.exp_fit.prefactor},
                            {"window", {rep.exp_window[0], rep.exp_window[1]}},
                            {"rms_residual", rep.exp_fit.rms_residual},
                            {"max_abs_residual", rep.exp_fit.max_abs_residual},
                            {"clean", rep.exp_fit.clean},
                            {"n_samples", rep.exp_fit.n_samples}};
    j["powerlaw_fit"] = {{"exponent", rep.power_fit.exponent},
                         {"modulation_freq", rep.power_fit.modulation_freq},
                         {"beta_estimate", rep.power_fit.beta_estimate},
                         {"window", {rep.tail_window[0], rep.tail_window[1]}},
                         {"n_windows", rep.power_fit.n_windows}};
    j["collapse"] = {{"found", rep.collapse.found},
                     {"dip_time", rep.collapse.dip_time},
                     {"dip_depth", rep.collapse.dip_depth},
                     {"p_at_dip", rep.collapse.p_at_dip},
                     {"envelope", rep.collapse.envelope},
                     {"phase_residual", rep.collapse.phase_residual}};
    if (rep.echo) {
        j["echo"] = {{"found", rep.echo->found},
                     {"t_echo", rep.echo->t_echo},
                     {"p_echo", rep.echo->p_echo},
                     {"prominence", rep.echo->prominence},
                     {"ratio_to_ballistic", rep.echo->ratio_to_ballistic}};
    } else {
        j["echo"] = nullptr;
    }
    j["scale_separation"] = {{"er_over_gamma0", rep.er_over_gamma0},
                             {"gamma0_tr_over_2pi", rep.gamma0_tr_over_2pi}};
    return j;
}

inline std::string regime_report_tsv_header() {
    return "epsilon0\tv0\tepsilon_r\tgamma0\tprefactor_A\tbeta\tt_s\tt_r\t"
           "fit_rate\tfit_prefactor\ttail_exponent\tmodulation_freq\t"
           "dip_time\tdip_depth\tphase_residual";
}

inline std::string regime_report_tsv_row(const RegimeReport& rep) {
    std::ostringstream os;
    os << fmt17(rep.params.epsilon0) << '\t' << fmt17(rep.params.v0) << '\t'
       << fmt17(rep.resonance.epsilon_r) << '\t' << fmt17(rep.resonance.gamma0) << '\t'
       << fmt17(rep.resonance.prefactor_A) << '\t' << fmt17(rep.resonance.beta) << '\t'
       << fmt17(rep.t_s.exact) << '\t' << fmt17(rep.t_r) << '\t' << fmt17(rep.exp_fit.rate)
       << '\t' << fmt17(rep.exp_fit.prefactor) << '\t' << fmt17(rep.power_fit.exponent) << '\t'
       << fmt17(rep.power_fit.modulation_freq) << '\t' << fmt17(rep.collapse.dip_time) << '\t'
       << fmt17(rep.collapse.dip_depth) << '\t' << fmt17(rep.collapse.phase_residual);
    return os.str();
}

// Injected-series mode: t,p or t,re_amp,im_amp,p columns, header optional.
inline AmplitudeSeries load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("regimes: cannot open series file " + path);
    std::vector<double> times;
    std::vector<complexd> amp;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(trim(cell));
        if (first) {
            first = false;
            try {
                (void)std::stod(cols.at(0));
            } catch (...) {
                continue;  // header row
            }
        }
        if (cols.size() == 2) {
            times.push_back(std::stod(cols[0]));
            amp.push_back(std::sqrt(std::max(0.0, std::stod(cols[1]))));
        } else if (cols.size() >= 4) {
            times.push_back(std::stod(cols[0]));
            amp.push_back(complexd(std::stod(cols[1]), std::stod(cols[2])));
        } else {
            throw std::invalid_argument("regimes: series file needs t,p or t,re,im,p columns");
        }
    }
    if (times.empty()) throw std::invalid_argument("regimes: series file is empty");
    return make_series(std::move(times), std::move(amp), SourceTag::diagonalization);
}

inline int run_regimes(const RunConfig& cfg) {
    if (!cfg.series_csv.empty()) {
        const AmplitudeSeries s = load_series_csv(cfg.series_csv);
        const ExpFit fit = fit_exponential(s, s.times.front(), s.times.back(), cfg.params.hbar);
        json j;
        j["mode"] = "series_injection";
        j["series_file"] = cfg.series_csv;
        j["exponential_fit"] = {{"rate", fit.rate},
                                {"prefactor", fit.prefactor},
                                {"rms_residual", fit.rms_residual},
                                {"clean", fit.clean},
                                {"n_samples", fit.n_samples}};
        write_json_file(cfg.output_dir, "regimes.json", j);
        return 0;
    }

    const RegimeReport rep = analyze_regimes(cfg.params);
    if (cfg.write_json)
        write_json_file(cfg.output_dir, "regimes.json", regime_report_json(rep));
    {
        auto out = open_output(cfg.output_dir, "regimes_summary.tsv");
        out << regime_report_tsv_header() << '\n' << regime_report_tsv_row(rep) << '\n';
    }
    if (cfg.write_csv) {
        const double t_hi = 3.0 * rep.t_r;
        const double dt = std::clamp(rep.t_r / 400.0, 0.005, 0.05);
        const int n = static_cast<int>(std::ceil((t_hi - dt) / dt)) + 1;
        const DecayDecomposition d = decompose(cfg.params, quad::linspace(dt, t_hi, n));
        write_decomposition_csv(cfg.output_dir, "decomposition.csv", d);
    }
    return 0;
}

inline int run_sweep(const RunConfig& cfg) {
    const int ne = cfg.sweep_epsilon0_steps, nv = cfg.sweep_v0_steps;
    if (ne < 1 || nv < 1) throw std::invalid_argument("sweep: steps must be >= 1");
    if (!(cfg.sweep_v0_max < cfg.params.v))
        throw std::invalid_argument("sweep: v0 grid must stay below v");

    struct Row {
        double epsilon0, v0;
        bool resonant = false;
        bool have_pole = false;
        ResonanceData rd;
        double t_s = 0, t_r = 0, fgr = 0;
        std::string error;
    };
    std::vector<Row> rows(static_cast<std::size_t>(ne) * nv);

    parallel_for(rows.size(), [&](std::size_t idx) {
        const int ie = static_cast<int>(idx) / nv;
        const int iv = static_cast<int>(idx) % nv;
        Row& r = rows[idx];
        r.epsilon0 = ne == 1 ? cfg.sweep_epsilon0_min
                             : cfg.sweep_epsilon0_min +
                                   (cfg.sweep_epsilon0_max - cfg.sweep_epsilon0_min) * ie /
                                       (ne - 1);
        r.v0 = nv == 1 ? cfg.sweep_v0_min
                       : cfg.sweep_v0_min + (cfg.sweep_v0_max - cfg.sweep_v0_min) * iv / (nv - 1);
        try {
            ChainParams p = cfg.params;
            p.epsilon0 = r.epsilon0;
            p.v0 = r.v0;
            p = validate(p);
            r.resonant = p.is_resonant;
            if (!p.is_resonant) {
                r.error = "localized_state";
                return;
            }
            r.rd = pole_data(p);
            r.have_pole = true;
            r.t_s = t_short(p, r.rd).exact;
            r.t_r = t_return_converged(p, r.rd);
            r.fgr = M_PI * p.v0 * p.v0 * ldos_surface(p, r.rd.epsilon_r);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
    });

    auto out = open_output(cfg.output_dir, "sweep.tsv");
    out << "epsilon0\tv0\tis_resonant\tepsilon_r\tgamma0\tprefactor_A\tbeta\tdelta_corr\t"
           "tail_C\tt_s\tt_r\tfgr_gamma0\tgamma0_over_fgr\terror\n";
    for (const Row& r : rows) {
        out << fmt17(r.epsilon0) << '\t' << fmt17(r.v0) << '\t' << (r.resonant ? 1 : 0) << '\t';
        if (r.have_pole) {
            out << fmt17(r.rd.epsilon_r) << '\t' << fmt17(r.rd.gamma0) << '\t'
                << fmt17(r.rd.prefactor_A) << '\t' << fmt17(r.rd.beta) << '\t'
                << fmt17(r.rd.delta_corr) << '\t' << fmt17(r.rd.tail_C) << '\t' << fmt17(r.t_s)
                << '\t' << fmt17(r.t_r) << '\t' << fmt17(r.fgr) << '\t'
                << fmt17(r.rd.gamma0 / r.fgr) << '\t';
        } else {
            out << "\t\t\t\t\t\t\t\t\t\t";
        }
        out << r.error << '\n';
    }
    return 0;
}

}  // namespace spinchain::io
