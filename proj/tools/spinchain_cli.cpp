// Command-line front end: reproduces the decay curves, spectra, and regime
// reports as plot-ready CSV/TSV/JSON files.
//
// Exit codes: 0 success, 2 invalid parameters, 3 numerical-convergence failure.

#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spinchain/spinchain.hpp"

namespace {

struct CommonFlags {
    std::string config_file;
    std::optional<double> epsilon0, v0, v, t_max;
    std::optional<int> m_sites, grid_points, ldos_points, j0_points;
    std::optional<std::string> out_dir, format, method, series_csv;
    std::optional<double> quad_tol, conv_tol;
    // sweep grid
    std::optional<double> e0_min, e0_max, v0_min, v0_max;
    std::optional<int> e0_steps, v0_steps;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "flat key=value config file");
    cmd->add_option("--epsilon0", f.epsilon0, "site-0 energy (units of v)");
    cmd->add_option("--v0", f.v0, "surface hopping (units of v)");
    cmd->add_option("--v", f.v, "bulk hopping scale");
    cmd->add_option("--m-sites", f.m_sites, "finite chain length");
    cmd->add_option("--t-max", f.t_max, "time window end (hbar/v)");
    cmd->add_option("--grid-points", f.grid_points, "time grid points");
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--format", f.format, "output formats: csv,json");
    cmd->add_option("--quad-tol", f.quad_tol, "quadrature tolerance");
    cmd->add_option("--conv-tol", f.conv_tol, "diagonalization convergence tolerance");
}

spinchain::io::RunConfig build_config(const CommonFlags& f) {
    std::map<std::string, std::string> kv;
    if (!f.config_file.empty()) kv = spinchain::io::parse_key_value_file(f.config_file);
    auto set_d = [&](const char* k, const std::optional<double>& v) {
        if (v) kv[k] = spinchain::io::fmt17(*v);
    };
    auto set_i = [&](const char* k, const std::optional<int>& v) {
        if (v) kv[k] = std::to_string(*v);
    };
    auto set_s = [&](const char* k, const std::optional<std::string>& v) {
        if (v) kv[k] = *v;
    };
    set_d("epsilon0", f.epsilon0);
    set_d("v0", f.v0);
    set_d("v", f.v);
    set_i("m_sites", f.m_sites);
    set_d("t_max", f.t_max);
    set_i("grid_points", f.grid_points);
    set_i("ldos_points", f.ldos_points);
    set_i("j0_points", f.j0_points);
    set_s("output_dir", f.out_dir);
    set_s("formats", f.format);
    set_s("method", f.method);
    set_s("series_csv", f.series_csv);
    set_d("quadrature_tol", f.quad_tol);
    set_d("convergence_tol", f.conv_tol);
    set_d("sweep_epsilon0_min", f.e0_min);
    set_d("sweep_epsilon0_max", f.e0_max);
    set_i("sweep_epsilon0_steps", f.e0_steps);
    set_d("sweep_v0_min", f.v0_min);
    set_d("sweep_v0_max", f.v0_max);
    set_i("sweep_v0_steps", f.v0_steps);
    return spinchain::io::make_config(kv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"survival probability of a local excitation on a tight-binding chain"};
    app.require_subcommand(1);

    CommonFlags ldos_f, decay_f, regimes_f, sweep_f;

    CLI::App* ldos = app.add_subcommand("ldos", "local density of states and its continuation");
    add_common(ldos, ldos_f);
    ldos->add_option("--ldos-points", ldos_f.ldos_points, "energy grid points");
    ldos->add_option("--j0-points", ldos_f.j0_points, "spectral-density grid points");

    CLI::App* decay = app.add_subcommand("decay", "P00(t) by diagonalization and/or LDoS Fourier");
    add_common(decay, decay_f);
    decay->add_option("--method", decay_f.method, "diag | fourier | both");

    CLI::App* regimes = app.add_subcommand("regimes", "crossover times, fits, collapse, echo");
    add_common(regimes, regimes_f);
    regimes->add_option("--series-csv", regimes_f.series_csv,
                        "fit an existing t,p (or t,re,im,p) series instead of generating");

    CLI::App* sweep = app.add_subcommand("sweep", "pole landscape over an (epsilon0, v0) grid");
    add_common(sweep, sweep_f);
    sweep->add_option("--epsilon0-min", sweep_f.e0_min, "sweep grid: epsilon0 lower bound");
    sweep->add_option("--epsilon0-max", sweep_f.e0_max, "sweep grid: epsilon0 upper bound");
    sweep->add_option("--epsilon0-steps", sweep_f.e0_steps, "sweep grid: epsilon0 samples");
    sweep->add_option("--v0-min", sweep_f.v0_min, "sweep grid: v0 lower bound");
    sweep->add_option("--v0-max", sweep_f.v0_max, "sweep grid: v0 upper bound");
    sweep->add_option("--v0-steps", sweep_f.v0_steps, "sweep grid: v0 samples");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ldos->parsed()) return spinchain::io::run_ldos(build_config(ldos_f));
        if (decay->parsed()) return spinchain::io::run_decay(build_config(decay_f));
        if (regimes->parsed()) return spinchain::io::run_regimes(build_config(regimes_f));
        if (sweep->parsed()) return spinchain::io::run_sweep(build_config(sweep_f));
    } catch (const spinchain::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
