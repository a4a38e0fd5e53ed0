#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "psl/analytic2.hpp"
#include "psl/bounds.hpp"
#include "psl/csv.hpp"
#include "psl/grape.hpp"
#include "psl/lindblad_model.hpp"
#include "psl/magic.hpp"

namespace psl::cli {

namespace fs = std::filesystem;

namespace {

json three_level_system()
{
    // gamma[i][j]: transfer rate from level j to level i
    return {{"n_levels", 3},
            {"gamma", {{0.0, 1.0, 0.5}, {0.0, 0.0, 0.5}, {0.0, 0.0, 0.0}}},
            {"dephasing", 2.0}};
}

Matrix rate_matrix(const json& sys)
{
    const int n = sys.at("n_levels").get<int>();
    const json& g = sys.at("gamma");
    if (n < 2 || !g.is_array() || static_cast<int>(g.size()) != n)
        throw Error(ErrorCode::usage, "system.gamma must be an n_levels x n_levels array");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        if (!g[static_cast<std::size_t>(i)].is_array() || static_cast<int>(g[static_cast<std::size_t>(i)].size()) != n)
            throw Error(ErrorCode::usage, "system.gamma must be an n_levels x n_levels array");
        for (int j = 0; j < n; ++j)
            m(i, j) = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<real>();
    }
    return m;
}

RelaxationSpec system_spec(const json& sys, std::optional<real> dephasing = {})
{
    return RelaxationSpec::with_uniform_dephasing(rate_matrix(sys),
                                                  dephasing.value_or(sys.at("dephasing").get<real>()));
}

std::vector<real> grid(const json& c, const std::string& prefix)
{
    const real lo = c.at(prefix + "_min").get<real>();
    const real hi = c.at(prefix + "_max").get<real>();
    const int n = c.at("points").get<int>();
    const std::string spacing = c.value("spacing", std::string("linear"));
    if (n < 1 || !(hi >= lo))
        throw Error(ErrorCode::usage, "need points >= 1 and " + prefix + "_max >= " + prefix + "_min");
    if (spacing != "linear" && spacing != "log")
        throw Error(ErrorCode::usage, "spacing must be \"linear\" or \"log\"");
    if (spacing == "log" && !(lo > 0.0))
        throw Error(ErrorCode::usage, "log spacing needs a positive lower end");
    std::vector<real> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const real f = n == 1 ? 0.0 : static_cast<real>(i) / (n - 1);
        out[static_cast<std::size_t>(i)] = spacing == "log" ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    return out;
}

std::vector<real> gamma_grid(const json& c)
{
    std::vector<real> g = grid(c, "gamma");
    for (const auto& extra : c.at("extra_gammas"))
        g.push_back(extra.get<real>());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

std::ofstream open_output(const fs::path& out, const std::string& name, std::ostream& log)
{
    const fs::path p = out / name;
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::usage, "cannot open " + p.string() + " for writing");
    log << "writing " << p.string() << "\n";
    return f;
}

void write_json(const fs::path& out, const std::string& name, const json& j, std::ostream& log)
{
    auto f = open_output(out, name, log);
    f << j.dump(2) << "\n";
    if (!f)
        throw Error(ErrorCode::usage, "failed writing " + name);
}

// magic-plane ---------------------------------------------------------------

void run_magic_plane(const json& c, const fs::path& out, std::ostream& log)
{
    const real gp = c.at("gamma_plus").get<real>();
    const real gm = c.at("gamma_minus").get<real>();
    const auto gammas = grid(c, "gamma");
    {
        auto f = open_output(out, "magic_plane.csv", log);
        analytic2::write_magic_plane_csv(f, gp, gm, gammas);
    }
    // |s_3^(m)| > 1 on the open band gamma_+ -+ |gamma_-| / 2
    json summary{{"gamma_plus", gp}, {"gamma_minus", gm}, {"rows", gammas.size()}};
    if (gm != 0.0)
        summary["excluded_band"] = {gp - std::abs(gm) / 2.0, gp + std::abs(gm) / 2.0};
    else
        summary["excluded_band"] = nullptr;
    write_json(out, "magic_plane_summary.json", summary, log);
}

// trajectory ----------------------------------------------------------------

void run_trajectory(const json& c, const fs::path& out, std::ostream& log)
{
    const analytic2::TwoLevelParams p{c.at("gamma_plus").get<real>(), c.at("gamma_minus").get<real>(),
                                      c.at("Gamma").get<real>()};
    p.validate();
    if (!(p.Gamma > p.gamma_plus))
        throw Error(ErrorCode::unsupported_configuration, "the three-segment strategy needs Gamma > gamma_+");
    analytic2::SynthesisOptions opt;
    opt.render_fast_rotation = c.at("render_fast_rotation").get<bool>();
    opt.fast_rotation_factor = c.at("fast_rotation_factor").get<real>();
    const auto traj = analytic2::synthesize_trajectory(p, c.at("samples").get<int>(), opt);
    {
        auto f = open_output(out, "trajectory.csv", log);
        analytic2::write_trajectory_csv(f, traj);
    }
    json summary{{"t_rotation", traj.t_rotation}, {"t_o", traj.t_o}, {"t_d", traj.t_d},
                 {"duration", traj.duration()}, {"points", traj.points.size()}};
    if (!traj.points.empty())
        summary["t_o_printed_formula"] = analytic2::t_o_closed_printed(p, analytic2::p_o_from_equilibrium(p));
    write_json(out, "trajectory_summary.json", summary, log);
    log << "t_o = " << format_real(traj.t_o) << ", t_d = " << format_real(traj.t_d) << "\n";
}

// mu ------------------------------------------------------------------------

void run_mu(const json& c, const fs::path& out, std::ostream& log)
{
    const RelaxationSpec spec = system_spec(c.at("system"));
    const real gamma = c.at("system").at("dephasing").get<real>();
    const LindbladModel model(spec, {});
    {
        auto f = open_output(out, "mu_grid.csv", log);
        std::vector<std::string> header{"mu", "p_d"};
        for (int k = 1; k <= model.n_diag(); ++k)
            header.push_back("s_d_" + std::to_string(k));
        CsvWriter csv(f, header);
        for (real mu : grid(c, "mu")) {
            std::vector<double> row{mu};
            try {
                const auto r = magic::mu_ode_rhs(model, mu);
                row.push_back(r.p_d);
                for (Eigen::Index k = 0; k < r.s_d.size(); ++k)
                    row.push_back(r.s_d(k));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::singular_mu_dynamics)
                    throw;
                row.resize(static_cast<std::size_t>(2 + model.n_diag()), std::nan(""));
            }
            csv.row(row);
        }
    }
    magic::MuOptions opt;
    opt.mu_max = c.at("mu_cap").get<real>();
    const auto traj = magic::integrate_mu(model, gamma, opt);
    {
        auto f = open_output(out, "mu_trajectory.csv", log);
        magic::write_mu_trajectory_csv(f, traj);
    }
    write_json(out, "mu_summary.json",
               {{"mu_initial", gamma}, {"t_d", traj.t_d}, {"t_stop", traj.t_stop}, {"samples", traj.samples.size()}},
               log);
    log << "t_d = " << format_real(traj.t_d) << "\n";
}

// tms -----------------------------------------------------------------------

void run_tms(const json& c, const fs::path& out, std::ostream& log)
{
    const json& sys = c.at("system");
    const real purity = c.at("initial_purity").get<real>();
    std::vector<magic::TmsSweepRow> rows;
    for (real g : gamma_grid(c)) {
        const LindbladModel model(system_spec(sys, g), {});
        rows.push_back({g, magic::t_ms(model, g, purity)});
        if (rows.back().result.status != magic::TmsStatus::ok)
            log << "Gamma = " << format_real(g) << ": " << magic::to_string(rows.back().result.status) << "\n";
    }
    auto f = open_output(out, "tms_sweep.csv", log);
    magic::write_tms_sweep_csv(f, rows);
}

// bounds --------------------------------------------------------------------

struct BoundSystem {
    RelaxationSpec spec;
    real p_initial;
};

BoundSystem two_level_system(const json& c, real gamma)
{
    const analytic2::TwoLevelParams p{c.at("gamma_plus").get<real>(), c.at("gamma_minus").get<real>(), gamma};
    const RelaxationSpec spec = p.to_spec();
    // start at equilibrium, as for t_MS
    const LindbladModel model(spec, {});
    return {spec, purity(equilibrium_state(model))};
}

json printed_diagnostics(const RelaxationSpec& spec)
{
    json d;
    json diffs = json::array();
    for (const auto& e : bounds::diff_printed_a_matrix(spec))
        diffs.push_back({{"row", e.row}, {"col", e.col},
                         {"printed", {e.printed.real(), e.printed.imag()}},
                         {"generic", {e.generic.real(), e.generic.imag()}}});
    d["a_matrix_diffs"] = diffs;
    d["hilbert_denominator_generic"] = bounds::hilbert_denominator(bounds::build_a_matrix(spec));
    if (spec.n_levels() == 2) {
        d["hilbert_denominator_printed"] = bounds::hilbert_denominator_two_level_printed(spec);
        d["hilbert_denominator_diagonal_generic"] =
            bounds::hilbert_denominator(bounds::build_a_matrix(spec, bounds::BasisTag::diagonal_lindblad));
        d["hilbert_denominator_diagonal_printed"] = bounds::hilbert_denominator_diagonal_printed(spec);
        d["spectral_norm_closed_form"] = bounds::spectral_norm_two_level_closed(spec);
    } else {
        d["hilbert_denominator_printed"] = bounds::hilbert_denominator_three_level_printed(spec);
        d["spectral_norm_polynomial"] = bounds::spectral_norm_from_polynomial(spec);
        const auto computed = bounds::characteristic_cubic(spec);
        const auto printed = bounds::characteristic_cubic_printed(spec);
        json coeffs = json::array();
        for (std::size_t k = 0; k < 4; ++k)
            coeffs.push_back({{"name", "A_" + std::to_string(k)},
                              {"computed", {computed[k].real(), computed[k].imag()}},
                              {"printed", {printed[k].real(), printed[k].imag()}}});
        d["characteristic_cubic"] = coeffs;
    }
    return d;
}

void run_bounds(const json& c, const fs::path& out, std::ostream& log)
{
    const real gamma = c.at("gamma").get<real>();
    const json& two = c.at("two_level");
    const json& three = c.at("three_level");

    json report;
    {
        const auto s = two_level_system(two, gamma);
        json r = bounds::bound_report(s.spec, s.p_initial, 0.5);
        r["printed"] = printed_diagnostics(s.spec);
        report["two_level"] = r;
    }
    {
        const RelaxationSpec spec = system_spec(three, gamma);
        json r = bounds::bound_report(spec);
        if (spec.n_levels() == 3)
            r["printed"] = printed_diagnostics(spec);
        report["three_level"] = r;
    }
    write_json(out, "bounds_report.json", report, log);

    std::vector<bounds::RatioRow> rows;
    for (real g : gamma_grid(c.at("sweep"))) {
        {
            const auto s = two_level_system(two, g);
            const LindbladModel model(s.spec, {});
            const auto tms = magic::t_ms(model, g, s.p_initial);
            const auto r = bounds::bound_report(s.spec, s.p_initial, 0.5);
            rows.push_back({g, tms.t_ms, r.t_H, r.t_L, 2});
        }
        {
            const RelaxationSpec spec = system_spec(three, g);
            const LindbladModel model(spec, {});
            const auto tms = magic::t_ms(model, g, 1.0);
            const auto r = bounds::bound_report(spec);
            rows.push_back({g, tms.t_ms, r.t_H, r.t_L, spec.n_levels()});
        }
    }
    auto f = open_output(out, "bounds_ratio.csv", log);
    bounds::write_ratio_sweep_csv(f, rows);
}

// grape ---------------------------------------------------------------------

void run_grape(const json& c, const fs::path& out, std::ostream& log)
{
    const RelaxationSpec spec = system_spec(c.at("system"));
    const int n = spec.n_levels();
    const std::string controls = c.at("controls").get<std::string>();
    std::vector<CMatrix> hams;
    if (controls == "ladder")
        hams = n == 2 ? bloch_controls() : ladder_controls(n);
    else if (controls == "full")
        hams = full_controls(n);
    else
        throw Error(ErrorCode::usage, "controls must be \"ladder\" or \"full\"");
    const LindbladModel model(spec, hams);

    const std::string initial_kind = c.at("initial").get<std::string>();
    CoherenceState initial = CoherenceState::maximally_mixed(n);
    if (initial_kind == "pure_on_Mo")
        initial = magic::pure_state_on_Mo(model, magic::locate_Mo(model, c.at("system").at("dephasing").get<real>()));
    else if (initial_kind == "equilibrium")
        initial = equilibrium_state(model);
    else
        throw Error(ErrorCode::usage, "initial must be \"pure_on_Mo\" or \"equilibrium\"");

    std::vector<real> horizons;
    for (const auto& t : c.at("t_grid"))
        horizons.push_back(t.get<real>());
    if (horizons.empty()) {
        const real lo = c.at("t_min").get<real>();
        const real hi = c.at("t_max").get<real>();
        const real step = c.at("t_step").get<real>();
        if (!(step > 0.0) || !(hi >= lo) || !(lo > 0.0))
            throw Error(ErrorCode::usage, "need 0 < t_min <= t_max and t_step > 0");
        for (int i = 0;; ++i) {
            const real t = lo + i * step;
            if (t > hi + 1e-9 * step)
                break;
            horizons.push_back(t);
        }
    }
    if (horizons.empty())
        throw Error(ErrorCode::usage, "empty horizon grid");

    grape::SweepOptions opt;
    opt.n_segments = c.at("n_segments").get<int>();
    opt.amplitude_cap_factor = c.at("amplitude_cap_factor").get<real>();
    opt.optimize.restarts = c.at("restarts").get<int>();
    opt.optimize.max_iters = c.at("max_iters").get<int>();
    opt.optimize.seed = c.at("seed").get<std::uint64_t>();
    opt.optimize.threads = c.at("threads").get<unsigned>();
    const auto sweep = grape::minimum_time_sweep(model, initial, horizons, opt);
    {
        auto f = open_output(out, "grape_sweep.csv", log);
        grape::write_sweep_csv(f, sweep);
    }
    std::size_t best = sweep.rows.size() - 1;
    for (std::size_t i = 0; i < sweep.rows.size(); ++i)
        if (sweep.t_star && sweep.rows[i].t_final == *sweep.t_star)
            best = i;
    write_json(out, "grape_pulse.json", grape::pulse_to_json(sweep.pulses[best], sweep.rows[best].t_final), log);
    write_json(out, "grape_summary.json",
               {{"t_star", sweep.t_star ? json(*sweep.t_star) : json(nullptr)},
                {"conclusive", sweep.conclusive()},
                {"floor", sweep.floor},
                {"threshold", sweep.threshold},
                {"initial_purity", purity(initial)}},
               log);
    if (sweep.t_star)
        log << "t* = " << format_real(*sweep.t_star) << "\n";
    else
        log << "inconclusive: no horizon reached the saturation floor\n";
}

} // namespace

json merge_config(const json& defaults, const json& overrides, const std::string& where)
{
    if (!overrides.is_object())
        throw Error(ErrorCode::usage, "config" + (where.empty() ? "" : " at " + where) + " must be an object");
    json out = defaults;
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        const std::string path = where.empty() ? it.key() : where + "." + it.key();
        if (!defaults.contains(it.key()))
            throw Error(ErrorCode::usage, "unknown config key '" + path + "'");
        const json& d = defaults.at(it.key());
        if (d.is_object() && it.value().is_object())
            out[it.key()] = merge_config(d, it.value(), path);
        else
            out[it.key()] = it.value();
    }
    return out;
}

void apply_assignment(json& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw Error(ErrorCode::usage, "expected key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;

    json* node = &config;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.'))
        parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!node->is_object() || !node->contains(parts[i]))
            throw Error(ErrorCode::usage, "unknown config key '" + key + "'");
        node = &(*node)[parts[i]];
    }
    *node = value;
}

const std::vector<Command>& commands()
{
    static const std::vector<Command> list{
        {"magic-plane",
         "Position of the two-level magic plane as a function of the dephasing rate",
         {{"gamma_plus", 2.0}, {"gamma_minus", 0.8}, {"gamma_min", 1.0}, {"gamma_max", 10.0},
          {"points", 181}, {"spacing", "linear"}},
         run_magic_plane},
        {"trajectory",
         "Time-optimal two-level path from the equilibrium point to the centre of the Bloch ball",
         {{"gamma_plus", 1.0}, {"gamma_minus", 1.0}, {"Gamma", 2.0}, {"samples", 400},
          {"render_fast_rotation", false}, {"fast_rotation_factor", 1000.0}},
         run_trajectory},
        {"mu",
         "Diagonal extremal point as a function of mu, and the mu(t) trajectory",
         {{"system", three_level_system()}, {"mu_min", 1.4}, {"mu_max", 10.0}, {"points", 200},
          {"spacing", "linear"}, {"mu_cap", 1e8}},
         run_mu},
        {"tms",
         "Magic-subspace minimum time over a dephasing sweep",
         {{"system", three_level_system()}, {"initial_purity", 1.0}, {"gamma_min", 1.5}, {"gamma_max", 100.0},
          {"points", 60}, {"spacing", "log"}, {"extra_gammas", {2.718281828459045, 2.0, 10.0}}},
         run_tms},
        {"bounds",
         "Hilbert and Liouville purity speed limits and ratio sweep",
         {{"gamma", 2.0},
          {"two_level", {{"gamma_plus", 1.0}, {"gamma_minus", 0.5}}},
          {"three_level", three_level_system()},
          {"sweep", {{"gamma_min", 2.0}, {"gamma_max", 100.0}, {"points", 40}, {"spacing", "log"},
                     {"extra_gammas", json::array()}}}},
         run_bounds},
        {"grape",
         "GRAPE minimum-time sweep",
         {{"system", three_level_system()}, {"controls", "ladder"}, {"initial", "pure_on_Mo"},
          {"t_min", 0.5}, {"t_max", 1.3}, {"t_step", 0.05}, {"t_grid", json::array()},
          {"n_segments", 200}, {"restarts", 8}, {"max_iters", 1000}, {"amplitude_cap_factor", 1e4},
          {"seed", 1}, {"threads", 0}},
         run_grape},
    };
    return list;
}

} // namespace psl::cli
