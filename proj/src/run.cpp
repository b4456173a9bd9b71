// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/run.hpp"

#include "hypcmc/epstein.hpp"
#include "hypcmc/error.hpp"
#include "hypcmc/foliation.hpp"
#include "hypcmc/surface_mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace hypcmc {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& v)
{
    double x = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x))
        fail(ErrorCode::Config, "malformed number for " + key + ": '" + v + "'");
    return x;
}

int parse_int(const std::string& key, const std::string& v)
{
    int x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        fail(ErrorCode::Config, "malformed integer for " + key + ": '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(ErrorCode::Config, "malformed boolean for " + key + ": '" + v + "'");
}

std::map<std::string, std::string> read_kv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream out(p);
    if (!out) fail(ErrorCode::Io, "cannot write " + p.string());
    out << std::setprecision(17);
    return out;
}

void close_out(std::ofstream& out, const fs::path& p)
{
    out.close();
    if (!out) fail(ErrorCode::Io, "write failed: " + p.string());
}

std::string leaf_name(std::size_t k)
{
    std::ostringstream s;
    s << "leaf_" << std::setw(3) << std::setfill('0') << k;
    return s.str();
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, std::uint64_t seed,
                    const std::vector<std::pair<std::string, std::string>>& extra)
{
    const fs::path p = dir / "manifest.kv";
    std::ofstream out = open_out(p);
    out << "format=hypcmc-run-1\n";
    out << "version=" << kVersion << '\n';
    out << "eigen_version=" << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
    out << "seed=" << seed << '\n';
    for (const auto& [k, v] : extra) out << k << '=' << v << '\n';
    std::istringstream cfg_lines(cfg.to_kv());
    for (std::string line; std::getline(cfg_lines, line);) out << "config." << line << '\n';
    close_out(out, p);
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) out.push_back(cell);
    return out;
}

Check flag_check(const std::string& name, bool ok) { return make_check(name, ok ? 1.0 : 0.0, ">=", 1.0); }

} // namespace

// ------------------------------------------------------------------ RunConfig

const std::vector<std::string>& RunConfig::keys()
{
    static const std::vector<std::string> k{
        "mode",         "map",          "epsilon",       "grid_n",        "half_width",   "subdiv",
        "qd_amplitude", "h_min",        "h_max",         "leaves",        "newton_tol",   "max_newton",
        "h_step",       "h_step_min",   "cross_check",   "fd_step",       "sample_stride", "validate_samples"};
    return k;
}

void RunConfig::set(const std::string& key, const std::string& value)
{
    const std::string v = trim(value);
    if (key == "mode") {
        if (v != "disc" && v != "mesh") fail(ErrorCode::Config, "mode must be disc or mesh");
        mode = v;
    } else if (key == "map") {
        if (v != "identity" && v != "cubic") fail(ErrorCode::Config, "map must be identity or cubic");
        map = v;
    } else if (key == "epsilon") epsilon = parse_double(key, v);
    else if (key == "grid_n") grid_n = parse_int(key, v);
    else if (key == "half_width") half_width = parse_double(key, v);
    else if (key == "subdiv") subdiv = parse_int(key, v);
    else if (key == "qd_amplitude") qd_amplitude = parse_double(key, v);
    else if (key == "h_min") h_min = parse_double(key, v);
    else if (key == "h_max") h_max = parse_double(key, v);
    else if (key == "leaves") leaves = parse_int(key, v);
    else if (key == "newton_tol") solver.newton_tol = parse_double(key, v);
    else if (key == "max_newton") solver.max_newton = parse_int(key, v);
    else if (key == "h_step") solver.h_step = parse_double(key, v);
    else if (key == "h_step_min") solver.h_step_min = parse_double(key, v);
    else if (key == "cross_check") solver.cross_check = parse_bool(key, v);
    else if (key == "fd_step") fd_step = parse_double(key, v);
    else if (key == "sample_stride") sample_stride = parse_int(key, v);
    else if (key == "validate_samples") validate_samples = parse_int(key, v);
    else fail(ErrorCode::Config, "unknown key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const
{
    if (key == "mode") return mode;
    if (key == "map") return map;
    if (key == "epsilon") return format_double(epsilon);
    if (key == "grid_n") return std::to_string(grid_n);
    if (key == "half_width") return format_double(half_width);
    if (key == "subdiv") return std::to_string(subdiv);
    if (key == "qd_amplitude") return format_double(qd_amplitude);
    if (key == "h_min") return format_double(h_min);
    if (key == "h_max") return format_double(h_max);
    if (key == "leaves") return std::to_string(leaves);
    if (key == "newton_tol") return format_double(solver.newton_tol);
    if (key == "max_newton") return std::to_string(solver.max_newton);
    if (key == "h_step") return format_double(solver.h_step);
    if (key == "h_step_min") return format_double(solver.h_step_min);
    if (key == "cross_check") return solver.cross_check ? "true" : "false";
    if (key == "fd_step") return format_double(fd_step);
    if (key == "sample_stride") return std::to_string(sample_stride);
    if (key == "validate_samples") return std::to_string(validate_samples);
    fail(ErrorCode::Config, "unknown key '" + key + "'");
}

RunConfig RunConfig::parse(const std::string& text)
{
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!seen.insert(key).second) fail(ErrorCode::Config, "duplicate key '" + key + "'");
        cfg.set(key, line.substr(eq + 1));
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot read config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

void RunConfig::validate() const
{
    if (!(h_min > -1.0 && h_max < 1.0 && h_min <= h_max))
        fail(ErrorCode::Config, "range must satisfy -1 < h_min <= h_max < 1 (got [" + format_double(h_min) + ", " +
                                    format_double(h_max) + "])");
    if (leaves < 0) fail(ErrorCode::Config, "leaves must be non-negative");
    if (leaves == 1 && h_min != h_max) fail(ErrorCode::Config, "a single leaf needs h_min == h_max");
    if (grid_n < 15) fail(ErrorCode::Config, "grid_n must be at least 15");
    if (!(half_width > 0.0 && half_width < 0.7)) fail(ErrorCode::Config, "half_width must lie in (0, 0.7)");
    if (subdiv < 1 || subdiv > 6) fail(ErrorCode::Config, "subdiv must lie in [1, 6]");
    if (!(std::abs(epsilon) <= 0.05)) fail(ErrorCode::Config, "epsilon must satisfy |epsilon| <= 0.05");
    if (!(qd_amplitude >= 0.0)) fail(ErrorCode::Config, "qd_amplitude must be non-negative");
    if (!(fd_step > 0.0 && fd_step < 0.5)) fail(ErrorCode::Config, "fd_step must lie in (0, 0.5)");
    if (sample_stride < 1) fail(ErrorCode::Config, "sample_stride must be positive");
    if (validate_samples < 1) fail(ErrorCode::Config, "validate_samples must be positive");
    try {
        solver.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Config, e.what());
    }
}

std::string RunConfig::to_kv() const
{
    std::ostringstream out;
    for (const std::string& k : keys()) out << k << '=' << get(k) << '\n';
    return out.str();
}

std::vector<double> RunConfig::targets() const
{
    std::vector<double> t;
    if (leaves == 0) return t;
    if (leaves == 1) return {h_min};
    for (int k = 0; k < leaves; ++k) t.push_back(k == leaves - 1 ? h_max : h_min + (h_max - h_min) * k / (leaves - 1));
    return t;
}

ValidationOptions RunConfig::validation_options(std::uint64_t seed) const
{
    ValidationOptions o;
    o.seed = seed;
    o.samples = validate_samples;
    o.fd_step = fd_step;
    o.mesh_subdiv = std::max(2, subdiv);
    return o;
}

std::shared_ptr<const CmcContext> make_context(const RunConfig& cfg)
{
    cfg.validate();
    if (cfg.mode == "disc") {
        const HoloMap f = cfg.map == "identity" ? identity_map(Chart::disc())
                                                : cubic_perturbation(cfg.epsilon, Chart::disc(0.0, 0.9));
        return std::make_shared<const CmcContext>(CmcContext::disc(f, cfg.grid_n, cfg.half_width));
    }
    auto mesh = std::make_shared<const SurfaceMesh>(SurfaceMesh::build(cfg.subdiv));
    const QDField phi = cfg.qd_amplitude > 0.0 ? manufactured_qd_field(*mesh, cfg.qd_amplitude)
                                               : QDField{std::vector<Complex>(mesh->raw_node_count())};
    return std::make_shared<const CmcContext>(CmcContext::closed_surface(mesh, phi));
}

bool RunReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

// ------------------------------------------------------------------ pipelines

RunReport run_validate(const RunConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    RunReport rep;
    rep.checks = validation_suite(cfg.validation_options(seed));
    const auto failed = std::count_if(rep.checks.begin(), rep.checks.end(), [](const Check& c) { return !c.passed; });
    rep.summary = std::to_string(rep.checks.size() - failed) + "/" + std::to_string(rep.checks.size()) +
                  " invariants passed";
    return rep;
}

RunReport run_solve(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed)
{
    cfg.validate();
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir / "leaves", ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + (dir / "leaves").string());

    const auto ctx = make_context(cfg);
    ContinuationResult family;
    try {
        family = continuation(*ctx, cfg.h_min, cfg.h_max, cfg.solver, cfg.targets());
    } catch (const Error& e) {
        write_manifest(dir, cfg, seed, {{"command", "solve"}, {"status", "failed"}, {"error", e.what()}});
        throw;
    }

    double worst_norm = 0.0, worst_sup = 0.0;
    {
        const fs::path sp = dir / "summary.csv";
        const fs::path cp = dir / "convergence.csv";
        std::ofstream summary = open_out(sp);
        std::ofstream conv = open_out(cp);
        summary << "leaf,H,residual_norm,residual_sup,newton_iters,u_min,u_max\n";
        conv << "leaf,H,iteration,residual\n";
        for (std::size_t k = 0; k < family.entries.size(); ++k) {
            const ContinuationEntry& e = family.entries[k];
            const ScalarField u = u_from_v(e.H, e.v);
            worst_norm = std::max(worst_norm, e.residual_norm);
            worst_sup = std::max(worst_sup, e.residual_sup);
            summary << k << ',' << e.H << ',' << e.residual_norm << ',' << e.residual_sup << ',' << e.newton_iters
                    << ',' << u.minCoeff() << ',' << u.maxCoeff() << '\n';
            for (std::size_t i = 0; i < e.residual_history.size(); ++i)
                conv << k << ',' << e.H << ',' << i << ',' << e.residual_history[i] << '\n';

            const fs::path lp = dir / "leaves" / (leaf_name(k) + ".csv");
            std::ofstream leaf = open_out(lp);
            leaf << "index,re_z,im_z,H,v,u\n";
            for (int i = 0; i < ctx->size(); ++i) {
                const Complex z = ctx->position(i);
                leaf << i << ',' << z.real() << ',' << z.imag() << ',' << e.H << ',' << e.v[i] << ',' << u[i] << '\n';
            }
            close_out(leaf, lp);
        }
        close_out(summary, sp);
        close_out(conv, cp);
    }
    std::ostringstream cross;
    cross << std::setprecision(17) << family.cross_check;
    std::ostringstream worst;
    worst << std::setprecision(17) << worst_norm;
    write_manifest(dir, cfg, seed,
                   {{"command", "solve"},
                    {"status", "complete"},
                    {"leaves", std::to_string(family.entries.size())},
                    {"steps", std::to_string(family.steps)},
                    {"anchors", family.anchors},
                    {"cross_check", cross.str()},
                    {"max_residual_norm", worst.str()},
                    {"unknowns", std::to_string(ctx->size())}});

    RunReport rep;
    rep.checks.push_back(make_check("leaves_solved", static_cast<double>(family.entries.size()), ">=", 1.0));
    rep.checks.push_back(make_check("max_residual_norm", worst_norm, "<", cfg.solver.newton_tol));
    if (cfg.solver.cross_check) rep.checks.push_back(make_check("anchor_agreement", family.cross_check, "<", 1e-7));
    std::ostringstream s;
    s << family.entries.size() << " leaves over [" << cfg.h_min << ", " << cfg.h_max << "] in " << family.steps
      << " continuation steps; max residual norm " << worst_norm << ", max residual sup " << worst_sup;
    rep.summary = s.str();
    return rep;
}

LoadedRun load_run(const std::string& run_dir)
{
    const fs::path dir(run_dir);
    const fs::path mp = dir / "manifest.kv";
    if (!fs::exists(mp)) fail(ErrorCode::Io, "no manifest.kv in " + run_dir);
    LoadedRun run;
    run.manifest = read_kv_file(mp.string());
    if (run.manifest["status"] != "complete") fail(ErrorCode::Io, "run in " + run_dir + " is not complete");

    std::ostringstream cfg_text;
    for (const auto& [k, v] : run.manifest)
        if (k.rfind("config.", 0) == 0) cfg_text << k.substr(7) << '=' << v << '\n';
    try {
        run.config = RunConfig::parse(cfg_text.str());
    } catch (const Error& e) {
        fail(ErrorCode::Io, std::string("manifest config is malformed: ") + e.what());
    }

    std::ifstream summary(dir / "summary.csv");
    if (!summary) fail(ErrorCode::Io, "no summary.csv in " + run_dir);
    std::string line;
    std::getline(summary, line);
    while (std::getline(summary, line)) {
        const auto cells = split_csv(line);
        if (cells.size() != 7) fail(ErrorCode::Io, "malformed summary.csv row");
        ContinuationEntry e;
        const std::size_t k = std::stoul(cells[0]);
        e.H = std::stod(cells[1]);
        e.residual_norm = std::stod(cells[2]);
        e.residual_sup = std::stod(cells[3]);
        e.newton_iters = std::stoi(cells[4]);
        std::ifstream leaf(dir / "leaves" / (leaf_name(k) + ".csv"));
        if (!leaf) fail(ErrorCode::Io, "missing leaf file " + leaf_name(k));
        std::string row;
        std::getline(leaf, row);
        std::vector<double> v;
        while (std::getline(leaf, row)) {
            const auto c = split_csv(row);
            if (c.size() != 6) fail(ErrorCode::Io, "malformed leaf row in " + leaf_name(k));
            v.push_back(std::stod(c[4]));
        }
        e.v = Eigen::Map<const ScalarField>(v.data(), static_cast<Eigen::Index>(v.size()));
        run.family.entries.push_back(std::move(e));
    }
    if (run.family.entries.empty()) fail(ErrorCode::Io, "run in " + run_dir + " has no leaves");
    run.family.anchors = run.manifest["anchors"];
    return run;
}

RunReport run_foliate(const RunConfig* cfg, const std::string& run_dir, std::uint64_t seed)
{
    const fs::path dir(run_dir);
    bool have_run = false;
    if (fs::exists(dir / "manifest.kv")) have_run = read_kv_file((dir / "manifest.kv").string())["status"] == "complete";
    if (!have_run) {
        if (!cfg) fail(ErrorCode::Io, "no completed run in " + run_dir + " and no config to solve one");
        (void)run_solve(*cfg, run_dir, seed);
    }
    const LoadedRun run = load_run(run_dir);
    const auto ctx = make_context(run.config);
    for (const ContinuationEntry& e : run.family.entries)
        if (e.v.size() != ctx->size()) fail(ErrorCode::Io, "leaf size does not match the configured discretization");
    if (run.family.entries.size() < 2) fail(ErrorCode::Config, "a foliation needs at least two leaves");
    FoliationOptions fo;
    fo.step = run.config.fd_step;
    fo.stride = run.config.sample_stride;
    const Foliation fol = build_foliation(ctx, run.family, fo);
    const FoliationReport fr = foliation_report(fol);
    write_foliation_report((dir / "foliation_report.kv").string(), (dir / "foliation_leaves.csv").string(), fr);

    RunReport rep;
    rep.checks.push_back(make_check("u_monotonicity_violations", fr.monotone_violations, "<=", 0.0));
    if (ctx->mode() == CmcContext::Mode::Disc) {
        rep.checks.push_back(make_check("leaf_intersections", fr.intersections, "<=", 0.0));
        rep.checks.push_back(make_check("distance_window_excursion", fr.fplus_fminus_check, "<=", fr.window_tolerance));
        rep.checks.push_back(flag_check("distance_window_evaluated", fr.window_ok));
        rep.checks.push_back(make_check("principal_flags", fr.principal_flags, "<=", 0.0));
    }
    std::ostringstream s;
    s << fol.leaves.size() << " leaves; monotone=" << (fr.monotone ? "true" : "false");
    if (ctx->mode() == CmcContext::Mode::Disc)
        s << ", min leaf gap " << fr.min_leaf_gap << ", principal range [" << fr.principal_range.first << ", "
          << fr.principal_range.second << "]";
    rep.summary = s.str();
    return rep;
}

RunReport run_export(const std::string& run_dir)
{
    const LoadedRun run = load_run(run_dir);
    const auto ctx = make_context(run.config);
    const fs::path out = fs::path(run_dir) / "export";
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + out.string());
    write_matrix_market((out / "laplacian.mtx").string(), ctx->laplacian_matrix());

    int written = 0;
    if (ctx->mode() == CmcContext::Mode::Disc) {
        const GridSpec& g = ctx->grid();
        constexpr int kInset = 4;
        GridSpec inner = g;
        inner.x0 = g.x0 + kInset * g.h;
        inner.y0 = g.y0 + kInset * g.h;
        inner.nx = g.nx - 2 * kInset;
        inner.ny = g.ny - 2 * kInset;
        for (std::size_t k = 0; k < run.family.entries.size(); ++k) {
            const ContinuationEntry& e = run.family.entries[k];
            const ScalarField u = u_from_v(e.H, e.v);
            const ConformalMetric sigma = solved_metric(*ctx, e.H, u);
            const HoloMap& f = ctx->developing_map();
            const H3Sampler sampler = [&](Complex z) { return epstein_chart(f, sigma, z); };
            write_epstein_obj((out / (leaf_name(k) + ".obj")).string(), sampler, inner);
            const GeometricCheck gc =
                geometric_mean_curvature_check(*ctx, e.H, u, run.config.fd_step, run.config.sample_stride);
            write_epstein_samples_csv((out / (leaf_name(k) + "_samples.csv")).string(), gc.samples);
            ++written;
        }
    } else {
        write_mesh_obj((out / "mesh.obj").string(), ctx->mesh());
        write_matrix_market((out / "stiffness.mtx").string(), ctx->mesh().stiffness());
        for (std::size_t k = 0; k < run.family.entries.size(); ++k) {
            const ContinuationEntry& e = run.family.entries[k];
            write_scalar_field_csv((out / (leaf_name(k) + "_u.csv")).string(), ctx->mesh(), u_from_v(e.H, e.v));
            ++written;
        }
    }
    RunReport rep;
    rep.checks.push_back(
        make_check("leaves_exported", written, ">=", static_cast<double>(run.family.entries.size())));
    rep.summary = std::to_string(written) + " leaves exported to " + out.string();
    return rep;
}

RunReport run_report(const std::string& run_dir)
{
    const LoadedRun run = load_run(run_dir);
    RunReport rep;
    double worst = 0.0;
    for (const ContinuationEntry& e : run.family.entries) worst = std::max(worst, e.residual_norm);
    rep.checks.push_back(make_check("max_residual_norm", worst, "<", run.config.solver.newton_tol));
    std::ostringstream s;
    s << std::setprecision(6);
    s << "run " << run_dir << ": " << run.family.entries.size() << " leaves, mode " << run.config.mode
      << ", H in [" << run.family.entries.front().H << ", " << run.family.entries.back().H << "]\n";
    s << "anchors: " << run.family.anchors << '\n';
    s << "cross check: " << run.manifest.at("cross_check") << '\n';
    s << "leaf  H           residual_norm  newton_iters\n";
    for (std::size_t k = 0; k < run.family.entries.size(); ++k) {
        const ContinuationEntry& e = run.family.entries[k];
        s << std::left << std::setw(6) << k << std::setw(12) << e.H << std::setw(15) << e.residual_norm
          << e.newton_iters << '\n';
    }
    const fs::path fp = fs::path(run_dir) / "foliation_report.kv";
    if (fs::exists(fp)) {
        const auto kv = read_kv_file(fp.string());
        s << "foliation:";
        for (const auto& [k, v] : kv) s << ' ' << k << '=' << v;
        s << '\n';
        rep.checks.push_back(flag_check("foliation_monotone", kv.count("monotone") && kv.at("monotone") == "true"));
    }
    rep.summary = s.str();
    const fs::path rp = fs::path(run_dir) / "report.txt";
    std::ofstream out = open_out(rp);
    out << rep.summary << format_checks(rep.checks);
    close_out(out, rp);
    return rep;
}

} // namespace hypcmc
