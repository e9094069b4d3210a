#include "msldp/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "msldp/error.hpp"
#include "msldp/evp.hpp"
#include "msldp/fastproc.hpp"
#include "msldp/ldp.hpp"
#include "msldp/lyapunov.hpp"
#include "msldp/scaling.hpp"
#include "msldp/ssa.hpp"

#ifndef MSLDP_MODEL_DIR
#define MSLDP_MODEL_DIR "models"
#endif

namespace msldp::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("IOError", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> search_dirs() {
    std::vector<std::string> dirs;
    if (const char* env = std::getenv("MSLDP_MODEL_PATH")) {
        std::stringstream ss(env);
        std::string item;
        while (std::getline(ss, item, ':'))
            if (!item.empty()) dirs.push_back(item);
    }
    dirs.emplace_back(MSLDP_MODEL_DIR);
    return dirs;
}

struct Loaded {
    std::string path;
    ReactionNetwork net;
};

Loaded load(const std::string& name) {
    Loaded l;
    l.path = find_model(name);
    l.net = parse_network(read_file(l.path));
    return l;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v;
    if (n <= 1) return {lo};
    for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
    return v;
}

/// Cartesian product of per-coordinate samples.
std::vector<std::vector<double>> product(const std::vector<std::vector<double>>& axes) {
    std::vector<std::vector<double>> out{{}};
    for (const auto& a : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& head : out)
            for (double v : a) {
                auto h = head;
                h.push_back(v);
                next.push_back(std::move(h));
            }
        out = std::move(next);
    }
    return out;
}

std::vector<double> fill_dim(std::vector<double> v, std::size_t d, const std::string& what) {
    if (v.size() == 1 && d > 1) v.assign(d, v[0]);
    if (v.size() != d)
        throw Error("DomainError", what + " needs " + std::to_string(d) + " component(s), got " + std::to_string(v.size()));
    return v;
}

std::vector<double> slow_init(const ScaledSystem& sys) {
    std::vector<double> x0;
    for (int s : sys.slow) {
        const auto& v = sys.net.init[static_cast<std::size_t>(s)];
        if (!v) throw Error("DomainError", "no init value for " + sys.net.species[static_cast<std::size_t>(s)].name + "; pass --x0");
        x0.push_back(*v);
    }
    return x0;
}

std::string tag_name(Timescale t) {
    switch (t) {
        case Timescale::Slow: return "slow";
        case Timescale::Jump: return "jump";
        case Timescale::Flow: return "flow";
    }
    return "?";
}

int species_column(const ReactionNetwork& net, const std::string& name) {
    for (std::size_t i = 0; i < net.species.size(); ++i)
        if (net.species[i].name == name) return static_cast<int>(i);
    for (std::size_t i = 0; i < net.passive.size(); ++i)
        if (net.passive[i].name == name) return static_cast<int>(net.species.size() + i);
    throw Error("UnknownSpecies", name);
}

struct Output {
    std::string path;
    std::ostream& stream(std::ofstream& file) const {
        if (path.empty()) return std::cout;
        file.open(path);
        if (!file) throw Error("IOError", "cannot write " + path);
        return file;
    }
};

void emit_json(const Output& out, const json& config, json result) {
    json doc;
    doc["msldp"] = version();
    doc["config"] = config;
    doc["result"] = std::move(result);
    std::ofstream f;
    out.stream(f) << doc.dump(2) << "\n";
}

void emit_csv(const Output& out, const json& config, const std::vector<std::string>& columns,
              const std::vector<std::vector<double>>& rows) {
    std::ofstream f;
    std::ostream& os = out.stream(f);
    os << "# msldp " << version() << "\n# config: " << config.dump() << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << "\n";
    char buf[64];
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", r[i]);
            os << (i ? "," : "") << buf;
        }
        os << "\n";
    }
}

json config_of(const CLI::App* sub) {
    json cfg;
    cfg["command"] = sub->get_name();
    json opts = json::object();
    for (const CLI::Option* o : sub->get_options()) {
        if (o->get_lnames().empty()) continue;
        const std::string name = o->get_lnames().front();
        if (name == "help" || name == "out") continue;
        if (o->get_expected_max() == 0) {
            opts[name] = o->count() > 0;
        } else if (o->count() > 0) {
            const auto& r = o->results();
            if (o->get_items_expected_max() > 1)
                opts[name] = r;
            else
                opts[name] = r.back();
        } else {
            opts[name] = o->get_default_str();
        }
    }
    cfg["options"] = opts;
    return cfg;
}

/// Command line from a RunConfig found in a previous output file.
std::vector<std::string> replay_args(const std::string& path) {
    const std::string text = read_file(path);
    json cfg;
    if (text.rfind("# msldp", 0) == 0) {
        const auto at = text.find("# config: ");
        if (at == std::string::npos) throw Error("SyntaxError", "no config line in " + path);
        const auto end = text.find('\n', at);
        cfg = json::parse(text.substr(at + 10, end - at - 10));
    } else {
        cfg = json::parse(text).at("config");
    }
    std::vector<std::string> args{"msldp", cfg.at("command").get<std::string>()};
    for (const auto& [k, v] : cfg.at("options").items()) {
        if (v.is_boolean()) {
            if (v.get<bool>()) args.push_back("--" + k);
        } else if (v.is_array()) {
            if (v.empty()) continue;
            for (const auto& e : v) {
                args.push_back("--" + k);
                args.push_back(e.get<std::string>());
            }
        } else {
            const auto s = v.get<std::string>();
            if (s.empty() || s == "[]" || s == "{}") continue;
            args.push_back("--" + k);
            args.push_back(s);
        }
    }
    return args;
}

struct Params {
    std::string model, out, condition = "tilted", f = "min(0, 2*(x - 1))";
    std::vector<double> x, p, x0, z0, xlo, xhi, Ns{50, 100, 200, 400}, center;
    std::vector<std::string> targets, species;
    double level = 0, T = 1, dt = 0.01, c = 1.5, N = 100, eps = 0.1, cap = 1e12, plo = -1, phi = 1, sharp = 3;
    double hjb_lo = 0, hjb_hi = 3, hjb_dt = 0;
    int ymax = 50, points = 5, n = 400, snapshots = 1, hjb_n = 0, samples = 9;
    std::size_t K = 16;
    std::uint64_t seed = 12345, R = 10000;
    unsigned jobs = 1;
    bool symbolic = false;
};

json run_check(const Params& P, const Output& out, const json& cfg) {
    const Loaded l = load(P.model);
    json r;
    json violations = json::array();
    r["model"] = l.path;
    const auto val = validate_network(l.net);
    r["validation"] = {{"dropped_passive", val.dropped_passive}, {"linear_in_fast", val.linear_in_fast}, {"flags", val.flags}};
    ScaledSystem sys;
    try {
        sys = classify(l.net);
    } catch (const Error& e) {
        violations.push_back(e.what());
        r["violations"] = violations;
        emit_json(out, cfg, r);
        return r;
    }
    r["speed"] = sys.speed.to_string();
    json sp = json::array();
    for (std::size_t i = 0; i < sys.net.species.size(); ++i) {
        std::string role = "fast";
        if (sys.slow_coord(static_cast<int>(i)) >= 0) role = "slow";
        for (const auto& e : sys.eliminated)
            if (e.species == static_cast<int>(i)) role = "eliminated";
        json s = {{"name", sys.net.species[i].name}, {"alpha", sys.alpha[i].to_string()}, {"role", role}};
        if (const int j = sys.fast_coord(static_cast<int>(i)); j >= 0)
            s["kind"] = sys.fast_kind[static_cast<std::size_t>(j)] == FastKind::Discrete ? "discrete" : "continuous";
        sp.push_back(s);
    }
    for (const auto& s : sys.net.passive) sp.push_back({{"name", s.name}, {"role", "passive"}});
    r["species"] = sp;
    json rx = json::array();
    for (std::size_t k = 0; k < sys.net.reactions.size(); ++k)
        rx.push_back({{"name", sys.net.reactions[k].name},
                      {"beta", sys.beta[k].to_string()},
                      {"tag", tag_name(sys.tag[k])},
                      {"zeta_x", sys.zeta_x[k]},
                      {"zeta_y", sys.zeta_y[k]}});
    r["reactions"] = rx;
    json laws = json::array();
    for (const auto& c : sys.net.conservation_laws) {
        json lw = {{"weights", c.weights}};
        if (c.total) lw["total"] = *c.total;
        laws.push_back(lw);
    }
    r["conservation_laws"] = laws;
    json bin = json::array();
    for (const auto& b : check_binary_bound(l.net, sys)) {
        json e = {{"reaction", b.reaction}, {"verdict", to_string(b.verdict)}};
        if (b.factor >= 0) e["factor"] = sys.net.species[static_cast<std::size_t>(b.factor)].name;
        bin.push_back(e);
        if (b.verdict == BinaryCase::Unbounded) violations.push_back("UnboundedRate: " + b.reaction);
    }
    r["binary_bounds"] = bin;
    GrowthBox box;
    box.x_lo.assign(sys.dx(), 0.1);
    box.x_hi.assign(sys.dx(), 5.0);
    box.y_max = std::min(P.ymax, 20);
    const auto g = check_growth(sys, box);
    r["growth"] = {{"b0_bound", g.b0_bound}, {"b1_bound", g.b1_bound}, {"c_bound", g.c_bound},
                   {"b0_lip", g.b0_lip},     {"b1_lip", g.b1_lip},     {"c_lip", g.c_lip},
                   {"samples", g.samples}};
    try {
        const auto st = check_structure(sys);
        json opt = json::object();
        for (const auto& [j, o] : st.option) opt[sys.net.species[static_cast<std::size_t>(j)].name] = o;
        r["evp_options"] = opt;
        const auto sol = solve_evp(sys);
        r["evp_certified_points"] = sol.certified_points;
    } catch (const Error& e) {
        violations.push_back(e.what());
    }
    try {
        std::vector<double> x0;
        try {
            x0 = slow_init(sys);
        } catch (const Error&) {
            x0.assign(sys.dx(), 1.0);
        }
        const auto space = make_fast_space(sys, P.ymax);
        const std::vector<double> p0(sys.dx(), 0.0);
        const auto irr = check_irreducibility(build_fast_operator(sys, x0, p0, space));
        r["fast_chain"] = {{"states", space.size()}, {"irreducible", irr.irreducible}, {"components", irr.components.size()}};
        if (!irr.irreducible) violations.push_back("Reducible: fast chain at the initial slow state");
    } catch (const Error& e) {
        violations.push_back(e.what());
    }
    r["violations"] = violations;
    emit_json(out, cfg, r);
    return r;
}

int run(const std::string& cmd, const Params& P, const Output& out, const json& cfg) {
    if (cmd == "models") {
        json r = json::array();
        for (const auto& m : bundled_models()) {
            const std::string path = find_model(m);
            std::string first;
            std::stringstream ss(read_file(path));
            std::getline(ss, first);
            if (first.rfind("# ", 0) == 0) first = first.substr(2);
            r.push_back({{"name", m}, {"path", path}, {"description", first}});
        }
        emit_json(out, cfg, r);
        return 0;
    }
    if (cmd == "check") {
        const json r = run_check(P, out, cfg);
        return r["violations"].empty() ? 0 : 1;
    }
    if (cmd == "truncate") {
        const Loaded l = load(P.model);
        const auto t = truncate(l.net, P.level);
        std::ofstream f;
        std::ostream& os = out.stream(f);
        os << "# msldp " << version() << "\n# config: " << cfg.dump() << "\n";
        for (const auto& w : t.warnings) os << "# warning: " << w << "\n";
        os << serialize_network(t.net);
        return 0;
    }

    const Loaded l = load(P.model);
    const ScaledSystem sys = classify(l.net);
    const std::size_t d = sys.dx();

    if (cmd == "lln") {
        const auto x0 = P.x0.empty() ? slow_init(sys) : fill_dim(P.x0, d, "--x0");
        const auto space = make_fast_space(sys, P.ymax);
        const auto tr = integrate_lln(sys, x0, P.T, P.dt, space);
        std::vector<std::string> cols{"t"};
        for (std::size_t i = 0; i < d; ++i) cols.push_back(sys.slow_name(i));
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
            std::vector<double> row{tr.t[i]};
            row.insert(row.end(), tr.x[i].begin(), tr.x[i].end());
            rows.push_back(row);
        }
        emit_csv(out, cfg, cols, rows);
        return 0;
    }
    if (cmd == "eig") {
        const auto x = fill_dim(P.x, d, "--x"), p = fill_dim(P.p, d, "--p");
        const auto space = make_fast_space(sys, P.ymax);
        const auto e = principal_eigenvalue_numeric(sys, x, p, space);
        emit_json(out, cfg, {{"x", x}, {"p", p}, {"lambda", e.lambda}, {"residual", e.residual}, {"Ymax", P.ymax},
                             {"states", space.size()}});
        return 0;
    }
    if (cmd == "hamiltonian") {
        const auto sol = solve_evp(sys);
        std::vector<std::string> names;
        for (std::size_t i = 0; i < d; ++i) names.push_back(sys.slow_name(i));
        const Hamiltonian H(sol.H, d, names);
        if (P.symbolic) {
            emit_json(out, cfg, {{"model", l.path}, {"H0", H.to_string()}});
            return 0;
        }
        const auto x = fill_dim(P.x, d, "--x"), p = fill_dim(P.p, d, "--p");
        std::vector<double> vars(x);
        vars.insert(vars.end(), p.begin(), p.end());
        json z = json::object(), u = json::object();
        for (std::size_t j = 0; j < sys.dy(); ++j) {
            if (sol.z[j]) z[sys.fast_name(j)] = expr::eval(sol.z[j], vars);
            if (sol.u[j]) u[sys.fast_name(j)] = expr::eval(sol.u[j], vars);
        }
        emit_json(out, cfg, {{"model", l.path}, {"x", x}, {"p", p}, {"H0", H.value(x, p)}, {"gradH0", H.grad_p(x, p)},
                             {"solution", {{"z", z}, {"u", u}}}});
        return 0;
    }
    if (cmd == "lyapunov") {
        LyapunovGrid grid;
        grid.y_max = P.ymax;
        const auto lo = P.xlo.empty() ? std::vector<double>(d, 0.5) : fill_dim(P.xlo, d, "--x-lo");
        const auto hi = P.xhi.empty() ? std::vector<double>(d, 2.0) : fill_dim(P.xhi, d, "--x-hi");
        std::vector<std::vector<double>> xa, pa;
        for (std::size_t i = 0; i < d; ++i) {
            xa.push_back(linspace(lo[i], hi[i], P.points));
            pa.push_back(linspace(P.plo, P.phi, P.points));
        }
        grid.x = product(xa);
        grid.p = product(pa);
        const bool compact = make_fast_space(sys, 2 * P.ymax + 1).size() == make_fast_space(sys, P.ymax).size();
        const auto cand = compact ? zero_candidate(sys, P.c, P.ymax) : linear_candidate(sys, P.c);
        const auto which = P.condition == "uniform" ? LyapunovCondition::Uniform : LyapunovCondition::Tilted;
        const auto rep = verify_condition(sys, cand, grid, which);
        json r = {{"condition", rep.condition},
                  {"candidate", compact ? "zero" : "linear"},
                  {"c", P.c},
                  {"points", rep.points},
                  {"compact_space", rep.compact_space},
                  {"worst_point", rep.worst_point},
                  {"errors", rep.errors},
                  {"verdict", rep.pass ? "PASS" : "FAIL"}};
        if (which == LyapunovCondition::Tilted) {
            r["max_violation"] = std::isfinite(rep.max_violation) ? json(rep.max_violation) : json("inf");
            r["max_violation_built"] = rep.max_violation_built;
        } else {
            r["level_extent"] = rep.level_extent;
        }
        emit_json(out, cfg, r);
        return rep.pass ? 0 : 1;
    }
    if (cmd == "simulate") {
        SimConfig sc;
        sc.N = P.N;
        sc.T = P.T;
        sc.seed = P.seed;
        sc.rate_cap = P.cap;
        sc.keep_jumps = false;
        if (!P.z0.empty()) sc.z0 = P.z0;
        const auto steps = static_cast<std::size_t>(std::llround(P.T / P.dt));
        for (std::size_t i = 0; i <= steps; ++i) sc.record.push_back(std::min(P.T, P.dt * static_cast<double>(i)));
        const auto tr = simulate(l.net, sc);
        std::vector<std::string> cols{"time"};
        for (const auto& s : l.net.species) cols.push_back(s.name);
        for (const auto& s : l.net.passive) cols.push_back(s.name);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < tr.record_times.size(); ++i) {
            std::vector<double> row{tr.record_times[i]};
            const auto z = tr.scaled(tr.recorded[i]);
            row.insert(row.end(), z.begin(), z.end());
            rows.push_back(row);
        }
        emit_csv(out, cfg, cols, rows);
        return 0;
    }
    if (cmd == "ldp-mc") {
        McTarget tg;
        for (const auto& s : P.species) tg.species.push_back(species_column(l.net, s));
        tg.center = P.center;
        tg.eps = P.eps;
        tg.T = P.T;
        tg.z0 = P.z0;
        const auto res = mc_log_prob(l.net, tg, P.Ns, P.R, P.seed, P.jobs);
        json pts = json::array();
        for (const auto& pt : res.points) {
            json e = {{"N", pt.N}, {"hits", pt.hits}, {"R", pt.replicas}, {"p_hat", pt.p_hat}, {"ci", {pt.ci_lo, pt.ci_hi}}};
            e["minus_logp_over_N"] = pt.rate ? json(*pt.rate) : json(nullptr);
            if (pt.rate_lo && pt.rate_hi) e["rate_ci"] = {*pt.rate_lo, *pt.rate_hi};
            pts.push_back(e);
        }
        json r = {{"points", pts}, {"censored", res.censored}};
        r["slope"] = res.slope ? json(*res.slope) : json(nullptr);
        if (res.fit_b) r["fit_b"] = *res.fit_b;
        emit_json(out, cfg, r);
        return 0;
    }

    const Hamiltonian H = hamiltonian(sys);
    if (cmd == "rate") {
        const auto x0 = fill_dim(P.x0, d, "--x0");
        const auto space = make_fast_space(sys, P.ymax);
        ActionOptions ao;
        ao.K = P.K;
        ao.drift = [&](std::span<const double> y) { return effective_drift(sys, y, space); };
        json rows = json::array();
        for (const auto& ts : P.targets) {
            std::vector<double> t;
            std::stringstream ss(ts);
            std::string item;
            while (std::getline(ss, item, ':')) t.push_back(std::stod(item));
            t = fill_dim(t, d, "--target");
            const auto a = minimize_action(H, x0, t, P.T, ao);
            json row = {{"target", t}, {"I", a.action}, {"K", a.K}, {"converged", a.converged}};
            if (P.hjb_n > 0 && d == 1) {
                HJBGrid g;
                g.x_lo = P.hjb_lo;
                g.x_hi = P.hjb_hi;
                g.n = static_cast<std::size_t>(P.hjb_n);
                const double c = P.sharp, target = t[0];
                const auto u = hjb_solve(H, [c, target](double x) { return -c * std::fabs(x - target); }, g, P.T);
                const double dual = -u.at(P.T, x0[0]);
                row["dual_I"] = dual;
                row["gap"] = a.action - dual;
            } else {
                row["dual_I"] = nullptr;
                row["gap"] = nullptr;
            }
            rows.push_back(row);
        }
        emit_json(out, cfg, rows);
        return 0;
    }
    if (cmd == "hjb") {
        const auto fe = expr::parse(P.f, [](const std::string& s) { return s == "x" ? 0 : -1; });
        HJBGrid g;
        g.x_lo = P.hjb_lo;
        g.x_hi = P.hjb_hi;
        g.n = static_cast<std::size_t>(P.n);
        g.dt = P.hjb_dt;
        const auto res = hjb_solve(
            H, [&](double x) { const double v[1] = {x}; return expr::eval(fe, v); }, g, P.T,
            static_cast<std::size_t>(std::max(1, P.snapshots)));
        std::vector<std::vector<double>> rows;
        for (std::size_t s = 0; s < res.t.size(); ++s)
            for (std::size_t j = 0; j < res.x.size(); ++j) rows.push_back({res.t[s], res.x[j], res.u[s][j]});
        emit_csv(out, cfg, {"t", "x", "u"}, rows);
        return 0;
    }
    if (cmd == "audit") {
        ComparisonRegion reg;
        reg.x_lo = P.xlo.empty() ? std::vector<double>(d, 0.1) : fill_dim(P.xlo, d, "--x-lo");
        reg.x_hi = P.xhi.empty() ? std::vector<double>(d, 5.0) : fill_dim(P.xhi, d, "--x-hi");
        reg.samples = P.samples;
        reg.seed = P.seed;
        const auto rep = check_comparison_conditions(H, reg);
        json co = json::array(), h2 = json::array(), pg = json::array();
        for (const auto& c : rep.coercivity) co.push_back({{"radius", c.radius}, {"min_ratio", c.min_ratio}});
        for (const auto& h : rep.h2) h2.push_back({{"delta", h.delta}, {"max_lhs", h.max_lhs}, {"count", h.count}});
        for (const auto& [R, pm] : rep.p_for_grad) pg.push_back({{"R", R}, {"max_p", pm}});
        emit_json(out, cfg,
                  {{"coercivity", co},
                   {"coercive", rep.coercive ? "PASS" : "FAIL"},
                   {"h2", h2},
                   {"h2_vanishes", rep.h2_vanishes},
                   {"a", {{"min_hess_eig", rep.min_hess_eig}, {"pass", rep.a_pass}}},
                   {"b", {{"pass", rep.b_pass}}},
                   {"c", {{"min_gap", rep.min_legendre_gap}, {"pass", rep.c_pass}}},
                   {"d", {{"c1", rep.c1}, {"min_H", rep.min_H}, {"pass", rep.d_pass}}},
                   {"e", {{"c2", rep.c2}, {"c3", rep.c3}, {"p_for_grad", pg}, {"pass", rep.e_pass}}},
                   {"samples", rep.samples},
                   {"verdict", rep.verdict}});
        return 0;
    }
    throw Error("UsageError", "unknown command " + cmd);
}

}  // namespace

std::string version() { return "0.1.0"; }

std::vector<std::string> bundled_models() { return {"mm", "srg", "dr", "vp"}; }

std::string find_model(const std::string& name) {
    if (fs::is_regular_file(name)) return name;
    for (const auto& dir : search_dirs()) {
        for (const std::string& cand : {name, name + ".rxn"}) {
            const fs::path p = fs::path(dir) / cand;
            if (fs::is_regular_file(p)) return p.string();
        }
    }
    throw Error("ModelNotFound", name);
}

int dispatch(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data());
}

int dispatch(int argc, const char* const* argv) {
    if (argc >= 3 && std::string(argv[1]) == "--replay") {
        try {
            auto args = replay_args(argv[2]);
            for (int i = 3; i < argc; ++i) args.emplace_back(argv[i]);
            return dispatch(args);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }

    CLI::App app{"Multi-scale reaction network large deviations", "msldp"};
    app.set_version_flag("--version", version());
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    Params P;

    auto model = [&](CLI::App* s) { s->add_option("--model", P.model, "model name or .rxn path")->required(); };
    auto outopt = [&](CLI::App* s) { s->add_option("--out", P.out, "output file (default stdout)"); };
    auto vec = [](CLI::App* s, const std::string& name, std::vector<double>& v, const std::string& help) {
        return s->add_option(name, v, help)->delimiter(',')->allow_extra_args(false);
    };

    auto* models = app.add_subcommand("models", "list bundled models");
    outopt(models);

    auto* check = app.add_subcommand("check", "classification and condition report");
    model(check);
    outopt(check);
    check->add_option("--ymax", P.ymax, "fast truncation for the irreducibility check");

    auto* trunc = app.add_subcommand("truncate", "cap bounded factors of quadratic rates");
    model(trunc);
    outopt(trunc);
    trunc->add_option("--level", P.level, "truncation level M'")->required();

    auto* lln = app.add_subcommand("lln", "averaged slow ODE");
    model(lln);
    outopt(lln);
    vec(lln, "--x0", P.x0, "initial slow state (default: model init)");
    lln->add_option("--T", P.T, "horizon");
    lln->add_option("--dt", P.dt, "output step");
    lln->add_option("--ymax", P.ymax, "fast truncation");

    auto* eig = app.add_subcommand("eig", "Perron root of the tilted fast operator");
    model(eig);
    outopt(eig);
    vec(eig, "--x", P.x, "slow state")->required();
    vec(eig, "--p", P.p, "momentum")->required();
    eig->add_option("--ymax", P.ymax, "fast truncation");

    auto* ham = app.add_subcommand("hamiltonian", "limiting Hamiltonian from the eigenvalue problem");
    model(ham);
    outopt(ham);
    vec(ham, "--x", P.x, "slow state");
    vec(ham, "--p", P.p, "momentum");
    ham->add_flag("--symbolic", P.symbolic, "print the expression");

    auto* lyap = app.add_subcommand("lyapunov", "verify the exponential Lyapunov condition");
    model(lyap);
    outopt(lyap);
    lyap->add_option("--c", P.c, "multiplier c > 1");
    lyap->add_option("--condition", P.condition, "tilted or uniform")->check(CLI::IsMember({"tilted", "uniform"}));
    vec(lyap, "--x-lo", P.xlo, "slow grid lower corner (default 0.5)");
    vec(lyap, "--x-hi", P.xhi, "slow grid upper corner (default 2)");
    lyap->add_option("--p-lo", P.plo, "momentum grid lower end");
    lyap->add_option("--p-hi", P.phi, "momentum grid upper end");
    lyap->add_option("--points", P.points, "grid points per coordinate");
    lyap->add_option("--ymax", P.ymax, "fast grid bound");

    auto* sim = app.add_subcommand("simulate", "exact stochastic simulation");
    model(sim);
    outopt(sim);
    sim->add_option("--N", P.N, "scale parameter");
    sim->add_option("--T", P.T, "horizon");
    sim->add_option("--dt", P.dt, "recording step");
    sim->add_option("--seed", P.seed, "seed");
    sim->add_option("--cap", P.cap, "total rate cap");
    vec(sim, "--z0", P.z0, "initial active amounts, scaled");

    auto* mc = app.add_subcommand("ldp-mc", "Monte Carlo estimate of -(1/N) log P");
    model(mc);
    outopt(mc);
    mc->add_option("--species", P.species, "species constrained by the target ball")->required()->delimiter(',');
    vec(mc, "--center", P.center, "ball center")->required();
    mc->add_option("--eps", P.eps, "ball radius");
    mc->add_option("--T", P.T, "horizon");
    vec(mc, "--N", P.Ns, "scales");
    mc->add_option("--R", P.R, "replicas per scale");
    mc->add_option("--seed", P.seed, "seed");
    mc->add_option("--jobs", P.jobs, "worker threads");
    vec(mc, "--z0", P.z0, "initial active amounts, scaled");

    auto* rate = app.add_subcommand("rate", "rate function by action minimization");
    model(rate);
    outopt(rate);
    vec(rate, "--x0", P.x0, "initial slow state")->required();
    rate->add_option("--target", P.targets, "targets; components separated by ':'")->required();
    rate->add_option("--T", P.T, "horizon")->required();
    rate->add_option("--K", P.K, "initial segments");
    rate->add_option("--ymax", P.ymax, "fast truncation for the drift");
    rate->add_option("--hjb-n", P.hjb_n, "grid points for the dual check (0: off)");
    rate->add_option("--x-lo", P.hjb_lo, "HJB window lower end");
    rate->add_option("--x-hi", P.hjb_hi, "HJB window upper end");
    rate->add_option("--sharpness", P.sharp, "slope of the penalty -c|x - target|");

    auto* hjb = app.add_subcommand("hjb", "Hamilton-Jacobi solve u_t = H(x, u_x)");
    model(hjb);
    outopt(hjb);
    hjb->add_option("--f", P.f, "initial data, expression in x");
    hjb->add_option("--x-lo", P.hjb_lo, "window lower end");
    hjb->add_option("--x-hi", P.hjb_hi, "window upper end");
    hjb->add_option("--n", P.n, "grid points");
    hjb->add_option("--T", P.T, "horizon");
    hjb->add_option("--dt", P.hjb_dt, "time step (0: from CFL)");
    hjb->add_option("--snapshots", P.snapshots, "number of output times after 0");

    auto* audit = app.add_subcommand("audit", "comparison-principle condition audit");
    model(audit);
    outopt(audit);
    vec(audit, "--x-lo", P.xlo, "region lower corner (default 0.1)");
    vec(audit, "--x-hi", P.xhi, "region upper corner (default 5)");
    audit->add_option("--samples", P.samples, "samples per slow coordinate");
    audit->add_option("--seed", P.seed, "seed for the modulus samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    CLI::App* sub = app.get_subcommands().front();
    const json cfg = config_of(sub);
    try {
        return run(sub->get_name(), P, Output{P.out}, cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage: " << e.what() << "\n" << sub->help();
        return 2;
    }
}

}  // namespace msldp::cli
