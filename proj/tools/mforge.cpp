#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mforge/catalog.hpp"
#include "mforge/config.hpp"
#include "mforge/dynamics.hpp"
#include "mforge/nonlocal.hpp"

using namespace mforge;
using ordered_json = nlohmann::ordered_json;

namespace {

// Flag storage shared by all subcommands; every subcommand registers its
// own option bound to the same slot, so presence is tracked with booleans
// set by the parse callback (only the parsed subcommand's options fire).
struct Cli {
    std::string config_path, system, force;
    double k = 1.0, alpha = 1.0;
    std::uint64_t seed = 0;
    int samples = 0;
    double tol = 0;
    bool k_given = false, alpha_given = false, seed_given = false,
         samples_given = false, tol_given = false;

    std::string mu, mu1, mu2, integral, h, g, tag;
    std::string xi, coeff_x, coeff_v, coeff_w;
    double v0 = 0;
    bool v0_given = false;

    double x0 = 0, vinit = 0, w0 = 0, step = 0, t_end = 0;
    double abs_tol = 0, rel_tol = 0;
    bool x0_given = false, vinit_given = false, w0_given = false,
         step_given = false, t_end_given = false, abs_tol_given = false,
         rel_tol_given = false;
    std::string method, csv, quantity;
};

CLI::Option* mark(CLI::Option* o, bool& flag) {
    return o->each([&flag](const std::string&) { flag = true; });
}

void add_common(CLI::App* cmd, Cli& c) {
    cmd->add_option("--config", c.config_path, "INI config file");
    cmd->add_option("--system", c.system,
                    "catalog name (oscillator1, oscillator2, harmonic) or a "
                    "label for a custom force");
    cmd->add_option("--force", c.force, "custom force expression F(x, v)");
    mark(cmd->add_option("--k", c.k, "parameter k"), c.k_given);
    mark(cmd->add_option("--alpha", c.alpha, "parameter a"), c.alpha_given);
    mark(cmd->add_option("--seed", c.seed, "verification PRNG seed"),
         c.seed_given);
    mark(cmd->add_option("--samples", c.samples, "zero-test samples"),
         c.samples_given);
    mark(cmd->add_option("--tol", c.tol, "zero-test scaled tolerance"),
         c.tol_given);
}

Config merged_config(const Cli& c) {
    Config cfg;
    if (!c.config_path.empty()) cfg = parse_config_file(c.config_path);
    if (!c.system.empty()) cfg.name = c.system;
    if (!c.force.empty()) cfg.force = c.force;
    if (c.k_given) cfg.params["k"] = c.k;
    if (c.alpha_given) cfg.params["a"] = c.alpha;
    if (!c.mu.empty()) cfg.mu = c.mu;
    if (!c.mu1.empty()) cfg.mu1 = c.mu1;
    if (!c.mu2.empty()) cfg.mu2 = c.mu2;
    if (!c.integral.empty()) cfg.integral = c.integral;
    if (!c.h.empty()) cfg.h = c.h;
    if (!c.g.empty()) cfg.g = c.g;
    return cfg;
}

double task_num(const Config& cfg, const std::string& key, double dflt,
                bool* found = nullptr) {
    auto it = cfg.task.find(key);
    if (found) *found = it != cfg.task.end();
    if (it == cfg.task.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("task key '" + key + "' is not a number: '" +
                          it->second + "'");
    }
}

std::string task_str(const Config& cfg, const std::string& key,
                     const std::string& dflt) {
    auto it = cfg.task.find(key);
    return it == cfg.task.end() ? dflt : it->second;
}

VerifyOptions make_opts(const Cli& c, const Config& cfg) {
    VerifyOptions o;
    if (const char* env = std::getenv("MFORGE_SEED"))
        o.seed = std::strtoull(env, nullptr, 10);
    if (auto it = cfg.task.find("seed"); it != cfg.task.end())
        o.seed = std::strtoull(it->second.c_str(), nullptr, 10);
    if (c.seed_given) o.seed = c.seed;
    o.samples = static_cast<int>(task_num(cfg, "samples", o.samples));
    if (c.samples_given) o.samples = c.samples;
    o.tol = task_num(cfg, "tol", o.tol);
    if (c.tol_given) o.tol = c.tol;
    return o;
}

bool is_catalog_name(const std::string& n) {
    return n == "oscillator1" || n == "oscillator2" || n == "harmonic";
}

struct ResolvedSystem {
    Sode sode;
    std::unique_ptr<CatalogEntry> entry;  // set when catalog-backed
};

ResolvedSystem resolve_system(const Config& cfg) {
    if (is_catalog_name(cfg.name)) {
        double k = cfg.params.count("k") ? cfg.params.at("k") : 1.0;
        double a = cfg.params.count("a") ? cfg.params.at("a") : 1.0;
        auto entry =
            std::make_unique<CatalogEntry>(catalog_by_name(cfg.name, k, a));
        Sode s = entry->sode;
        if (!cfg.intervals.empty()) {
            Domain d = s.domain;
            for (const auto& [n, iv] : cfg.intervals) d.with(n, iv.lo, iv.hi);
            s = Sode(s.name, s.force, s.params, d);
        }
        return {std::move(s), std::move(entry)};
    }
    if (!cfg.force)
        throw ConfigError(
            "unknown system '" + cfg.name +
            "': give a catalog name or a custom force = \"<expr>\"");
    if (cfg.intervals.empty())
        throw ConfigError("custom system needs a [domain] section");
    return {Sode(cfg.name.empty() ? "custom" : cfg.name, parse(*cfg.force),
                 cfg.params, cfg.domain()),
            nullptr};
}

std::string need(const std::optional<std::string>& v, const char* what) {
    if (!v || v->empty())
        throw ConfigError(std::string("missing required ") + what);
    return *v;
}

// Reuse the catalog's certified artifact (branch domain included) when the
// requested expression matches it and no explicit domain was configured.
Multiplier resolve_multiplier(const ResolvedSystem& rs, const Config& cfg,
                              const Expr& mu, const VerifyOptions& opts) {
    if (rs.entry && cfg.intervals.empty())
        for (const auto& tm : rs.entry->multipliers)
            if (tm.value.expr == mu) return tm.value;
    return verify_multiplier(rs.sode, mu, std::nullopt, opts);
}

FirstIntegral resolve_integral(const ResolvedSystem& rs, const Config& cfg,
                               const Expr& i, const VerifyOptions& opts) {
    if (rs.entry && cfg.intervals.empty())
        for (const auto& ti : rs.entry->integrals)
            if (ti.value.expr == i) return ti.value;
    return verify_integral(rs.sode, i, std::nullopt, opts);
}

ordered_json j_interval(const Interval& iv) {
    return ordered_json::array({iv.lo, iv.hi});
}

ordered_json j_domain(const Domain& d) {
    ordered_json j = ordered_json::object();
    for (const auto& [n, iv] : d.vars) j[n] = j_interval(iv);
    return j;
}

ordered_json j_point(const EvalPoint& p) {
    ordered_json j = ordered_json::object();
    for (const auto& [n, v] : p) j[n] = v;
    return j;
}

ordered_json j_zero(const ZeroTestResult& r) {
    ordered_json j;
    j["verdict"] = verdict_name(r.verdict);
    j["max_scaled"] = r.max_scaled;
    j["used"] = r.used;
    j["skipped"] = r.skipped;
    if (r.witness) {
        j["witness"] = j_point(*r.witness);
        j["witness_value"] = r.witness_value;
    }
    return j;
}

ordered_json j_cert(const NonvanishingResult& c) {
    ordered_json j;
    j["ok"] = c.ok;
    j["sign"] = c.sign;
    j["min_abs"] = c.min_abs;
    if (!c.reason.empty()) j["reason"] = c.reason;
    if (c.witness) j["witness"] = j_point(*c.witness);
    return j;
}

ordered_json j_params(const Params& p) {
    ordered_json j = ordered_json::object();
    for (const auto& [n, v] : p) j[n] = v;
    return j;
}

ordered_json j_lagrangian(const Lagrangian& lag) {
    ordered_json j;
    j["closed"] = lag.L.is_closed();
    if (lag.L.is_closed())
        j["L"] = render(lag.L.expr());
    else
        j["note"] = lag.L.note();
    if (lag.phi2) j["phi2"] = render(*lag.phi2);
    j["gauge_note"] = lag.gauge_note;
    j["euler_lagrange"] = j_zero(lag.el_check);
    j["regular"] = j_cert(lag.regular);
    j["domain"] = j_domain(lag.domain);
    return j;
}

ordered_json base_report(const std::string& cmd, const Sode& s,
                         const VerifyOptions& o) {
    ordered_json j;
    j["command"] = cmd;
    j["system"] = {{"name", s.name}, {"force", render(s.force)}};
    j["params"] = j_params(s.params);
    j["domain"] = j_domain(s.domain);
    j["seed"] = o.seed;
    j["samples"] = o.samples;
    j["tol"] = o.tol;
    return j;
}

int emit(const ordered_json& j, bool ok) {
    std::cout << j.dump(2) << "\n";
    return ok ? 0 : 1;
}

int cmd_verify_multiplier(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    ResolvedSystem rs = resolve_system(cfg);
    std::string mu_text = need(cfg.mu, "--mu");
    Multiplier m = verify_multiplier(rs.sode, parse(mu_text), std::nullopt, opts);

    ordered_json j = base_report("verify-multiplier", rs.sode, opts);
    j["inputs"] = {{"mu", mu_text}};
    j["results"]["mu"] = render(m.expr);
    j["results"]["residual"] = render(m.residual);
    j["results"]["residual_check"] = j_zero(m.residual_check);
    j["results"]["certificate"] = j_cert(m.certificate);
    j["ok"] = m.verified();
    std::fprintf(stderr, "verify-multiplier %s: residual %s, certificate %s\n",
                 rs.sode.name.c_str(),
                 verdict_name(m.residual_check.verdict),
                 m.certificate.ok ? "ok" : "failed");
    return emit(j, m.verified());
}

int cmd_verify_integral(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    ResolvedSystem rs = resolve_system(cfg);
    std::string i_text = need(cfg.integral, "--integral");
    FirstIntegral i = verify_integral(rs.sode, parse(i_text), std::nullopt, opts);

    ordered_json j = base_report("verify-integral", rs.sode, opts);
    j["inputs"] = {{"integral", i_text}};
    j["results"]["integral"] = render(i.expr);
    j["results"]["residual"] = render(i.residual);
    j["results"]["residual_check"] = j_zero(i.verified);
    j["ok"] = i.ok();
    std::fprintf(stderr, "verify-integral %s: residual %s\n",
                 rs.sode.name.c_str(), verdict_name(i.verified.verdict));
    return emit(j, i.ok());
}

int cmd_derive_integral(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    ResolvedSystem rs = resolve_system(cfg);
    std::string mu1_text = need(cfg.mu1, "--mu1");
    std::string mu2_text = need(cfg.mu2, "--mu2");
    Multiplier m1 = resolve_multiplier(rs, cfg, parse(mu1_text), opts);
    Multiplier m2 = resolve_multiplier(rs, cfg, parse(mu2_text), opts);
    FirstIntegral i = integral_from_ratio(m2, m1, rs.sode, opts);

    ordered_json j = base_report("derive-integral", rs.sode, opts);
    j["inputs"] = {{"mu1", mu1_text}, {"mu2", mu2_text}};
    j["results"]["mu1_certificate"] = j_cert(m1.certificate);
    j["results"]["mu2_certificate"] = j_cert(m2.certificate);
    j["results"]["integral"] = render(i.expr);
    j["results"]["residual_check"] = j_zero(i.verified);
    j["results"]["domain"] = j_domain(i.domain);
    j["ok"] = i.ok();
    std::fprintf(stderr, "derive-integral %s: I = %s (%s)\n",
                 rs.sode.name.c_str(), render(i.expr).c_str(),
                 verdict_name(i.verified.verdict));
    return emit(j, i.ok());
}

double pick_v0(const Cli& c, const Multiplier& m) {
    if (c.v0_given) return c.v0;
    Interval vi = m.domain.interval("v");
    return vi.contains(0.0) ? 0.0 : 0.5 * (vi.lo + vi.hi);
}

int cmd_derive_lagrangian(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    ResolvedSystem rs = resolve_system(cfg);
    bool from_mu = cfg.mu && !cfg.mu->empty();
    bool from_i = cfg.integral && !cfg.integral->empty();
    if (from_mu == from_i)
        throw ConfigError(
            "derive-lagrangian needs exactly one of --mu or --integral");

    ordered_json j = base_report("derive-lagrangian", rs.sode, opts);
    Lagrangian lag;
    if (from_mu) {
        Multiplier m = resolve_multiplier(rs, cfg, parse(*cfg.mu), opts);
        double v0 = pick_v0(c, m);
        lag = lagrangian_from_multiplier(rs.sode, m, v0, opts);
        j["inputs"] = {{"mu", *cfg.mu}, {"v0", v0}};
        j["results"]["source"] = "multiplier";
    } else {
        FirstIntegral i = resolve_integral(rs, cfg, parse(*cfg.integral), opts);
        lag = lagrangian_from_integral(rs.sode, i, opts);
        j["inputs"] = {{"integral", *cfg.integral}};
        j["results"]["source"] = "integral";
    }
    j["results"]["lagrangian"] = j_lagrangian(lag);
    bool ok = lag.el_check.verdict == Verdict::Zero && lag.regular.ok;
    j["ok"] = ok;
    std::fprintf(stderr, "derive-lagrangian %s: EL %s, regularity %s\n",
                 rs.sode.name.c_str(), verdict_name(lag.el_check.verdict),
                 lag.regular.ok ? "ok" : "failed");
    return emit(j, ok);
}

int cmd_legendre(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    ResolvedSystem rs = resolve_system(cfg);
    std::string tag = c.tag.empty() ? task_str(cfg, "tag", "") : c.tag;

    Lagrangian lag;
    ordered_json inputs;
    if (!tag.empty()) {
        if (!rs.entry)
            throw ConfigError("--tag needs a catalog system");
        lag = rs.entry->lagrangian(tag);
        inputs["tag"] = tag;
    } else {
        std::string mu_text = need(cfg.mu, "--mu (or --tag)");
        Multiplier m = resolve_multiplier(rs, cfg, parse(mu_text), opts);
        double v0 = pick_v0(c, m);
        lag = lagrangian_from_multiplier(rs.sode, m, v0, opts);
        inputs["mu"] = mu_text;
        inputs["v0"] = v0;
    }
    Hamiltonian hm = legendre(lag, lag.domain, opts);

    double max_v = 0, max_id = 0;
    for (const auto& pt : sample_points(hm.domain, 32, opts.seed)) {
        double x = pt.at("x"), v = pt.at("v");
        double p = hm.p_at(x, v);
        max_v = std::max(max_v,
                         std::abs(hm.v_at(x, p) - v) / std::max(1.0, std::abs(v)));
        double rhs = p * v - lag.L(x, v);
        max_id = std::max(max_id, std::abs(hm.value(x, p) - rhs) /
                                      std::max(1.0, std::abs(rhs)));
    }
    bool ok = max_v <= 1e-10 && max_id <= 1e-9;

    ordered_json j = base_report("legendre", rs.sode, opts);
    j["inputs"] = inputs;
    j["results"]["p_of_v"] = render(hm.p_of_v);
    j["results"]["dp_dv"] = render(hm.dp_dv);
    if (hm.v_of_p) j["results"]["v_of_p"] = render(*hm.v_of_p);
    if (hm.H) j["results"]["H"] = render(*hm.H);
    if (!hm.branch_note.empty()) j["results"]["branch_note"] = hm.branch_note;
    j["results"]["roundtrip"] = {{"max_rel_v", max_v},
                                 {"max_rel_identity", max_id},
                                 {"samples", 32}};
    j["ok"] = ok;
    std::fprintf(stderr,
                 "legendre %s: %s, roundtrip max %.3g, identity max %.3g\n",
                 rs.sode.name.c_str(),
                 hm.H ? "closed H" : "numeric inverse", max_v, max_id);
    return emit(j, ok);
}

// Extend the base system by dw/dt = F h; when h fails its certificate over
// a v-interval straddling 0, retry once on the positive decade sub-branch.
ExtendedSystem make_extended(ResolvedSystem& rs, const Expr& h,
                             const Interval& w_range, std::string& note,
                             const VerifyOptions& opts) {
    try {
        return extend(rs.sode, h, w_range, opts);
    } catch (const VerifyError&) {
        Interval vi = rs.sode.domain.interval("v");
        if (!(vi.lo < 0 && vi.hi > 0)) throw;
        Domain d = rs.sode.domain;
        d.with("v", vi.hi / 10.0, vi.hi);
        Sode restricted(rs.sode.name, rs.sode.force, rs.sode.params, d);
        ExtendedSystem es = extend(restricted, h, w_range, opts);
        note = "h fails its non-vanishing certificate over the configured "
               "v-interval; auto-selected the positive branch v in [" +
               std::to_string(vi.hi / 10.0) + ", " + std::to_string(vi.hi) +
               "]";
        rs.sode = restricted;
        return es;
    }
}

Interval w_interval(const Config& cfg) {
    for (const auto& [n, iv] : cfg.intervals)
        if (n == "w") return iv;
    return Interval(-1.0, 1.0);
}

int cmd_nonlocal(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    ResolvedSystem rs = resolve_system(cfg);
    std::string h_text = need(cfg.h, "--h");
    std::string branch_note;
    ExtendedSystem es =
        make_extended(rs, parse(h_text), w_interval(cfg), branch_note, opts);
    Expr g = (cfg.g && !cfg.g->empty())
                 ? parse(*cfg.g)
                 : characteristic_g(es.h, rs.sode.params);
    NonlocalSymmetryCandidate cand = build_symmetry(es, g, opts);

    ordered_json j = base_report("nonlocal", rs.sode, opts);
    j["inputs"] = {{"h", h_text}};
    if (cfg.g && !cfg.g->empty()) j["inputs"]["g"] = *cfg.g;
    j["results"]["haux"] = render(es.haux);
    j["results"]["w_range"] = j_interval(es.domain.interval("w"));
    j["results"]["g"] = render(g);
    j["results"]["lambda"] = render(cand.lambda);
    ordered_json yj = ordered_json::object();
    for (const auto& coord : cand.y.coords)
        yj[coord] = render(cand.y.component(coord));
    j["results"]["Y"] = yj;
    ordered_json checks = ordered_json::array();
    for (const auto& r : cand.component_checks) checks.push_back(j_zero(r));
    j["results"]["bracket_checks"] = checks;
    if (!branch_note.empty()) j["results"]["branch_note"] = branch_note;
    j["ok"] = cand.ok();
    std::fprintf(stderr, "nonlocal %s: g = %s, bracket %s\n",
                 rs.sode.name.c_str(), render(g).c_str(),
                 cand.ok() ? "zero" : "nonzero");
    return emit(j, cand.ok());
}

int cmd_determining(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    ResolvedSystem rs = resolve_system(cfg);
    std::string h_text = need(cfg.h, "--h");
    std::string branch_note;
    ExtendedSystem es =
        make_extended(rs, parse(h_text), w_interval(cfg), branch_note, opts);

    PointSymmetryAnsatz an;
    an.deps = {"x", "v", "w"};
    ordered_json inputs = {{"h", h_text}};
    bool explicit_coeffs = !c.xi.empty() || !c.coeff_x.empty() ||
                           !c.coeff_v.empty() || !c.coeff_w.empty();
    if (explicit_coeffs) {
        an.xi = c.xi.empty() ? Expr::num(0) : parse(c.xi);
        an.coeffs = {c.coeff_x.empty() ? Expr::num(0) : parse(c.coeff_x),
                     c.coeff_v.empty() ? Expr::num(0) : parse(c.coeff_v),
                     c.coeff_w.empty() ? Expr::num(0) : parse(c.coeff_w)};
        inputs["xi"] = render(an.xi);
        inputs["coeff_x"] = render(an.coeffs[0]);
        inputs["coeff_v"] = render(an.coeffs[1]);
        inputs["coeff_w"] = render(an.coeffs[2]);
    } else {
        // Default ansatz Y = g X_H, the non-local symmetry candidate.
        Expr g = (cfg.g && !cfg.g->empty())
                     ? parse(*cfg.g)
                     : characteristic_g(es.h, rs.sode.params);
        an.xi = Expr::num(0);
        an.coeffs = {g * Expr::sym("v"), g * rs.sode.force, g * es.haux};
        inputs["g"] = render(g);
    }

    std::vector<Expr> res = determining_residuals(es, an);
    Domain dz = es.domain;
    bool needs_t = free_symbols(an.xi).count("t") > 0;
    for (const auto& r : res) needs_t = needs_t || free_symbols(r).count("t");
    if (needs_t && !dz.has("t")) dz = dz.with("t", Interval(0.0, 2.0));

    ordered_json j = base_report("determining", rs.sode, opts);
    j["inputs"] = inputs;
    if (!branch_note.empty()) j["results"]["branch_note"] = branch_note;
    ordered_json rj = ordered_json::array();
    bool ok = true;
    const char* names[] = {"x", "v", "w"};
    for (std::size_t i = 0; i < res.size(); ++i) {
        ZeroTestResult z = zero_test(res[i], dz, rs.sode.params, opts);
        ordered_json item;
        item["coordinate"] = names[i];
        item["residual"] = render(res[i]);
        item["check"] = j_zero(z);
        rj.push_back(item);
        ok = ok && z.verdict == Verdict::Zero;
    }
    j["results"]["residuals"] = rj;
    j["ok"] = ok;
    std::fprintf(stderr, "determining %s: %s\n", rs.sode.name.c_str(),
                 ok ? "all residuals zero" : "nonzero residual");
    return emit(j, ok);
}

int cmd_simulate(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    ResolvedSystem rs = resolve_system(cfg);

    bool has;
    double x0 = c.x0_given ? c.x0 : task_num(cfg, "x0", 0.0, &has);
    if (!c.x0_given && !has) throw ConfigError("missing required --x0");
    double v0 = c.vinit_given ? c.vinit : task_num(cfg, "v0", 0.0, &has);
    if (!c.vinit_given && !has) throw ConfigError("missing required --v0");

    IntegratorConfig icfg;
    std::string method =
        c.method.empty() ? task_str(cfg, "method", "rk4") : c.method;
    if (method == "rk4")
        icfg.method = Method::Rk4;
    else if (method == "rk45")
        icfg.method = Method::Rk45;
    else
        throw ConfigError("method must be rk4 or rk45, got '" + method + "'");
    icfg.step = c.step_given ? c.step : task_num(cfg, "step", 1e-3);
    icfg.t_end = c.t_end_given ? c.t_end : task_num(cfg, "t_end", 1.0);
    icfg.abs_tol =
        c.abs_tol_given ? c.abs_tol : task_num(cfg, "abs_tol", 1e-10);
    icfg.rel_tol =
        c.rel_tol_given ? c.rel_tol : task_num(cfg, "rel_tol", 1e-10);

    ordered_json j = base_report("simulate", rs.sode, opts);
    VectorField field = sode_to_field_extended(rs.sode);
    Domain dom = rs.sode.domain;
    std::vector<double> state = {x0, v0};
    j["inputs"] = {{"x0", x0}, {"v0", v0}, {"method", method},
                   {"step", icfg.step}, {"t_end", icfg.t_end}};
    if (cfg.h && !cfg.h->empty()) {
        ExtendedSystem es =
            extend(rs.sode, parse(*cfg.h), w_interval(cfg), opts);
        field = es.field;
        dom = es.domain;
        double w0 = c.w0_given ? c.w0 : task_num(cfg, "w0", 0.0);
        state.push_back(w0);
        j["inputs"]["h"] = *cfg.h;
        j["inputs"]["w0"] = w0;
    }

    Trajectory tr = integrate(field, state, icfg, dom, rs.sode.params);
    j["results"]["method"] = tr.method;
    j["results"]["steps"] = tr.times.size();
    j["results"]["t_final"] = tr.times.back();
    ordered_json fin = ordered_json::object();
    for (std::size_t i = 0; i < tr.names.size(); ++i)
        fin[tr.names[i]] = tr.states.back()[i];
    j["results"]["final_state"] = fin;
    j["results"]["truncated"] = tr.truncated;

    std::string q_text =
        c.quantity.empty() ? task_str(cfg, "quantity", "") : c.quantity;
    Expr q;
    if (!q_text.empty()) {
        q = parse(q_text);
        ConservationDrift drift = conservation_drift(tr, q, rs.sode.params);
        j["results"]["drift"] = {{"quantity", q_text},
                                 {"max_rel", drift.max_rel}};
    }
    std::string csv = c.csv.empty() ? task_str(cfg, "csv", "") : c.csv;
    if (!csv.empty()) {
        std::ofstream os(csv);
        if (!os) throw ConfigError("cannot open csv path '" + csv + "'");
        export_csv(tr, os, q_text.empty() ? nullptr : &q, rs.sode.params);
        j["results"]["csv"] = csv;
    }
    j["ok"] = true;
    std::fprintf(stderr, "simulate %s: %zu steps to t = %.6g%s\n",
                 rs.sode.name.c_str(), tr.times.size(), tr.times.back(),
                 tr.truncated ? " (truncated at domain exit)" : "");
    return emit(j, true);
}

int cmd_catalog(const Cli& c) {
    Config cfg = merged_config(c);
    VerifyOptions opts = make_opts(c, cfg);
    if (!is_catalog_name(cfg.name))
        throw ConfigError("catalog needs --system oscillator1, oscillator2, "
                          "or harmonic");
    double k = cfg.params.count("k") ? cfg.params.at("k") : 1.0;
    double a = cfg.params.count("a") ? cfg.params.at("a") : 1.0;
    CatalogEntry e = catalog_by_name(cfg.name, k, a);

    ordered_json j = base_report("catalog", e.sode, opts);
    ordered_json ms = ordered_json::array();
    for (const auto& tm : e.multipliers) {
        ordered_json m;
        m["tag"] = tm.tag;
        m["mu"] = render(tm.value.expr);
        m["domain"] = j_domain(tm.value.domain);
        m["residual_check"] = j_zero(tm.value.residual_check);
        m["certificate"] = j_cert(tm.value.certificate);
        ms.push_back(m);
    }
    j["results"]["multipliers"] = ms;
    ordered_json is = ordered_json::array();
    for (const auto& ti : e.integrals) {
        ordered_json m;
        m["tag"] = ti.tag;
        m["integral"] = render(ti.value.expr);
        m["residual_check"] = j_zero(ti.value.verified);
        is.push_back(m);
    }
    j["results"]["integrals"] = is;
    ordered_json ls = ordered_json::array();
    for (const auto& tl : e.lagrangians) {
        ordered_json m = j_lagrangian(tl.value);
        m["tag"] = tl.tag;
        ls.push_back(m);
    }
    j["results"]["lagrangians"] = ls;
    ordered_json hs = ordered_json::array();
    for (const auto& th : e.hamiltonians) {
        ordered_json m;
        m["tag"] = th.tag;
        m["p_of_v"] = render(th.value.p_of_v);
        if (th.value.H) m["H"] = render(*th.value.H);
        if (!th.value.branch_note.empty())
            m["branch_note"] = th.value.branch_note;
        hs.push_back(m);
    }
    j["results"]["hamiltonians"] = hs;
    ordered_json ps = ordered_json::array();
    for (const auto& pf : e.printed) {
        ordered_json m;
        m["label"] = pf.label;
        m["text"] = pf.text;
        m["flag"] = pf.flag;
        ps.push_back(m);
    }
    j["results"]["printed"] = ps;
    j["results"]["notes"] = e.notes;
    j["ok"] = true;
    std::fprintf(stderr,
                 "catalog %s: %zu multipliers, %zu integrals, %zu "
                 "Lagrangians, %zu Hamiltonians\n",
                 e.name.c_str(), e.multipliers.size(), e.integrals.size(),
                 e.lagrangians.size(), e.hamiltonians.size());
    return emit(j, true);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jacobi-multiplier toolkit for x'' = F(x, x'): verify "
                 "multipliers and first integrals, derive Lagrangians and "
                 "Hamiltonians, build non-local symmetries, integrate flows"};
    app.require_subcommand(1);
    Cli c;

    auto* vm = app.add_subcommand("verify-multiplier",
                                  "check the multiplier condition for mu");
    add_common(vm, c);
    vm->add_option("--mu", c.mu, "multiplier expression");

    auto* vi = app.add_subcommand("verify-integral",
                                  "check Gamma(I) = 0 for a first integral");
    add_common(vi, c);
    vi->add_option("--integral", c.integral, "first-integral expression");

    auto* di = app.add_subcommand(
        "derive-integral", "first integral as the ratio mu2/mu1");
    add_common(di, c);
    di->add_option("--mu1", c.mu1, "denominator multiplier");
    di->add_option("--mu2", c.mu2, "numerator multiplier");

    auto* dl = app.add_subcommand(
        "derive-lagrangian",
        "Lagrangian from a multiplier (double v-antiderivative) or from a "
        "first integral (kernel quadrature)");
    add_common(dl, c);
    dl->add_option("--mu", c.mu, "multiplier expression");
    dl->add_option("--integral", c.integral, "first-integral expression");
    mark(dl->add_option("--v0", c.v0, "anchor velocity"), c.v0_given);

    auto* lg = app.add_subcommand("legendre",
                                  "Hamiltonian via the Legendre transform");
    add_common(lg, c);
    lg->add_option("--mu", c.mu, "multiplier for the Lagrangian");
    lg->add_option("--tag", c.tag, "catalog Lagrangian tag (L1, L2)");
    mark(lg->add_option("--v0", c.v0, "anchor velocity"), c.v0_given);

    auto* nl = app.add_subcommand(
        "nonlocal", "covering system dw/dt = F h and symmetry Y = g X_H");
    nl->set_help_flag("--help", "print help");  // frees -h for the density
    add_common(nl, c);
    nl->add_option("--h", c.h, "covering density h(v)");
    nl->add_option("--g", c.g, "characteristic g(v, w); default exp-form");

    auto* dt = app.add_subcommand(
        "determining", "first-prolongation determining residuals");
    dt->set_help_flag("--help", "print help");
    add_common(dt, c);
    dt->add_option("--h", c.h, "covering density h(v)");
    dt->add_option("--g", c.g, "characteristic for the default ansatz");
    dt->add_option("--xi", c.xi, "time coefficient of the ansatz");
    dt->add_option("--coeff-x", c.coeff_x, "x coefficient");
    dt->add_option("--coeff-v", c.coeff_v, "v coefficient");
    dt->add_option("--coeff-w", c.coeff_w, "w coefficient");

    auto* sm = app.add_subcommand("simulate", "integrate the phase flow");
    sm->set_help_flag("--help", "print help");
    add_common(sm, c);
    mark(sm->add_option("--x0", c.x0, "initial position"), c.x0_given);
    mark(sm->add_option("--v0", c.vinit, "initial velocity"), c.vinit_given);
    mark(sm->add_option("--w0", c.w0, "initial covering variable"),
         c.w0_given);
    mark(sm->add_option("--step", c.step, "rk4 step size"), c.step_given);
    mark(sm->add_option("--t-end", c.t_end, "final time"), c.t_end_given);
    mark(sm->add_option("--abs-tol", c.abs_tol, "rk45 abs tolerance"),
         c.abs_tol_given);
    mark(sm->add_option("--rel-tol", c.rel_tol, "rk45 rel tolerance"),
         c.rel_tol_given);
    sm->add_option("--method", c.method, "rk4 or rk45");
    sm->add_option("--csv", c.csv, "trajectory CSV output path");
    sm->add_option("--h", c.h, "covering density (adds the w coordinate)");
    sm->add_option("--quantity", c.quantity,
                   "expression whose drift to report");

    auto* ct = app.add_subcommand("catalog", "dump a certified entry");
    add_common(ct, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (vm->parsed()) return cmd_verify_multiplier(c);
        if (vi->parsed()) return cmd_verify_integral(c);
        if (di->parsed()) return cmd_derive_integral(c);
        if (dl->parsed()) return cmd_derive_lagrangian(c);
        if (lg->parsed()) return cmd_legendre(c);
        if (nl->parsed()) return cmd_nonlocal(c);
        if (dt->parsed()) return cmd_determining(c);
        if (sm->parsed()) return cmd_simulate(c);
        if (ct->parsed()) return cmd_catalog(c);
        std::fprintf(stderr, "no command\n");
        return 2;
    } catch (const ConfigError& e) {
        std::cout << ordered_json{{"command", cmd},
                                  {"error", e.what()},
                                  {"ok", false}}
                         .dump(2)
                  << "\n";
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::cout << ordered_json{{"command", cmd},
                                  {"error", e.what()},
                                  {"ok", false}}
                         .dump(2)
                  << "\n";
        std::fprintf(stderr, "expression parse error: %s\n", e.what());
        return 2;
    } catch (const VerifyError& e) {
        std::cout << ordered_json{{"command", cmd},
                                  {"error", e.what()},
                                  {"ok", false}}
                         .dump(2)
                  << "\n";
        std::fprintf(stderr, "verification failure: %s\n", e.what());
        return 1;
    } catch (const CatalogError& e) {
        std::cout << ordered_json{{"command", cmd},
                                  {"error", e.what()},
                                  {"ok", false}}
                         .dump(2)
                  << "\n";
        std::fprintf(stderr, "catalog failure: %s\n", e.what());
        return 1;
    } catch (const EvalError& e) {
        std::cout << ordered_json{{"command", cmd},
                                  {"error", e.what()},
                                  {"ok", false}}
                         .dump(2)
                  << "\n";
        std::fprintf(stderr, "evaluation failure: %s\n", e.what());
        return 1;
    } catch (const Error& e) {
        std::cout << ordered_json{{"command", cmd},
                                  {"error", e.what()},
                                  {"ok", false}}
                         .dump(2)
                  << "\n";
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
