// blowup-lab: command-line front end for the blowup library.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blowup/acceptance.hpp"
#include "blowup/evolve.hpp"
#include "blowup/io.hpp"
#include "blowup/logtw.hpp"
#include "blowup/matcher.hpp"
#include "blowup/models.hpp"
#include "blowup/profiles.hpp"
#include "blowup/selfsim.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace blowup;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit code 1: the computation ran but did not converge or failed a check.
struct ComputeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Ctx {
    fs::path out;
    unsigned jobs = 1;
    std::vector<std::string> outputs;
    std::mutex mu;

    void write(const std::string& name, const std::string& text) {
        fs::create_directories(out);
        const fs::path p = out / name;
        write_text(p.string(), text);
        std::lock_guard<std::mutex> lock(mu);
        outputs.push_back(p.string());
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
};

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string profile_csv(const SampledProfile& p, const std::string& f = "f") {
    Table t;
    t.add("x", p.xs);
    t.add(f, p.values);
    for (int k = 1; k <= p.max_derivative(); ++k) t.add(f + "_d" + std::to_string(k), p.derivative(k));
    return to_csv(t);
}

json profile_meta(const SampledProfile& p) {
    json j;
    j["points"] = p.size();
    if (p.support) j["support"] = {p.support->first, p.support->second};
    json m = json::object();
    for (const auto& [k, v] : p.metadata) m[k] = v;
    j["metadata"] = m;
    return j;
}

json shooting_json(const ShootingResult& r) {
    json j;
    j["converged"] = r.converged;
    j["objective_residual"] = r.objective_residual;
    json par = json::object();
    for (const auto& [k, v] : r.parameters) par[k] = v;
    j["parameters"] = par;
    j["diagnostic"] = r.diagnostic;
    return j;
}

// ---------------------------------------------------------------------------
// models

int cmd_models_list(Ctx& ctx) {
    json rows = json::array();
    for (const auto& m : registry()) {
        json r;
        r["name"] = m.name;
        r["family"] = to_string(m.family);
        r["spatial_order"] = m.spatial_order;
        r["nonlinearity_power"] = m.nonlinearity_power;
        r["divergent"] = m.divergent;
        r["blow_up_rate_exponent"] = m.blow_up_rate_exponent.str();
        r["pde"] = m.pde;
        r["separable_ode"] = separable_ode(m.id).text;
        const auto red = find_reduction(m.id);
        r["reduction"] = red ? json(red->normalized_text) : json(nullptr);
        r["has_logtw_law"] = has_logtw_law(m.id);
        rows.push_back(r);
    }
    ctx.write_json("models.json", rows);
    for (const auto& m : registry()) std::cout << m.name << "  " << m.pde << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// profiles

struct ThresholdOpts {
    std::string problem = "all";
};

int cmd_profiles_threshold(Ctx& ctx, const ThresholdOpts& o) {
    std::vector<StationaryKind> kinds;
    if (lower(o.problem) == "all")
        kinds = {StationaryKind::RD2, StationaryKind::RD4, StationaryKind::RD6, StationaryKind::NDE3};
    else
        kinds = {parse_stationary(lower(o.problem))};
    json rows = json::array();
    for (auto k : kinds) {
        const auto p = stationary_problem(k);
        const double L0 = threshold_length(p);
        json r;
        r["problem"] = p.name;
        r["L0"] = L0;
        r["determinant_at_L0"] = boundary_determinant(p, L0);
        if (k == StationaryKind::RD4) r["tan_plus_tanh"] = std::tan(L0) + std::tanh(L0);
        rows.push_back(r);
        std::cout << p.name << "  L0 = " << format17(L0) << "\n";
    }
    ctx.write_json("threshold.json", rows);
    return 0;
}

struct StationaryOpts {
    std::string problem = "rd4";
    int grid = 2001;
    std::string normalization = "value_at_origin";
};

int cmd_profiles_stationary(Ctx& ctx, const StationaryOpts& o) {
    Normalization norm;
    if (o.normalization == "value_at_origin") norm = Normalization::value_at_origin;
    else if (o.normalization == "unit_C1") norm = Normalization::unit_C1;
    else throw std::invalid_argument("unknown normalization '" + o.normalization + "'");
    const auto p = stationary_problem(parse_stationary(lower(o.problem)));
    const auto prof = stationary_profile(p, norm, static_cast<std::size_t>(o.grid));
    const std::string stem = std::string("stationary_") + p.name;
    ctx.write(stem + ".csv", profile_csv(prof));
    json meta = profile_meta(prof);
    meta["problem"] = p.name;
    meta["normalization"] = o.normalization;
    ctx.write_json(stem + ".json", meta);
    return 0;
}

// ---------------------------------------------------------------------------
// logtw

std::vector<ModelId> law_models(const std::string& m) {
    if (lower(m) == "all") {
        std::vector<ModelId> v;
        for (ModelId id : all_models)
            if (has_logtw_law(id)) v.push_back(id);
        return v;
    }
    return {parse_model(m)};
}

struct LawOpts {
    std::string model = "all";
};

int cmd_logtw_law(Ctx& ctx, const LawOpts& o) {
    json rows = json::array();
    for (ModelId id : law_models(o.model)) {
        const auto law = logtw_law(id);
        const auto ode = logtw_ode(id, 1.0);
        json r;
        r["model"] = to_string(id);
        r["coefficient"] = law.coefficient;
        r["power"] = law.power.str();
        r["log_power"] = law.log_power.str();
        r["ode"] = {{"order", ode.order},
                    {"rate_term_coefficient", ode.rate_term_coefficient},
                    {"sign", ode.sign},
                    {"sigma", ode.sigma},
                    {"lambda1", ode.lambda1},
                    {"lambda2", ode.lambda2}};
        rows.push_back(r);
        std::cout << to_string(id) << "  a = " << format17(law.coefficient) << "  p = " << law.power.str()
                  << "  q = " << law.log_power.str() << "\n";
    }
    ctx.write_json("logtw_law.json", rows);
    return 0;
}

struct ResidualOpts {
    std::string model = "all";
    double eta_from = -1e3;
    double eta_to = -1e6;
    int points = 31;
    int corrections = 1;
    double lambda = 1.0;
    double perturb = 0.0;
};

int cmd_logtw_residual(Ctx& ctx, const ResidualOpts& o) {
    if (!(o.eta_from < 0 && o.eta_to < 0)) throw std::invalid_argument("logtw residual: eta range must be negative");
    if (o.points < 2) throw std::invalid_argument("logtw residual: need at least 2 points");
    auto z = geomspace(-o.eta_from, -o.eta_to, static_cast<std::size_t>(o.points));
    Table t;
    std::vector<double> etas;
    for (double v : z) etas.push_back(-v);
    t.add("eta", etas);
    json summary = json::array();
    for (ModelId id : law_models(o.model)) {
        auto law = logtw_law(id);
        law.coefficient *= 1 + o.perturb;
        const auto ode = logtw_ode(id, o.lambda);
        std::vector<double> r;
        for (double e : etas) r.push_back(logtw_residual(ode, law, e, o.corrections));
        summary.push_back({{"model", to_string(id)}, {"first", r.front()}, {"last", r.back()}, {"decays", r.back() < r.front()}});
        t.add(to_string(id), r);
    }
    ctx.write("logtw_residual.csv", to_csv(t));
    ctx.write_json("logtw_residual.json",
                   {{"corrections", o.corrections}, {"lambda", o.lambda}, {"perturb", o.perturb}, {"models", summary}});
    return 0;
}

struct IntegrateOpts {
    std::string model = "RD4";
    double eta_start = -1e4;
    double eta_end = -1e3;
    int corrections = 1;
    double lambda = 1.0;
    double rel_tol = 1e-11;
};

int cmd_logtw_integrate(Ctx& ctx, const IntegrateOpts& o) {
    const ModelId id = parse_model(o.model);
    const auto tr = integrate_logtw(logtw_ode(id, o.lambda), o.eta_start, o.eta_end, o.corrections,
                                    {o.rel_tol, o.rel_tol * 1e-3});
    Table t;
    t.add("eta", tr.etas);
    t.add("g", tr.g);
    t.add("ratio", tr.ratio);
    const std::string stem = std::string("logtw_integrate_") + to_string(id);
    ctx.write(stem + ".csv", to_csv(t));
    double lo = INFINITY, hi = -INFINITY;
    for (double r : tr.ratio) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    ctx.write_json(stem + ".json", {{"model", to_string(id)},
                                    {"status", to_string(tr.status)},
                                    {"diagnostic", tr.diagnostic},
                                    {"samples", tr.etas.size()},
                                    {"ratio_min", lo},
                                    {"ratio_max", hi}});
    if (tr.status != IvpStatus::ok) throw ComputeFailure("logtw integrate: " + std::string(to_string(tr.status)) + "; " + tr.diagnostic);
    return 0;
}

// ---------------------------------------------------------------------------
// selfsim

struct ZkOpts {
    int grid = 2001;
};

int cmd_selfsim_zk(Ctx& ctx, const ZkOpts& o) {
    const auto p = zk_profile(o.grid);
    ctx.write("zk.csv", profile_csv(p, "theta"));
    json meta = profile_meta(p);
    meta["max_value"] = p.max_abs();
    ctx.write_json("zk.json", meta);
    return 0;
}

struct PmeOpts {
    int pattern = -1;  // -1: all presets
    int samples = 2000;
    double tol = 1e-9;
};

int cmd_selfsim_pme4(Ctx& ctx, const PmeOpts& o) {
    if (o.pattern < -1 || o.pattern > 3) throw std::invalid_argument("pme4: --pattern must be 0..3 (or -1 for all)");
    std::vector<int> ks;
    if (o.pattern < 0) ks = {0, 1, 2, 3};
    else ks = {o.pattern};
    std::vector<ShootingResult> res(ks.size());
    parallel_for(ks.size(), ctx.jobs, [&](std::size_t i) {
        const auto pat = pme4_pattern(ks[i]);
        Pme4Options opt;
        opt.x0_hint = pat.x0_hint;
        opt.samples = o.samples;
        opt.tol = o.tol;
        res[i] = pme4_shoot(pat.symmetry, {pat.a, pat.b}, opt);
    });
    std::string failed;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const int k = ks[i];
        const auto& r = res[i];
        const std::string stem = "pme4_F" + std::to_string(k);
        json j = shooting_json(r);
        j["pattern"] = k;
        j["symmetry"] = to_string(pme4_pattern(k).symmetry);
        if (r.profile.size() > 0) {
            ctx.write(stem + ".csv", profile_csv(r.profile, "F"));
            j["dominant_zeros"] = dominant_zeros(r.profile);
            j["sign_changes"] = sign_changes(r.profile.xs, r.profile.values).size();
            j["energy"] = ls_energy(r.profile);
            try {
                j["multiindex"] = classify_pattern(r.profile).str();
            } catch (const AmbiguousCrossingError& e) {
                j["multiindex"] = nullptr;
                j["multiindex_error"] = e.what();
            }
        }
        ctx.write_json(stem + ".json", j);
        std::cout << "F" << k << "  converged=" << r.converged << "  residual=" << r.objective_residual << "\n";
        if (!r.converged) failed += " F" + std::to_string(k);
    }
    if (!failed.empty()) throw ComputeFailure("pme4: not converged:" + failed);
    return 0;
}

struct TfeOpts {
    double x0 = 2.83;
    double C = 1.0;
    double delta_factor = 1e-4;
    double tol = 1e-10;
};

int cmd_selfsim_tfe4(Ctx& ctx, const TfeOpts& o) {
    Tfe4Options opt;
    opt.delta_factor = o.delta_factor;
    opt.tol = o.tol;
    const auto r = tfe4_shoot({o.x0, o.C}, opt);
    if (r.profile.size() > 0) ctx.write("tfe4.csv", profile_csv(r.profile, "F"));
    ctx.write_json("tfe4.json", shooting_json(r));
    if (!r.converged) throw ComputeFailure("tfe4: " + r.diagnostic);
    std::cout << "x0 = " << format17(r.parameters.at("x0")) << "\n";
    return 0;
}

struct NdeOpts {
    double amplitude_scale = 1.0;
    double delta = 1e-3;
    double x_max = 60.0;
};

int cmd_selfsim_nde(Ctx& ctx, const NdeOpts& o) {
    NdeOptions opt;
    opt.delta = o.delta;
    opt.x_max = o.x_max;
    const auto r = nde_div_shoot(o.amplitude_scale, opt);
    if (r.profile.size() > 0) ctx.write("nde.csv", profile_csv(r.profile, "F"));
    ctx.write_json("nde.json", shooting_json(r));
    if (!r.converged) throw ComputeFailure("nde: " + r.diagnostic);
    return 0;
}

struct CategoryOpts {
    double r_min = 0.5;
    double r_max = 100.0;
    double r_step = 0.5;
    int eigen = 5;
};

int cmd_selfsim_category(Ctx& ctx, const CategoryOpts& o) {
    if (!(o.r_min > 0 && o.r_max >= o.r_min && o.r_step > 0)) throw std::invalid_argument("category: bad R range");
    if (o.eigen < 1) throw std::invalid_argument("category: --eigen must be >= 1");
    const auto n = static_cast<std::size_t>(std::floor((o.r_max - o.r_min) / o.r_step + 1e-9)) + 1;
    std::vector<double> Rs, l0, ratio;
    std::vector<std::vector<double>> lam(static_cast<std::size_t>(o.eigen));
    for (std::size_t i = 0; i < n; ++i) {
        const double R = o.r_min + o.r_step * static_cast<double>(i);
        Rs.push_back(R);
        l0.push_back(ls_category(R));
        ratio.push_back(l0.back() / R);
        const auto ev = ls_eigenvalues(R, o.eigen);
        for (int k = 0; k < o.eigen; ++k) lam[static_cast<std::size_t>(k)].push_back(ev[static_cast<std::size_t>(k)]);
    }
    Table t;
    t.add("R", Rs);
    t.add("l0", l0);
    t.add("l0_over_R", ratio);
    for (int k = 0; k < o.eigen; ++k) t.add("lambda" + std::to_string(k + 1), lam[static_cast<std::size_t>(k)]);
    ctx.write("category.csv", to_csv(t));
    ctx.write_json("category.json", {{"two_over_pi", 2 / M_PI}, {"points", n}});
    return 0;
}

struct ClassifyOpts {
    std::string input;
    std::string column = "F";
    int pattern = 0;
    double slope_tol = 1e-6;
};

int cmd_selfsim_classify(Ctx& ctx, const ClassifyOpts& o) {
    SampledProfile p;
    std::string source;
    if (!o.input.empty()) {
        const Table t = read_csv(o.input);
        auto col = [&t](const std::string& name, std::size_t fallback) -> const std::vector<double>& {
            for (std::size_t j = 0; j < t.header.size(); ++j)
                if (t.header[j] == name) return t.columns[j];
            if (fallback >= t.columns.size()) throw std::invalid_argument("classify: input lacks column '" + name + "'");
            return t.columns[fallback];
        };
        p.xs = col("x", 0);
        p.values = col(o.column, 1);
        p.validate();
        source = o.input;
    } else {
        const auto pat = pme4_pattern(o.pattern);
        Pme4Options opt;
        opt.x0_hint = pat.x0_hint;
        const auto r = pme4_shoot(pat.symmetry, {pat.a, pat.b}, opt);
        if (!r.converged) throw ComputeFailure("classify: pattern F" + std::to_string(o.pattern) + " did not converge");
        p = r.profile;
        source = "pme4 pattern F" + std::to_string(o.pattern);
    }
    MultiIndex mi;
    try {
        mi = classify_pattern(p, o.slope_tol);
    } catch (const AmbiguousCrossingError& e) {
        throw ComputeFailure(e.what());
    }
    json entries = json::array();
    for (const auto& e : mi.entries) entries.push_back({{"count", e.count}, {"signed", e.is_signed}});
    ctx.write_json("classify.json", {{"source", source}, {"multiindex", mi.str()}, {"entries", entries}});
    std::cout << mi.str() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// match

int cmd_match_table(Ctx& ctx) {
    json rows = json::array();
    for (ModelId id : all_models) {
        const auto a = predict_amplitude(id);
        json r;
        r["model"] = to_string(id);
        r["kind"] = to_string(a.kind);
        if (a.kind == AmplitudeKind::log_log) {
            r["exponent"] = a.exponent.str();
            r["coefficient"] = a.coefficient;
        }
        rows.push_back(r);
        std::cout << to_string(id) << "  " << to_string(a.kind)
                  << (a.kind == AmplitudeKind::log_log ? "  " + a.exponent.str() : std::string()) << "\n";
    }
    ctx.write_json("amplitude_table.json", rows);
    return 0;
}

struct IdentityOpts {
    std::string model = "RD4";
    std::string candidate = "stationary";  // stationary | manufactured | bump
    int power = 1;
    double min_gap = 1e-12;
    double tol = 1e-10;
};

int cmd_match_identity(Ctx& ctx, const IdentityOpts& o) {
    const ModelId id = parse_model(o.model);
    if (!detail::has_identity(id)) throw std::invalid_argument("identity: model must be RD4, RD6 or NDE3");
    SampledProfile cand;
    if (o.candidate == "manufactured") {
        if (id != ModelId::RD4) throw std::invalid_argument("identity: manufactured candidate exists for RD4 only");
        cand = manufactured_rd4(1.0, -0.5, 1.0, o.tol);
    } else if (o.candidate == "stationary") {
        const StationaryKind k = id == ModelId::RD4 ? StationaryKind::RD4 : id == ModelId::RD6 ? StationaryKind::RD6 : StationaryKind::NDE3;
        const auto st = stationary_solution(stationary_problem(k));
        cand.xs = clustered_grid(-st.L0, st.L0, 801, o.min_gap, 60);
        cand.derivative_values.assign(5, {});
        for (double x : cand.xs) {
            cand.values.push_back(st.eval(x));
            for (int d = 1; d <= 5; ++d) cand.derivative_values[static_cast<std::size_t>(d - 1)].push_back(st.eval(x, d));
        }
    } else if (o.candidate == "bump") {
        if (o.power < 1) throw std::invalid_argument("identity: --power must be >= 1");
        const int m = o.power;
        cand = sample_function([m](const Jet& x) { return ipow(1.0 - x * x, m); },
                               clustered_grid(-1.0, 1.0, 801, o.min_gap, 60), 5);
    } else {
        throw std::invalid_argument("identity: unknown candidate '" + o.candidate + "'");
    }
    const auto tr = nonexistence_identity(id, cand);
    Table t;
    t.add("x", tr.xs);
    t.add("identity", tr.identity_values);
    t.add("polynomial", tr.polynomial_terms);
    const std::string stem = "identity_" + lower(to_string(id)) + "_" + o.candidate;
    ctx.write(stem + ".csv", to_csv(t));
    ctx.write_json(stem + ".json", {{"model", to_string(id)},
                                    {"candidate", o.candidate},
                                    {"max_deviation", tr.max_deviation},
                                    {"mean", tr.mean},
                                    {"skipped_xs", tr.skipped_xs},
                                    {"endpoint_contradiction", tr.endpoint_contradiction}});
    std::cout << "max deviation " << tr.max_deviation << "  endpoint contradiction " << tr.endpoint_contradiction << "\n";
    return 0;
}

double default_c1() {
    return stationary_profile(stationary_problem(StationaryKind::RD4)).metadata.at("C1");
}

struct EulerOpts {
    double c1 = 0;  // 0: RD4 stationary C1
    double lambda_min = -2;
    double lambda_max = 4;
    int points = 13;
    int hermite = 10;
};

int cmd_match_euler(Ctx& ctx, const EulerOpts& o) {
    if (o.points < 2) throw std::invalid_argument("euler: need at least 2 points");
    const double c1 = o.c1 != 0 ? o.c1 : default_c1();
    Table t;
    const auto lams = linspace(o.lambda_min, o.lambda_max, static_cast<std::size_t>(o.points));
    t.add("lambda", lams);
    std::vector<std::vector<double>> cols(8);
    std::vector<double> osc;
    for (double l : lams) {
        const auto r = euler_indicial_roots(c1, l);
        for (std::size_t i = 0; i < 4; ++i) {
            cols[2 * i].push_back(r.roots[i].real());
            cols[2 * i + 1].push_back(r.roots[i].imag());
        }
        osc.push_back(r.has_complex_pair ? 1.0 : 0.0);
    }
    for (std::size_t i = 0; i < 4; ++i) {
        t.add("re_m" + std::to_string(i + 1), cols[2 * i]);
        t.add("im_m" + std::to_string(i + 1), cols[2 * i + 1]);
    }
    t.add("complex_pair", osc);
    ctx.write("euler.csv", to_csv(t));
    std::vector<double> herm;
    for (int k = 0; k <= o.hermite; ++k) herm.push_back(hermite_spectrum(k));
    ctx.write_json("euler.json", {{"C1", c1}, {"hermite_spectrum", herm}});
    return 0;
}

struct PhiOpts {
    double c1 = 0;
};

int cmd_match_phi(Ctx& ctx, const PhiOpts& o) {
    const double c1 = o.c1 != 0 ? o.c1 : default_c1();
    const auto p = phi_expansion(c1);
    ctx.write_json("phi.json", {{"C1", c1},
                                {"z2_log_z_coefficient", p.coefficient},
                                {"max_relative_residual", p.max_relative_residual},
                                {"free_constants", p.free_constants}});
    std::cout << "coefficient of z^2 ln z: " << format17(p.coefficient) << "\n";
    return 0;
}

struct AmpOdeOpts {
    double tau_max = 1e6;
};

int cmd_match_amplitude_ode(Ctx& ctx, const AmpOdeOpts& o) {
    const auto r = amplitude_ode_check(o.tau_max);
    Table t;
    t.add("tau", r.taus);
    t.add("A", r.A);
    t.add("s", r.s);
    t.add("mu", r.mu);
    t.add("mu_rate", r.mu_rate);
    std::vector<double> ratio;
    for (std::size_t i = 0; i < r.taus.size(); ++i)
        ratio.push_back(r.taus[i] > 1 ? r.A[i] / std::sqrt(std::log(r.taus[i])) : NAN);
    t.add("A_over_sqrt_ln_tau", ratio);
    ctx.write("amplitude_ode.csv", to_csv(t));
    ctx.write_json("amplitude_ode.json", {{"tau_max", r.tau_max}, {"A_end", r.A_end}, {"ratio", r.ratio}});
    std::cout << "A/sqrt(ln tau) at " << r.tau_max << ": " << format17(r.ratio) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evolve

struct EvolveOpts {
    std::string model = "RD4";
    double L = 0;  // 0: L_factor * L0
    double L_factor = 1.2;
    std::string bc = "dirichlet_clamped";
    int grid_n = 201;
    double tau_end = 5.0;
    double dt_init = 1e-4;
    double positivity_floor = 1e-10;
    std::string preset = "scaled_stationary";
    double amplitude = 1.5;
    double width = 0.5;
    double base = 0.1;
    std::string initial_csv;
    double amplitude_max = 100;
    double rel_tol = 1e-6;
    double abs_tol = 1e-9;
    double dt_max = 0.05;
    int checkpoints = 80;
    bool lyapunov_guard = false;
    std::vector<double> sweep;  // amplitudes run concurrently
};

EvolveConfig make_config(const EvolveOpts& o) {
    EvolveConfig c;
    c.model = parse_model(o.model);
    c.bc = parse_bc(o.bc);
    if (c.model != ModelId::RD2 && c.model != ModelId::RD4) throw EvolveConfigError("evolve: model must be RD2 or RD4");
    c.L = o.L > 0 ? o.L : o.L_factor * evolve_threshold(c.model);
    c.grid_n = o.grid_n;
    c.tau_end = o.tau_end;
    c.dt_init = o.dt_init;
    c.positivity_floor = o.positivity_floor;
    c.initial.preset = o.preset;
    c.initial.amplitude = o.amplitude;
    c.initial.width = o.width;
    c.initial.base = o.base;
    if (!o.initial_csv.empty()) {
        const Table t = read_csv(o.initial_csv);
        if (t.columns.empty()) throw EvolveConfigError("evolve: empty initial-data file");
        c.initial.preset = "custom";
        c.initial.values = t.columns.back();
    }
    c.amplitude_max = o.amplitude_max > 0 ? o.amplitude_max : std::numeric_limits<double>::infinity();
    c.rel_tol = o.rel_tol;
    c.abs_tol = o.abs_tol;
    c.dt_max = o.dt_max;
    c.checkpoints = o.checkpoints;
    c.lyapunov_guard = o.lyapunov_guard;
    validate(c);
    return c;
}

json trace_summary(const EvolveConfig& c, const EvolutionResult& r) {
    const auto& t = r.trace;
    json j;
    j["model"] = to_string(c.model);
    j["bc"] = to_string(c.bc);
    j["L"] = c.L;
    j["grid_n"] = c.grid_n;
    j["preset"] = c.initial.preset;
    j["amplitude"] = c.initial.amplitude;
    j["status"] = t.status;
    j["diagnostic"] = t.diagnostic;
    j["tau_reached"] = t.taus.empty() ? 0.0 : t.taus.back();
    j["checkpoints"] = t.taus.size();
    j["steps"] = t.steps;
    j["rejected"] = t.rejected;
    j["clip_events"] = t.clip_events;
    j["degeneracy_warning"] = t.degeneracy_warning;
    j["max_lyapunov_increase"] = t.max_lyapunov_increase;
    if (t.taus.size() >= 20) {
        const auto g = amplitude_fit(t);
        j["growth"] = {{"monotonicity_fraction", g.monotonicity_fraction},
                       {"fit_performed", g.fit_performed},
                       {"exponent", g.exponent},
                       {"ratio", g.ratio},
                       {"fit_points", g.fit_points},
                       {"verdict", g.verdict},
                       {"note", g.note}};
    } else {
        j["growth"] = {{"verdict", "inconclusive at desk scale: too few checkpoints for any fit"}};
    }
    j["final_profile"] = profile_meta(r.final_profile);
    return j;
}

int cmd_evolve_run(Ctx& ctx, const EvolveOpts& o) {
    std::vector<EvolveConfig> cfgs;
    if (o.sweep.empty()) {
        cfgs.push_back(make_config(o));
    } else {
        for (double a : o.sweep) {
            EvolveOpts oo = o;
            oo.amplitude = a;
            cfgs.push_back(make_config(oo));
        }
    }
    const bool many = cfgs.size() > 1;
    std::vector<EvolutionResult> res(cfgs.size());
    std::vector<std::string> stems(cfgs.size());
    fs::create_directories(ctx.out);
    parallel_for(cfgs.size(), ctx.jobs, [&](std::size_t i) {
        stems[i] = many ? "evolve_" + std::to_string(i) : std::string("evolve");
        const fs::path trace_path = ctx.out / (stems[i] + "_trace.csv");
        std::ofstream trace(trace_path, std::ios::binary);
        if (!trace) throw IoError("cannot open '" + trace_path.string() + "'");
        trace << "tau,A,lyapunov,shape_error,dt\n";
        res[i] = evolve_rescaled(cfgs[i], [&trace](double tau, double A, double ly, double se, double dt) {
            trace << format17(tau) << ',' << format17(A) << ',' << format17(ly) << ',' << format17(se) << ','
                  << format17(dt) << '\n';
            trace.flush();
        });
        std::lock_guard<std::mutex> lock(ctx.mu);
        ctx.outputs.push_back(trace_path.string());
    });
    std::string failed;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        ctx.write(stems[i] + "_final.csv", profile_csv(res[i].final_profile, "v"));
        ctx.write_json(stems[i] + ".json", trace_summary(cfgs[i], res[i]));
        const auto& t = res[i].trace;
        std::cout << stems[i] << "  status=" << t.status << "  tau=" << (t.taus.empty() ? 0.0 : t.taus.back())
                  << "  A=" << (t.amplitudes.empty() ? 0.0 : t.amplitudes.back()) << "\n";
        if (t.status == "step_underflow" || t.status == "max_steps") failed += " " + stems[i] + ": " + t.diagnostic;
    }
    if (!failed.empty()) throw ComputeFailure("evolve:" + failed);
    return 0;
}

// ---------------------------------------------------------------------------
// reproduce-all

int cmd_reproduce_all(Ctx& ctx) {
    int artifact_failures = 0;
    auto step = [&](const char* name, const std::function<int(Ctx&)>& fn) {
        try {
            fn(ctx);
        } catch (const std::exception& e) {
            ++artifact_failures;
            std::cerr << "reproduce-all: " << name << " failed: " << e.what() << "\n";
        }
    };
    step("models list", [](Ctx& c) { return cmd_models_list(c); });
    step("profiles threshold", [](Ctx& c) { return cmd_profiles_threshold(c, {}); });
    step("profiles stationary", [](Ctx& c) { return cmd_profiles_stationary(c, {}); });
    step("logtw law", [](Ctx& c) { return cmd_logtw_law(c, {}); });
    step("logtw residual", [](Ctx& c) { return cmd_logtw_residual(c, {}); });
    step("logtw integrate", [](Ctx& c) { return cmd_logtw_integrate(c, {}); });
    step("selfsim zk", [](Ctx& c) { return cmd_selfsim_zk(c, {}); });
    step("selfsim pme4", [](Ctx& c) { return cmd_selfsim_pme4(c, {}); });
    step("selfsim tfe4", [](Ctx& c) { return cmd_selfsim_tfe4(c, {}); });
    step("selfsim nde", [](Ctx& c) { return cmd_selfsim_nde(c, {}); });
    step("selfsim category", [](Ctx& c) { return cmd_selfsim_category(c, {}); });
    step("selfsim classify", [](Ctx& c) { return cmd_selfsim_classify(c, {}); });
    step("match table", [](Ctx& c) { return cmd_match_table(c); });
    step("match identity", [](Ctx& c) { return cmd_match_identity(c, {}); });
    step("match euler", [](Ctx& c) { return cmd_match_euler(c, {}); });
    step("match phi", [](Ctx& c) { return cmd_match_phi(c, {}); });
    step("match amplitude-ode", [](Ctx& c) { return cmd_match_amplitude_ode(c, {}); });
    step("evolve run", [](Ctx& c) { return cmd_evolve_run(c, {}); });

    namespace acc = acceptance;
    const std::size_t n = acc::criteria().size();
    std::vector<acc::CriterionResult> results(n);
    parallel_for(n, ctx.jobs, [&](std::size_t i) { results[i] = acc::run_criterion(static_cast<int>(i) + 1); });
    json rows = json::array();
    std::string text;
    int passed = 0;
    for (const auto& r : results) {
        rows.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds}, {"detail", r.detail}});
        text += acc::format_line(r) + "\n";
        if (r.pass) ++passed;
    }
    text += std::to_string(passed) + " of " + std::to_string(n) + " criteria passed\n";
    std::cout << text;
    ctx.write("acceptance.txt", text);
    ctx.write_json("acceptance.json", {{"passed", passed}, {"total", n}, {"criteria", rows}});
    if (artifact_failures > 0 || passed != static_cast<int>(n))
        throw ComputeFailure("reproduce-all: " + std::to_string(n - static_cast<std::size_t>(passed)) +
                             " acceptance criteria failed, " + std::to_string(artifact_failures) + " artifact steps failed");
    return 0;
}

struct Command {
    CLI::App* app;
    std::string name;
    std::function<int(Ctx&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blowup-lab: numerical laboratory for higher-order blow-up asymptotics", "blowup-lab"};
    app.set_version_flag("--version", kVersion);
    const char* env_out = std::getenv("BLOWUPLAB_OUT");
    std::string out = env_out && *env_out ? env_out : "results";
    unsigned jobs = 1;
    app.add_option("--out", out, "Output directory (default: $BLOWUPLAB_OUT or ./results)");
    app.add_option("--jobs", jobs, "Worker threads for sweeps")->check(CLI::Range(1u, 256u));
    app.set_config("--config", "", "TOML configuration file; command-line flags override it");
    app.require_subcommand(1);
    app.fallthrough();  // inherited: global options may follow the subcommand

    std::vector<Command> cmds;
    auto group = [&](const char* name, const char* help) {
        auto* g = app.add_subcommand(name, help);
        g->require_subcommand(1);
        return g;
    };

    auto* models = group("models", "Model registry");
    cmds.push_back({models->add_subcommand("list", "List registered models"), "models list", cmd_models_list});

    auto* profiles = group("profiles", "Stationary profiles");
    ThresholdOpts thr;
    auto* c_thr = profiles->add_subcommand("threshold", "Threshold lengths L0");
    c_thr->add_option("--problem", thr.problem, "rd2|rd4|rd6|nde3|all")->capture_default_str();
    cmds.push_back({c_thr, "profiles threshold", [&](Ctx& c) { return cmd_profiles_threshold(c, thr); }});
    StationaryOpts sto;
    auto* c_st = profiles->add_subcommand("stationary", "Sample a stationary profile");
    c_st->add_option("--problem", sto.problem, "rd2|rd4|rd6|nde3")->capture_default_str();
    c_st->add_option("--grid", sto.grid, "Grid points")->capture_default_str()->check(CLI::Range(5, 10000000));
    c_st->add_option("--normalization", sto.normalization, "value_at_origin|unit_C1")->capture_default_str();
    cmds.push_back({c_st, "profiles stationary", [&](Ctx& c) { return cmd_profiles_stationary(c, sto); }});

    auto* logtw = group("logtw", "Log-travelling-wave laws");
    LawOpts lawo;
    auto* c_law = logtw->add_subcommand("law", "Balance coefficients of the log-TW laws");
    c_law->add_option("--model", lawo.model, "Model name or 'all'")->capture_default_str();
    cmds.push_back({c_law, "logtw law", [&](Ctx& c) { return cmd_logtw_law(c, lawo); }});
    ResidualOpts reso;
    auto* c_res = logtw->add_subcommand("residual", "Relative ODE residual of the log-TW ansatz");
    c_res->add_option("--model", reso.model, "Model name or 'all'")->capture_default_str();
    c_res->add_option("--eta-from", reso.eta_from)->capture_default_str();
    c_res->add_option("--eta-to", reso.eta_to)->capture_default_str();
    c_res->add_option("--points", reso.points)->capture_default_str();
    c_res->add_option("--corrections", reso.corrections, "Ansatz terms (1-4)")->capture_default_str()->check(CLI::Range(1, 4));
    c_res->add_option("--lambda", reso.lambda)->capture_default_str();
    c_res->add_option("--perturb", reso.perturb, "Relative perturbation of the coefficient")->capture_default_str();
    cmds.push_back({c_res, "logtw residual", [&](Ctx& c) { return cmd_logtw_residual(c, reso); }});
    IntegrateOpts into;
    auto* c_int = logtw->add_subcommand("integrate", "Integrate the reduced log-TW ODE from the ansatz");
    c_int->add_option("--model", into.model)->capture_default_str();
    c_int->add_option("--eta-start", into.eta_start)->capture_default_str();
    c_int->add_option("--eta-end", into.eta_end)->capture_default_str();
    c_int->add_option("--corrections", into.corrections)->capture_default_str()->check(CLI::Range(1, 4));
    c_int->add_option("--lambda", into.lambda)->capture_default_str();
    c_int->add_option("--rel-tol", into.rel_tol)->capture_default_str();
    cmds.push_back({c_int, "logtw integrate", [&](Ctx& c) { return cmd_logtw_integrate(c, into); }});

    auto* selfsim = group("selfsim", "Self-similar profiles and diagnostics");
    ZkOpts zko;
    auto* c_zk = selfsim->add_subcommand("zk", "Explicit compactly supported profile");
    c_zk->add_option("--grid", zko.grid)->capture_default_str()->check(CLI::Range(3, 10000000));
    cmds.push_back({c_zk, "selfsim zk", [&](Ctx& c) { return cmd_selfsim_zk(c, zko); }});
    PmeOpts pmeo;
    auto* c_pme = selfsim->add_subcommand("pme4", "Shoot PME-4 patterns");
    c_pme->add_option("--pattern", pmeo.pattern, "0..3, or -1 for all")->capture_default_str();
    c_pme->add_option("--samples", pmeo.samples)->capture_default_str()->check(CLI::Range(100, 1000000));
    c_pme->add_option("--tol", pmeo.tol)->capture_default_str();
    cmds.push_back({c_pme, "selfsim pme4", [&](Ctx& c) { return cmd_selfsim_pme4(c, pmeo); }});
    TfeOpts tfeo;
    auto* c_tfe = selfsim->add_subcommand("tfe4", "Shoot the TFE-4 profile");
    c_tfe->add_option("--x0", tfeo.x0, "Initial interface guess")->capture_default_str();
    c_tfe->add_option("--C", tfeo.C, "Initial interface-series constant")->capture_default_str();
    c_tfe->add_option("--delta-factor", tfeo.delta_factor)->capture_default_str();
    c_tfe->add_option("--tol", tfeo.tol)->capture_default_str();
    cmds.push_back({c_tfe, "selfsim tfe4", [&](Ctx& c) { return cmd_selfsim_tfe4(c, tfeo); }});
    NdeOpts ndeo;
    auto* c_nde = selfsim->add_subcommand("nde", "Divergent NDE profile from its interface");
    c_nde->add_option("--amplitude-scale", ndeo.amplitude_scale)->capture_default_str();
    c_nde->add_option("--delta", ndeo.delta)->capture_default_str();
    c_nde->add_option("--x-max", ndeo.x_max)->capture_default_str();
    cmds.push_back({c_nde, "selfsim nde", [&](Ctx& c) { return cmd_selfsim_nde(c, ndeo); }});
    CategoryOpts cato;
    auto* c_cat = selfsim->add_subcommand("category", "Clamped-beam eigenvalue count l0(R)");
    c_cat->add_option("--r-min", cato.r_min)->capture_default_str();
    c_cat->add_option("--r-max", cato.r_max)->capture_default_str();
    c_cat->add_option("--r-step", cato.r_step)->capture_default_str();
    c_cat->add_option("--eigen", cato.eigen, "Eigenvalues tabulated per R")->capture_default_str();
    cmds.push_back({c_cat, "selfsim category", [&](Ctx& c) { return cmd_selfsim_category(c, cato); }});
    ClassifyOpts clo;
    auto* c_cl = selfsim->add_subcommand("classify", "Multiindex of a sampled pattern");
    c_cl->add_option("--input", clo.input, "CSV with columns x and F; omit to shoot --pattern");
    c_cl->add_option("--column", clo.column)->capture_default_str();
    c_cl->add_option("--pattern", clo.pattern)->capture_default_str()->check(CLI::Range(0, 3));
    c_cl->add_option("--slope-tol", clo.slope_tol)->capture_default_str();
    cmds.push_back({c_cl, "selfsim classify", [&](Ctx& c) { return cmd_selfsim_classify(c, clo); }});

    auto* match = group("match", "Matching and amplitude laws");
    cmds.push_back({match->add_subcommand("table", "Amplitude-law table"), "match table", cmd_match_table});
    IdentityOpts ido;
    auto* c_id = match->add_subcommand("identity", "Evaluate a first-integral identity on a candidate");
    c_id->add_option("--model", ido.model, "RD4|RD6|NDE3")->capture_default_str();
    c_id->add_option("--candidate", ido.candidate, "stationary|manufactured|bump")->capture_default_str();
    c_id->add_option("--power", ido.power, "Vanishing order of the bump candidate")->capture_default_str();
    c_id->add_option("--min-gap", ido.min_gap)->capture_default_str();
    c_id->add_option("--tol", ido.tol, "Integrator tolerance for the manufactured candidate")->capture_default_str();
    cmds.push_back({c_id, "match identity", [&](Ctx& c) { return cmd_match_identity(c, ido); }});
    EulerOpts euo;
    auto* c_eu = match->add_subcommand("euler", "Indicial roots near the endpoint");
    c_eu->add_option("--c1", euo.c1, "Boundary-layer coefficient (0: RD4 stationary value)")->capture_default_str();
    c_eu->add_option("--lambda-min", euo.lambda_min)->capture_default_str();
    c_eu->add_option("--lambda-max", euo.lambda_max)->capture_default_str();
    c_eu->add_option("--points", euo.points)->capture_default_str();
    c_eu->add_option("--hermite", euo.hermite, "Largest k of the Hermite spectrum")->capture_default_str();
    cmds.push_back({c_eu, "match euler", [&](Ctx& c) { return cmd_match_euler(c, euo); }});
    PhiOpts phio;
    auto* c_phi = match->add_subcommand("phi", "Leading singular term of Phi");
    c_phi->add_option("--c1", phio.c1, "Boundary-layer coefficient (0: RD4 stationary value)")->capture_default_str();
    cmds.push_back({c_phi, "match phi", [&](Ctx& c) { return cmd_match_phi(c, phio); }});
    AmpOdeOpts amo;
    auto* c_am = match->add_subcommand("amplitude-ode", "Integrate A' = exp(-A^2)");
    c_am->add_option("--tau-max", amo.tau_max)->capture_default_str();
    cmds.push_back({c_am, "match amplitude-ode", [&](Ctx& c) { return cmd_match_amplitude_ode(c, amo); }});

    auto* evolve = group("evolve", "Rescaled PDE evolution");
    EvolveOpts evo;
    auto* c_ev = evolve->add_subcommand("run", "Run the rescaled equation");
    c_ev->add_option("--model", evo.model, "RD2|RD4")->capture_default_str();
    c_ev->add_option("--L", evo.L, "Half-domain length (0: --L-factor times L0)")->capture_default_str();
    c_ev->add_option("--L-factor", evo.L_factor)->capture_default_str();
    c_ev->add_option("--bc", evo.bc, "dirichlet_clamped|neumann|periodic")->capture_default_str();
    c_ev->add_option("--grid-n", evo.grid_n)->capture_default_str();
    c_ev->add_option("--tau-end", evo.tau_end)->capture_default_str();
    c_ev->add_option("--dt-init", evo.dt_init)->capture_default_str();
    c_ev->add_option("--positivity-floor", evo.positivity_floor)->capture_default_str();
    c_ev->add_option("--preset", evo.preset, "scaled_stationary|gaussian_bump|constant")->capture_default_str();
    c_ev->add_option("--amplitude", evo.amplitude)->capture_default_str();
    c_ev->add_option("--width", evo.width)->capture_default_str();
    c_ev->add_option("--base", evo.base)->capture_default_str();
    c_ev->add_option("--initial-csv", evo.initial_csv, "Initial values (last column, one row per node)");
    c_ev->add_option("--amplitude-max", evo.amplitude_max, "Stop when A exceeds this (<= 0: never)")->capture_default_str();
    c_ev->add_option("--rel-tol", evo.rel_tol)->capture_default_str();
    c_ev->add_option("--abs-tol", evo.abs_tol)->capture_default_str();
    c_ev->add_option("--dt-max", evo.dt_max)->capture_default_str();
    c_ev->add_option("--checkpoints", evo.checkpoints)->capture_default_str();
    c_ev->add_flag("--lyapunov-guard", evo.lyapunov_guard, "Reject steps that raise the discrete energy");
    c_ev->add_option("--sweep", evo.sweep, "Initial amplitudes to run concurrently")->delimiter(',');
    cmds.push_back({c_ev, "evolve run", [&](Ctx& c) { return cmd_evolve_run(c, evo); }});

    cmds.push_back({app.add_subcommand("reproduce-all", "Regenerate every artifact and run the acceptance checks"),
                    "reproduce-all", cmd_reproduce_all});

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const Command* cmd = nullptr;
    for (const auto& c : cmds)
        if (c.app->parsed()) cmd = &c;
    if (!cmd) {
        std::cerr << app.help();
        return 2;
    }

    Ctx ctx;
    ctx.out = out;
    ctx.jobs = jobs;
    std::string stem = cmd->name;
    for (char& ch : stem)
        if (ch == ' ') ch = '-';
    const std::string digest = fnv1a_hex(cmd->name + "\n" + cmd->app->config_to_str(true, false));
    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    std::string error;
    try {
        code = cmd->run(ctx);
    } catch (const ComputeFailure& e) {
        code = 1;
        error = e.what();
    } catch (const std::invalid_argument& e) {
        code = 2;
        error = e.what();
    } catch (const EvolveConfigError& e) {
        code = 2;
        error = e.what();
    } catch (const UnknownModelError& e) {
        code = 2;
        error = e.what();
    } catch (const NoLawError& e) {
        code = 2;
        error = e.what();
    } catch (const IoError& e) {
        code = 2;
        error = e.what();
    } catch (const OutOfRangeError& e) {
        code = 2;
        error = e.what();
    } catch (const std::exception& e) {
        code = 1;
        error = e.what();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!error.empty()) std::cerr << "error: " << error << "\n";
    if (code == 2) return 2;
    try {
        json m;
        m["command"] = cmd->name;
        m["config_digest"] = digest;
        m["outputs"] = ctx.outputs;
        m["wall_time"] = wall;
        m["tool_version"] = kVersion;
        m["exit_code"] = code;
        if (!error.empty()) m["error"] = error;
        fs::create_directories(ctx.out);
        write_text((ctx.out / (stem + ".manifest.json")).string(), m.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: cannot write manifest: " << e.what() << "\n";
        return 1;
    }
    return code;
}
