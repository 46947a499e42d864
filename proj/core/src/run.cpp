#include "crossdiff/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "crossdiff/csv.hpp"
#include "crossdiff/errors.hpp"

namespace crossdiff {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

std::string join(const std::string& path, const char* key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) fail(join(path, it.key().c_str()), "unknown field");
    }
}

const json* find(const json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& path) {
    const json* v = find(j, key);
    return v ? as_number(*v, join(path, key)) : fallback;
}

int int_or(const json& j, const char* key, int fallback, const std::string& path) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(join(path, key), "expected an integer");
    return v->get<int>();
}

bool bool_or(const json& j, const char* key, bool fallback, const std::string& path) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(join(path, key), "expected a boolean");
    return v->get<bool>();
}

std::string string_or(const json& j, const char* key, const std::string& fallback,
                      const std::string& path) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_string()) fail(join(path, key), "expected a string");
    return v->get<std::string>();
}

std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

DomainSpec parse_domain(const json& j, const std::string& path) {
    check_keys(j, path, {"dim", "a", "b", "n", "radius", "h"});
    DomainSpec d;
    d.dim = int_or(j, "dim", 1, path);
    if (d.dim != 1 && d.dim != 2) fail(join(path, "dim"), "must be 1 or 2");
    d.a = number_or(j, "a", d.a, path);
    d.b = number_or(j, "b", d.b, path);
    d.n = int_or(j, "n", d.n, path);
    d.radius = number_or(j, "radius", d.radius, path);
    d.h = number_or(j, "h", d.h, path);
    if (d.dim == 1) {
        if (!(d.b > d.a)) fail(join(path, "b"), "interval end must exceed the start");
        if (d.n < 2) fail(join(path, "n"), "need at least two nodes");
    } else {
        if (!(d.radius > 0)) fail(join(path, "radius"), "must be positive");
        if (!(d.h > 0) || d.h > d.radius) fail(join(path, "h"), "must lie in (0, radius]");
    }
    return d;
}

ModelParams parse_model(const json& j, const std::string& path) {
    check_keys(j, path,
               {"eps", "D", "c11", "c22", "mass_r", "mass_b", "kernel", "convolution", "potential",
                "interaction", "gradient"});
    ModelParams p;
    const json* c11 = find(j, "c11");
    if (!c11) fail(join(path, "c11"), "missing mandatory field");
    p.c11 = as_number(*c11, join(path, "c11"));
    const json* c22 = find(j, "c22");
    if (!c22) fail(join(path, "c22"), "missing mandatory field");
    p.c22 = as_number(*c22, join(path, "c22"));
    if (p.c11 > 0 || p.c22 > 0) fail(join(path, "c11"), "self-interaction constants must be <= 0");

    p.eps = number_or(j, "eps", 0.0, path);
    if (p.eps < 0) fail(join(path, "eps"), "must be >= 0");
    p.D = number_or(j, "D", 1.0, path);
    if (!(p.D > 0)) fail(join(path, "D"), "must be positive");
    p.mass_r = number_or(j, "mass_r", p.mass_r, path);
    p.mass_b = number_or(j, "mass_b", p.mass_b, path);
    if (!(p.mass_r > 0) || !(p.mass_b > 0)) fail(join(path, "mass_r"), "masses must be positive");

    if (const json* k = find(j, "kernel")) {
        const std::string kpath = join(path, "kernel");
        check_keys(*k, kpath, {"kind", "sigma"});
        const std::string kind = string_or(*k, "kind", "coulomb", kpath);
        if (kind == "coulomb") {
            p.kernel.kind = KernelKind::coulomb;
        } else if (kind == "gaussian") {
            p.kernel.kind = KernelKind::gaussian;
        } else {
            fail(join(kpath, "kind"), "expected coulomb or gaussian");
        }
        p.kernel.sigma = number_or(*k, "sigma", p.kernel.sigma, kpath);
        if (!(p.kernel.sigma > 0)) fail(join(kpath, "sigma"), "must be positive");
    }
    if (const json* c = find(j, "convolution")) {
        const std::string mode = c->is_string() ? c->get<std::string>() : std::string();
        if (mode == "free_quadrature") {
            p.conv_mode = ConvolutionMode::free_quadrature;
        } else if (mode == "dirichlet_poisson") {
            p.conv_mode = ConvolutionMode::dirichlet_poisson;
        } else {
            fail(join(path, "convolution"), "expected free_quadrature or dirichlet_poisson");
        }
    }
    p.use_potential = bool_or(j, "potential", false, path);
    p.use_interaction = bool_or(j, "interaction", true, path);
    const std::string grad = string_or(j, "gradient", "exact", path);
    if (grad == "exact") {
        p.gradient = InteractionGradient::exact;
    } else if (grad == "paper") {
        p.gradient = InteractionGradient::paper;
    } else {
        fail(join(path, "gradient"), "expected exact or paper");
    }
    return p;
}

AdmmOptions parse_admm(const json& j, const std::string& path) {
    check_keys(j, path,
               {"mu", "delta", "tol", "max_outer", "inner_iterations", "inner_tol", "step1", "step2",
                "armijo", "box", "assert_feasible"});
    AdmmOptions o;
    o.mu = number_or(j, "mu", o.mu, path);
    if (!(o.mu > 0)) fail(join(path, "mu"), "must be positive");
    o.delta = number_or(j, "delta", o.delta, path);
    if (o.delta < 0 || o.delta > 1.0 / 3.0) fail(join(path, "delta"), "must lie in [0, 1/3]");
    o.tol = number_or(j, "tol", o.tol, path);
    o.max_outer = int_or(j, "max_outer", o.max_outer, path);
    o.inner_iterations = int_or(j, "inner_iterations", o.inner_iterations, path);
    o.inner_tol = number_or(j, "inner_tol", o.inner_tol, path);
    o.step1 = number_or(j, "step1", o.step1, path);
    o.step2 = number_or(j, "step2", o.step2, path);
    if (!(o.step1 > 0) || !(o.step2 > 0)) fail(join(path, "step1"), "steps must be positive");
    o.armijo = bool_or(j, "armijo", o.armijo, path);
    const std::string box = string_or(j, "box", "exact", path);
    if (box == "exact") {
        o.box = BoxProjection::exact;
    } else if (box == "paper") {
        o.box = BoxProjection::paper;
    } else {
        fail(join(path, "box"), "expected exact or paper");
    }
    o.assert_feasible = bool_or(j, "assert_feasible", o.assert_feasible, path);
    return o;
}

EvolveOptions parse_evolve(const json& j, const std::string& path) {
    check_keys(j, path,
               {"tau", "t_end", "stop_tol", "violation_tol", "clamp_negatives", "trace_every",
                "snapshots"});
    EvolveOptions o;
    o.tau = number_or(j, "tau", o.tau, path);
    if (!(o.tau > 0)) fail(join(path, "tau"), "must be positive");
    o.t_end = number_or(j, "t_end", o.t_end, path);
    if (!(o.t_end > 0)) fail(join(path, "t_end"), "must be positive");
    o.stop_tol = number_or(j, "stop_tol", o.stop_tol, path);
    o.violation_tol = number_or(j, "violation_tol", o.violation_tol, path);
    o.clamp_negatives = bool_or(j, "clamp_negatives", o.clamp_negatives, path);
    o.trace_every = int_or(j, "trace_every", o.trace_every, path);
    if (o.trace_every < 1) fail(join(path, "trace_every"), "must be >= 1");
    if (const json* s = find(j, "snapshots")) {
        o.snapshot_times = number_list(*s, join(path, "snapshots"));
    }
    return o;
}

InitSpec parse_init(const json& j, const std::string& path) {
    check_keys(j, path,
               {"kind", "seed", "amplitude", "halfwidth", "gamma", "centers", "tilt_r", "tilt_b",
                "path"});
    InitSpec s;
    const std::string kind = string_or(j, "kind", "random", path);
    if (kind == "random") {
        s.kind = InitSpec::Kind::random;
    } else if (kind == "heaviside") {
        s.kind = InitSpec::Kind::heaviside;
    } else if (kind == "uniform") {
        s.kind = InitSpec::Kind::uniform;
    } else if (kind == "nested") {
        s.kind = InitSpec::Kind::nested;
    } else if (kind == "split") {
        s.kind = InitSpec::Kind::split;
    } else if (kind == "file") {
        s.kind = InitSpec::Kind::file;
    } else {
        fail(join(path, "kind"), "expected random, heaviside, uniform, nested, split or file");
    }
    if (const json* v = find(j, "seed")) {
        if (!v->is_number_integer() && !v->is_number_unsigned()) fail(join(path, "seed"), "expected an integer");
        s.seed = v->get<std::uint64_t>();
    }
    s.amplitude = number_or(j, "amplitude", s.amplitude, path);
    s.halfwidth = number_or(j, "halfwidth", s.halfwidth, path);
    s.gamma = number_or(j, "gamma", s.gamma, path);
    if (!(s.gamma > 0)) fail(join(path, "gamma"), "must be positive");
    if (const json* c = find(j, "centers")) s.centers = number_list(*c, join(path, "centers"));
    auto tilt = [&](const char* key, double& slope, double& offset) {
        const json* v = find(j, key);
        if (!v) return;
        const auto pair = number_list(*v, join(path, key));
        if (pair.size() != 2) fail(join(path, key), "expected [slope, offset]");
        slope = pair[0];
        offset = pair[1];
    };
    tilt("tilt_r", s.tilt_r_slope, s.tilt_r_offset);
    tilt("tilt_b", s.tilt_b_slope, s.tilt_b_offset);
    s.path = string_or(j, "path", "", path);
    if (s.kind == InitSpec::Kind::file && s.path.empty()) {
        fail(join(path, "path"), "missing mandatory field");
    }
    return s;
}

double domain_measure(const DomainSpec& d) {
    return d.dim == 1 ? d.b - d.a : M_PI * d.radius * d.radius;
}

}  // namespace

RunSpec parse_config(const json& config) {
    if (!config.is_object()) fail("config", "expected a JSON object");
    check_keys(config, "",
               {"mode", "label", "domain", "model", "admm", "evolve", "init", "eps_sweep",
                "trace_every"});
    RunSpec spec;

    const json* mode = find(config, "mode");
    if (!mode) fail("mode", "missing mandatory field");
    const std::string mode_str = mode->is_string() ? mode->get<std::string>() : std::string();
    bool sweep_mode = false;
    if (mode_str == "minimize") {
        spec.mode = RunMode::minimize;
    } else if (mode_str == "evolve") {
        spec.mode = RunMode::evolve;
    } else if (mode_str == "sweep") {
        spec.mode = RunMode::minimize;
        sweep_mode = true;
    } else {
        fail("mode", "expected minimize, evolve or sweep");
    }
    spec.label = string_or(config, "label", "", "");

    const json* domain = find(config, "domain");
    if (!domain) fail("domain", "missing mandatory field");
    spec.domain = parse_domain(*domain, "domain");

    const json* model = find(config, "model");
    if (!model) fail("model", "missing mandatory field");
    spec.params = parse_model(*model, "model");

    if (const json* admm = find(config, "admm")) spec.admm = parse_admm(*admm, "admm");
    if (const json* evolve = find(config, "evolve")) spec.evolve = parse_evolve(*evolve, "evolve");
    if (const json* init = find(config, "init")) spec.init = parse_init(*init, "init");
    if (const json* sweep = find(config, "eps_sweep")) {
        spec.eps_sweep = number_list(*sweep, "eps_sweep");
        for (double e : spec.eps_sweep) {
            if (e < 0) fail("eps_sweep", "all entries must be >= 0");
        }
    }
    if (sweep_mode && spec.eps_sweep.empty()) fail("eps_sweep", "sweep mode needs a nonempty list");
    if (!spec.eps_sweep.empty() && spec.mode == RunMode::evolve) {
        fail("eps_sweep", "sweeps apply to minimize mode only");
    }
    spec.trace_every = int_or(config, "trace_every", spec.trace_every, "");
    if (spec.trace_every < 1) fail("trace_every", "must be >= 1");

    if (spec.params.mass_r + spec.params.mass_b > domain_measure(spec.domain)) {
        fail("model.mass_r", "infeasible masses: mass_r + mass_b exceeds the domain measure");
    }
    if (spec.mode == RunMode::minimize && spec.params.eps > 0 && !(spec.admm.delta > 0)) {
        fail("admm.delta", "entropic runs (eps > 0) need a positive box floor");
    }
    return spec;
}

json to_config(const RunSpec& spec) {
    json j;
    j["mode"] = !spec.eps_sweep.empty() ? "sweep"
                : spec.mode == RunMode::minimize ? "minimize"
                                                 : "evolve";
    if (!spec.label.empty()) j["label"] = spec.label;

    json d;
    d["dim"] = spec.domain.dim;
    if (spec.domain.dim == 1) {
        d["a"] = spec.domain.a;
        d["b"] = spec.domain.b;
        d["n"] = spec.domain.n;
    } else {
        d["radius"] = spec.domain.radius;
        d["h"] = spec.domain.h;
    }
    j["domain"] = d;

    json m;
    m["eps"] = spec.params.eps;
    m["D"] = spec.params.D;
    m["c11"] = spec.params.c11;
    m["c22"] = spec.params.c22;
    m["mass_r"] = spec.params.mass_r;
    m["mass_b"] = spec.params.mass_b;
    m["kernel"] = {{"kind", spec.params.kernel.kind == KernelKind::coulomb ? "coulomb" : "gaussian"},
                   {"sigma", spec.params.kernel.sigma}};
    if (spec.params.conv_mode) {
        m["convolution"] = *spec.params.conv_mode == ConvolutionMode::free_quadrature
                               ? "free_quadrature"
                               : "dirichlet_poisson";
    }
    m["potential"] = spec.params.use_potential;
    m["interaction"] = spec.params.use_interaction;
    m["gradient"] = spec.params.gradient == InteractionGradient::exact ? "exact" : "paper";
    j["model"] = m;

    if (spec.mode == RunMode::minimize) {
        json a;
        a["mu"] = spec.admm.mu;
        a["delta"] = spec.admm.delta;
        a["tol"] = spec.admm.tol;
        a["max_outer"] = spec.admm.max_outer;
        a["inner_iterations"] = spec.admm.inner_iterations;
        a["inner_tol"] = spec.admm.inner_tol;
        a["step1"] = spec.admm.step1;
        a["step2"] = spec.admm.step2;
        a["armijo"] = spec.admm.armijo;
        a["box"] = spec.admm.box == BoxProjection::exact ? "exact" : "paper";
        a["assert_feasible"] = spec.admm.assert_feasible;
        j["admm"] = a;
    } else {
        json e;
        e["tau"] = spec.evolve.tau;
        e["t_end"] = spec.evolve.t_end;
        e["stop_tol"] = spec.evolve.stop_tol;
        e["violation_tol"] = spec.evolve.violation_tol;
        e["clamp_negatives"] = spec.evolve.clamp_negatives;
        e["trace_every"] = spec.evolve.trace_every;
        if (!spec.evolve.snapshot_times.empty()) e["snapshots"] = spec.evolve.snapshot_times;
        j["evolve"] = e;
    }

    json i;
    switch (spec.init.kind) {
        case InitSpec::Kind::random: i["kind"] = "random"; break;
        case InitSpec::Kind::heaviside: i["kind"] = "heaviside"; break;
        case InitSpec::Kind::uniform: i["kind"] = "uniform"; break;
        case InitSpec::Kind::nested: i["kind"] = "nested"; break;
        case InitSpec::Kind::split: i["kind"] = "split"; break;
        case InitSpec::Kind::file: i["kind"] = "file"; break;
    }
    i["seed"] = spec.init.seed;
    if (spec.init.kind == InitSpec::Kind::heaviside) {
        i["amplitude"] = spec.init.amplitude;
        i["halfwidth"] = spec.init.halfwidth;
        i["gamma"] = spec.init.gamma;
        i["centers"] = spec.init.centers;
    }
    if (spec.init.tilt_r_slope != 0.0 || spec.init.tilt_r_offset != 1.0) {
        i["tilt_r"] = {spec.init.tilt_r_slope, spec.init.tilt_r_offset};
    }
    if (spec.init.tilt_b_slope != 0.0 || spec.init.tilt_b_offset != 1.0) {
        i["tilt_b"] = {spec.init.tilt_b_slope, spec.init.tilt_b_offset};
    }
    if (spec.init.kind == InitSpec::Kind::file) i["path"] = spec.init.path;
    j["init"] = i;

    if (!spec.eps_sweep.empty()) j["eps_sweep"] = spec.eps_sweep;
    j["trace_every"] = spec.trace_every;
    return j;
}

RunSpec load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& err) {
        throw ConfigError("config " + path + ": " + err.what());
    }
    return parse_config(j);
}

namespace {

Mesh build_mesh(const DomainSpec& d) {
    return d.dim == 1 ? make_interval_mesh(d.a, d.b, d.n) : make_disc_mesh(d.radius, d.h);
}

Field tilt_field(const Mesh& mesh, double slope, double offset) {
    if (slope == 0.0 && offset == 1.0) return Field();
    Field f(mesh.num_nodes());
    for (int i = 0; i < mesh.num_nodes(); ++i) f[i] = slope * mesh.x(i) + offset;
    if (f.minCoeff() <= 0.0) throw ConfigError("init tilt is not positive over the domain");
    return f;
}

std::pair<Field, Field> load_fields_csv(const std::filesystem::path& path, int dim, int n) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fields file " + path.string());
    std::string line;
    std::getline(in, line);  // header
    Field r(n), b(n);
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= n) throw ConfigError("fields file " + path.string() + " has too many rows");
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (static_cast<int>(vals.size()) != dim + 2) {
            throw ConfigError("fields file " + path.string() + ": expected " +
                              std::to_string(dim + 2) + " columns");
        }
        r[row] = vals[dim];
        b[row] = vals[dim + 1];
        ++row;
    }
    if (row != n) throw ConfigError("fields file " + path.string() + " does not match the mesh");
    return {std::move(r), std::move(b)};
}

std::pair<Field, Field> initial_fields(const P1Space& space, const ModelParams& params,
                                       const InitSpec& init) {
    const Mesh& mesh = space.mesh();
    const int n = space.size();
    switch (init.kind) {
        case InitSpec::Kind::heaviside: {
            Field f = Field::Zero(n);
            for (double c : init.centers) {
                f += heaviside_bump(mesh, init.amplitude, init.halfwidth, init.gamma, c);
            }
            return {f, f};
        }
        case InitSpec::Kind::uniform: {
            const double measure = space.measure();
            return {Field::Constant(n, params.mass_r / measure),
                    Field::Constant(n, params.mass_b / measure)};
        }
        case InitSpec::Kind::nested: {
            // unit-height plateau of r centered in the domain, ringed by b;
            // widths chosen so the target masses are met before projection
            Field r(n), b(n);
            double inner, outer, cx = 0.0;
            if (mesh.dim == 1) {
                double lo = mesh.x(0), hi = mesh.x(0);
                for (int i = 1; i < n; ++i) {
                    lo = std::min(lo, mesh.x(i));
                    hi = std::max(hi, mesh.x(i));
                }
                cx = 0.5 * (lo + hi);
                inner = 0.5 * params.mass_r;
                outer = 0.5 * (params.mass_r + params.mass_b);
            } else {
                inner = std::sqrt(params.mass_r / std::numbers::pi);
                outer = std::sqrt((params.mass_r + params.mass_b) / std::numbers::pi);
            }
            for (int i = 0; i < n; ++i) {
                const double d = mesh.dim == 1 ? std::abs(mesh.x(i) - cx)
                                               : std::hypot(mesh.x(i), mesh.y(i));
                r[i] = d <= inner ? 1.0 : 0.0;
                b[i] = d > inner && d <= outer ? 1.0 : 0.0;
            }
            return {std::move(r), std::move(b)};
        }
        case InitSpec::Kind::split: {
            // side-by-side unit-height plateaus, r to the left of b, jointly
            // centered; the dividing line splits the support by the mass ratio
            Field r(n), b(n);
            double lo, hi, cut;
            if (mesh.dim == 1) {
                double a = mesh.x(0), c = mesh.x(0);
                for (int i = 1; i < n; ++i) {
                    a = std::min(a, mesh.x(i));
                    c = std::max(c, mesh.x(i));
                }
                const double mid = 0.5 * (a + c);
                lo = mid - 0.5 * (params.mass_r + params.mass_b);
                hi = mid + 0.5 * (params.mass_r + params.mass_b);
                cut = lo + params.mass_r;
            } else {
                const double radius = std::sqrt((params.mass_r + params.mass_b) / std::numbers::pi);
                lo = -radius;
                hi = radius;
                auto area_left = [radius](double t) {
                    return t * std::sqrt(radius * radius - t * t) +
                           radius * radius * (std::asin(t / radius) + 0.5 * std::numbers::pi);
                };
                double t0 = -radius, t1 = radius;
                for (int k = 0; k < 60; ++k) {
                    const double tm = 0.5 * (t0 + t1);
                    (area_left(tm) < params.mass_r ? t0 : t1) = tm;
                }
                cut = 0.5 * (t0 + t1);
            }
            for (int i = 0; i < n; ++i) {
                const bool inside = mesh.dim == 1
                                        ? mesh.x(i) >= lo && mesh.x(i) <= hi
                                        : std::hypot(mesh.x(i), mesh.y(i)) <= hi;
                r[i] = inside && mesh.x(i) <= cut ? 1.0 : 0.0;
                b[i] = inside && mesh.x(i) > cut ? 1.0 : 0.0;
            }
            return {std::move(r), std::move(b)};
        }
        case InitSpec::Kind::file:
            return load_fields_csv(init.path, mesh.dim, n);
        case InitSpec::Kind::random:
        default: {
            const Field raw = random_uniform_field(2 * n, init.seed);
            Field r = raw.head(n);
            Field b = raw.tail(n);
            const Field tr = tilt_field(mesh, init.tilt_r_slope, init.tilt_r_offset);
            const Field tb = tilt_field(mesh, init.tilt_b_slope, init.tilt_b_offset);
            if (tr.size() == n) r.array() *= tr.array();
            if (tb.size() == n) b.array() *= tb.array();
            return {std::move(r), std::move(b)};
        }
    }
}

AdmmState admm_initial(const P1Space& space, const ModelParams& params, const AdmmOptions& opts,
                       const InitSpec& init) {
    auto [r, b] = initial_fields(space, params, init);
    AdmmState s;
    project_mass(space, r, b, params.mass_r, params.mass_b);
    s.r2 = std::move(r);
    s.b2 = std::move(b);
    s.r1 = s.r2;
    s.b1 = s.b2;
    project_box(s.r1, s.b1, opts.delta, opts.box);
    s.lam_r = Field::Zero(space.size());
    s.lam_b = Field::Zero(space.size());
    return s;
}

struct ArtifactWriter {
    std::filesystem::path dir;
    json files = json::object();

    void write(const std::string& rel, const std::string& content) {
        const std::filesystem::path path = dir / rel;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw SolveError("cannot write artifact " + path.string());
        out << content;
        ContentHash hash;
        hash.update(content);
        files[rel] = {{"bytes", content.size()}, {"fnv1a64", hash.hex()}};
    }
};

std::string fields_csv(const P1Space& space, const Field& r, const Field& b) {
    const Mesh& mesh = space.mesh();
    std::string out = mesh.dim == 1 ? "x,r,b\n" : "x,y,r,b\n";
    for (int i = 0; i < space.size(); ++i) {
        std::vector<std::string> cells{format_double(mesh.x(i))};
        if (mesh.dim == 2) cells.push_back(format_double(mesh.y(i)));
        cells.push_back(format_double(r[i]));
        cells.push_back(format_double(b[i]));
        out += csv_line(cells);
    }
    return out;
}

std::string admm_trace_csv(const std::vector<AdmmTraceRow>& rows) {
    std::string out = "iter,F_E,F_0,F_C,total,primal_res_r,primal_res_b\n";
    for (const AdmmTraceRow& r : rows) {
        out += csv_line({std::to_string(r.iter), format_double(r.F_E), format_double(r.F_0),
                         format_double(r.F_C), format_double(r.total), format_double(r.primal_res_r),
                         format_double(r.primal_res_b)});
    }
    return out;
}

std::string evolve_trace_csv(const std::vector<EvolveTraceRow>& rows) {
    std::string out = "t,F_E,F_0,F_C,total,mass_r,mass_b,max_violation\n";
    for (const EvolveTraceRow& r : rows) {
        out += csv_line({format_double(r.t), format_double(r.F_E), format_double(r.F_0),
                         format_double(r.F_C), format_double(r.total), format_double(r.mass_r),
                         format_double(r.mass_b), format_double(r.max_violation)});
    }
    return out;
}

std::string snapshots_csv(const P1Space& space, const std::vector<EvolveState>& snaps) {
    const Mesh& mesh = space.mesh();
    std::string out = mesh.dim == 1 ? "t,x,r,b\n" : "t,x,y,r,b\n";
    for (const EvolveState& s : snaps) {
        for (int i = 0; i < space.size(); ++i) {
            std::vector<std::string> cells{format_double(s.t), format_double(mesh.x(i))};
            if (mesh.dim == 2) cells.push_back(format_double(mesh.y(i)));
            cells.push_back(format_double(s.r[i]));
            cells.push_back(format_double(s.b[i]));
            out += csv_line(cells);
        }
    }
    return out;
}

json energy_json(const EnergyBreakdown& e) {
    return {{"entropic", e.entropic},
            {"interaction", e.interaction},
            {"confinement", e.confinement},
            {"total", e.total}};
}

RunOutput run_minimize(const P1Space& space, const Convolution& conv, const ModelParams& params,
                       const Field& V, const RunSpec& spec) {
    const AdmmResult res =
        admm_run(space, conv, params, V, admm_initial(space, params, spec.admm, spec.init), spec.admm);
    RunOutput out;
    out.r = res.state.r1;
    out.b = res.state.b1;
    out.admm_trace = res.trace;
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.overlap = overlap(space, out.r, out.b);
    out.energy = total_energy(space, conv, params, V, out.r, out.b);
    return out;
}

RunOutput run_evolve(const P1Space& space, const Convolution& conv, const ModelParams& params,
                     const Field& V, const RunSpec& spec) {
    auto [r, b] = initial_fields(space, params, spec.init);
    if (spec.init.kind == InitSpec::Kind::random) {
        project_mass(space, r, b, params.mass_r, params.mass_b);
        project_box(r, b, 0.0, BoxProjection::exact);
    }
    EvolveState state;
    state.r = std::move(r);
    state.b = std::move(b);
    EvolveOptions opts = spec.evolve;
    const EvolveResult res = evolve_run(space, conv, params, V, std::move(state), opts);
    RunOutput out;
    out.r = res.state.r;
    out.b = res.state.b;
    out.evolve_trace = res.trace;
    out.snapshots = res.snapshots;
    out.converged = res.stationary;
    out.iterations = res.steps;
    out.overlap = overlap(space, out.r, out.b);
    out.energy = total_energy(space, conv, params, V, out.r, out.b);
    return out;
}

int sweep_thread_count(std::size_t entries) {
    if (const char* env = std::getenv("CROSSDIFF_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return std::min<std::size_t>(v, entries);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min<std::size_t>(hw ? hw : 1, entries));
}

}  // namespace

RunArtifacts run_spec(const RunSpec& spec, const std::filesystem::path& out_dir) {
    RunArtifacts artifacts;
    artifacts.dir = out_dir;
    std::filesystem::create_directories(out_dir);

    P1Space space(build_mesh(spec.domain));
    const Field V = potential_field(space.mesh(), spec.params);
    const ConvolutionMode mode = spec.params.convolution_mode(space.mesh().dim);
    const Convolution conv(space, spec.params.kernel, mode);

    ArtifactWriter writer{out_dir};
    {
        std::ostringstream mesh_text;
        save_mesh(space.mesh(), mesh_text);
        writer.write("mesh.txt", mesh_text.str());
    }

    json manifest;
    manifest["spec"] = to_config(spec);
    {
        ContentHash hash;
        hash.update(manifest["spec"].dump());
        manifest["input_hash"] = hash.hex();
    }
    manifest["mesh"] = {{"dim", space.mesh().dim},
                        {"nodes", space.size()},
                        {"elements", space.mesh().num_elements()}};

    if (spec.mode == RunMode::evolve) {
        artifacts.output = run_evolve(space, conv, spec.params, V, spec);
        writer.write("fields.csv", fields_csv(space, artifacts.output.r, artifacts.output.b));
        writer.write("trace.csv", evolve_trace_csv(artifacts.output.evolve_trace));
        if (!artifacts.output.snapshots.empty()) {
            writer.write("snapshots.csv", snapshots_csv(space, artifacts.output.snapshots));
        }
        manifest["result"] = {{"stationary", artifacts.output.converged},
                              {"steps", artifacts.output.iterations},
                              {"overlap", artifacts.output.overlap},
                              {"energy", energy_json(artifacts.output.energy)}};
    } else if (spec.eps_sweep.empty()) {
        artifacts.output = run_minimize(space, conv, spec.params, V, spec);
        writer.write("fields.csv", fields_csv(space, artifacts.output.r, artifacts.output.b));
        writer.write("trace.csv", admm_trace_csv(artifacts.output.admm_trace));
        manifest["result"] = {{"converged", artifacts.output.converged},
                              {"iterations", artifacts.output.iterations},
                              {"overlap", artifacts.output.overlap},
                              {"energy", energy_json(artifacts.output.energy)}};
    } else {
        const std::size_t count = spec.eps_sweep.size();
        artifacts.sweep_outputs.resize(count);
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int threads = sweep_thread_count(count);
        auto worker = [&]() {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                RunSpec entry = spec;
                entry.params.eps = spec.eps_sweep[i];
                entry.eps_sweep.clear();
                artifacts.sweep_outputs[i] = run_minimize(space, conv, entry.params, V, entry);
            }
        };
        for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
        for (std::thread& t : pool) t.join();

        std::string summary = "eps,overlap,l2_distance_to_first,total_energy\n";
        for (std::size_t i = 0; i < count; ++i) {
            const RunOutput& out = artifacts.sweep_outputs[i];
            SweepEntry entry;
            entry.eps = spec.eps_sweep[i];
            entry.overlap = out.overlap;
            entry.l2_distance_to_first = space.norm(out.r - artifacts.sweep_outputs.front().r);
            entry.total_energy = out.energy.total;
            artifacts.sweep.push_back(entry);
            summary += csv_line({format_double(entry.eps), format_double(entry.overlap),
                                 format_double(entry.l2_distance_to_first),
                                 format_double(entry.total_energy)});
            const std::string sub = "eps_" + format_double(entry.eps);
            writer.write(sub + "/fields.csv", fields_csv(space, out.r, out.b));
            writer.write(sub + "/trace.csv", admm_trace_csv(out.admm_trace));
        }
        writer.write("summary.csv", summary);
        artifacts.output = artifacts.sweep_outputs.back();
        json runs = json::array();
        for (std::size_t i = 0; i < count; ++i) {
            runs.push_back({{"eps", spec.eps_sweep[i]},
                            {"converged", artifacts.sweep_outputs[i].converged},
                            {"iterations", artifacts.sweep_outputs[i].iterations},
                            {"overlap", artifacts.sweep_outputs[i].overlap},
                            {"energy", energy_json(artifacts.sweep_outputs[i].energy)}});
        }
        manifest["result"] = {{"runs", runs}};
    }

    manifest["files"] = writer.files;
    std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
    if (!mf) throw SolveError("cannot write manifest under " + out_dir.string());
    mf << manifest.dump(2) << "\n";
    return artifacts;
}

namespace {

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path, std::string& header) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    std::getline(in, header);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        rows.push_back(std::move(vals));
    }
    return rows;
}

void check_fields_file(const std::filesystem::path& path, int dim, double slack,
                       std::vector<CheckResult>& results, const std::string& tag) {
    std::string header;
    const auto rows = read_csv(path, header);
    double min_val = 0.0, max_rho = 0.0;
    bool shape_ok = true;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != dim + 2) {
            shape_ok = false;
            break;
        }
        const double r = row[dim], b = row[dim + 1];
        min_val = std::min({min_val, r, b});
        max_rho = std::max(max_rho, r + b);
    }
    results.push_back({tag + ":columns", shape_ok,
                       shape_ok ? std::to_string(rows.size()) + " rows" : "unexpected column count"});
    const double tol = 1e-9 + slack;
    const bool box_ok = shape_ok && min_val >= -tol && max_rho <= 1.0 + tol;
    results.push_back({tag + ":box", box_ok,
                       "min=" + format_double(min_val) + " max_rho=" + format_double(max_rho)});
}

}  // namespace

std::vector<CheckResult> check_artifacts(const std::filesystem::path& dir) {
    std::vector<CheckResult> results;
    json manifest;
    {
        std::ifstream in(dir / "manifest.json");
        if (!in) throw ConfigError("no manifest.json under " + dir.string());
        try {
            in >> manifest;
        } catch (const json::parse_error& err) {
            throw ConfigError("manifest.json: " + std::string(err.what()));
        }
    }

    for (auto it = manifest["files"].begin(); it != manifest["files"].end(); ++it) {
        const std::filesystem::path path = dir / it.key();
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            results.push_back({"hash:" + it.key(), false, "file missing"});
            continue;
        }
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        ContentHash hash;
        hash.update(content);
        const bool ok = content.size() == it.value()["bytes"].get<std::size_t>() &&
                        hash.hex() == it.value()["fnv1a64"].get<std::string>();
        results.push_back({"hash:" + it.key(), ok, ok ? hash.hex() : "content hash mismatch"});
    }

    const RunSpec spec = parse_config(manifest["spec"]);
    {
        bool ok = true;
        std::string detail;
        try {
            const Mesh mesh = load_mesh((dir / "mesh.txt").string());
            validate_mesh(mesh);
            detail = std::to_string(mesh.num_nodes()) + " nodes";
        } catch (const std::exception& err) {
            ok = false;
            detail = err.what();
        }
        results.push_back({"mesh", ok, detail});
    }

    const int dim = spec.domain.dim;
    // minimize outputs are mass-corrected, so they may cross the box by up to
    // the achieved primal accuracy (read off the trace, since the run may have
    // stopped short of the tolerance); evolve outputs by up to the abort
    // threshold
    auto box_slack = [&](const std::filesystem::path& trace) {
        if (spec.mode == RunMode::evolve) return spec.evolve.violation_tol;
        double res = spec.admm.tol;
        if (std::filesystem::exists(trace)) {
            std::string header;
            const auto rows = read_csv(trace, header);
            // both species are shifted, so their corrections add up on r + b
            if (!rows.empty()) res = std::max(res, rows.back()[5] + rows.back()[6]);
        }
        return res;
    };
    if (manifest["files"].contains("fields.csv")) {
        check_fields_file(dir / "fields.csv", dim, box_slack(dir / "trace.csv"), results,
                          "fields");
    }
    for (auto it = manifest["files"].begin(); it != manifest["files"].end(); ++it) {
        const std::string& name = it.key();
        if (name.size() > 11 && name.substr(name.size() - 11) == "/fields.csv") {
            const std::string prefix = name.substr(0, name.size() - 11);
            check_fields_file(dir / name, dim, box_slack(dir / prefix / "trace.csv"), results,
                              prefix);
        }
    }

    if (manifest["files"].contains("trace.csv")) {
        std::string header;
        const auto rows = read_csv(dir / "trace.csv", header);
        if (spec.mode == RunMode::evolve) {
            double drift = 0.0, violation = 0.0;
            for (const auto& row : rows) {
                drift = std::max({drift, std::abs(row[5] - rows.front()[5]),
                                  std::abs(row[6] - rows.front()[6])});
                violation = std::max(violation, row[7]);
            }
            results.push_back({"trace:mass", drift <= 1e-8, "max drift " + format_double(drift)});
            // with clamping on, recorded excursions are pre-clamp values and the
            // stepper itself aborts on any real cap breach
            const double box_bound =
                spec.evolve.clamp_negatives ? 0.05 : spec.evolve.violation_tol;
            results.push_back({"trace:box", violation <= box_bound,
                               "max pre-clamp violation " + format_double(violation)});
        } else {
            const bool converged = manifest.contains("result") &&
                                   manifest["result"].value("converged", false);
            if (converged && !rows.empty()) {
                const double res = std::max(rows.back()[5], rows.back()[6]);
                results.push_back({"trace:converged", res <= spec.admm.tol,
                                   "final primal residual " + format_double(res)});
            }
        }
    }
    return results;
}

RunSpec preset(const std::string& name) {
    const auto registry = preset_registry();
    const auto it = registry.find(name);
    if (it == registry.end()) {
        std::string names;
        for (const auto& [key, value] : registry) {
            if (!names.empty()) names += ", ";
            names += key;
        }
        throw ConfigError("unknown preset " + name + " (available: " + names + ")");
    }
    return parse_config(it->second);
}

}  // namespace crossdiff
