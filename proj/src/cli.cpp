#include "qlab/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "qlab/bvp.hpp"
#include "qlab/construct.hpp"
#include "qlab/ko.hpp"
#include "qlab/model.hpp"
#include "qlab/nonlinearity.hpp"
#include "qlab/numerics.hpp"
#include "qlab/verify.hpp"

namespace qlab::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

// ------------------------------------------------------------------------------------------- config text

// The config text with its file name, for error locations.
struct Source {
    std::string name = "<flags>";
    std::string text;

    std::string line_col(std::size_t pos) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        return name + ":" + std::to_string(line) + ":" + std::to_string(col);
    }

    // Position of the key at the end of `path`, searched key by key in document order.
    std::string where(const std::vector<std::string>& path) const {
        std::string dotted;
        for (const auto& k : path) dotted += (dotted.empty() ? "" : ".") + k;
        if (text.empty()) return name + ": " + dotted;
        std::size_t pos = 0;
        for (const auto& k : path) {
            std::string pat = "\"" + k + "\"";
            std::size_t p = pos;
            for (;;) {
                p = text.find(pat, p);
                if (p == std::string::npos) break;
                std::size_t q = text.find_first_not_of(" \t\r\n", p + pat.size());
                if (q != std::string::npos && text[q] == ':') break;
                p += pat.size();
            }
            if (p == std::string::npos) return name + ": " + dotted;
            pos = p;
        }
        return line_col(pos) + ": " + dotted;
    }
};

json parse_text(const Source& src) {
    try {
        return json::parse(src.text);
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        auto colon = what.rfind(": ");
        config_error(src.line_col(e.byte > 0 ? e.byte - 1 : 0) + ": malformed config" +
                     (colon == std::string::npos ? "" : what.substr(colon)));
    }
}

Source load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) config_error("cannot open config '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return {path, os.str()};
}

// A JSON object being read. Every key read is copied into `echo` (with defaults filled in), which is the
// normalized config printed by --print-config; done() rejects keys that were never read.
class Section {
public:
    Section(const json* j, std::vector<std::string> path, const Source* src, json* echo)
        : j_(j), path_(std::move(path)), src_(src), echo_(echo) {
        if (!j_->is_object()) fail_at(path_, "expected an object");
        *echo_ = json::object();
    }

    bool has(const std::string& key) const { return j_->contains(key); }

    double num(const std::string& key, double def) {
        if (!has(key)) {
            if (!std::isnan(def)) (*echo_)[key] = def;
            return def;
        }
        return num(key);
    }
    double num(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) fail(key, "expected a number");
        double x = v.get<double>();
        (*echo_)[key] = x;
        return x;
    }
    int integer(const std::string& key, int def) {
        if (!has(key)) {
            (*echo_)[key] = def;
            return def;
        }
        const json& v = get(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        int x = v.get<int>();
        (*echo_)[key] = x;
        return x;
    }
    std::string str(const std::string& key, const std::string& def) {
        if (!has(key)) {
            (*echo_)[key] = def;
            return def;
        }
        return str(key);
    }
    std::string str(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) fail(key, "expected a string");
        (*echo_)[key] = v;
        return v.get<std::string>();
    }
    bool flag(const std::string& key, bool def) {
        if (!has(key)) {
            (*echo_)[key] = def;
            return def;
        }
        const json& v = get(key);
        if (!v.is_boolean()) fail(key, "expected true or false");
        (*echo_)[key] = v;
        return v.get<bool>();
    }
    Section child(const std::string& key) {
        const json& v = get(key);
        auto p = path_;
        p.push_back(key);
        return Section(&v, p, src_, &(*echo_)[key]);
    }

    void done() const {
        for (const auto& [k, v] : j_->items()) {
            (void)v;
            if (!echo_->contains(k)) fail(k, "unknown key");
        }
    }
    // parameter checks of the factories become config errors located at this section
    template <class F>
    auto guard(F&& f) const -> decltype(f()) {
        try {
            return f();
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::OutOfRange) fail_at(path_, e.what());
            throw;
        }
    }
    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        auto p = path_;
        p.push_back(key);
        fail_at(p, msg);
    }

private:
    const json& get(const std::string& key) const {
        if (!has(key)) fail_at(path_, "missing key '" + key + "'");
        return j_->at(key);
    }
    [[noreturn]] void fail_at(const std::vector<std::string>& p, const std::string& msg) const {
        config_error(src_->where(p) + ": " + msg);
    }

    const json* j_;
    std::vector<std::string> path_;
    const Source* src_;
    json* echo_;
};

// A parsed config with its normalized echo.
struct Document {
    Source src;
    json root;
    json echo;
    Section top() { return Section(&root, {}, &src, &echo); }
};

Document document_from_file(const std::string& path) {
    Document d;
    d.src = load(path);
    d.root = parse_text(d.src);
    return d;
}

Document document_from_json(json j) {
    Document d;
    d.root = std::move(j);
    return d;
}

// --------------------------------------------------------------------------------------- object builders

Phi phi_from(Section s) {
    return s.guard([&] {
        std::string fam = s.str("family");
        Phi phi = Phi::power_law(2);
        if (fam == "power_law") {
            phi = Phi::power_law(s.num("p"));
        } else if (fam == "mean_curvature") {
            phi = Phi::mean_curvature();
        } else if (fam == "exp_harmonic") {
            phi = Phi::exp_harmonic();
        } else if (fam == "power_sum") {
            double p = s.num("p");
            phi = Phi::power_sum(p, s.num("q"));
        } else if (fam == "rational_power") {
            double p = s.num("p");
            phi = Phi::rational_power(p, s.num("q"));
        } else {
            s.fail("family", "unknown phi family '" + fam + "'");
        }
        s.done();
        return phi;
    });
}

GradientTerm l_from(Section s, const Phi& phi) {
    return s.guard([&] {
        std::string fam = s.str("family");
        GradientTerm l = GradientTerm::constant(1);
        if (fam == "constant")
            l = GradientTerm::constant(s.num("c", 1.0));
        else if (fam == "power")
            l = GradientTerm::power(s.num("e"));
        else if (fam == "phi_quotient")
            l = GradientTerm::phi_quotient(phi, s.num("chi"));
        else
            s.fail("family", "unknown gradient term family '" + fam + "'");
        s.done();
        return l;
    });
}

Nonlinearity f_from(Section s) {
    return s.guard([&] {
        std::string fam = s.str("family");
        Nonlinearity f = Nonlinearity::power(1);
        if (fam == "power") {
            double omega = s.num("omega");
            double th = s.num("threshold", 0.0);
            f = Nonlinearity::power(omega, th, s.num("scale", 1.0));
        } else if (fam == "exp2m1") {
            f = Nonlinearity::exp2m1(s.num("scale", 1.0));
        } else {
            s.fail("family", "unknown nonlinearity family '" + fam + "'");
        }
        s.done();
        return f;
    });
}

WeightProfile weight_from(Section s) {
    return s.guard([&] {
        std::string fam = s.str("family", "power_decay");
        if (fam != "power_decay") s.fail("family", "unknown weight family '" + fam + "'");
        double mu = s.num("mu");
        double c = s.num("c", 1.0);
        s.done();
        return WeightProfile::power_decay(mu, c);
    });
}

ModelManifold model_from(Section s) {
    return s.guard([&] {
        std::string fam = s.str("family");
        int m = s.integer("m", 3);
        if (m < 2) s.fail("m", "dimension must be at least 2");
        std::optional<ModelManifold> M;
        if (fam == "euclidean")
            M = ModelManifold::euclidean(m);
        else if (fam == "hyperbolic")
            M = ModelManifold::hyperbolic(m, s.num("kappa"));
        else if (fam == "example_pinch")
            M = ModelManifold::example_pinch(m, s.num("delta"));
        else if (fam == "jacobi_power") {
            double kappa = s.num("kappa");
            M = ModelManifold::jacobi_power(m, kappa, s.num("alpha"));
        } else
            s.fail("family", "unknown model family '" + fam + "'");
        s.done();
        return *M;
    });
}

Triple triple_from(Section s) {
    Triple tr;
    tr.phi = phi_from(s.child("phi"));
    if (s.has("l")) {
        tr.l = l_from(s.child("l"), tr.phi);
    } else {
        tr.l = GradientTerm::constant(1);
    }
    tr.f = f_from(s.child("f"));
    if (s.has("beta")) tr.beta = weight_from(s.child("beta"));
    s.done();
    return tr;
}

std::vector<double> grid_from(Section s, int grid_override) {
    double a = s.num("from");
    double b = s.num("to");
    std::string spacing = s.str("spacing", "log");
    if (!(a < b)) s.fail("to", "grid needs from < to");
    std::vector<double> g;
    if (spacing == "log") {
        if (!(a > 0)) s.fail("from", "log spacing needs from > 0");
        int pd = s.integer("per_decade", grid_override > 0 ? grid_override : 40);
        if (pd < 1) s.fail("per_decade", "must be positive");
        g = num::log_grid(a, b, pd);
    } else if (spacing == "linear") {
        int n = s.integer("n", grid_override > 0 ? grid_override : 200);
        if (n < 2) s.fail("n", "needs at least 2 nodes");
        g = num::lin_grid(a, b, n);
    } else {
        s.fail("spacing", "expected 'log' or 'linear'");
    }
    s.done();
    return g;
}

// ------------------------------------------------------------------------------------------------ output

std::string num17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string quoted(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

class Csv {
public:
    explicit Csv(const std::string& path) : path_(path) {
        if (!path.empty()) {
            os_.open(path, std::ios::binary | std::ios::trunc);
            if (!os_) config_error("cannot write '" + path + "'");
        }
    }
    void header(const std::vector<std::string>& cols) { line(cols); }
    void row(const std::vector<double>& v) {
        std::vector<std::string> s;
        for (double x : v) s.push_back(num17(x));
        line(s);
    }
    void line(const std::vector<std::string>& cells) {
        if (path_.empty()) return;
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << quoted(cells[i]);
        os_ << '\n';
    }

private:
    std::string path_;
    std::ofstream os_;
};

// ------------------------------------------------------------------------------------------ global state

struct Globals {
    double tol = kNaN;
    int grid = 0;
    std::uint64_t seed = 0;
    bool print_config = false;
    std::string config, out;
};

int exit_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Config: return kConfigError;
        case ErrorKind::KellerOssermanViolated:
        case ErrorKind::WeightIncompatible:
        case ErrorKind::RestrictionViolated:
        case ErrorKind::ConditionFailed:
        case ErrorKind::Parabolic: return kFails;
        case ErrorKind::KernelUndefined:
        case ErrorKind::Unsupported: return kInconclusive;
        default: return kComputeFailure;
    }
}

int verdict_exit(Verdict v) { return v == Verdict::Holds ? kHolds : v == Verdict::Fails ? kFails : kInconclusive; }

// Prints the normalized config when asked; true means the command stops there.
bool echo_only(const Globals& g, const Document& d, std::ostream& out) {
    if (!g.print_config) return false;
    out << d.echo.dump(2) << "\n";
    return true;
}

// ---------------------------------------------------------------------------------------------------- ko

struct KoFlags {
    std::string family, endpoint = "infinity", kernel = "auto", route = "auto";
    double p = kNaN, chi = kNaN, omega = kNaN;
};

int cmd_ko(const Globals& g, const KoFlags& k, std::ostream& out) {
    Document d;
    if (!g.config.empty()) {
        if (!k.family.empty()) config_error("ko: give either --config or --family, not both");
        d = document_from_file(g.config);
    } else {
        if (k.family.empty()) config_error("ko: --family or --config is required");
        if (std::isnan(k.chi) || std::isnan(k.omega)) config_error("ko: --chi and --omega are required");
        json phi;
        if (k.family == "plaplace") {
            if (std::isnan(k.p)) config_error("ko: --p is required for the plaplace family");
            phi = {{"family", "power_law"}, {"p", k.p}};
        } else if (k.family == "mc") {
            phi = {{"family", "mean_curvature"}};
        } else {
            config_error("ko: unknown --family '" + k.family + "' (plaplace, mc)");
        }
        json tr = {{"phi", phi},
                   {"l", {{"family", "phi_quotient"}, {"chi", k.chi}}},
                   {"f", {{"family", "power"}, {"omega", k.omega}}}};
        json kernel = k.kernel == "auto" ? json(k.family == "mc" ? "mc" : "standard") : json(k.kernel);
        d = document_from_json({{"triple", tr}, {"endpoint", k.endpoint}, {"kernel", kernel}, {"route", k.route}});
    }
    Section s = d.top();
    Triple tr = triple_from(s.child("triple"));
    std::string ep = s.str("endpoint", "infinity");
    std::string kn = s.str("kernel", "standard");
    std::string rt = s.str("route", "auto");
    s.done();
    if (ep != "zero" && ep != "infinity") s.fail("endpoint", "expected 'zero' or 'infinity'");
    if (kn != "standard" && kn != "mc") s.fail("kernel", "expected 'standard' or 'mc'");
    if (rt != "auto" && rt != "closed" && rt != "numeric") s.fail("route", "expected 'auto', 'closed' or 'numeric'");
    if (echo_only(g, d, out)) return kHolds;

    auto v = ko_verdict(tr, ep == "zero" ? Endpoint::Zero : Endpoint::Infinity,
                        kn == "mc" ? KernelKind::MeanCurvature : KernelKind::Standard,
                        rt == "closed" ? KoRoute::ClosedForm : rt == "numeric" ? KoRoute::Numeric : KoRoute::Auto);
    out << v.to_line() << "\n";
    return verdict_exit(v.outcome);
}

// --------------------------------------------------------------------------------------------------- bvp

struct BvpSetup {
    BvpProblem problem;
    BvpOptions opt;
    double extend_to = 0;
};

BvpSetup bvp_from(Section s, const Globals& g, BoundaryKind kind) {
    BvpSetup b;
    b.problem.triple = triple_from(s.child("triple"));
    b.problem.kind = kind;
    b.problem.T = s.num("T", 1.0);
    b.problem.eta = s.num("eta", 1.0);
    b.problem.xi = s.num("xi", 0.0);
    if (!(b.problem.T > 0)) s.fail("T", "must be positive");
    if (!(b.problem.eta > 0)) s.fail("eta", "must be positive");
    if (s.has("model")) {
        auto M = model_from(s.child("model"));
        double r0 = s.num("r0", 0.0);
        b.problem.volume = BvpProblem::volume_of(M, r0);
    }
    if (s.has("a")) {
        auto w = weight_from(s.child("a"));
        b.problem.a = [w](double t) { return w(t); };
    }
    b.opt.N = s.integer("N", g.grid > 0 ? g.grid : 512);
    if (b.opt.N < 8) s.fail("N", "needs at least 8 intervals");
    b.opt.tol = s.num("tol", std::isnan(g.tol) ? 1e-10 : g.tol);
    b.extend_to = s.num("extend_to", 0.0);
    s.done();
    return b;
}

int cmd_bvp_solve(const Globals& g, const std::string& kind, std::ostream& out, std::ostream& err) {
    if (g.config.empty()) config_error("bvp solve: --config is required");
    if (kind != "dirichlet" && kind != "mixed") config_error("bvp solve: --kind must be dirichlet or mixed");
    auto d = document_from_file(g.config);
    auto b = bvp_from(d.top(), g, kind == "mixed" ? BoundaryKind::Mixed : BoundaryKind::Dirichlet);
    if (echo_only(g, d, out)) return kHolds;
    try {
        auto sol = solve_bvp(b.problem, b.opt);
        Csv csv(g.out);
        csv.header({"t", "w", "wprime", "residual"});
        double rmax = 0;
        for (std::size_t i = 0; i < sol.w.size(); ++i) {
            csv.row({sol.w.r[i], sol.w.w[i], sol.w.wp[i], sol.residual[i]});
            rmax = std::max(rmax, std::fabs(sol.residual[i]));
        }
        out << "bvp kind=" << to_string(sol.kind) << " method=" << sol.method << " iterations=" << sol.iterations
            << " nodes=" << sol.w.size() << " xi=" << num17(sol.xi) << " wprime0=" << num17(sol.w.wp.front())
            << " residual_max=" << num17(rmax) << " residual_scale=" << num17(sol.residual_scale);
        if (b.extend_to > 0) {
            auto ext = extend_maximal(sol, b.problem, b.extend_to);
            out << " extension=" << (ext.infinite ? "infinite" : "finite") << " R_max=" << num17(ext.R_max)
                << " r_reached=" << num17(ext.r_reached);
        }
        out << "\n";
        return kHolds;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        err << "qlab: " << e.what() << "\n";
        return kComputeFailure;  // every solver failure is exit 3 here
    }
}

int cmd_bvp_classify(const Globals& g, std::ostream& out) {
    if (g.config.empty()) config_error("bvp classify: --config is required");
    auto d = document_from_file(g.config);
    Section s = d.top();
    int levels = s.integer("levels", 3);
    auto b = bvp_from(std::move(s), g, BoundaryKind::Dirichlet);
    if (echo_only(g, d, out)) return kHolds;
    auto o = classify_origin_slope(b.problem, levels, b.opt);
    out << "origin_slope class=" << to_string(o.cls) << " value=" << num17(o.value) << " trend=" << num17(o.trend)
        << " levels=[";
    for (std::size_t i = 0; i < o.levels.size(); ++i) out << (i ? "," : "") << num17(o.levels[i]);
    out << "]\n";
    return o.cls == SlopeClass::Undetermined ? kInconclusive : kHolds;
}

// --------------------------------------------------------------------------------------------- construct

SupersolutionSpec construct_from(Section s, const Globals& g, const std::string& kind_flag) {
    SupersolutionSpec c;
    std::string kind = s.has("kind") ? s.str("kind") : kind_flag;
    if (!kind_flag.empty() && kind != kind_flag) s.fail("kind", "disagrees with --kind " + kind_flag);
    if (kind.empty()) config_error("construct: --kind or a 'kind' key is required");
    if (!s.has("kind")) s.str("kind", kind);  // keep it in the echo
    c.kind = parse_supersolution_kind(kind);
    c.triple = triple_from(s.child("triple"));
    if (s.has("model")) c.model = model_from(s.child("model"));
    if (s.has("beta")) c.beta = weight_from(s.child("beta"));
    if (s.has("beta_bar")) c.beta_bar = weight_from(s.child("beta_bar"));
    c.chi = s.num("chi", kNaN);
    c.eps = s.num("eps", c.eps);
    c.delta = s.num("delta", c.delta);
    c.lambda = s.num("lambda", c.lambda);
    c.R = s.num("R", c.R);
    c.r0 = s.num("r0", c.r0);
    c.r1 = s.num("r1", c.r1);
    c.eta = s.num("eta", c.eta);
    c.xi = s.num("xi", c.xi);
    c.K = s.num("K", c.K);
    c.B2 = s.num("B2", c.B2);
    c.r_max = s.num("r_max", c.r_max);
    c.nodes = s.integer("nodes", g.grid > 0 ? g.grid : c.nodes);
    c.explicit_route = s.flag("explicit_route", c.explicit_route);
    c.max_search = s.integer("max_search", c.max_search);
    if (c.nodes < 10) s.fail("nodes", "needs at least 10 nodes");
    s.done();
    return c;
}

int cmd_construct(const Globals& g, const std::string& kind, std::ostream& out) {
    if (g.config.empty()) config_error("construct: --config is required");
    auto d = document_from_file(g.config);
    auto spec = construct_from(d.top(), g, kind);
    if (echo_only(g, d, out)) return kHolds;
    auto P = build_supersolution(spec);
    Csv csv(g.out);
    csv.header({"r", "w", "wprime", "lhs", "rhs", "residual"});
    for (std::size_t i = 0; i < P.w.size(); ++i)
        csv.row({P.w.r[i], P.w.w[i], P.w.wp[i], P.lhs[i], P.rhs[i], P.residual[i]});
    std::size_t width = 0, passed = 0;
    for (const auto& c : P.certificates) width = std::max(width, c.name.size());
    for (const auto& c : P.certificates) {
        out << c.name << ":" << std::string(width - c.name.size() + 1, ' ') << (c.passed ? "pass" : "fail") << "  "
            << num17(c.value) << " vs " << num17(c.tolerance);
        if (!c.detail.empty()) out << "  " << c.detail;
        out << "\n";
        passed += c.passed;
    }
    out << "construct kind=" << to_string(P.kind) << " nodes=" << P.w.size() << " certificates=" << passed << "/"
        << P.certificates.size() << " passed\n";
    return P.all_passed() ? kHolds : kFails;
}

// ------------------------------------------------------------------------------------------------ verify

void write_report(const std::string& path, const ResidualReport& rep) {
    Csv csv(path);
    csv.header({"r", "u", "uprime", "lhs", "rhs", "residual"});
    for (std::size_t i = 0; i < rep.r.size(); ++i)
        csv.row({rep.r[i], rep.u[i], rep.up[i], rep.lhs[i], rep.rhs[i], rep.residual[i]});
}

std::string report_line(const ResidualReport& rep) {
    return "sign=" + std::string(to_string(rep.sign)) + " min=" + num17(rep.min) + " argmin=" + num17(rep.argmin) +
           " max=" + num17(rep.max) + " band=" + num17(rep.band);
}

AnalyticProfile profile_from(Section s) {
    std::string fam = s.str("family");
    double sg = s.num("sigma");
    double c = s.num("c", 1.0);
    AnalyticProfile u;
    if (fam == "power") {
        u = {[=](double r) { return c * std::pow(r, sg); }, [=](double r) { return c * sg * std::pow(r, sg - 1); },
             [=](double r) { return c * sg * (sg - 1) * std::pow(r, sg - 2); }};
    } else if (fam == "quadratic_power") {
        u = {[=](double r) { return c * std::pow(1 + r * r, sg); },
             [=](double r) { return c * 2 * sg * r * std::pow(1 + r * r, sg - 1); },
             [=](double r) {
                 double q = 1 + r * r;
                 return c * 2 * sg * (std::pow(q, sg - 1) + 2 * (sg - 1) * r * r * std::pow(q, sg - 2));
             }};
    } else if (fam == "power_log") {
        // c r^s / log r on r > 1
        u = {[=](double r) { return c * std::pow(r, sg) / std::log(r); },
             [=](double r) {
                 double L = std::log(r);
                 return c * std::pow(r, sg - 1) * (sg / L - 1 / (L * L));
             },
             [=](double r) {
                 double L = std::log(r);
                 return c * std::pow(r, sg - 2) *
                        (sg * (sg - 1) / L - (2 * sg - 1) / (L * L) + 2 / (L * L * L));
             }};
    } else if (fam == "exp") {
        u = {[=](double r) { return c * std::exp(sg * r); }, [=](double r) { return c * sg * std::exp(sg * r); },
             [=](double r) { return c * sg * sg * std::exp(sg * r); }};
    } else {
        s.fail("family", "unknown profile family '" + fam + "'");
    }
    s.done();
    return u;
}

int cmd_verify_residual(const Globals& g, std::ostream& out) {
    if (g.config.empty()) config_error("verify residual: --config is required");
    auto d = document_from_file(g.config);
    Section s = d.top();
    if (s.has("construct")) {
        auto spec = construct_from(s.child("construct"), g, "");
        s.done();
        if (echo_only(g, d, out)) return kHolds;
        auto P = build_supersolution(spec);
        auto rep = residual_report(P, spec.triple.phi);
        write_report(g.out, rep);
        std::string where;
        bool ok = agrees_with(P, rep, &where);
        out << "residual source=construct kind=" << to_string(P.kind) << " " << report_line(rep)
            << " certificates=" << (P.all_passed() ? "pass" : "fail") << " agreement=" << (ok ? "yes" : "no");
        if (!ok) out << " first_disagreement=\"" << where << "\"";
        out << "\n";
        return ok ? kHolds : kFails;
    }
    auto M = model_from(s.child("model"));
    auto tr = triple_from(s.child("triple"));
    auto b = s.has("weight") ? weight_from(s.child("weight")) : WeightProfile::power_decay(0);
    auto u = profile_from(s.child("profile"));
    auto grid = grid_from(s.child("grid"), g.grid);
    s.done();
    if (echo_only(g, d, out)) return kHolds;
    auto rep = residual_report(M, tr, b, u, grid);
    write_report(g.out, rep);
    out << "residual source=profile " << report_line(rep) << "\n";
    return rep.nonnegative() ? kHolds : kFails;
}

int cmd_verify_counterexample(const Globals& g, std::ostream& out) {
    if (g.config.empty()) config_error("verify counterexample: --config is required");
    auto d = document_from_file(g.config);
    Section s = d.top();
    auto fam = parse_counterexample_family(s.str("family"));
    CounterexampleParams P;
    P.m = s.integer("m", P.m);
    P.alpha = s.num("alpha", P.alpha);
    P.kappa = s.num("kappa", P.kappa);
    P.p = s.num("p", P.p);
    P.q = s.num("q", P.q);
    P.chi = s.num("chi", P.chi);
    P.mu = s.num("mu", P.mu);
    P.omega = s.num("omega", P.omega);
    P.sigma = s.num("sigma", P.sigma);
    GalleryOptions opt;
    opt.max_doublings = s.integer("max_doublings", opt.max_doublings);
    opt.per_decade = s.integer("per_decade", g.grid > 0 ? g.grid : opt.per_decade);
    opt.relative_band = s.num("relative_band", std::isnan(g.tol) ? opt.relative_band : g.tol);
    s.done();
    if (P.m < 2) s.fail("m", "dimension must be at least 2");
    if (echo_only(g, d, out)) return kHolds;
    auto res = counterexample_check(fam, P, opt);
    write_report(g.out, res.report);
    out << "counterexample family=" << to_string(fam) << " range=" << to_string(res.range.verdict) << " clause=\""
        << res.range.clause << "\" K=" << num17(res.K) << " R=" << num17(res.R)
        << " stabilized=" << (res.stabilized ? "yes" : "no")
        << " eventually_nonnegative=" << (res.eventually_nonnegative ? "yes" : "no")
        << " negative_found=" << (res.negative_found ? "yes" : "no") << " verdict=" << to_string(res.verdict) << "\n";
    switch (res.verdict) {
        case GalleryVerdict::Consistent: return kHolds;
        case GalleryVerdict::Inconsistent: return kFails;
        case GalleryVerdict::Unsupported: return kInconclusive;
    }
    return kInconclusive;
}

int cmd_theorems(const Globals& g, std::ostream& out) {
    if (g.config.empty()) config_error("theorems: --config is required");
    auto d = document_from_file(g.config);
    Section s = d.top();
    TheoremParams P;
    P.m = s.integer("m", P.m);
    P.p = s.num("p", P.p);
    P.p_bar = s.num("p_bar", P.p);
    P.kappa = s.num("kappa", P.kappa);
    P.alpha = s.num("alpha", P.alpha);
    P.mu = s.num("mu", P.mu);
    P.chi = s.num("chi", P.chi);
    P.chi1 = s.num("chi1", kNaN);
    P.chi2 = s.num("chi2", kNaN);
    P.omega = s.num("omega", kNaN);
    P.V_inf = s.num("V_inf", kNaN);
    s.done();
    if (echo_only(g, d, out)) return kHolds;
    Csv csv(g.out);
    csv.header({"theorem", "applicable", "failed_clause"});
    for (const auto& t : theorem_applicability(P)) {
        csv.line({t.theorem, t.applicable ? "yes" : "no", t.failed_clause});
        out << "theorem " << t.theorem << " applicable=" << (t.applicable ? "yes" : "no");
        if (!t.applicable) out << " failed_clause=\"" << t.failed_clause << "\"";
        out << "\n";
    }
    return kHolds;
}

// ------------------------------------------------------------------------------------------------- model

int cmd_model(const Globals& g, std::ostream& out) {
    if (g.config.empty()) config_error("model: --config is required");
    auto d = document_from_file(g.config);
    Section s = d.top();
    auto M = model_from(s.child("model"));
    auto grid = grid_from(s.child("grid"), g.grid);
    s.done();
    if (echo_only(g, d, out)) return kHolds;
    Csv csv(g.out);
    csv.header({"r", "g", "gprime", "v", "laplacian"});
    for (double r : grid) csv.row({r, M.g(r), M.gp(r), M.v(r), M.laplacian(r)});
    out << "model " << M.name() << " m=" << M.dim() << " nodes=" << grid.size() << " r=[" << num17(grid.front())
        << "," << num17(grid.back()) << "]\n";
    return kHolds;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Radial quasilinear inequality laboratory", "qlab"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    Globals g;
    app.add_option("--tol", g.tol, "tolerance override (bvp iteration, gallery sign band)")->envname("QLAB_TOL");
    app.add_option("--grid", g.grid, "grid size override (bvp N, construct nodes, nodes per decade)")
        ->envname("QLAB_GRID");
    app.add_option("--seed", g.seed, "recorded seed; no command draws random numbers")->envname("QLAB_SEED");
    app.add_flag("--print-config", g.print_config, "print the normalized config and stop");

    auto with_io = [&g](CLI::App* c) {
        c->add_option("--config", g.config, "JSON config file")->envname("QLAB_CONFIG");
        c->add_option("--out", g.out, "CSV output path");
    };

    KoFlags kf;
    auto* ko = app.add_subcommand("ko", "Keller-Osserman verdict");
    ko->add_option("--config", g.config, "JSON config file");
    ko->add_option("--family", kf.family, "plaplace or mc");
    ko->add_option("--p", kf.p, "exponent of phi = t^{p-1}");
    ko->add_option("--chi", kf.chi, "l = phi(t) / t^chi");
    ko->add_option("--omega", kf.omega, "f = t^omega");
    ko->add_option("--endpoint", kf.endpoint, "zero or infinity")->check(CLI::IsMember({"zero", "infinity"}));
    ko->add_option("--kernel", kf.kernel, "auto, standard or mc")->check(CLI::IsMember({"auto", "standard", "mc"}));
    ko->add_option("--route", kf.route, "auto, closed or numeric")->check(CLI::IsMember({"auto", "closed", "numeric"}));

    std::string bvp_kind = "dirichlet";
    auto* bvp = app.add_subcommand("bvp", "two-point boundary value problems");
    bvp->require_subcommand(1);
    auto* bvp_solve = bvp->add_subcommand("solve", "solve and write t, w, wprime, residual");
    with_io(bvp_solve);
    bvp_solve->add_option("--kind", bvp_kind, "dirichlet or mixed");
    auto* bvp_classify = bvp->add_subcommand("classify", "classify w'(0) over refinement levels");
    with_io(bvp_classify);

    std::string construct_kind;
    auto* construct = app.add_subcommand("construct", "build and certify a supersolution");
    with_io(construct);
    construct->add_option("--kind", construct_kind, "cspA, cspB, sl, sl-mc, khasminskii, exterior");

    auto* verify = app.add_subcommand("verify", "independent residual checks");
    verify->require_subcommand(1);
    auto* v_res = verify->add_subcommand("residual", "residual of a profile or of a construction");
    auto* v_cex = verify->add_subcommand("counterexample", "gallery family scan");
    auto* v_thm = verify->add_subcommand("theorems", "theorem applicability");
    for (auto* c : {v_res, v_cex, v_thm}) with_io(c);

    auto* theorems = app.add_subcommand("theorems", "theorem applicability");
    with_io(theorems);
    auto* model = app.add_subcommand("model", "model manifold curves");
    with_io(model);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kHolds;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kHolds;
    } catch (const CLI::ParseError& e) {
        err << "qlab: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (*ko) return cmd_ko(g, kf, out);
        if (*bvp_solve) return cmd_bvp_solve(g, bvp_kind, out, err);
        if (*bvp_classify) return cmd_bvp_classify(g, out);
        if (*construct) return cmd_construct(g, construct_kind, out);
        if (*v_res) return cmd_verify_residual(g, out);
        if (*v_cex) return cmd_verify_counterexample(g, out);
        if (*v_thm || *theorems) return cmd_theorems(g, out);
        if (*model) return cmd_model(g, out);
    } catch (const Error& e) {
        err << "qlab: " << e.what() << "\n";
        return exit_for(e);
    } catch (const std::exception& e) {
        err << "qlab: " << e.what() << "\n";
        return kComputeFailure;
    }
    return kConfigError;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace qlab::cli
