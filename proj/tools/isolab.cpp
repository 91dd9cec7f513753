// Command-line front end: estimators, parameter searches, Laplace-transform
// probes, and the relation checker, all emitting JSONL records suitable for
// later aggregation with `report`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "isolab/errors.hpp"
#include "isolab/functionals.hpp"
#include "isolab/laplace.hpp"
#include "isolab/measures.hpp"
#include "isolab/parallel.hpp"
#include "isolab/parameters.hpp"
#include "isolab/sampler.hpp"
#include "isolab/special.hpp"
#include "isolab/verify.hpp"

namespace {

using nlohmann::json;
using namespace isolab;

constexpr const char* kToolVersion = "isolab 0.1.0";

struct GlobalOpts {
    std::uint64_t seed = 20260815;
    std::uint64_t stream = 0;
    int threads = 0;       // 0: hardware concurrency
    std::uint64_t samples = 0;  // 0: per-operation default
    std::string out;

    Seed root() const { return Seed{seed, stream}; }
    std::uint64_t budget(std::uint64_t fallback) const {
        return samples != 0 ? samples : fallback;
    }
};

// Digest of the resolved run configuration. Thread count and output paths
// are excluded so records written at different parallelism or to different
// files still compare equal.
std::string config_digest(const std::map<std::string, std::string>& kv) {
    std::string canon;
    for (const auto& [k, v] : kv) {
        canon += k;
        canon += '=';
        canon += v;
        canon += '\n';
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canon);
    return os.str();
}

std::string iso_timestamp() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

// Records go to --out when given (human summary on stdout); without --out the
// records own stdout and the summary moves to stderr.
struct RecordSink {
    std::ofstream file;
    bool toFile = false;
    std::string digest;

    RecordSink(const GlobalOpts& g, const std::map<std::string, std::string>& cfg)
        : digest(config_digest(cfg)) {
        if (!g.out.empty()) {
            file.open(g.out);
            if (!file) throw UsageError("cannot open output path '" + g.out + "'");
            toFile = true;
        }
    }

    std::ostream& records() { return toFile ? static_cast<std::ostream&>(file) : std::cout; }
    std::ostream& summary() { return toFile ? std::cout : std::cerr; }

    void emit(const json& payload) {
        json rec{{"timestamp", iso_timestamp()},
                 {"toolVersion", kToolVersion},
                 {"configDigest", digest},
                 {"payload", payload}};
        records() << rec.dump() << "\n";
    }
};

json ci_json(const EstimateCI& e) {
    return json{{"value", e.value},
                {"stderr", e.stderr_},
                {"sampleCount", e.sampleCount},
                {"method", e.method}};
}

json relation_json(const RelationReport& r) {
    json j{{"kind", "relation"},
           {"relation", relation_tag(r.relation)},
           {"measure", r.measureSpec},
           {"n", r.gridPoint.n},
           {"k", r.gridPoint.k},
           {"p", r.gridPoint.p},
           {"q", r.gridPoint.q},
           {"delta", r.gridPoint.delta},
           {"A", r.gridPoint.A},
           {"lhs", ci_json(r.lhs)},
           {"rhs", ci_json(r.rhs)},
           {"verdict", verdict_name(r.verdict)},
           {"note", r.note}};
    j["fitted"] = r.fittedConstant ? json(*r.fittedConstant) : json();
    return j;
}

json param_json(const ParamEstimate& p) {
    return json{{"kind", "param"},
                {"name", p.name},
                {"value", p.value},
                {"boundKind", bound_kind_name(p.boundKind)},
                {"flags", p.flags},
                {"config", p.config},
                {"hasWitness", p.witness.has_value()}};
}

Eigen::VectorXd parse_csv_vector(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            std::size_t pos = 0;
            vals.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw UsageError("cannot parse '" + tok + "' as a number");
        }
    }
    if (vals.empty()) throw UsageError("empty vector literal '" + csv + "'");
    Eigen::VectorXd v(static_cast<int>(vals.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = vals[static_cast<std::size_t>(i)];
    return v;
}

// Direction from --theta (free vector, normalized) or --axis (coordinate
// index); --theta wins when both appear.
Eigen::VectorXd resolve_direction(int dim, int axis, const std::string& theta) {
    if (!theta.empty()) {
        Eigen::VectorXd v = parse_csv_vector(theta);
        if (v.size() != dim)
            throw UsageError("--theta has dimension " + std::to_string(v.size()) +
                             ", measure has dimension " + std::to_string(dim));
        double norm = v.norm();
        if (!(norm > 0.0)) throw UsageError("--theta must be nonzero");
        return v / norm;
    }
    if (axis < 0 || axis >= dim)
        throw UsageError("--axis out of range for dimension " + std::to_string(dim));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    v[axis] = 1.0;
    return v;
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

void write_frame(const std::string& path, const Subspace& s) {
    std::ofstream f(path);
    if (!f) throw UsageError("cannot open witness path '" + path + "'");
    f << std::setprecision(17);
    for (int i = 0; i < s.frame.rows(); ++i) {
        for (int j = 0; j < s.frame.cols(); ++j) f << (j ? " " : "") << s.frame(i, j);
        f << "\n";
    }
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOpts {
    std::string measure;
    std::string quantity;
    double q = 1.0;
    double p = 0.0;  // 0: quantity-specific default
    int axis = 0;
    std::string theta;
    int dirs = 0;  // 0: quantity-specific default
    int subspaces = 128;
    std::uint64_t rays = 64;
};

int run_estimate(const GlobalOpts& g, const EstimateOpts& o) {
    Measure m = parse_measure_spec(o.measure, g.root().child("measure"));
    const int n = m.dim;
    RecordSink sink(g, {{"cmd", "estimate"},
                        {"measure", o.measure},
                        {"quantity", o.quantity},
                        {"q", fmt_double(o.q)},
                        {"p", fmt_double(o.p)},
                        {"axis", std::to_string(o.axis)},
                        {"theta", o.theta},
                        {"dirs", std::to_string(o.dirs)},
                        {"subspaces", std::to_string(o.subspaces)},
                        {"rays", std::to_string(o.rays)},
                        {"seed", std::to_string(g.seed)},
                        {"stream", std::to_string(g.stream)},
                        {"samples", std::to_string(g.samples)}});

    json payload{{"kind", "estimate"}, {"quantity", o.quantity}, {"measure", o.measure}};
    EstimateCI est;

    if (o.quantity == "Iq") {
        if (o.q == 0.0) throw UsageError("Iq needs a nonzero --q");
        const bool deep = o.q < 0.0 && 2.0 * (-o.q) >= static_cast<double>(n);
        payload["q"] = o.q;
        if (deep) {
            double kd = -o.q;
            int k = static_cast<int>(std::llround(kd));
            if (std::abs(kd - k) > 1e-9 || k >= n)
                throw UsageError("deep negative orders go through sections and need "
                                 "integer --q in (-n, -n/2]");
            est = I_negk_via_sections(m, k, o.subspaces, o.rays, g.root().child("Iq-sections"));
        } else {
            SampleBatch batch = draw(m, g.budget(200000), g.root().child("Iq-batch"));
            est = moment_Iq(m, o.q, batch);
        }
        payload["estimate"] = ci_json(est);
    } else if (o.quantity == "support") {
        double p = o.p > 0.0 ? o.p : 2.0;
        Eigen::VectorXd theta = resolve_direction(n, o.axis, o.theta);
        SampleBatch batch = draw(m, g.budget(200000), g.root().child("support-batch"));
        est = support_Zp(m, p, theta, batch);
        payload["p"] = p;
        payload["direction"] = std::vector<double>(theta.data(), theta.data() + n);
        payload["estimate"] = ci_json(est);
    } else if (o.quantity == "width") {
        double p = o.p > 0.0 ? o.p : 2.0;
        int dirs = o.dirs > 0 ? o.dirs : 256;
        auto batch = std::make_shared<const SampleBatch>(
            draw(m, g.budget(100000), g.root().child("width-batch")));
        BodyOracle body = zp_body(m, p, batch);
        DirectionGrid grid = DirectionGrid::uniform(n, dirs, g.root().child("width-grid"));
        est = q_mean_width(body, o.q, grid);
        payload["p"] = p;
        payload["q"] = o.q;
        payload["estimate"] = ci_json(est);
    } else if (o.quantity == "volume") {
        double p = o.p > 0.0 ? o.p : static_cast<double>(n);
        int dirs = o.dirs > 0 ? o.dirs : 2500;
        auto batch = std::make_shared<const SampleBatch>(
            draw(m, g.budget(100000), g.root().child("volume-batch")));
        BodyOracle body = zp_body(m, p, batch);
        VolumeBracket vb = volume_bracket(body, dirs, g.root().child("volume-grid"));
        payload["p"] = p;
        payload["lowerPerDim"] = ci_json(vb.lowerPerDim);
        payload["upperPerDim"] = ci_json(vb.upperPerDim);
        est.value = std::sqrt(vb.lowerPerDim.value * vb.upperPerDim.value);
        est.stderr_ = 0.5 * (est.value / vb.lowerPerDim.value) * vb.lowerPerDim.stderr_ +
                      0.5 * (est.value / vb.upperPerDim.value) * vb.upperPerDim.stderr_;
        est.sampleCount = vb.lowerPerDim.sampleCount;
        est.method = "bracket-midpoint";
        payload["estimate"] = ci_json(est);
    } else if (o.quantity == "L") {
        IsotropicConstantBracket br =
            isotropic_constant_bracket(m, g.budget(100000), g.root().child("L-bracket"));
        payload["lo"] = ci_json(br.lo);
        payload["hi"] = ci_json(br.hi);
        if (br.exact) {
            est.value = *br.exact;
            est.stderr_ = 0.0;
            est.sampleCount = br.lo.sampleCount;
            est.method = "closed-form";
            payload["exact"] = *br.exact;
        } else {
            est.value = std::sqrt(br.lo.value * br.hi.value);
            est.stderr_ = 0.5 * (est.value / br.lo.value) * br.lo.stderr_ +
                          0.5 * (est.value / br.hi.value) * br.hi.stderr_;
            est.sampleCount = br.lo.sampleCount;
            est.method = "bracket-midpoint";
            payload["exact"] = json();
        }
        payload["estimate"] = ci_json(est);
    } else {
        throw UsageError("unknown quantity '" + o.quantity +
                         "' (expected Iq, support, width, volume, L)");
    }

    sink.emit(payload);
    sink.summary() << o.quantity << "(" << o.measure << ") = " << est.value << " +- "
                   << est.stderr_ << "  [" << est.method << ", " << est.sampleCount
                   << " samples]\n";
    return 0;
}

// ---------------------------------------------------------------------------
// param

struct ParamOpts {
    std::string measure;
    std::string name;
    double delta = 0.0;
    double A = 0.0;
    double p = 2.0;
    int dirs = 400;
    int subspaces = 48;
    std::uint64_t rays = 0;  // 0: per-parameter default
    int restarts = 6;
    int localSteps = 40;
    int haar = 256;
    std::string witnessOut;
};

int run_param(const GlobalOpts& g, const ParamOpts& o) {
    Measure m = parse_measure_spec(o.measure, g.root().child("measure"));
    RecordSink sink(g, {{"cmd", "param"},
                        {"measure", o.measure},
                        {"name", o.name},
                        {"delta", fmt_double(o.delta)},
                        {"A", fmt_double(o.A)},
                        {"p", fmt_double(o.p)},
                        {"dirs", std::to_string(o.dirs)},
                        {"subspaces", std::to_string(o.subspaces)},
                        {"rays", std::to_string(o.rays)},
                        {"restarts", std::to_string(o.restarts)},
                        {"local-steps", std::to_string(o.localSteps)},
                        {"haar", std::to_string(o.haar)},
                        {"seed", std::to_string(g.seed)},
                        {"stream", std::to_string(g.stream)},
                        {"samples", std::to_string(g.samples)}});

    GrassmannSearchConfig cfg;
    cfg.restarts = o.restarts;
    cfg.localSteps = o.localSteps;
    cfg.haarSamples = o.haar;

    Seed seed = g.root().child("param-" + std::string(o.name));
    json payload;
    double shown = 0.0;

    if (o.name == "qmc") {
        if (o.delta < 1.0) throw UsageError("qmc needs --delta >= 1");
        ParamEstimate pe = q_minus_c(m, o.delta, seed, o.subspaces,
                                     o.rays ? o.rays : 32);
        if (pe.witness && !o.witnessOut.empty()) write_frame(o.witnessOut, *pe.witness);
        payload = param_json(pe);
        shown = pe.value;
    } else if (o.name == "kstar") {
        auto batch = std::make_shared<const SampleBatch>(
            draw(m, g.budget(100000), seed.child("batch")));
        BodyOracle body = zp_body(m, o.p, batch);
        DirectionGrid grid = DirectionGrid::uniform(m.dim, o.dirs, seed.child("grid"));
        EstimateCI est = k_star(body, grid);
        payload = json{{"kind", "param"}, {"name", "kstar"}, {"p", o.p},
                       {"estimate", ci_json(est)}};
        shown = est.value;
    } else if (o.name == "qstar") {
        ParamEstimate pe = q_star(m, seed, g.budget(40000), o.dirs > 0 ? o.dirs : 200);
        payload = param_json(pe);
        shown = pe.value;
    } else if (o.name == "rsharp") {
        if (o.A < 1.0) throw UsageError("rsharp needs --A >= 1");
        ParamEstimate pe = r_sharp(m, o.A, cfg, seed, o.rays ? o.rays : 2048);
        if (pe.witness && !o.witnessOut.empty()) write_frame(o.witnessOut, *pe.witness);
        payload = param_json(pe);
        shown = pe.value;
    } else if (o.name == "qmcH") {
        if (o.delta < 1.0) throw UsageError("qmcH needs --delta >= 1");
        ParamEstimate pe = hereditary(HereditaryParam::QMinusC, m, o.delta, cfg, seed);
        if (pe.witness && !o.witnessOut.empty()) write_frame(o.witnessOut, *pe.witness);
        payload = param_json(pe);
        shown = pe.value;
    } else if (o.name == "rsharpH") {
        if (o.A < 1.0) throw UsageError("rsharpH needs --A >= 1");
        ParamEstimate pe = hereditary(HereditaryParam::RSharp, m, o.A, cfg, seed);
        if (pe.witness && !o.witnessOut.empty()) write_frame(o.witnessOut, *pe.witness);
        payload = param_json(pe);
        shown = pe.value;
    } else {
        throw UsageError("unknown parameter '" + o.name +
                         "' (expected qmc, kstar, qstar, rsharp, qmcH, rsharpH)");
    }

    payload["measure"] = o.measure;
    sink.emit(payload);
    sink.summary() << o.name << "(" << o.measure << ") = " << shown << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// laplace

struct LaplaceOpts {
    std::string measure;
    std::string xi;
};

int run_laplace(const GlobalOpts& g, const LaplaceOpts& o) {
    Measure m = parse_measure_spec(o.measure, g.root().child("measure"));
    RecordSink sink(g, {{"cmd", "laplace"},
                        {"measure", o.measure},
                        {"xi", o.xi},
                        {"seed", std::to_string(g.seed)},
                        {"stream", std::to_string(g.stream)},
                        {"samples", std::to_string(g.samples)}});
    Eigen::VectorXd xi = parse_csv_vector(o.xi);
    if (xi.size() != m.dim)
        throw UsageError("--xi has dimension " + std::to_string(xi.size()) +
                         ", measure has dimension " + std::to_string(m.dim));

    json payload{{"kind", "laplace"},
                 {"measure", o.measure},
                 {"xi", std::vector<double>(xi.data(), xi.data() + xi.size())}};
    if (!laplace_domain_finite(m, xi)) {
        payload["finite"] = false;
        sink.emit(payload);
        sink.summary() << "Lambda(" << o.xi << ") = +inf (outside the finiteness domain)\n";
        return 0;
    }
    SampleBatch batch = draw(m, g.budget(200000), g.root().child("laplace-batch"));
    EstimateCI est = log_laplace(m, xi, batch);
    payload["finite"] = true;
    payload["estimate"] = ci_json(est);
    sink.emit(payload);
    sink.summary() << "Lambda(" << o.xi << ") = " << est.value << " +- " << est.stderr_
                   << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// tiltcheck

struct TiltCheckOpts {
    std::string measure;
    std::string x;
    double h = 1e-3;
    double gradCap = 0.05;
    double hessCap = 0.10;
};

int run_tiltcheck(const GlobalOpts& g, const TiltCheckOpts& o) {
    Measure m = parse_measure_spec(o.measure, g.root().child("measure"));
    RecordSink sink(g, {{"cmd", "tiltcheck"},
                        {"measure", o.measure},
                        {"x", o.x},
                        {"h", fmt_double(o.h)},
                        {"grad-cap", fmt_double(o.gradCap)},
                        {"hess-cap", fmt_double(o.hessCap)},
                        {"seed", std::to_string(g.seed)},
                        {"stream", std::to_string(g.stream)},
                        {"samples", std::to_string(g.samples)}});
    Eigen::VectorXd x = parse_csv_vector(o.x);
    if (x.size() != m.dim)
        throw UsageError("--x has dimension " + std::to_string(x.size()) +
                         ", measure has dimension " + std::to_string(m.dim));

    TiltDerivativeReport rep =
        tilt_derivative_check(m, x, o.h, g.budget(200000), g.root().child("tiltcheck"));
    bool pass = rep.gradGap <= o.gradCap && rep.hessGap <= o.hessCap;
    sink.emit(json{{"kind", "tiltcheck"},
                   {"measure", o.measure},
                   {"x", std::vector<double>(x.data(), x.data() + x.size())},
                   {"h", o.h},
                   {"gradGap", rep.gradGap},
                   {"hessGap", rep.hessGap},
                   {"gradCap", o.gradCap},
                   {"hessCap", o.hessCap},
                   {"pass", pass}});
    sink.summary() << "gradGap=" << rep.gradGap << " (cap " << o.gradCap << "), hessGap="
                   << rep.hessGap << " (cap " << o.hessCap << ") -> "
                   << (pass ? "pass" : "fail") << "\n";
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// lambdagauge

struct LambdaGaugeOpts {
    std::string measure;
    double p = 0.0;
    int axis = 0;
    std::string theta;
};

int run_lambdagauge(const GlobalOpts& g, const LambdaGaugeOpts& o) {
    Measure m = parse_measure_spec(o.measure, g.root().child("measure"));
    if (o.p < 1.0) throw UsageError("lambdagauge needs --p >= 1");
    RecordSink sink(g, {{"cmd", "lambdagauge"},
                        {"measure", o.measure},
                        {"p", fmt_double(o.p)},
                        {"axis", std::to_string(o.axis)},
                        {"theta", o.theta},
                        {"seed", std::to_string(g.seed)},
                        {"stream", std::to_string(g.stream)},
                        {"samples", std::to_string(g.samples)}});
    Eigen::VectorXd theta = resolve_direction(m.dim, o.axis, o.theta);
    LogLaplaceOracle oracle =
        make_log_laplace_oracle(m, g.budget(40000), g.root().child("gauge-oracle"));
    GaugeResult gr = lambda_p_gauge(oracle, o.p, theta);
    sink.emit(json{{"kind", "lambdagauge"},
                   {"measure", o.measure},
                   {"p", o.p},
                   {"direction", std::vector<double>(theta.data(), theta.data() + m.dim)},
                   {"t", gr.t},
                   {"domainLimited", gr.domainLimited}});
    sink.summary() << "t*(p=" << o.p << ") = " << gr.t
                   << (gr.domainLimited ? "  [domain-limited]" : "") << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// check / scan shared driver

struct CheckOpts {
    std::string relation;
    std::string measures = "gaussian,cube,product-exponential";
    int nmin = 2;
    int nmax = 6;
    bool list = false;
    // single-point overrides; `used` mirrors whether any flag was passed
    int k = 0;
    double p = 0.0;
    double q = 0.0;
    double delta = 0.0;
    double A = 0.0;
    bool singlePoint = false;
};

bool volume_bearing(RelationId id) {
    return id == RelationId::LZnIdentity || id == RelationId::VolumeLower ||
           id == RelationId::ZpSqrtpMonotone;
}

struct RelationRun {
    RelationId relation{};
    std::vector<RelationReport> reports;
    std::vector<GridFailure> failures;
    std::optional<double> maxFitted;
    std::optional<double> trendSlope;
    int indeterminate = 0;
    int failed = 0;
};

RelationRun run_relation(RelationId rel, const CheckOpts& o,
                         const std::vector<std::string>& specs, Seed seed) {
    RelationRun out;
    out.relation = rel;

    int hi = o.nmax;
    if (volume_bearing(rel)) hi = std::min(hi, 6);
    std::vector<int> ns;
    for (int n = std::max(1, o.nmin); n <= hi; ++n) ns.push_back(n);
    if (ns.empty()) return out;

    if (!o.singlePoint) {
        GridSummary s = run_grid(rel, specs, ns, seed);
        out.reports = std::move(s.reports);
        out.failures = std::move(s.failures);
        out.maxFitted = s.maxFittedConstant;
        out.trendSlope = s.trendSlope;
    } else {
        GridPoint gp;
        gp.k = o.k;
        gp.p = o.p;
        gp.q = o.q;
        gp.delta = o.delta;
        gp.A = o.A;
        std::uint64_t idx = 0;
        for (const std::string& spec : specs) {
            for (int n : ns) {
                std::string cell = spec + ":" + std::to_string(n);
                try {
                    Measure m = parse_measure_spec(cell, seed.child("measure", idx));
                    out.reports.push_back(run_check(rel, m, gp, seed.child("cell", idx)));
                } catch (const std::exception& e) {
                    out.failures.push_back(GridFailure{cell, gp, e.what()});
                }
                ++idx;
            }
        }
        if (!out.reports.empty()) {
            try {
                int excluded = 0;
                out.maxFitted = fit_constant(rel, out.reports, &excluded);
            } catch (const std::exception&) {
            }
        }
    }

    for (const RelationReport& r : out.reports) {
        if (r.verdict == Verdict::Fail) ++out.failed;
        if (r.verdict == Verdict::Indeterminate) ++out.indeterminate;
    }
    return out;
}

void print_relation_rows(std::ostream& os, const RelationRun& rr) {
    for (const RelationReport& r : rr.reports) {
        std::ostringstream gp;
        gp << "n=" << r.gridPoint.n;
        if (r.gridPoint.k > 0) gp << " k=" << r.gridPoint.k;
        if (r.gridPoint.p > 0) gp << " p=" << r.gridPoint.p;
        if (r.gridPoint.q > 0) gp << " q=" << r.gridPoint.q;
        if (r.gridPoint.delta > 0) gp << " delta=" << r.gridPoint.delta;
        if (r.gridPoint.A > 0) gp << " A=" << r.gridPoint.A;
        os << "  " << std::left << std::setw(20) << relation_tag(r.relation)
           << std::setw(26) << r.measureSpec << std::setw(28) << gp.str() << std::right
           << " lhs=" << std::setprecision(6) << r.lhs.value
           << " rhs=" << r.rhs.value;
        if (r.fittedConstant) os << " fitted=" << *r.fittedConstant;
        os << "  " << verdict_name(r.verdict) << "\n";
    }
    for (const GridFailure& f : rr.failures) {
        os << "  " << std::left << std::setw(20) << relation_tag(rr.relation)
           << std::setw(26) << f.measureSpec << "failed: " << f.message << "\n";
    }
    os << "  -- " << relation_tag(rr.relation) << ": " << rr.reports.size() << " checks, "
       << rr.failed << " fail, " << rr.indeterminate << " indeterminate, "
       << rr.failures.size() << " errors";
    if (rr.maxFitted) os << ", maxFittedConstant=" << *rr.maxFitted;
    if (rr.trendSlope) os << ", trendSlope=" << *rr.trendSlope;
    os << "\n";
}

const char* kRelationLegend =
    "relation tags (check --list prints this table):\n"
    "  section-formula      I_{-k}(mu) = c_{n,k} (avg_E f_{pi_E mu}(0))^{-1/k}\n"
    "  projection-identity  Proj_E Z_q(mu) = Z_q(pi_E mu)\n"
    "  Ik-width             I_{-k}(mu) ~ sqrt(n/k) w_{-k}(Z_k(mu))\n"
    "  LZn-identity         L_mu |Z_n(mu)|^{1/n} ~ 1\n"
    "  fradelizi            sup f^{1/n} <= e f(0)^{1/n}\n"
    "  reverse-inclusion    Z_q(mu) subset c (q/p) Z_p(mu)\n"
    "  lambda-polar         {Lambda_mu <= p} ~ p Z_p(mu)^polar\n"
    "  tilt-derivatives     grad Lambda = tilted mean, Hess Lambda = tilted covariance\n"
    "  tilt-stability       Z_q(tilt_x mu) ~ Z_q(mu) for x inside half the gauge level\n"
    "  theorem1-chain       hereditary r#(A) <= hereditary q_{-c}(C1 A), C1 fitted\n"
    "  corollary34          I_{-p}(mu) >= sqrt(n)/(C1 A) at p = hereditary r#(A)\n"
    "  volume-lower         |Z_p(mu)|^{1/n} >= (c/A) sqrt(p/n) at p <= hereditary r#(A)\n"
    "  good-marginals       Haar{E : L_{pi_E mu} <= C1 L_mu} >= 1 - e^{-k}\n"
    "  zp-sqrtp-monotone    |Z_p(mu)|^{1/n}/sqrt(p) nonincreasing in p\n"
    "  santalo-width        w_{-n}(K) = |B^n|^{1/n} / |K^polar|^{1/n}\n"
    "  I2-normalization     I_2(mu) = sqrt(n)\n"
    "  negmoment-via-L      I_{-k}(mu) ~ sqrt(n) (avg_E L_{pi_E mu}^k)^{-1/k}\n";

int gate_exit(int fails, int indets, bool anyReport, std::size_t errorRows) {
    if (fails > 0) return 1;
    if (indets > 0) return 3;
    if (!anyReport && errorRows > 0) return 4;
    return 0;
}

int run_check_cmd(const GlobalOpts& g, const CheckOpts& o) {
    if (o.list) {
        std::cout << kRelationLegend;
        return 0;
    }
    if (o.relation.empty()) throw UsageError("check needs --relation (tag or 'all')");
    std::vector<RelationId> rels;
    if (o.relation == "all") {
        rels = all_relations();
    } else {
        rels.push_back(parse_relation(o.relation));
    }
    std::vector<std::string> specs = split_csv(o.measures);
    if (specs.empty()) throw UsageError("check needs at least one measure family");
    if (o.nmin > o.nmax) throw UsageError("--nmin must not exceed --nmax");

    RecordSink sink(g, {{"cmd", "check"},
                        {"relation", o.relation},
                        {"measures", o.measures},
                        {"nmin", std::to_string(o.nmin)},
                        {"nmax", std::to_string(o.nmax)},
                        {"k", std::to_string(o.k)},
                        {"p", fmt_double(o.p)},
                        {"q", fmt_double(o.q)},
                        {"delta", fmt_double(o.delta)},
                        {"A", fmt_double(o.A)},
                        {"seed", std::to_string(g.seed)},
                        {"stream", std::to_string(g.stream)},
                        {"samples", std::to_string(g.samples)}});

    int fails = 0;
    int indets = 0;
    bool anyReport = false;
    std::size_t errorRows = 0;
    for (std::size_t i = 0; i < rels.size(); ++i) {
        RelationRun rr = run_relation(rels[i], o, specs,
                                      g.root().child(relation_tag(rels[i])));
        for (const RelationReport& r : rr.reports) sink.emit(relation_json(r));
        json summary{{"kind", "relation-summary"},
                     {"relation", relation_tag(rr.relation)},
                     {"checks", rr.reports.size()},
                     {"failed", rr.failed},
                     {"indeterminate", rr.indeterminate},
                     {"errors", rr.failures.size()}};
        summary["maxFittedConstant"] = rr.maxFitted ? json(*rr.maxFitted) : json();
        summary["trendSlope"] = rr.trendSlope ? json(*rr.trendSlope) : json();
        sink.emit(summary);
        print_relation_rows(sink.summary(), rr);
        fails += rr.failed;
        indets += rr.indeterminate;
        anyReport = anyReport || !rr.reports.empty();
        errorRows += rr.failures.size();
    }
    return gate_exit(fails, indets, anyReport, errorRows);
}

int run_scan(const GlobalOpts& g, const CheckOpts& o) {
    if (o.relation.empty()) throw UsageError("scan needs --relation (tag or 'all')");
    std::vector<RelationId> rels;
    if (o.relation == "all") {
        rels = all_relations();
    } else {
        rels.push_back(parse_relation(o.relation));
    }
    std::vector<std::string> specs = split_csv(o.measures);
    if (specs.empty()) throw UsageError("scan needs at least one measure family");
    if (o.nmin > o.nmax) throw UsageError("--nmin must not exceed --nmax");

    RecordSink sink(g, {{"cmd", "scan"},
                        {"relation", o.relation},
                        {"measures", o.measures},
                        {"nmin", std::to_string(o.nmin)},
                        {"nmax", std::to_string(o.nmax)},
                        {"k", std::to_string(o.k)},
                        {"p", fmt_double(o.p)},
                        {"q", fmt_double(o.q)},
                        {"delta", fmt_double(o.delta)},
                        {"A", fmt_double(o.A)},
                        {"seed", std::to_string(g.seed)},
                        {"stream", std::to_string(g.stream)},
                        {"samples", std::to_string(g.samples)}});

    std::ostream& csv = sink.records();
    csv << "relation,measure,n,k,p,q,delta,A,lhs,lhs_stderr,rhs,rhs_stderr,fitted,verdict\n";
    csv << std::setprecision(10);

    int fails = 0;
    int indets = 0;
    bool anyReport = false;
    std::size_t errorRows = 0;
    for (std::size_t i = 0; i < rels.size(); ++i) {
        RelationRun rr = run_relation(rels[i], o, specs,
                                      g.root().child(relation_tag(rels[i])));
        for (const RelationReport& r : rr.reports) {
            csv << relation_tag(r.relation) << ',' << r.measureSpec << ',' << r.gridPoint.n
                << ',' << r.gridPoint.k << ',' << r.gridPoint.p << ',' << r.gridPoint.q
                << ',' << r.gridPoint.delta << ',' << r.gridPoint.A << ',' << r.lhs.value
                << ',' << r.lhs.stderr_ << ',' << r.rhs.value << ',' << r.rhs.stderr_
                << ',';
            if (r.fittedConstant) csv << *r.fittedConstant;
            csv << ',' << verdict_name(r.verdict) << "\n";
        }
        csv << "# relation=" << relation_tag(rr.relation) << " maxFittedConstant=";
        if (rr.maxFitted) csv << *rr.maxFitted;
        csv << " trendSlope=";
        if (rr.trendSlope) csv << *rr.trendSlope;
        csv << " errors=" << rr.failures.size() << "\n";
        print_relation_rows(sink.summary(), rr);
        fails += rr.failed;
        indets += rr.indeterminate;
        anyReport = anyReport || !rr.reports.empty();
        errorRows += rr.failures.size();
    }
    return gate_exit(fails, indets, anyReport, errorRows);
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
    std::string in;
    std::string csvOut;
};

int run_report(const ReportOpts& o) {
    std::ifstream f(o.in);
    if (!f) throw UsageError("cannot open input '" + o.in + "'");

    struct Group {
        std::vector<RelationReport> rows;
        int pass = 0;
        int fail = 0;
        int indet = 0;
    };
    std::map<std::pair<std::string, int>, Group> groups;
    std::size_t skipped = 0;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception&) {
            ++skipped;
            continue;
        }
        if (!rec.contains("payload") || !rec["payload"].is_object()) continue;
        const json& p = rec["payload"];
        if (p.value("kind", "") != "relation") continue;
        RelationReport r;
        std::string tag = p.value("relation", "");
        try {
            r.relation = parse_relation(tag);
        } catch (const std::exception&) {
            ++skipped;
            continue;
        }
        r.gridPoint.n = p.value("n", 0);
        std::string verdict = p.value("verdict", "");
        if (verdict == "pass") {
            r.verdict = Verdict::Pass;
        } else if (verdict == "fail") {
            r.verdict = Verdict::Fail;
        } else {
            r.verdict = Verdict::Indeterminate;
        }
        if (p.contains("fitted") && p["fitted"].is_number())
            r.fittedConstant = p["fitted"].get<double>();
        Group& grp = groups[{tag, r.gridPoint.n}];
        if (r.verdict == Verdict::Pass) ++grp.pass;
        if (r.verdict == Verdict::Fail) ++grp.fail;
        if (r.verdict == Verdict::Indeterminate) ++grp.indet;
        grp.rows.push_back(std::move(r));
    }
    if (groups.empty()) throw UsageError("no relation records in '" + o.in + "'");

    std::ofstream csv;
    if (!o.csvOut.empty()) {
        csv.open(o.csvOut);
        if (!csv) throw UsageError("cannot open output '" + o.csvOut + "'");
        csv << "relation,n,checks,pass,fail,indeterminate,constant\n";
        csv << std::setprecision(10);
    }

    std::cout << std::left << std::setw(22) << "relation" << std::right << std::setw(4)
              << "n" << std::setw(8) << "checks" << std::setw(6) << "pass" << std::setw(6)
              << "fail" << std::setw(7) << "indet" << std::setw(14) << "constant"
              << "\n";
    int fails = 0;
    int indets = 0;
    for (const auto& [key, grp] : groups) {
        std::optional<double> fitted;
        try {
            int excluded = 0;
            fitted = fit_constant(grp.rows.front().relation, grp.rows, &excluded);
        } catch (const std::exception&) {
        }
        std::cout << std::left << std::setw(22) << key.first << std::right << std::setw(4)
                  << key.second << std::setw(8) << grp.rows.size() << std::setw(6)
                  << grp.pass << std::setw(6) << grp.fail << std::setw(7) << grp.indet;
        if (fitted) {
            std::cout << std::setw(14) << std::setprecision(6) << *fitted;
        } else {
            std::cout << std::setw(14) << "-";
        }
        std::cout << "\n";
        if (csv.is_open()) {
            csv << key.first << ',' << key.second << ',' << grp.rows.size() << ','
                << grp.pass << ',' << grp.fail << ',' << grp.indet << ',';
            if (fitted) csv << *fitted;
            csv << "\n";
        }
        fails += grp.fail;
        indets += grp.indet;
    }
    if (skipped) std::cout << "(" << skipped << " unparsable lines skipped)\n";
    return gate_exit(fails, indets, true, 0);
}

}  // namespace

int main(int argc, char** argv) {
    GlobalOpts g;
    CLI::App app{"estimators and relation checks for isotropic log-concave measures",
                 "isolab"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    app.set_config("--config", "", "flat key=value configuration file ('#' comments)");
    app.add_option("--seed", g.seed, "master seed (env ISOLAB_SEED)")
        ->capture_default_str();
    app.add_option("--stream", g.stream, "seed stream selector")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads, 0 = hardware")
        ->capture_default_str();
    app.add_option("--samples", g.samples, "sample budget override, 0 = per-op default")
        ->capture_default_str();
    app.add_option("--out", g.out, "write records here instead of stdout");

    EstimateOpts eo;
    CLI::App* est = app.add_subcommand(
        "estimate", "estimate a scalar quantity of a measure (Iq, support, width, volume, L)");
    est->add_option("--measure", eo.measure, "measure spec, e.g. gaussian:10 or cube:4")
        ->required();
    est->add_option("--quantity", eo.quantity,
                    "Iq: (E |x|^q)^{1/q} | support: h_{Z_p}(theta) | width: w_q(Z_p) | "
                    "volume: |Z_p|^{1/n} bracket | L: isotropic constant")
        ->required();
    est->add_option("--q", eo.q, "moment / width order (negative allowed)");
    est->add_option("--p", eo.p, "moment-body order (default 2; volume defaults to n)");
    est->add_option("--axis", eo.axis, "coordinate direction index");
    est->add_option("--theta", eo.theta, "explicit direction, comma-separated");
    est->add_option("--dirs", eo.dirs, "direction-grid size");
    est->add_option("--subspaces", eo.subspaces, "Haar subspaces for deep negative orders");
    est->add_option("--rays", eo.rays, "rays per subspace for deep negative orders");

    ParamOpts po;
    CLI::App* par = app.add_subcommand(
        "param", "compute a structural parameter (qmc, kstar, qstar, rsharp, qmcH, rsharpH)");
    par->add_option("--measure", po.measure, "measure spec")->required();
    par->add_option("--name", po.name,
                    "qmc: q_{-c}(delta) | kstar: k*(Z_p) | qstar: q*(mu) | rsharp: r#(A) | "
                    "qmcH / rsharpH: hereditary variants n min_k param/k")
        ->required();
    par->add_option("--delta", po.delta, "threshold for qmc / qmcH (>= 1)");
    par->add_option("--A", po.A, "threshold for rsharp / rsharpH (>= 1)");
    par->add_option("--p", po.p, "body order for kstar")->capture_default_str();
    par->add_option("--dirs", po.dirs, "direction-grid size")->capture_default_str();
    par->add_option("--subspaces", po.subspaces, "subspace count for qmc")
        ->capture_default_str();
    par->add_option("--rays", po.rays, "rays per subspace (0 = parameter default)");
    par->add_option("--restarts", po.restarts, "search restarts")->capture_default_str();
    par->add_option("--local-steps", po.localSteps, "local search steps")
        ->capture_default_str();
    par->add_option("--haar", po.haar, "Haar samples for hereditary enumeration")
        ->capture_default_str();
    par->add_option("--witness-out", po.witnessOut, "write witness frame to this path");

    LaplaceOpts lo;
    CLI::App* lap = app.add_subcommand("laplace",
                                       "evaluate the log-Laplace transform Lambda_mu(xi)");
    lap->add_option("--measure", lo.measure, "measure spec")->required();
    lap->add_option("--xi", lo.xi, "evaluation point, comma-separated")->required();

    TiltCheckOpts to;
    CLI::App* tc = app.add_subcommand(
        "tiltcheck", "check grad Lambda = tilted mean and Hess Lambda = tilted covariance");
    tc->add_option("--measure", to.measure, "measure spec")->required();
    tc->add_option("--x", to.x, "tilt point, comma-separated")->required();
    tc->add_option("--step", to.h, "finite-difference step")->capture_default_str();
    tc->add_option("--grad-cap", to.gradCap, "gradient gap tolerance")
        ->capture_default_str();
    tc->add_option("--hess-cap", to.hessCap, "Hessian gap tolerance")
        ->capture_default_str();

    LambdaGaugeOpts go;
    CLI::App* lg = app.add_subcommand(
        "lambdagauge", "solve Lambda_mu(t theta) = p for the level-set gauge t*(theta)");
    lg->add_option("--measure", go.measure, "measure spec")->required();
    lg->add_option("--p", go.p, "level (>= 1)")->required();
    lg->add_option("--axis", go.axis, "coordinate direction index");
    lg->add_option("--theta", go.theta, "explicit direction, comma-separated");

    CheckOpts co;
    CLI::App* chk = app.add_subcommand(
        "check", "verify a distributional relation over a measure/dimension grid");
    chk->add_option("--relation", co.relation, "relation tag, or 'all'");
    chk->add_flag("--list", co.list, "print the relation tag table and exit");
    chk->add_option("--measures", co.measures, "comma-separated family list")
        ->capture_default_str();
    chk->add_option("--nmin", co.nmin, "smallest dimension")->capture_default_str();
    chk->add_option("--nmax", co.nmax, "largest dimension (volume relations cap at 6)")
        ->capture_default_str();
    CLI::Option* ck = chk->add_option("--k", co.k, "codimension / marginal override");
    CLI::Option* cp = chk->add_option("--p", co.p, "order override");
    CLI::Option* cq = chk->add_option("--q", co.q, "second order override");
    CLI::Option* cd = chk->add_option("--delta", co.delta, "threshold override");
    CLI::Option* ca = chk->add_option("--A", co.A, "qualification threshold override");
    chk->footer(kRelationLegend);

    CheckOpts so;
    CLI::App* scn = app.add_subcommand(
        "scan", "run relation checks and emit a CSV table of every grid cell");
    scn->add_option("--relation", so.relation, "relation tag, or 'all'");
    scn->add_option("--measures", so.measures, "comma-separated family list")
        ->capture_default_str();
    scn->add_option("--nmin", so.nmin, "smallest dimension")->capture_default_str();
    scn->add_option("--nmax", so.nmax, "largest dimension (volume relations cap at 6)")
        ->capture_default_str();
    CLI::Option* sk = scn->add_option("--k", so.k, "codimension / marginal override");
    CLI::Option* sp = scn->add_option("--p", so.p, "order override");
    CLI::Option* sq = scn->add_option("--q", so.q, "second order override");
    CLI::Option* sd = scn->add_option("--delta", so.delta, "threshold override");
    CLI::Option* sa = scn->add_option("--A", so.A, "qualification threshold override");
    scn->footer(kRelationLegend);

    ReportOpts ro;
    CLI::App* rep = app.add_subcommand("report",
                                       "aggregate JSONL relation records into a table");
    rep->add_option("--in", ro.in, "JSONL records file")->required();
    rep->add_option("--out", ro.csvOut, "also write the table as CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    // seed precedence: command line beats ISOLAB_SEED beats config file
    bool seedOnCli = false;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--seed" || a.rfind("--seed=", 0) == 0) seedOnCli = true;
    }
    if (!seedOnCli) {
        if (const char* env = std::getenv("ISOLAB_SEED")) {
            try {
                g.seed = std::stoull(env);
            } catch (const std::exception&) {
                std::cerr << "isolab: ISOLAB_SEED is not an integer\n";
                return 2;
            }
        }
    }
    set_max_threads(g.threads);
    co.singlePoint = ck->count() || cp->count() || cq->count() || cd->count() || ca->count();
    so.singlePoint = sk->count() || sp->count() || sq->count() || sd->count() || sa->count();

    try {
        if (est->parsed()) return run_estimate(g, eo);
        if (par->parsed()) return run_param(g, po);
        if (lap->parsed()) return run_laplace(g, lo);
        if (tc->parsed()) return run_tiltcheck(g, to);
        if (lg->parsed()) return run_lambdagauge(g, go);
        if (chk->parsed()) return run_check_cmd(g, co);
        if (scn->parsed()) return run_scan(g, so);
        if (rep->parsed()) return run_report(ro);
    } catch (const UsageError& e) {
        std::cerr << "isolab: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "isolab: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "isolab: error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
