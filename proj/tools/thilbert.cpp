// Command-line driver: one subcommand per experiment, data files plus a
// manifest written to the output directory.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <thilbert/asymptotics.hpp>
#include <thilbert/bounds.hpp>
#include <thilbert/gram.hpp>
#include <thilbert/io.hpp>
#include <thilbert/operator.hpp>
#include <thilbert/reconstruct.hpp>
#include <thilbert/spectral.hpp>
#include <thilbert/torus.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace thilbert;

namespace {

constexpr const char* kVersion = "1.0.0";

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::string interval_i = "0,1";
    std::string interval_j = "2,3";
    std::string cells = "64";
    int n = 0;
    int m_power = 1;
    double mu = 0.5;
    std::string delta_list = "1e-2,1e-3,1e-4,1e-5,1e-6";
    double kappa = 0.0;
    std::uint64_t seed = 1;
    int seeds = 5;
    bool fix_integral = false;
    std::string theorem = "2";
    std::string rate = "exp";
    std::string kernel = "plain";
    std::string out = "out";
    std::string format = "csv";
};

std::vector<double> parse_list(const std::string& text, const char* what)
{
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    if (v.empty()) throw ValidationError(std::string(what) + ": empty list");
    return v;
}

Interval parse_interval(const std::string& text, const char* what)
{
    const auto v = parse_list(text, what);
    if (v.size() != 2) throw ValidationError(std::string(what) + ": expected lo,hi");
    try {
        return Interval(v[0], v[1]);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
}

std::pair<int, int> parse_cells(const std::string& text)
{
    const auto v = parse_list(text, "--cells");
    if (v.size() > 2) throw ValidationError("--cells: expected N or Ni,Nj");
    for (double c : v) {
        if (c != std::floor(c) || c < 1 || c > 1e6) throw ValidationError("--cells: positive integers required");
    }
    return {static_cast<int>(v[0]), static_cast<int>(v.size() == 2 ? v[1] : v[0])};
}

KernelScale parse_kernel(const std::string& k)
{
    if (k == "plain") return KernelScale::Plain;
    if (k == "unitary") return KernelScale::Unitary;
    throw ValidationError("--kernel: expected plain or unitary");
}

json config_json(const RunConfig& c)
{
    return json{{"command", c.command}, {"I", c.interval_i},       {"J", c.interval_j}, {"cells", c.cells},
                {"n", c.n},             {"M", c.m_power},          {"mu", c.mu},        {"delta_list", c.delta_list},
                {"kappa", c.kappa},     {"seed", c.seed},          {"seeds", c.seeds},  {"theorem", c.theorem},
                {"rate", c.rate},       {"kernel", c.kernel},      {"out", c.out},      {"format", c.format},
                {"fix_integral", c.fix_integral}};
}

class Output {
public:
    explicit Output(const RunConfig& c) : cfg_(c)
    {
        std::error_code ec;
        fs::create_directories(c.out, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + c.out);
    }

    void table(const std::string& name, const CsvTable& t)
    {
        if (cfg_.format == "csv") {
            const std::string file = name + ".csv";
            t.write((fs::path(cfg_.out) / file).string());
            files_.push_back(file);
            return;
        }
        json rows = json::array();
        for (const auto& r : t.data()) {
            json o;
            for (std::size_t k = 0; k < r.size(); ++k) {
                std::visit([&](const auto& v) { o[t.header()[k]] = v; }, r[k]);
            }
            rows.push_back(std::move(o));
        }
        document(name, json{{"columns", t.header()}, {"rows", rows}});
    }

    void document(const std::string& name, json body)
    {
        const std::string file = name + ".json";
        json doc{{"manifest", "manifest.json"}};
        for (auto& [k, v] : body.items()) doc[k] = v;
        std::ofstream os(fs::path(cfg_.out) / file, std::ios::binary);
        os << doc.dump(2) << '\n';
        if (!os) throw std::runtime_error("cannot write " + file);
        files_.push_back(file);
    }

    void manifest(double wall, int status)
    {
        json m{{"config", config_json(cfg_)}, {"version", kVersion}, {"wall_time_s", wall},
               {"exit_status", status},       {"files", files_}};
        std::ofstream os(fs::path(cfg_.out) / "manifest.json", std::ios::binary);
        os << m.dump(2) << '\n';
    }

private:
    const RunConfig& cfg_;
    std::vector<std::string> files_;
};

CaseConfig config_of(const RunConfig& c)
{
    return classify(parse_interval(c.interval_i, "--I"), parse_interval(c.interval_j, "--J"));
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

void run_classify(const RunConfig& c, Output& out)
{
    const auto cfg = config_of(c);
    json body{{"case", std::string(to_string(cfg.case_id))},
              {"I", interval_json(cfg.interval_i)},
              {"J", interval_json(cfg.interval_j)},
              {"reflected", cfg.reflected}};
    if (cfg.endpoints) body["endpoints"] = *cfg.endpoints;
    if (c.format == "json") {
        out.document("classify", body);
    } else {
        CsvTable t({"key", "value"});
        t.add_row({std::string("case"), std::string(to_string(cfg.case_id))});
        t.add_row({std::string("reflected"), static_cast<long long>(cfg.reflected)});
        if (cfg.endpoints) {
            for (std::size_t k = 0; k < 4; ++k) t.add_row({"a" + std::to_string(k + 1), (*cfg.endpoints)[k]});
        }
        out.table("classify", t);
    }
    std::cout << body.dump() << '\n';
}

void run_assemble(const RunConfig& c, Output& out)
{
    const auto cfg = config_of(c);
    const auto [ci, cj] = parse_cells(c.cells);
    const auto op = assemble(cfg, ci, cj, parse_kernel(c.kernel));
    CsvTable t({"row_j", "col_i", "value"});
    for (int m = 0; m < op.cells_j; ++m) {
        for (int n = 0; n < op.cells_i; ++n) t.add_row({static_cast<long long>(m), static_cast<long long>(n), op.entries(m, n)});
    }
    out.table("operator", t);
}

void run_gram(const RunConfig& c, Output& out)
{
    const auto cfg = config_of(c);
    if (c.n < 1) throw ValidationError("--n: positive number of cells required");
    GramOptions opt;
    opt.scale = parse_kernel(c.kernel);
    const auto g = gram_for_cells<mp_real>(cfg, c.n, opt);
    CsvTable t({"index", "eigenvalue"});
    for (std::size_t k = 0; k < g.eigenvalues.size(); ++k) t.add_row({static_cast<long long>(k), g.eigenvalues[k]});
    out.table("gram", t);
    CsvTable w({"cell", "coefficient"});
    for (std::size_t k = 0; k < g.worst_coeffs.size(); ++k) w.add_row({static_cast<long long>(k), g.worst_coeffs[k]});
    out.table("gram_worst", w);
}

void run_svd(const RunConfig& c, Output& out)
{
    const auto cfg = config_of(c);
    const int k = c.n > 0 ? c.n : 10;
    const auto [ci, cj] = parse_cells(c.cells);
    const KernelScale scale = parse_kernel(c.kernel);
    SpectralDecomposition d;
    std::vector<double> lambdas;
    if (cfg.case_id == Case::Gap) {
        NystromOptions opt;
        opt.scale = scale;
        const NystromSvd<mp_real> ny(cfg, opt);
        d = ny.decomposition(midpoint_grid(cfg.interval_i, ci), midpoint_grid(cfg.interval_j, cj),
                             static_cast<std::size_t>(k));
        const int sl_cells = std::max(ci, 10 * k);
        const auto sl = make_sturm_liouville(cfg, sl_cells);
        lambdas = sturm_liouville_eigs(sl, k).lambdas;
    } else if (cfg.case_id == Case::Overlap) {
        d = svd_of_operator(overlap_operator(cfg, ci, 4, scale), k);
    } else {
        throw ValidationError("svd: Gap or Overlap configuration required");
    }
    CsvTable t({"n", "sigma", "sl_lambda"});
    for (std::size_t n = 0; n < d.sigmas.size(); ++n) {
        t.add_row({static_cast<long long>(n), d.sigmas[n],
                   n < lambdas.size() ? lambdas[n] : std::numeric_limits<double>::quiet_NaN()});
    }
    out.table("svd", t);
    CsvTable f({"mode", "x", "u"});
    for (std::size_t n = 0; n < d.size(); ++n) {
        const auto& u = d.u_funcs[n];
        for (std::size_t q = 0; q < u.size(); ++q) f.add_row({static_cast<long long>(n), u.nodes()[q], u.values()[q]});
    }
    out.table("svd_functions", f);
    if (d.truncated) throw NonConvergence("svd: fewer resolved modes than requested");
}

void run_asymptotics(const RunConfig& c, Output& out)
{
    const auto k = constants(config_of(c));
    CsvTable t({"key", "value"});
    for (std::size_t i = 0; i < 4; ++i) t.add_row({"a" + std::to_string(i + 1), k.a[i]});
    t.add_row({std::string("z_plus"), k.z_plus});
    t.add_row({std::string("z_minus"), k.z_minus});
    t.add_row({std::string("k_plus"), k.k_plus});
    t.add_row({std::string("k_minus"), k.k_minus});
    t.add_row({std::string("lambda_coeff"), k.lambda_coeff});
    t.add_row({std::string("lambda_coeff_minus"), k.lambda_coeff_minus});
    t.add_row({std::string("sigma_rate"), k.sigma_rate});
    out.table("asymptotics", t);
}

TheoremId parse_theorem(const std::string& s)
{
    if (s == "1") return TheoremId::Thm1;
    if (s == "2") return TheoremId::Thm2;
    if (s == "2a") return TheoremId::Thm2a;
    if (s == "3") return TheoremId::Thm3;
    if (s == "3a") return TheoremId::Thm3a;
    if (s == "4") return TheoremId::Thm4;
    if (s == "polydecay") return TheoremId::Polydecay;
    throw ValidationError("--theorem: expected 1, 2, 2a, 3, 3a, 4 or polydecay");
}

int run_verify(const RunConfig& c, Output& out)
{
    const auto cfg = config_of(c);
    const TheoremId id = parse_theorem(c.theorem);
    const KernelScale scale = parse_kernel(c.kernel);
    if (id == TheoremId::Thm1) {
        if (!(c.kappa > 0.0)) throw ValidationError("--kappa: positive TV budget required");
        const auto [ci, cj] = parse_cells(c.cells);
        (void)cj;
        const auto r = theorem1_check(cfg, c.kappa, c.seed, ci, 40, scale);
        out.document("verify", json{{"theorem", "1"}, {"kappa", r.kappa}, {"members", r.members},
                                    {"min_ratio_coarse", r.min_ratio_coarse}, {"min_ratio_fine", r.min_ratio_fine},
                                    {"holds", r.holds}});
        return r.holds ? 0 : 3;
    }
    if (id == TheoremId::Polydecay) {
        CsvTable t({"member", "lhs", "rhs", "holds"});
        bool all = true;
        const auto fs = random_positive_steps(cfg.interval_i, 20, c.seed);
        for (std::size_t k = 0; k < fs.size(); ++k) {
            const auto r = polydecay_bound(cfg, fs[k], scale);
            all = all && r.holds;
            t.add_row({static_cast<long long>(k), r.lhs, r.rhs, static_cast<long long>(r.holds)});
        }
        out.table("verify", t);
        return all ? 0 : 3;
    }
    BoundsOptions bo;
    bo.scale = scale;
    const BoundsContext ctx(cfg, bo);
    if ((id == TheoremId::Thm2a || id == TheoremId::Thm3a) && (c.m_power < 0 || c.m_power > 3)) {
        throw ValidationError("--M: expected 0..3");
    }
    const auto e = envelope_experiment(ctx, id, c.m_power, c.mu, c.seed);
    CsvTable t({"set", "label", "param", "lhs", "regressor"});
    for (const auto& r : e.generation.rows) t.add_row({std::string("generation"), r.label, r.param, r.lhs, r.regressor});
    for (const auto& r : e.validation) t.add_row({std::string("validation"), r.label, r.param, r.lhs, r.regressor});
    out.table("verify", t);
    out.document("verify_summary", json{{"theorem", c.theorem},
                                        {"M", c.m_power},
                                        {"c1", e.generation.envelope.c1},
                                        {"c2", e.generation.envelope.c2},
                                        {"violations", e.generation.violation_count},
                                        {"validation_violations", e.validation_violations},
                                        {"sine_r2", std::isnan(e.sine_r2) ? json(nullptr) : json(e.sine_r2)}});
    return 0;
}

int run_reconstruct(const RunConfig& c, Output& out)
{
    const auto cfg = config_of(c);
    const auto deltas = parse_list(c.delta_list, "--delta-list");
    if (c.seeds < 1) throw ValidationError("--seeds: need >= 1");
    const auto [ci, cj] = parse_cells(c.cells);
    (void)cj;
    BoundsContext ctx(cfg);
    const auto env = envelope_experiment(ctx, TheoremId::Thm3, 0, 0.5, c.seed).generation.envelope;
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < c.seeds; ++s) seeds.push_back(c.seed + static_cast<std::uint64_t>(s));
    const auto target = box_target(cfg.interval_i);
    ReconstructionOptions opt;
    if (c.fix_integral) opt.integral = target.integral();
    DiameterReport rep;
    try {
        rep = diameter_rate(cfg, target, deltas, seeds, env.c1, env.c2, ci, c.kappa, opt);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
    CsvTable t({"delta", "median_error", "bound", "in_regime", "nonconverged"});
    int nonconv = 0;
    for (const auto& r : rep.rows) {
        t.add_row({r.delta, r.median_error, r.bound, static_cast<long long>(r.in_regime),
                   static_cast<long long>(r.nonconverged)});
        nonconv += r.nonconverged;
    }
    out.table("reconstruct", t);
    out.document("reconstruct_summary", json{{"c1", rep.c1},
                                             {"c2", rep.c2},
                                             {"kappa", rep.kappa},
                                             {"pearson", rep.pearson},
                                             {"strictly_decreasing", rep.strictly_decreasing},
                                             {"below_bound", rep.below_bound}});
    return nonconv > 0 ? 3 : 0;
}

void run_torus(const RunConfig& c, Output& out)
{
    const int n_max = c.n > 0 ? c.n : 32;
    std::function<double(int)> rate;
    if (c.rate == "exp") {
        rate = [](int n) { return std::exp(-static_cast<double>(n)); };
    } else if (c.rate == "poly") {
        rate = [](int n) { return 1.0 / (static_cast<double>(n) * n); };
    } else if (c.rate == "flat") {
        rate = [](int) { return 1.0; };
    } else {
        throw ValidationError("--rate: expected exp, poly or flat");
    }
    if (n_max < 3) throw ValidationError("--n: need >= 3 modes");
    const auto [kernel, rep] = designed_decay_demo(rate, n_max);
    CsvTable t({"n", "kernel_abs", "envelope"});
    for (const auto& r : rep.rows) t.add_row({static_cast<long long>(r.n), r.kernel_abs, r.envelope});
    out.table("torus", t);
    json coeffs = json::array();
    for (int n = -kernel.bandwidth(); n <= kernel.bandwidth(); ++n) {
        coeffs.push_back(json::array({n, kernel.coeff(n).real(), kernel.coeff(n).imag()}));
    }
    out.document("torus_kernel", json{{"rate", c.rate},
                                      {"bandwidth", kernel.bandwidth()},
                                      {"grid_size", kernel.grid_size()},
                                      {"coefficients", coeffs},
                                      {"exponential_slope", rep.exponential.slope},
                                      {"aic_exponential", rep.aic_exponential},
                                      {"aic_polynomial", rep.aic_polynomial},
                                      {"preferred_model", rep.preferred_model()},
                                      {"worst_factor", rep.worst_factor}});
}

int dispatch(const RunConfig& c, Output& out)
{
    if (c.command == "classify") run_classify(c, out);
    else if (c.command == "assemble") run_assemble(c, out);
    else if (c.command == "gram") run_gram(c, out);
    else if (c.command == "svd") run_svd(c, out);
    else if (c.command == "asymptotics") run_asymptotics(c, out);
    else if (c.command == "verify") return run_verify(c, out);
    else if (c.command == "reconstruct") return run_reconstruct(c, out);
    else if (c.command == "torus") run_torus(c, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Truncated Hilbert transform experiments"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--I", cfg.interval_i, "interval I as lo,hi");
        sub->add_option("--J", cfg.interval_j, "interval J as lo,hi");
        sub->add_option("--cells", cfg.cells, "cells as N or Ni,Nj");
        sub->add_option("--seed", cfg.seed, "random seed");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--kernel", cfg.kernel, "plain (1/(x-y)) or unitary (1/(pi(x-y)))")
            ->check(CLI::IsMember({"plain", "unitary"}));
    };
    for (const char* name : {"classify", "assemble", "gram", "svd", "asymptotics", "verify", "reconstruct", "torus"}) {
        auto* sub = app.add_subcommand(name);
        common(sub);
        sub->callback([&cfg, name] { cfg.command = name; });
        const std::string n = name;
        if (n == "gram" || n == "svd" || n == "torus") sub->add_option("--n", cfg.n, "cells (gram), modes (svd, torus)");
        if (n == "verify") {
            sub->add_option("--theorem", cfg.theorem, "1, 2, 2a, 3, 3a, 4 or polydecay");
            sub->add_option("--M", cfg.m_power, "power of L_I");
            sub->add_option("--mu", cfg.mu, "margin of J*");
            sub->add_option("--kappa", cfg.kappa, "TV budget");
        }
        if (n == "reconstruct") {
            sub->add_option("--delta-list", cfg.delta_list, "descending noise levels");
            sub->add_option("--kappa", cfg.kappa, "TV budget (default TV of the target)");
            sub->add_option("--seeds", cfg.seeds, "noise draws per level");
            sub->add_flag("--fix-integral", cfg.fix_integral, "also constrain int_I f to the target's value");
        }
        if (n == "torus") sub->add_option("--rate", cfg.rate, "exp, poly or flat");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    int status = 0;
    std::unique_ptr<Output> out;
    try {
        out = std::make_unique<Output>(cfg);
        status = dispatch(cfg, *out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        status = 2;
    } catch (const NonConvergence& e) {
        std::cerr << "not converged: " << e.what() << '\n';
        status = 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        status = 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        status = 3;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out) out->manifest(wall, status);
    return status;
}
