// csor: certified SOR solves, Katz and PageRank from the command line.

#include "csor/csor.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace csor;

namespace {

enum Exit { kOk = 0, kIo = 1, kFormat = 2, kMath = 3 };

struct Globals {
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    fs::path out_dir = ".";
};

// Collects what a command read and wrote; certificates point at the manifest
// by file name so that runs into different directories stay comparable.
class Manifest {
public:
    Manifest(std::string command, const Globals& g)
        : command_(std::move(command)), dir_(g.out_dir), start_(std::chrono::steady_clock::now()) {
        doc_["command"] = command_;
        doc_["inputs"] = json::object();
        doc_["parameters"] = json::object();
        doc_["outputs"] = json::object();
        doc_["seed"] = g.seed ? json(*g.seed) : json();
        doc_["threads"] = g.threads;
        fs::create_directories(dir_);
    }

    std::string name() const { return command_ + ".manifest.json"; }
    json& params() { return doc_["parameters"]; }

    void input(const std::string& key, const fs::path& p) {
        doc_["inputs"][key] = {{"path", p.string()}, {"digest", io::file_digest(p)}};
    }
    fs::path output(const std::string& file) {
        outputs_.push_back(file);
        return dir_ / file;
    }

    void write_json(const std::string& file, const json& j) {
        std::ofstream out(output(file), std::ios::binary);
        out << j.dump(2) << '\n';
        if (!out)
            throw IoError("cannot write " + (dir_ / file).string());
    }

    void finish() {
        for (const auto& f : outputs_)
            doc_["outputs"][f] = io::file_digest(dir_ / f);
        const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_);
        doc_["wall_clock_ms"] = ms.count();
        std::ofstream out(dir_ / name(), std::ios::binary);
        out << doc_.dump(2) << '\n';
        if (!out)
            throw IoError("cannot write " + (dir_ / name()).string());
    }

private:
    std::string command_;
    fs::path dir_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> outputs_;
    json doc_;
};

// Seeds are never drawn from entropy: "random" alone needs --seed.
Schedule resolve_schedule(const std::string& text, const Globals& g) {
    if (text == "random") {
        if (!g.seed)
            throw FormatError("schedule \"random\" needs --seed (or use random:SEED)");
        return Schedule::random_preorder(*g.seed);
    }
    return Schedule::parse(text);
}

SuitableOptions suitable_options(const Globals& g, std::size_t max_iterations) {
    SuitableOptions o;
    o.workers = g.threads;
    o.max_iterations = max_iterations;
    return o;
}

SuitableResult suitable_from_file(const SparseMatrix& a, const fs::path& p, double sigma) {
    SuitableResult r;
    r.status = SuitableStatus::Suitable;
    r.sigma = sigma;
    r.w = WeightVector(io::load_vector(p));
    require_same_size(r.w->size(), a.size(), "weight file");
    return r;
}

WeightVector normalized(const WeightVector& w) {
    return w.normalized() ? w : WeightVector::normalized_from(DenseVector(w.values().begin(), w.values().end()));
}

// Falls back to full-precision weights when some entry is below 2^-255.
bool quantization_possible(const WeightVector& w) {
    try {
        quantize(normalized(w));
        return true;
    } catch (const QuantizationRangeError& e) {
        std::cerr << "warning: " << e.what() << "; using full-precision weights\n";
        return false;
    }
}

DenseVector load_or(const std::string& path, DenseVector fallback, Manifest& m, const std::string& key) {
    if (path.empty())
        return fallback;
    m.input(key, path);
    return io::load_vector(path);
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string edges;
    std::string output = "graph.csor";
    bool transpose = false;
    double default_weight = 1.0;
};

int cmd_ingest(const IngestArgs& args, const Globals& g) {
    std::ifstream in(args.edges, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + args.edges);
    Manifest m("ingest", g);
    m.input("edges", args.edges);
    m.params() = {{"transpose", args.transpose}, {"default_weight", args.default_weight}};
    const auto a = load_edge_list(in, {args.transpose, args.default_weight});
    io::save_matrix(m.output(args.output), a);
    const auto s = summarize(a, args.transpose);
    const json summary = {{"nodes", s.node_count},
                          {"arcs", s.arc_count},
                          {"dangling", s.dangling_count},
                          {"transposed", s.transposed},
                          {"cache", args.output}};
    m.finish();
    std::cout << summary.dump(2) << '\n';
    return kOk;
}

struct SuitableArgs {
    std::string cache;
    std::optional<double> sigma;
    std::optional<int> schedule_steps;
    std::optional<double> upper;
    std::size_t bracket_iterations = 1000;
    std::size_t max_iterations = 0;
};

double resolve_upper(const SparseMatrix& a, std::optional<double> upper, std::size_t iterations, json& params) {
    const double u = upper ? *upper : spectral_radius_bracket(a, iterations).upper;
    params["upper"] = u;
    if (!(u > 0.0))
        throw DomainError("spectral radius bound is zero; no sigma schedule is needed");
    return u;
}

int cmd_suitable(const SuitableArgs& args, const Globals& g) {
    Manifest m("suitable", g);
    m.input("matrix", args.cache);
    const auto a = io::load_matrix(args.cache);
    const auto opts = suitable_options(g, args.max_iterations);

    std::vector<std::pair<std::string, double>> runs; // file suffix, sigma
    if (args.sigma) {
        runs.emplace_back("", *args.sigma);
        m.params()["sigma"] = *args.sigma;
    } else {
        m.params()["sigma_schedule"] = *args.schedule_steps;
        const double u = resolve_upper(a, args.upper, args.bracket_iterations, m.params());
        for (int i = 1; i <= *args.schedule_steps; ++i)
            runs.emplace_back("_" + std::to_string(i), u / (1.0 - std::ldexp(1.0, -i)));
    }
    m.params()["max_iterations"] = opts.max_iterations ? opts.max_iterations : default_suitable_iterations(a.size());

    int code = kOk;
    for (const auto& [suffix, sigma] : runs) {
        const auto r = compute_suitable(a, sigma, opts);
        std::string w_file;
        json quantized;
        if (r.ok()) {
            w_file = "suitable_w" + suffix + ".csorv";
            io::save_vector(m.output(w_file), r.w->values());
            if (quantization_possible(*r.w)) {
                quantized = "suitable_w" + suffix + ".csorq";
                io::save_quantized(m.output(quantized.get<std::string>()), quantize(*r.w));
            }
        } else {
            code = kMath;
        }
        auto doc = io::to_json(r, w_file);
        doc["quantized_w"] = quantized;
        doc["manifest"] = m.name();
        m.write_json("suitable" + suffix + ".json", doc);
        std::cout << std::setprecision(17) << "sigma " << sigma << " status " << to_string(r.status)
                  << " iterations " << r.iterations << '\n';
    }
    m.finish();
    return code;
}

struct SolveArgs {
    std::string cache, rhs, w;
    double s = 0.0, sigma = 0.0, omega = 1.0, target_error = 1e-9;
    std::string schedule = "seq";
    bool quantized = false;
    std::size_t max_iterations = 100000;
};

int cmd_solve(const SolveArgs& args, const Globals& g) {
    Manifest m("solve", g);
    m.input("matrix", args.cache);
    const auto a = io::load_matrix(args.cache);
    const auto b = load_or(args.rhs, DenseVector(a.size(), 1.0), m, "rhs");
    const auto sched = resolve_schedule(args.schedule, g);
    m.params() = {{"s", args.s},           {"sigma", args.sigma},       {"omega", args.omega},
                  {"target_error", args.target_error}, {"schedule", sched.tag()}, {"quantized", args.quantized},
                  {"max_iterations", args.max_iterations}};

    json doc;
    SuitableResult suit;
    if (!args.w.empty()) {
        m.input("w", args.w);
        suit = suitable_from_file(a, args.w, args.sigma);
    } else {
        suit = compute_suitable(a, args.sigma, suitable_options(g, 0));
        doc["suitable"] = {{"status", to_string(suit.status)}, {"iterations", suit.iterations}};
        if (!suit.ok()) {
            doc["manifest"] = m.name();
            m.write_json("solve.json", doc);
            m.finish();
            std::cerr << "error: no " << args.sigma << "-suitable vector (" << to_string(suit.status) << ")\n";
            return kMath;
        }
        io::save_vector(m.output("solve_w.csorv"), suit.w->values());
    }

    SorConfig cfg;
    cfg.s = args.s;
    cfg.sigma = args.sigma;
    cfg.omega = args.omega;
    cfg.w = *suit.w;
    cfg.target_error = args.target_error;
    cfg.max_iterations = args.max_iterations;
    cfg.use_quantized = args.quantized && quantization_possible(cfg.w);
    if (cfg.use_quantized)
        cfg.w = normalized(cfg.w);
    const auto res = solve(a, b, cfg, sched);

    io::save_vector(m.output("solve_x.csorv"), res.x);
    doc["certificate"] = io::to_json(res.cert);
    doc["certified_sup_bound"] = io::finite_or_null(certified_sup_bound(res.cert, cfg.w));
    doc["quantization_fallback"] = args.quantized && !cfg.use_quantized;
    doc["solution"] = "solve_x.csorv";
    doc["manifest"] = m.name();
    m.write_json("solve.json", doc);
    m.finish();
    std::cout << std::setprecision(17) << "iterations " << res.cert.iterations << " supnorm_bound "
              << res.cert.supnorm_bound << '\n';
    return res.cert.certified ? kOk : kMath;
}

struct RankArgs {
    std::string cache, pref, w;
    double alpha = 0.85;
    std::optional<double> sigma;
    double omega = 1.0, target_error = 1e-10;
    std::string schedule = "seq";
    bool quantized = false, l1_cert = false;
    std::size_t max_iterations = 1000000;
};

RankingOptions ranking_options(const RankArgs& args, const Schedule& sched) {
    RankingOptions o;
    o.omega = args.omega;
    o.target_error = args.target_error;
    o.max_iterations = args.max_iterations;
    o.schedule = sched;
    return o;
}

// Suitable vector for the transposed matrix, from file or computed.
std::optional<SuitableResult> ranking_suitable(const SparseMatrix& at, const RankArgs& args, double sigma,
                                               const Globals& g, Manifest& m, json& doc, const std::string& prefix) {
    if (!args.w.empty()) {
        m.input("w", args.w);
        return suitable_from_file(at, args.w, sigma);
    }
    auto suit = compute_suitable(at, sigma, suitable_options(g, 0));
    doc["suitable"] = {{"status", to_string(suit.status)}, {"iterations", suit.iterations}, {"sigma", sigma}};
    if (!suit.ok()) {
        std::cerr << "error: no " << sigma << "-suitable vector (" << to_string(suit.status) << ")\n";
        return std::nullopt;
    }
    io::save_vector(m.output(prefix + "_w.csorv"), suit.w->values());
    return suit;
}

int cmd_katz(const RankArgs& args, const Globals& g) {
    Manifest m("katz", g);
    m.input("matrix", args.cache);
    const auto mt = transpose(io::load_matrix(args.cache));
    const auto v = load_or(args.pref, DenseVector(mt.size(), 1.0), m, "pref");
    const auto sched = resolve_schedule(args.schedule, g);
    const double sigma = *args.sigma;
    m.params() = {{"alpha", args.alpha}, {"sigma", sigma}, {"omega", args.omega}, {"target_error", args.target_error},
                  {"schedule", sched.tag()}, {"quantized", args.quantized}};

    json doc;
    doc["manifest"] = m.name();
    const auto suit = ranking_suitable(mt, args, sigma, g, m, doc, "katz");
    if (!suit) {
        m.write_json("katz.json", doc);
        m.finish();
        return kMath;
    }
    auto opts = ranking_options(args, sched);
    opts.use_quantized = args.quantized && suit->w->normalized() && quantization_possible(*suit->w);
    const auto res = katz_transposed(mt, args.alpha, v, *suit, opts);
    io::save_vector(m.output("katz.csorv"), res.scores);
    doc["certificate"] = io::to_json(res.cert);
    doc["quantization_fallback"] = args.quantized && !opts.use_quantized;
    doc["scores"] = "katz.csorv";
    m.write_json("katz.json", doc);
    m.finish();
    std::cout << std::setprecision(17) << "iterations " << res.cert.iterations << " supnorm_bound "
              << res.cert.supnorm_bound << '\n';
    return res.cert.certified ? kOk : kMath;
}

int cmd_pagerank(const RankArgs& args, const Globals& g) {
    Manifest m("pagerank", g);
    m.input("matrix", args.cache);
    const auto norm = row_normalize(io::load_matrix(args.cache));
    const auto gt = transpose(norm.matrix);
    const Index n = gt.size();
    const auto v = load_or(args.pref, DenseVector(n, 1.0 / static_cast<double>(n)), m, "pref");
    const auto sched = resolve_schedule(args.schedule, g);
    // rho(G^T) <= 1 < 1/alpha; the midpoint leaves room on both sides.
    const double sigma = args.sigma ? *args.sigma : 0.5 * (1.0 + 1.0 / args.alpha);
    m.params() = {{"alpha", args.alpha}, {"schedule", sched.tag()}, {"target_error", args.target_error},
                  {"l1_cert", args.l1_cert}};

    json doc;
    doc["manifest"] = m.name();
    DenseVector p;
    bool certified = false;
    if (args.l1_cert) {
        const auto res = pseudorank_l1(gt, args.alpha, v, args.target_error, sched, args.max_iterations);
        p = res.scores;
        certified = res.cert.certified;
        doc["l1_certificate"] = io::to_json(res.cert);
    } else {
        m.params()["sigma"] = sigma;
        m.params()["omega"] = args.omega;
        m.params()["quantized"] = args.quantized;
        const auto suit = ranking_suitable(gt, args, sigma, g, m, doc, "pagerank");
        if (!suit) {
            m.write_json("pagerank.json", doc);
            m.finish();
            return kMath;
        }
        auto opts = ranking_options(args, sched);
        opts.use_quantized = args.quantized && suit->w->normalized() && quantization_possible(*suit->w);
        const auto res = pseudorank_transposed(gt, args.alpha, v, *suit, opts);
        p = res.scores;
        certified = res.cert.certified;
        doc["certificate"] = io::to_json(res.cert);
        doc["quantization_fallback"] = args.quantized && !opts.use_quantized;
    }
    const double l1 = l1norm(p);
    if (!(l1 > 0.0))
        throw DomainError("pseudorank has zero l1 norm");
    DenseVector rank(p);
    for (double& x : rank)
        x /= l1;
    io::save_vector(m.output("pseudorank.csorv"), p);
    io::save_vector(m.output("pagerank.csorv"), rank);
    doc["pseudorank"] = "pseudorank.csorv";
    doc["pseudorank_l1"] = l1;
    doc["rank"] = "pagerank.csorv";
    doc["dangling"] = static_cast<std::size_t>(std::count(norm.dangling.begin(), norm.dangling.end(), 1.0));
    m.write_json("pagerank.json", doc);
    m.finish();
    return certified ? kOk : kMath;
}

struct TauArgs {
    std::string first, second;
    std::optional<unsigned> round;
};

int cmd_tau(const TauArgs& args) {
    auto r = io::load_vector(args.first);
    auto s = io::load_vector(args.second);
    if (args.round) {
        r = round_scores(r, *args.round);
        s = round_scores(s, *args.round);
    }
    std::cout << std::setprecision(15) << kendall_tau(r, s) << '\n';
    return kOk;
}

struct BenchArgs {
    std::string cache;
    int steps = 8;
    std::optional<double> upper;
    std::optional<double> s;
    std::size_t bracket_iterations = 1000;
    double target_error = 1e-9;
    std::string schedule = "seq";
};

int cmd_bench(const BenchArgs& args, const Globals& g) {
    Manifest m("bench", g);
    m.input("matrix", args.cache);
    const auto a = io::load_matrix(args.cache);
    const auto sched = resolve_schedule(args.schedule, g);
    m.params() = {{"sigma_schedule", args.steps}, {"target_error", args.target_error}, {"schedule", sched.tag()}};
    const double u = resolve_upper(a, args.upper, args.bracket_iterations, m.params());
    const double s = args.s ? *args.s : 2.5 * u; // above every sigma_i <= 2 upper
    m.params()["s"] = s;

    std::ostringstream csv;
    csv << std::setprecision(17) << "sigma,iterations,wallclock_ms,r,bound\n";
    const DenseVector b(a.size(), 1.0);
    int code = kOk;
    for (int i = 1; i <= args.steps; ++i) {
        const double sigma = u / (1.0 - std::ldexp(1.0, -i));
        const auto t0 = std::chrono::steady_clock::now();
        const auto suit = compute_suitable(a, sigma, suitable_options(g, 0));
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        csv << sigma << ',' << suit.iterations << ',' << ms << ',';
        if (!suit.ok()) {
            csv << ",\n";
            code = kMath;
            continue;
        }
        SorConfig cfg;
        cfg.s = s;
        cfg.sigma = sigma;
        cfg.w = *suit.w;
        cfg.target_error = args.target_error;
        const auto res = solve(a, b, cfg, sched);
        csv << res.cert.r << ',' << res.cert.supnorm_bound << '\n';
    }
    {
        std::ofstream out(m.output("bench.csv"), std::ios::binary);
        out << csv.str();
    }
    m.finish();
    std::cout << csv.str();
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified step-asynchronous SOR for M-matrix systems"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--threads", g.threads, "Worker threads for matrix-vector products")->check(CLI::Range(1u, 4096u));
    auto* seed_opt = app.add_option("--seed", seed, "Seed for random schedules");
    std::string out_dir = ".";
    app.add_option("--out-dir", out_dir, "Directory receiving outputs and manifests");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Edge list to binary matrix cache");
    c_ingest->add_option("edges", ingest.edges, "Edge list: \"u v [w]\" per line")->required();
    c_ingest->add_option("-o,--output", ingest.output, "Cache file name inside --out-dir");
    c_ingest->add_flag("--transpose", ingest.transpose, "Store arc (u,v) at (v,u)");
    c_ingest->add_option("--default-weight", ingest.default_weight, "Weight of two-column lines");

    SuitableArgs suit;
    auto* c_suit = app.add_subcommand("suitable", "Compute sigma-suitable vectors");
    c_suit->add_option("cache", suit.cache)->required();
    auto* o_sigma = c_suit->add_option("--sigma", suit.sigma);
    auto* o_steps = c_suit->add_option("--sigma-schedule", suit.schedule_steps, "sigma_i = upper/(1-2^-i), i = 1..N")
                        ->check(CLI::Range(1, 52));
    o_sigma->excludes(o_steps);
    c_suit->add_option("--upper", suit.upper, "Upper bound on rho (default: Collatz bracket)");
    c_suit->add_option("--bracket-iterations", suit.bracket_iterations);
    c_suit->add_option("--max-iterations", suit.max_iterations, "0 selects 10n + 1000");

    SolveArgs sv;
    auto* c_solve = app.add_subcommand("solve", "Certified solve of (sI - A) x = b");
    c_solve->add_option("cache", sv.cache)->required();
    c_solve->add_option("--rhs", sv.rhs, "Vector file (default: all ones)");
    c_solve->add_option("--w", sv.w, "Suitable vector file (default: computed)");
    c_solve->add_option("--s", sv.s)->required();
    c_solve->add_option("--sigma", sv.sigma)->required();
    c_solve->add_option("--omega", sv.omega);
    c_solve->add_option("--target-error", sv.target_error);
    c_solve->add_option("--schedule", sv.schedule, "seq | jacobi | random[:SEED] | par:K");
    c_solve->add_flag("--quantized", sv.quantized);
    c_solve->add_option("--max-iterations", sv.max_iterations);

    RankArgs katz_args;
    auto* c_katz = app.add_subcommand("katz", "Katz scores of an adjacency matrix");
    c_katz->add_option("cache", katz_args.cache)->required();
    c_katz->add_option("--alpha", katz_args.alpha)->required();
    c_katz->add_option("--sigma", katz_args.sigma)->required();

    RankArgs pr_args;
    auto* c_pr = app.add_subcommand("pagerank", "Strongly preferential PageRank");
    c_pr->add_option("cache", pr_args.cache)->required();
    c_pr->add_option("--alpha", pr_args.alpha)->required();
    c_pr->add_option("--sigma", pr_args.sigma, "Default: (1 + 1/alpha)/2");
    c_pr->add_flag("--l1-cert", pr_args.l1_cert, "Certify with the l1 bound instead");
    for (auto [cmd, ra] : {std::pair{c_katz, &katz_args}, std::pair{c_pr, &pr_args}}) {
        cmd->add_option("--pref", ra->pref, "Preference vector file");
        cmd->add_option("--w", ra->w, "Suitable vector file for the transpose");
        cmd->add_option("--omega", ra->omega);
        cmd->add_option("--target-error", ra->target_error);
        cmd->add_option("--schedule", ra->schedule);
        cmd->add_flag("--quantized", ra->quantized);
        cmd->add_option("--max-iterations", ra->max_iterations);
    }

    TauArgs tau;
    auto* c_tau = app.add_subcommand("tau", "Kendall tau-b of two vector files");
    c_tau->add_option("first", tau.first)->required();
    c_tau->add_option("second", tau.second)->required();
    c_tau->add_option("--round", tau.round, "Round both vectors to D decimal digits first");

    BenchArgs bench;
    auto* c_bench = app.add_subcommand("bench", "Sweep sigma towards rho; CSV out");
    c_bench->add_option("cache", bench.cache)->required();
    c_bench->add_option("--sigma-schedule", bench.steps)->check(CLI::Range(1, 52));
    c_bench->add_option("--upper", bench.upper);
    c_bench->add_option("--s", bench.s);
    c_bench->add_option("--bracket-iterations", bench.bracket_iterations);
    c_bench->add_option("--target-error", bench.target_error);
    c_bench->add_option("--schedule", bench.schedule);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kFormat;
    }
    if (*seed_opt)
        g.seed = seed;
    g.out_dir = out_dir;

    try {
        if (*c_ingest)
            return cmd_ingest(ingest, g);
        if (*c_suit) {
            if (!suit.sigma && !suit.schedule_steps)
                throw FormatError("suitable needs --sigma or --sigma-schedule");
            return cmd_suitable(suit, g);
        }
        if (*c_solve)
            return cmd_solve(sv, g);
        if (*c_katz)
            return cmd_katz(katz_args, g);
        if (*c_pr)
            return cmd_pagerank(pr_args, g);
        if (*c_tau)
            return cmd_tau(tau);
        if (*c_bench)
            return cmd_bench(bench, g);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFormat;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFormat;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kMath;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return kFormat;
}
