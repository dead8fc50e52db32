#pragma once

// Experiment runner: configuration, training schedules, run summaries,
// checkpoints, grid exports and the data/architecture sweeps.
//
// Every run writes into <out>/seed-<seed>/ (sweep cells into
// <out>/<cell>/seed-<seed>/):
//
//   config.echo     effective configuration, TOML, keys named like CLI flags
//   summary.json    RunSummary
//   checkpoint.txt  Checkpoint
//   grid.csv        t,x,u_pred,u_exact,abs_error on the evaluation grid
//   history.csv     phase,iter,loss,grad_norm,step for Adam and L-BFGS

#include "cfpinn/conformable.hpp"
#include "cfpinn/errors.hpp"
#include "cfpinn/jet.hpp"
#include "cfpinn/losses.hpp"
#include "cfpinn/metrics.hpp"
#include "cfpinn/net.hpp"
#include "cfpinn/optim.hpp"
#include "cfpinn/sampling.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cfpinn::harness {

inline constexpr int summary_schema_version = 1;
inline constexpr int checkpoint_schema_version = 1;

enum class Mode { forward, forward_weighted, inverse };

[[nodiscard]] inline auto mode_name(Mode m) -> std::string
{
    switch (m) {
    case Mode::forward: return "forward";
    case Mode::forward_weighted: return "forward-weighted";
    case Mode::inverse: return "inverse";
    }
    return "?";
}

[[nodiscard]] inline auto parse_mode(std::string const& s) -> Mode
{
    if (s == "forward") { return Mode::forward; }
    if (s == "forward-weighted") { return Mode::forward_weighted; }
    if (s == "inverse") { return Mode::inverse; }
    throw InvalidConfig("unknown mode '" + s + "'");
}

/// Decimal text that reads back to the same double.
[[nodiscard]] inline auto format_double(double v) -> std::string
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[nodiscard]] inline auto parse_double(std::string const& s) -> double
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (std::exception const&) {
        throw CorruptFile("not a number: '" + s + "'");
    }
    if (used != s.size()) { throw CorruptFile("trailing characters in number: '" + s + "'"); }
    return v;
}

struct ExperimentConfig {
    Mode mode = Mode::forward;
    conformable::DomainSpec domain{};
    int hidden_layers = 8;
    int width = 20;
    std::size_t n_ic = 50;
    std::size_t n_bc = 50;
    std::size_t n_f = 10000;
    std::size_t n_data = 2000;
    losses::LossWeights weights{};
    double noise_level = 0.0;
    int adam_steps = 5000;
    double adam_lr = 1e-3;
    double lambda_init = 0.0;
    optim::LbfgsConfig lbfgs{};
    std::uint64_t seed = 1;
    std::string out_dir = "runs";
    int grid_t = 256;
    int grid_x = 100;
    bool scale_inputs = false;

    /// Default configuration of a mode: the weighted mode uses w_f = 0.1;
    /// forward modes train with L-BFGS only.
    static auto defaults(Mode m) -> ExperimentConfig
    {
        ExperimentConfig c;
        c.mode = m;
        if (m == Mode::forward_weighted) { c.weights = losses::LossWeights::near_integer(); }
        if (m != Mode::inverse) { c.adam_steps = 0; }
        return c;
    }

    [[nodiscard]] auto architecture() const -> net::Architecture
    {
        return net::Architecture::uniform(hidden_layers, width);
    }

    [[nodiscard]] auto input_scaling() const -> net::InputScaling
    {
        if (!scale_inputs) { return {}; }
        return net::InputScaling::unit_box(domain.t_lo, domain.t_hi, domain.x_lo, domain.x_hi);
    }

    void validate() const
    {
        domain.validate();
        weights.validate();
        lbfgs.validate();
        (void)architecture();
        if (mode == Mode::inverse) {
            if (n_data < 1) { throw InvalidConfig("inverse mode needs n_data >= 1"); }
        } else if (n_ic < 1 || n_bc < 1 || n_f < 1) {
            throw InvalidConfig("forward modes need n_ic, n_bc, n_f >= 1");
        }
        if (noise_level < 0.0) { throw InvalidConfig("noise level must be >= 0"); }
        if (adam_steps < 0) { throw InvalidConfig("adam steps must be >= 0"); }
        if (grid_t < 2 || grid_x < 2) { throw InvalidConfig("evaluation grid needs at least 2 x 2 points"); }
    }

    /// TOML text; keys follow the command-line flag names so the file can be
    /// passed back through --config. Mode-specific keys are omitted in the
    /// other modes.
    [[nodiscard]] auto to_toml() const -> std::string
    {
        std::ostringstream os;
        auto kv = [&](char const* k, std::string const& v) { os << k << " = " << v << '\n'; };
        auto num = [&](char const* k, double v) { kv(k, format_double(v)); };
        kv("mode", '"' + mode_name(mode) + '"');
        num("alpha", domain.alpha);
        num("lambda", domain.lambda);
        num("t-lo", domain.t_lo);
        num("t-hi", domain.t_hi);
        num("x-lo", domain.x_lo);
        num("x-hi", domain.x_hi);
        kv("layers", std::to_string(hidden_layers));
        kv("width", std::to_string(width));
        if (mode == Mode::inverse) {
            kv("n-data", std::to_string(n_data));
            num("noise", noise_level);
            num("lambda-init", lambda_init);
        } else {
            kv("n-ic", std::to_string(n_ic));
            kv("n-bc", std::to_string(n_bc));
            kv("n-f", std::to_string(n_f));
            kv("weights", '"' + format_double(weights.w_u) + ',' + format_double(weights.w_f) + '"');
        }
        kv("adam-steps", std::to_string(adam_steps));
        num("adam-lr", adam_lr);
        kv("lbfgs-max-iters", std::to_string(lbfgs.max_iters));
        kv("lbfgs-memory", std::to_string(lbfgs.memory));
        num("lbfgs-grad-tol", lbfgs.grad_tol);
        num("lbfgs-f-rel-tol", lbfgs.f_rel_tol);
        kv("seed", std::to_string(seed));
        kv("grid-t", std::to_string(grid_t));
        kv("grid-x", std::to_string(grid_x));
        kv("scale-inputs", scale_inputs ? "true" : "false");
        return os.str();
    }

    [[nodiscard]] auto to_json() const -> nlohmann::json
    {
        nlohmann::json j;
        j["mode"] = mode_name(mode);
        j["domain"] = {{"t_lo", domain.t_lo},   {"t_hi", domain.t_hi},   {"x_lo", domain.x_lo},
                       {"x_hi", domain.x_hi},   {"alpha", domain.alpha}, {"lambda", domain.lambda}};
        j["architecture"] = architecture().to_string();
        j["hidden_layers"] = hidden_layers;
        j["width"] = width;
        if (mode == Mode::inverse) {
            j["n_data"] = n_data;
            j["noise_level"] = noise_level;
            j["lambda_init"] = lambda_init;
        } else {
            j["n_ic"] = n_ic;
            j["n_bc"] = n_bc;
            j["n_f"] = n_f;
            j["weights"] = {weights.w_u, weights.w_f};
        }
        j["adam"] = {{"steps", adam_steps}, {"lr", adam_lr}};
        j["lbfgs"] = {{"memory", lbfgs.memory},       {"max_iters", lbfgs.max_iters}, {"grad_tol", lbfgs.grad_tol},
                      {"f_rel_tol", lbfgs.f_rel_tol}, {"c1", lbfgs.wolfe_c1},         {"c2", lbfgs.wolfe_c2}};
        j["seed"] = seed;
        j["eval_grid"] = {grid_t, grid_x};
        j["scale_inputs"] = scale_inputs;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Checkpoint

/// Text format, one item per line:
///
///   cfpinn-checkpoint <version>
///   widths <w0>,<w1>,...
///   alpha <value>
///   lambda <value>
///   lambda-source constant|learned
///   input-scaling <t_scale> <t_shift> <x_scale> <x_shift>
///   params <count>
///   <count lines, one parameter each, 17 significant digits>
struct Checkpoint {
    net::Architecture architecture;
    double alpha = 0.5;
    double lambda = 0.5073;
    bool lambda_learned = false;
    net::InputScaling scaling{};
    net::ParamVector params;
};

inline void save_checkpoint(std::ostream& os, Checkpoint const& c)
{
    if (c.params.size() != net::param_count(c.architecture)) {
        throw ShapeMismatch("save_checkpoint: parameter count does not match the architecture");
    }
    os << "cfpinn-checkpoint " << checkpoint_schema_version << '\n';
    os << "widths " << c.architecture.to_string() << '\n';
    os << "alpha " << format_double(c.alpha) << '\n';
    os << "lambda " << format_double(c.lambda) << '\n';
    os << "lambda-source " << (c.lambda_learned ? "learned" : "constant") << '\n';
    os << "input-scaling " << format_double(c.scaling.t_scale) << ' ' << format_double(c.scaling.t_shift) << ' '
       << format_double(c.scaling.x_scale) << ' ' << format_double(c.scaling.x_shift) << '\n';
    os << "params " << c.params.size() << '\n';
    for (double v : c.params) { os << format_double(v) << '\n'; }
}

inline auto load_checkpoint(std::istream& is) -> Checkpoint
{
    std::string line;
    auto next = [&](char const* key) -> std::string {
        if (!std::getline(is, line)) { throw CorruptFile(std::string{"checkpoint truncated before '"} + key + "'"); }
        std::string const prefix = std::string{key} + ' ';
        if (line.rfind(prefix, 0) != 0) {
            throw CorruptFile(std::string{"checkpoint: expected '"} + key + "', got '" + line + "'");
        }
        return line.substr(prefix.size());
    };

    auto const version = next("cfpinn-checkpoint");
    if (version != std::to_string(checkpoint_schema_version)) {
        throw SchemaVersionMismatch("checkpoint schema version " + version + " is not supported (expected " +
                                    std::to_string(checkpoint_schema_version) + ")");
    }
    Checkpoint c;
    {
        std::vector<int> widths;
        std::stringstream ss{next("widths")};
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                widths.push_back(std::stoi(item));
            } catch (std::exception const&) {
                throw CorruptFile("checkpoint: bad width '" + item + "'");
            }
        }
        try {
            c.architecture = net::Architecture{std::move(widths)};
        } catch (InvalidConfig const& e) {
            throw CorruptFile(std::string{"checkpoint: "} + e.what());
        }
    }
    c.alpha = parse_double(next("alpha"));
    c.lambda = parse_double(next("lambda"));
    auto const source = next("lambda-source");
    if (source != "constant" && source != "learned") { throw CorruptFile("checkpoint: bad lambda-source"); }
    c.lambda_learned = source == "learned";
    {
        std::stringstream ss{next("input-scaling")};
        std::string a, b, d, e;
        if (!(ss >> a >> b >> d >> e)) { throw CorruptFile("checkpoint: bad input-scaling"); }
        c.scaling = {parse_double(a), parse_double(b), parse_double(d), parse_double(e)};
    }
    std::size_t count = 0;
    try {
        count = std::stoul(next("params"));
    } catch (CorruptFile const&) {
        throw;
    } catch (std::exception const&) {
        throw CorruptFile("checkpoint: bad parameter count");
    }
    if (count != net::param_count(c.architecture)) {
        throw CorruptFile("checkpoint: " + std::to_string(count) + " parameters declared but the architecture has " +
                          std::to_string(net::param_count(c.architecture)));
    }
    c.params.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) { throw CorruptFile("checkpoint truncated: parameter " + std::to_string(i)); }
        c.params.push_back(parse_double(line));
    }
    if (std::getline(is, line) && !line.empty()) { throw CorruptFile("checkpoint: trailing content"); }
    return c;
}

inline void save_checkpoint(std::filesystem::path const& path, Checkpoint const& c)
{
    std::ofstream os{path, std::ios::binary};
    if (!os) { throw IoError("cannot write " + path.string()); }
    save_checkpoint(os, c);
    if (!os) { throw IoError("failed writing " + path.string()); }
}

inline auto load_checkpoint(std::filesystem::path const& path) -> Checkpoint
{
    std::ifstream is{path, std::ios::binary};
    if (!is) { throw IoError("cannot read " + path.string()); }
    return load_checkpoint(is);
}

// ---------------------------------------------------------------------------
// Evaluation grid

struct GridEvaluation {
    int n_t = 0;
    int n_x = 0;
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> u_pred;
    std::vector<double> u_exact;
};

[[nodiscard]] inline auto grid_node(double lo, double hi, int i, int n) -> double
{
    return i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

/// Network and closed-form values on a uniform n_t x n_x grid, t-major.
inline auto evaluate_grid(Checkpoint const& c, conformable::DomainSpec const& domain, int n_t, int n_x)
    -> GridEvaluation
{
    if (n_t < 2 || n_x < 2) { throw InvalidConfig("evaluation grid needs at least 2 x 2 points"); }
    GridEvaluation g;
    g.n_t = n_t;
    g.n_x = n_x;
    auto const total = static_cast<std::size_t>(n_t) * static_cast<std::size_t>(n_x);
    g.t.reserve(total);
    g.x.reserve(total);
    g.u_exact.reserve(total);
    for (int i = 0; i < n_t; ++i) {
        double const t = grid_node(domain.t_lo, domain.t_hi, i, n_t);
        for (int j = 0; j < n_x; ++j) {
            double const x = grid_node(domain.x_lo, domain.x_hi, j, n_x);
            g.t.push_back(t);
            g.x.push_back(x);
            g.u_exact.push_back(conformable::analytic_solution(domain.alpha, domain.lambda, t, x));
        }
    }
    net::JetNetwork jn{c.architecture, c.scaling};
    jn.forward(c.params, g.t, g.x, net::Channels::values);
    Eigen::VectorXd const u = jn.u();
    g.u_pred.assign(u.data(), u.data() + u.size());
    return g;
}

inline void write_grid_csv(std::ostream& os, GridEvaluation const& g)
{
    os << "# resolution_t=" << g.n_t << " resolution_x=" << g.n_x << '\n';
    os << "t,x,u_pred,u_exact,abs_error\n";
    for (std::size_t i = 0; i < g.t.size(); ++i) {
        os << format_double(g.t[i]) << ',' << format_double(g.x[i]) << ',' << format_double(g.u_pred[i]) << ','
           << format_double(g.u_exact[i]) << ',' << format_double(std::abs(g.u_pred[i] - g.u_exact[i])) << '\n';
    }
}

/// Writes the grid export of a checkpoint. The domain's alpha and lambda
/// select the reference solution.
inline void export_grid(Checkpoint const& c, conformable::DomainSpec const& domain, int n_t, int n_x,
                        std::filesystem::path const& path)
{
    auto const g = evaluate_grid(c, domain, n_t, n_x);
    std::ofstream os{path, std::ios::binary};
    if (!os) { throw IoError("cannot write " + path.string()); }
    write_grid_csv(os, g);
    if (!os) { throw IoError("failed writing " + path.string()); }
}

// ---------------------------------------------------------------------------
// Run summary

struct RunSummary {
    int schema_version = summary_schema_version;
    ExperimentConfig config;
    losses::LossBreakdown loss;
    metrics::ErrorReport error;
    std::optional<double> lambda_hat;
    std::optional<double> lambda_error_percent;
    int adam_steps = 0;
    int lbfgs_iterations = 0;
    int lbfgs_evaluations = 0;
    std::string lbfgs_status;
    bool line_search_failed = false;
    double wall_seconds = 0.0;
    std::filesystem::path run_dir;
};

[[nodiscard]] inline auto to_json(RunSummary const& s) -> nlohmann::json
{
    nlohmann::json j;
    j["schema_version"] = s.schema_version;
    j["config"] = s.config.to_json();
    j["loss"] = {{"mse_ic", s.loss.mse_ic}, {"mse_bc", s.loss.mse_bc},     {"mse_u", s.loss.mse_u},
                 {"mse_f", s.loss.mse_f},   {"mse_data", s.loss.mse_data}, {"total", s.loss.total}};
    j["error"] = {{"relative_l2", s.error.relative_l2},
                  {"mean_abs_error", s.error.mean_abs_error},
                  {"mean_sq_error", s.error.mean_sq_error},
                  {"n_points", s.error.n_points}};
    j["lambda_hat"] = s.lambda_hat ? nlohmann::json(*s.lambda_hat) : nlohmann::json(nullptr);
    j["lambda_error_percent"] =
        s.lambda_error_percent ? nlohmann::json(*s.lambda_error_percent) : nlohmann::json(nullptr);
    j["optimizer"] = {{"adam_steps", s.adam_steps},
                      {"lbfgs_iterations", s.lbfgs_iterations},
                      {"lbfgs_evaluations", s.lbfgs_evaluations},
                      {"lbfgs_status", s.lbfgs_status},
                      {"line_search_failed", s.line_search_failed}};
    j["wall_seconds"] = s.wall_seconds;
    return j;
}

/// Reads back the fields written by to_json (the config echo stays JSON).
[[nodiscard]] inline auto summary_from_json(nlohmann::json const& j) -> RunSummary
{
    if (j.at("schema_version").get<int>() != summary_schema_version) {
        throw SchemaVersionMismatch("unsupported run summary schema version");
    }
    RunSummary s;
    auto const& l = j.at("loss");
    s.loss = {l.at("mse_ic").get<double>(), l.at("mse_bc").get<double>(),   l.at("mse_u").get<double>(),
              l.at("mse_f").get<double>(),  l.at("mse_data").get<double>(), l.at("total").get<double>()};
    auto const& e = j.at("error");
    s.error = {e.at("relative_l2").get<double>(), e.at("mean_abs_error").get<double>(),
               e.at("mean_sq_error").get<double>(), e.at("n_points").get<std::size_t>()};
    if (!j.at("lambda_hat").is_null()) { s.lambda_hat = j.at("lambda_hat").get<double>(); }
    if (!j.at("lambda_error_percent").is_null()) {
        s.lambda_error_percent = j.at("lambda_error_percent").get<double>();
    }
    auto const& o = j.at("optimizer");
    s.adam_steps = o.at("adam_steps").get<int>();
    s.lbfgs_iterations = o.at("lbfgs_iterations").get<int>();
    s.lbfgs_evaluations = o.at("lbfgs_evaluations").get<int>();
    s.lbfgs_status = o.at("lbfgs_status").get<std::string>();
    s.line_search_failed = o.at("line_search_failed").get<bool>();
    s.wall_seconds = j.at("wall_seconds").get<double>();
    return s;
}

// ---------------------------------------------------------------------------
// Runs

namespace detail {

struct PhaseRecord {
    char const* phase;
    optim::IterationRecord record;
};

inline void write_history(std::filesystem::path const& path, std::vector<PhaseRecord> const& rows)
{
    std::ofstream os{path, std::ios::binary};
    if (!os) { throw IoError("cannot write " + path.string()); }
    os << "phase,iter,loss,grad_norm,step\n";
    for (auto const& r : rows) {
        os << r.phase << ',' << r.record.iter << ',' << format_double(r.record.value) << ','
           << format_double(r.record.grad_norm) << ',' << format_double(r.record.step) << '\n';
    }
}

inline void write_text(std::filesystem::path const& path, std::string const& text)
{
    std::ofstream os{path, std::ios::binary};
    if (!os) { throw IoError("cannot write " + path.string()); }
    os << text;
}

inline auto infinity_norm(std::vector<double> const& g) -> double
{
    double m = 0.0;
    for (double v : g) { m = std::max(m, std::abs(v)); }
    return m;
}

template <class Objective>
auto run_adam(Objective& objective, std::vector<double>& theta, int steps, double lr,
              std::vector<PhaseRecord>& history) -> int
{
    optim::AdamState state{theta.size(), lr};
    std::vector<double> grad(theta.size());
    for (int k = 0; k < steps; ++k) {
        double const value = objective(std::span<double const>{theta}, std::span<double>{grad});
        if (!std::isfinite(value)) { throw NonFiniteObjective("adam: objective is not finite"); }
        history.push_back({"adam", {k, value, infinity_norm(grad), lr}});
        optim::adam_step(state, theta, grad);
    }
    return steps;
}

template <class Objective>
void run_lbfgs(Objective& objective, std::vector<double>& theta, optim::LbfgsConfig const& cfg, RunSummary& summary,
               std::vector<PhaseRecord>& history)
{
    auto res = optim::lbfgs_minimize(objective, theta, cfg);
    theta = std::move(res.params);
    summary.lbfgs_iterations = res.iterations;
    summary.lbfgs_evaluations = res.evaluations;
    summary.lbfgs_status = optim::status_name(res.status);
    summary.line_search_failed = res.line_search_failed;
    for (auto const& r : res.history) { history.push_back({"lbfgs", r}); }
}

inline auto run_dir_for(ExperimentConfig const& c) -> std::filesystem::path
{
    return std::filesystem::path{c.out_dir} / ("seed-" + std::to_string(c.seed));
}

/// Independent generator seeds for the samplers, the noise and the
/// initial weights of one run.
struct Seeds {
    std::uint64_t points;
    std::uint64_t noise;
    std::uint64_t weights;
};

inline auto derive_seeds(std::uint64_t seed) -> Seeds { return {seed, seed + 0x5bd1e995ULL, seed}; }

inline void finish_run(ExperimentConfig const& cfg, Checkpoint const& ckpt, RunSummary& summary,
                       std::vector<PhaseRecord> const& history,
                       std::chrono::steady_clock::time_point started)
{
    auto const grid = evaluate_grid(ckpt, cfg.domain, cfg.grid_t, cfg.grid_x);
    summary.error = metrics::error_stats(grid.u_pred, grid.u_exact);
    summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    auto const dir = run_dir_for(cfg);
    std::filesystem::create_directories(dir);
    summary.run_dir = dir;
    write_text(dir / "config.echo", cfg.to_toml());
    save_checkpoint(dir / "checkpoint.txt", ckpt);
    {
        std::ofstream os{dir / "grid.csv", std::ios::binary};
        if (!os) { throw IoError("cannot write " + (dir / "grid.csv").string()); }
        write_grid_csv(os, grid);
    }
    write_history(dir / "history.csv", history);
    write_text(dir / "summary.json", to_json(summary).dump(2) + "\n");
}

} // namespace detail

/// Forward problem: sample IC/BC and collocation points, train (Adam when
/// adam_steps > 0, then L-BFGS), evaluate on the grid and write the run
/// directory.
inline auto run_forward(ExperimentConfig const& cfg) -> RunSummary
{
    if (cfg.mode == Mode::inverse) { throw InvalidConfig("run_forward: mode must be forward or forward-weighted"); }
    cfg.validate();
    auto const started = std::chrono::steady_clock::now();
    auto const seeds = detail::derive_seeds(cfg.seed);
    auto const arch = cfg.architecture();
    auto const scaling = cfg.input_scaling();

    auto const icbc = sampling::sample_ic_bc(cfg.domain, cfg.n_ic, cfg.n_bc, seeds.points);
    auto colloc = sampling::sample_collocation(cfg.domain, cfg.n_f, seeds.points);
    losses::ForwardObjective objective{arch,    cfg.domain, icbc.initial, icbc.boundary, std::move(colloc),
                                       cfg.weights, scaling};

    RunSummary summary;
    summary.config = cfg;
    std::vector<detail::PhaseRecord> history;
    auto theta = net::init_params(arch, seeds.weights);
    summary.adam_steps = detail::run_adam(objective, theta, cfg.adam_steps, cfg.adam_lr, history);
    detail::run_lbfgs(objective, theta, cfg.lbfgs, summary, history);
    summary.loss = objective.breakdown(theta);

    Checkpoint ckpt{arch, cfg.domain.alpha, cfg.domain.lambda, false, scaling, theta};
    detail::finish_run(cfg, ckpt, summary, history, started);
    return summary;
}

/// Inverse problem: sample labelled interior data (optionally noisy), train
/// the network and lambda jointly with Adam then L-BFGS, and report the
/// identified lambda against the configured true value.
inline auto run_inverse(ExperimentConfig const& cfg) -> RunSummary
{
    if (cfg.mode != Mode::inverse) { throw InvalidConfig("run_inverse: mode must be inverse"); }
    cfg.validate();
    auto const started = std::chrono::steady_clock::now();
    auto const seeds = detail::derive_seeds(cfg.seed);
    auto const arch = cfg.architecture();
    auto const scaling = cfg.input_scaling();

    auto data = sampling::sample_interior_data(cfg.domain, cfg.n_data, seeds.points);
    data = sampling::add_noise(data, cfg.noise_level, seeds.noise);
    losses::InverseObjective objective{arch, cfg.domain.alpha, std::move(data), scaling};

    RunSummary summary;
    summary.config = cfg;
    std::vector<detail::PhaseRecord> history;
    auto theta = net::init_params(arch, seeds.weights);
    theta.push_back(cfg.lambda_init);
    summary.adam_steps = detail::run_adam(objective, theta, cfg.adam_steps, cfg.adam_lr, history);
    detail::run_lbfgs(objective, theta, cfg.lbfgs, summary, history);
    summary.loss = objective.breakdown(theta);

    double const lambda_hat = theta.back();
    theta.pop_back();
    summary.lambda_hat = lambda_hat;
    summary.lambda_error_percent = metrics::lambda_error(lambda_hat, cfg.domain.lambda);

    Checkpoint ckpt{arch, cfg.domain.alpha, lambda_hat, true, scaling, theta};
    // Field errors are measured against the solution with the true lambda.
    detail::finish_run(cfg, ckpt, summary, history, started);
    return summary;
}

inline auto run(ExperimentConfig const& cfg) -> RunSummary
{
    return cfg.mode == Mode::inverse ? run_inverse(cfg) : run_forward(cfg);
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepTable {
    std::string row_label;
    std::string col_label;
    std::vector<int> rows;
    std::vector<int> cols;
    std::vector<std::vector<std::optional<double>>> relative_l2; // [row][col]
    std::vector<std::vector<int>> lbfgs_cap;

    [[nodiscard]] auto at(int row, int col) const -> std::optional<double>
    {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < cols.size(); ++j) {
                if (rows[i] == row && cols[j] == col) { return relative_l2[i][j]; }
            }
        }
        throw InvalidConfig("sweep table has no cell (" + std::to_string(row) + ", " + std::to_string(col) + ")");
    }
};

/// Comma-separated table; missing cells are left blank.
inline void write_table_csv(std::ostream& os, SweepTable const& t)
{
    os << t.row_label << '\\' << t.col_label;
    for (int c : t.cols) { os << ',' << c; }
    os << '\n';
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        os << t.rows[i];
        for (std::size_t j = 0; j < t.cols.size(); ++j) {
            os << ',';
            if (t.relative_l2[i][j]) { os << format_double(*t.relative_l2[i][j]); }
        }
        os << '\n';
    }
}

/// Default L-BFGS cap of sweep cells.
inline constexpr int sweep_lbfgs_cap = 10000;

namespace detail {

template <class Configure>
auto sweep(ExperimentConfig const& base, std::string row_label, std::string col_label, std::vector<int> rows,
           std::vector<int> cols, std::string const& file_name, Configure configure) -> SweepTable
{
    if (base.mode == Mode::inverse) { throw InvalidConfig("sweeps run forward-mode experiments"); }
    SweepTable table{std::move(row_label), std::move(col_label), std::move(rows), std::move(cols), {}, {}};
    for (int r : table.rows) {
        std::vector<std::optional<double>> errs;
        std::vector<int> caps;
        for (int c : table.cols) {
            ExperimentConfig cell = base;
            try {
                configure(cell, r, c);
                caps.push_back(cell.lbfgs.max_iters);
                errs.emplace_back(run_forward(cell).error.relative_l2);
            } catch (Error const&) {
                if (caps.size() == errs.size()) { caps.push_back(cell.lbfgs.max_iters); }
                errs.emplace_back(std::nullopt);
            }
        }
        table.relative_l2.push_back(std::move(errs));
        table.lbfgs_cap.push_back(std::move(caps));
    }
    std::filesystem::create_directories(base.out_dir);
    std::ofstream os{std::filesystem::path{base.out_dir} / file_name, std::ios::binary};
    if (!os) { throw IoError("cannot write sweep table into " + base.out_dir); }
    write_table_csv(os, table);
    return table;
}

} // namespace detail

/// Relative L2 error over N_u x N_f; N_u is split evenly between initial and
/// boundary points (the odd point goes to the initial set).
inline auto sweep_data(ExperimentConfig const& base, std::vector<int> n_u, std::vector<int> n_f) -> SweepTable
{
    return detail::sweep(base, "n_u", "n_f", std::move(n_u), std::move(n_f), "sweep_data.csv",
                         [&](ExperimentConfig& cell, int nu, int nf) {
                             if (nu < 2 || nf < 1) { throw InvalidConfig("sweep_data: need n_u >= 2, n_f >= 1"); }
                             cell.n_ic = static_cast<std::size_t>(nu - nu / 2);
                             cell.n_bc = static_cast<std::size_t>(nu / 2);
                             cell.n_f = static_cast<std::size_t>(nf);
                             cell.out_dir = (std::filesystem::path{base.out_dir} /
                                             ("nu" + std::to_string(nu) + "-nf" + std::to_string(nf)))
                                                .string();
                         });
}

/// Relative L2 error over hidden-layer count x neurons per layer.
inline auto sweep_arch(ExperimentConfig const& base, std::vector<int> layers, std::vector<int> neurons) -> SweepTable
{
    return detail::sweep(base, "layers", "neurons", std::move(layers), std::move(neurons), "sweep_arch.csv",
                         [&](ExperimentConfig& cell, int l, int w) {
                             cell.hidden_layers = l;
                             cell.width = w;
                             cell.out_dir = (std::filesystem::path{base.out_dir} /
                                             ("layers" + std::to_string(l) + "-width" + std::to_string(w)))
                                                .string();
                         });
}

} // namespace cfpinn::harness
