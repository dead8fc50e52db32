#include "cfpinn/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cfpinn;
using namespace cfpinn::harness;
namespace fs = std::filesystem;

namespace {

auto scratch_dir(std::string const& name) -> fs::path
{
    auto const dir = fs::temp_directory_path() / ("cfpinn-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

auto slurp(fs::path const& p) -> std::string
{
    std::ifstream is{p, std::ios::binary};
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

auto sample_checkpoint() -> Checkpoint
{
    net::Architecture const arch{{2, 4, 3, 1}};
    auto params = net::init_params(arch, 7);
    params[arch.bias_offset(0)] = 0.1; // something that is not a short decimal
    return {arch, 0.3, 0.51234567890123, true, net::InputScaling::unit_box(0.01, 1.0, -1.0, 1.0), params};
}

auto to_text(Checkpoint const& c) -> std::string
{
    std::ostringstream os;
    save_checkpoint(os, c);
    return os.str();
}

auto tiny_forward(fs::path const& out) -> ExperimentConfig
{
    auto c = ExperimentConfig::defaults(Mode::forward);
    c.hidden_layers = 2;
    c.width = 6;
    c.n_ic = 6;
    c.n_bc = 6;
    c.n_f = 60;
    c.lbfgs.max_iters = 30;
    c.grid_t = 7;
    c.grid_x = 5;
    c.out_dir = out.string();
    return c;
}

auto tiny_inverse(fs::path const& out) -> ExperimentConfig
{
    auto c = ExperimentConfig::defaults(Mode::inverse);
    c.hidden_layers = 2;
    c.width = 6;
    c.n_data = 50;
    c.noise_level = 0.01;
    c.adam_steps = 20;
    c.lbfgs.max_iters = 20;
    c.grid_t = 4;
    c.grid_x = 4;
    c.out_dir = out.string();
    return c;
}

} // namespace

TEST(Checkpoint, RoundTripIsByteIdentical)
{
    auto const c = sample_checkpoint();
    auto const text = to_text(c);
    std::istringstream is{text};
    auto const back = load_checkpoint(is);
    EXPECT_EQ(back.params, c.params);
    EXPECT_EQ(back.alpha, c.alpha);
    EXPECT_EQ(back.lambda, c.lambda);
    EXPECT_TRUE(back.lambda_learned);
    EXPECT_EQ(back.scaling.t_scale, c.scaling.t_scale);
    EXPECT_EQ(back.architecture.to_string(), "2,4,3,1");
    EXPECT_EQ(to_text(back), text);
}

TEST(Checkpoint, FileRoundTrip)
{
    auto const dir = scratch_dir("ckpt");
    auto const c = sample_checkpoint();
    save_checkpoint(dir / "a.txt", c);
    save_checkpoint(dir / "b.txt", load_checkpoint(dir / "a.txt"));
    EXPECT_EQ(slurp(dir / "a.txt"), slurp(dir / "b.txt"));
    EXPECT_THROW((void)load_checkpoint(dir / "missing.txt"), IoError);
}

TEST(Checkpoint, TruncatedIsCorrupt)
{
    auto const text = to_text(sample_checkpoint());
    for (std::size_t cut : {std::size_t{0}, std::size_t{10}, text.size() / 2, text.size() - 30}) {
        std::istringstream is{text.substr(0, text.rfind('\n', cut) == std::string::npos ? 0 : text.rfind('\n', cut) + 1)};
        EXPECT_THROW((void)load_checkpoint(is), CorruptFile) << cut;
    }
}

TEST(Checkpoint, CountMismatchIsCorrupt)
{
    auto text = to_text(sample_checkpoint());
    auto const pos = text.find("widths 2,4,3,1");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 14, "widths 2,4,4,1");
    std::istringstream is{text};
    EXPECT_THROW((void)load_checkpoint(is), CorruptFile);

    auto extra = to_text(sample_checkpoint()) + "0.5\n";
    std::istringstream is2{extra};
    EXPECT_THROW((void)load_checkpoint(is2), CorruptFile);
}

TEST(Checkpoint, VersionMismatch)
{
    auto text = to_text(sample_checkpoint());
    text.replace(0, text.find('\n'), "cfpinn-checkpoint 2");
    std::istringstream is{text};
    EXPECT_THROW((void)load_checkpoint(is), SchemaVersionMismatch);
}

TEST(Checkpoint, SaveRejectsWrongCount)
{
    auto c = sample_checkpoint();
    c.params.pop_back();
    std::ostringstream os;
    EXPECT_THROW(save_checkpoint(os, c), ShapeMismatch);
}

TEST(Grid, RowsOrderAndConsistency)
{
    auto const dir = scratch_dir("grid");
    auto const c = sample_checkpoint();
    conformable::DomainSpec const d{.alpha = 0.3};
    export_grid(c, d, 6, 4, dir / "g.csv");
    std::ifstream is{dir / "g.csv"};
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "# resolution_t=6 resolution_x=4");
    std::getline(is, line);
    EXPECT_EQ(line, "t,x,u_pred,u_exact,abs_error");
    int rows = 0;
    double prev_t = -1.0;
    while (std::getline(is, line)) {
        std::stringstream ss{line};
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) { v.push_back(parse_double(cell)); }
        ASSERT_EQ(v.size(), 5U);
        EXPECT_GE(v[0], prev_t);
        prev_t = v[0];
        EXPECT_EQ(v[4], std::abs(v[2] - v[3]));
        EXPECT_EQ(v[3], conformable::analytic_solution(d, v[0], v[1]));
        ++rows;
    }
    EXPECT_EQ(rows, 24);
    EXPECT_EQ(prev_t, d.t_hi);

    save_checkpoint(dir / "c.txt", c);
    export_grid(load_checkpoint(dir / "c.txt"), d, 6, 4, dir / "g2.csv");
    EXPECT_EQ(slurp(dir / "g.csv"), slurp(dir / "g2.csv"));
    EXPECT_THROW(export_grid(c, d, 1, 4, dir / "g3.csv"), InvalidConfig);
}

TEST(Config, DefaultsPerMode)
{
    auto const f = ExperimentConfig::defaults(Mode::forward);
    EXPECT_EQ(f.adam_steps, 0);
    EXPECT_EQ(f.weights.w_f, 1.0);
    EXPECT_EQ(f.architecture().to_string(), "2,20,20,20,20,20,20,20,20,1");
    EXPECT_EQ(net::param_count(f.architecture()), 3021U);
    EXPECT_EQ(f.n_ic + f.n_bc, 100U);
    EXPECT_EQ(f.n_f, 10000U);
    EXPECT_EQ(ExperimentConfig::defaults(Mode::forward_weighted).weights.w_f, 0.1);
    auto const i = ExperimentConfig::defaults(Mode::inverse);
    EXPECT_EQ(i.adam_steps, 5000);
    EXPECT_EQ(i.n_data, 2000U);
    EXPECT_EQ(parse_mode("forward-weighted"), Mode::forward_weighted);
    EXPECT_THROW((void)parse_mode("sideways"), InvalidConfig);
}

TEST(Config, Validation)
{
    auto c = ExperimentConfig::defaults(Mode::forward);
    EXPECT_NO_THROW(c.validate());
    c.n_f = 0;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = ExperimentConfig::defaults(Mode::inverse);
    c.noise_level = -1.0;
    EXPECT_THROW(c.validate(), InvalidConfig);
    c = ExperimentConfig::defaults(Mode::forward);
    c.domain.alpha = 1.5;
    EXPECT_THROW(c.validate(), InvalidConfig);
    EXPECT_THROW((void)run_inverse(ExperimentConfig::defaults(Mode::forward)), InvalidConfig);
}

TEST(Run, ForwardWritesRunDirectoryDeterministically)
{
    auto const dir = scratch_dir("run-forward");
    auto const cfg = tiny_forward(dir);
    auto const a = run_forward(cfg);
    auto const run_dir = dir / "seed-1";
    EXPECT_EQ(a.run_dir, run_dir);
    for (auto const* f : {"config.echo", "checkpoint.txt", "grid.csv", "history.csv", "summary.json"}) {
        EXPECT_TRUE(fs::exists(run_dir / f)) << f;
    }
    auto const ckpt_a = slurp(run_dir / "checkpoint.txt");
    auto const grid_a = slurp(run_dir / "grid.csv");
    auto const hist_a = slurp(run_dir / "history.csv");
    auto const b = run_forward(cfg);
    EXPECT_EQ(slurp(run_dir / "checkpoint.txt"), ckpt_a);
    EXPECT_EQ(slurp(run_dir / "grid.csv"), grid_a);
    EXPECT_EQ(slurp(run_dir / "history.csv"), hist_a);
    EXPECT_EQ(a.error.relative_l2, b.error.relative_l2);
    EXPECT_EQ(a.error.mean_sq_error, b.error.mean_sq_error);
    EXPECT_EQ(a.loss.total, b.loss.total);
    EXPECT_EQ(a.lbfgs_iterations, b.lbfgs_iterations);
    EXPECT_GT(a.lbfgs_iterations, 0);
    EXPECT_FALSE(a.lambda_hat.has_value());

    auto other = cfg;
    other.seed = 2;
    EXPECT_NE(run_forward(other).loss.total, a.loss.total);
    EXPECT_TRUE(fs::exists(dir / "seed-2" / "checkpoint.txt"));
}

TEST(Run, SummaryIsRecomputableFromCheckpoint)
{
    auto const dir = scratch_dir("run-recompute");
    auto const cfg = tiny_forward(dir);
    auto const s = run_forward(cfg);
    auto const ckpt = load_checkpoint(s.run_dir / "checkpoint.txt");
    auto const grid = evaluate_grid(ckpt, cfg.domain, cfg.grid_t, cfg.grid_x);
    auto const err = metrics::error_stats(grid.u_pred, grid.u_exact);
    EXPECT_EQ(err.relative_l2, s.error.relative_l2);
    EXPECT_EQ(err.mean_abs_error, s.error.mean_abs_error);
    EXPECT_EQ(err.mean_sq_error, s.error.mean_sq_error);

    auto const icbc = sampling::sample_ic_bc(cfg.domain, cfg.n_ic, cfg.n_bc, cfg.seed);
    losses::ForwardObjective obj{ckpt.architecture,
                                 cfg.domain,
                                 icbc.initial,
                                 icbc.boundary,
                                 sampling::sample_collocation(cfg.domain, cfg.n_f, cfg.seed),
                                 cfg.weights,
                                 ckpt.scaling};
    EXPECT_EQ(obj.breakdown(ckpt.params).total, s.loss.total);

    std::ifstream is{s.run_dir / "summary.json"};
    auto const back = summary_from_json(nlohmann::json::parse(is));
    EXPECT_EQ(back.error.relative_l2, s.error.relative_l2);
    EXPECT_EQ(back.loss.total, s.loss.total);
    EXPECT_EQ(back.loss.mse_f, s.loss.mse_f);
    EXPECT_EQ(back.lbfgs_status, s.lbfgs_status);
    EXPECT_EQ(back.lbfgs_iterations, s.lbfgs_iterations);
}

TEST(Run, InverseIsDeterministicAndReportsLambda)
{
    auto const dir = scratch_dir("run-inverse");
    auto const cfg = tiny_inverse(dir);
    auto const a = run_inverse(cfg);
    auto const ckpt_a = slurp(a.run_dir / "checkpoint.txt");
    auto const b = run_inverse(cfg);
    EXPECT_EQ(slurp(b.run_dir / "checkpoint.txt"), ckpt_a);
    ASSERT_TRUE(a.lambda_hat.has_value());
    EXPECT_EQ(*a.lambda_hat, *b.lambda_hat);
    EXPECT_EQ(*a.lambda_error_percent, metrics::lambda_error(*a.lambda_hat, cfg.domain.lambda));
    EXPECT_EQ(a.adam_steps, 20);
    auto const ckpt = load_checkpoint(a.run_dir / "checkpoint.txt");
    EXPECT_TRUE(ckpt.lambda_learned);
    EXPECT_EQ(ckpt.lambda, *a.lambda_hat);

    std::ifstream is{a.run_dir / "summary.json"};
    auto const back = summary_from_json(nlohmann::json::parse(is));
    EXPECT_EQ(*back.lambda_hat, *a.lambda_hat);

    auto const echo = slurp(a.run_dir / "config.echo");
    EXPECT_NE(echo.find("mode = \"inverse\""), std::string::npos);
    EXPECT_NE(echo.find("noise = 0.01"), std::string::npos);
}

TEST(Sweep, TableShapeAndDeterminism)
{
    auto const dir = scratch_dir("sweep");
    auto base = tiny_forward(dir);
    base.lbfgs.max_iters = 5;
    auto const a = sweep_data(base, {4, 6}, {20, 30, 40});
    ASSERT_EQ(a.relative_l2.size(), 2U);
    for (auto const& row : a.relative_l2) {
        ASSERT_EQ(row.size(), 3U);
        for (auto const& cell : row) { EXPECT_TRUE(cell.has_value()); }
    }
    EXPECT_EQ(a.lbfgs_cap[1][2], 5);
    auto const table_a = slurp(dir / "sweep_data.csv");
    auto const b = sweep_data(base, {4, 6}, {20, 30, 40});
    EXPECT_EQ(slurp(dir / "sweep_data.csv"), table_a);
    EXPECT_EQ(a.at(6, 40), b.at(6, 40));
    EXPECT_TRUE(fs::exists(dir / "nu6-nf40" / "seed-1" / "summary.json"));
    EXPECT_THROW((void)a.at(7, 40), InvalidConfig);
}

TEST(Sweep, FailedCellsAreBlank)
{
    auto const dir = scratch_dir("sweep-fail");
    auto base = tiny_forward(dir);
    base.lbfgs.max_iters = 2;
    auto const t = sweep_data(base, {1, 4}, {10});
    EXPECT_FALSE(t.at(1, 10).has_value());
    EXPECT_TRUE(t.at(4, 10).has_value());
    auto const text = slurp(dir / "sweep_data.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "n_u\\n_f,10");
    EXPECT_NE(text.find("\n1,\n"), std::string::npos);
}

TEST(Sweep, ArchitectureTable)
{
    auto const dir = scratch_dir("sweep-arch");
    auto base = tiny_forward(dir);
    base.lbfgs.max_iters = 3;
    auto const t = sweep_arch(base, {1, 2}, {3, 5});
    EXPECT_EQ(t.rows.size() * t.cols.size(), 4U);
    EXPECT_TRUE(t.at(2, 5).has_value());
    EXPECT_TRUE(fs::exists(dir / "sweep_arch.csv"));
    EXPECT_TRUE(fs::exists(dir / "layers2-width5" / "seed-1" / "grid.csv"));
}

TEST(Format, DoublesRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) { EXPECT_EQ(parse_double(format_double(v)), v); }
    EXPECT_THROW((void)parse_double("1.0x"), CorruptFile);
    EXPECT_THROW((void)parse_double(""), CorruptFile);
}
