// Command-line experiment runner.
//
//   cfpinn forward [--weighted] [flags]
//   cfpinn inverse [flags]
//   cfpinn sweep-data [--n-u-list ...] [--n-f-list ...] [flags]
//   cfpinn sweep-arch [--layers-list ...] [--width-list ...] [flags]
//   cfpinn export-grid --checkpoint FILE --nt N --nx M OUTPUT
//   cfpinn eval-oracle --t 0.1,0.5 --x 0,0.5 [--alpha A --lambda L]
//
// Shared flags may come from a TOML file given with --config; command-line
// values take precedence. A run's config.echo is a valid --config file.

#include "cfpinn/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using cfpinn::harness::ExperimentConfig;
using cfpinn::harness::Mode;

struct SharedFlags {
    std::optional<std::string> mode;
    std::optional<double> alpha;
    std::optional<double> lambda;
    std::optional<double> t_lo, t_hi, x_lo, x_hi;
    std::optional<int> layers;
    std::optional<int> width;
    std::optional<std::size_t> n_ic, n_bc, n_f, n_data;
    std::optional<std::string> weights;
    std::optional<double> noise;
    std::optional<double> lambda_init;
    std::optional<int> adam_steps;
    std::optional<double> adam_lr;
    std::optional<int> lbfgs_max_iters;
    std::optional<int> lbfgs_memory;
    std::optional<double> lbfgs_grad_tol;
    std::optional<double> lbfgs_f_rel_tol;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> grid_t, grid_x;
    std::optional<bool> scale_inputs;

    void attach(CLI::App& app)
    {
        app.add_option("--mode", mode, "forward, forward-weighted or inverse (normally implied by the subcommand)");
        app.add_option("--alpha", alpha, "fractional order in (0, 1]");
        app.add_option("--lambda", lambda, "diffusion coefficient (true value in inverse mode)");
        app.add_option("--t-lo", t_lo);
        app.add_option("--t-hi", t_hi);
        app.add_option("--x-lo", x_lo);
        app.add_option("--x-hi", x_hi);
        app.add_option("--layers", layers, "hidden layers");
        app.add_option("--width", width, "neurons per hidden layer");
        app.add_option("--n-ic", n_ic, "initial-condition points");
        app.add_option("--n-bc", n_bc, "boundary points");
        app.add_option("--n-f", n_f, "collocation points");
        app.add_option("--n-data", n_data, "labelled interior points (inverse)");
        app.add_option("--weights", weights, "loss weights as wu,wf");
        app.add_option("--noise", noise, "relative Gaussian noise level on the data (inverse)");
        app.add_option("--lambda-init", lambda_init, "initial lambda estimate (inverse)");
        app.add_option("--adam-steps", adam_steps);
        app.add_option("--adam-lr", adam_lr);
        app.add_option("--lbfgs-max-iters", lbfgs_max_iters);
        app.add_option("--lbfgs-memory", lbfgs_memory);
        app.add_option("--lbfgs-grad-tol", lbfgs_grad_tol);
        app.add_option("--lbfgs-f-rel-tol", lbfgs_f_rel_tol);
        app.add_option("--seed", seed);
        app.add_option("--out", out, "output directory");
        app.add_option("--grid-t", grid_t, "evaluation grid points in t");
        app.add_option("--grid-x", grid_x, "evaluation grid points in x");
        app.add_option("--scale-inputs", scale_inputs, "map the domain to [-1, 1]^2 before the first layer");
        // A repeated flag overrides the earlier value.
        for (auto* opt : app.get_options()) { opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast); }
    }

    [[nodiscard]] auto build(Mode subcommand_mode, bool weighted_flag) const -> ExperimentConfig
    {
        Mode m = subcommand_mode;
        if (mode) {
            auto const requested = cfpinn::harness::parse_mode(*mode);
            if ((requested == Mode::inverse) != (subcommand_mode == Mode::inverse)) {
                throw cfpinn::InvalidConfig("mode '" + *mode + "' does not match the subcommand");
            }
            if (subcommand_mode != Mode::inverse) { m = requested; }
        }
        if (weighted_flag) { m = Mode::forward_weighted; }

        auto c = ExperimentConfig::defaults(m);
        auto set = [](auto& dst, auto const& src) {
            if (src) { dst = *src; }
        };
        set(c.domain.alpha, alpha);
        set(c.domain.lambda, lambda);
        set(c.domain.t_lo, t_lo);
        set(c.domain.t_hi, t_hi);
        set(c.domain.x_lo, x_lo);
        set(c.domain.x_hi, x_hi);
        set(c.hidden_layers, layers);
        set(c.width, width);
        set(c.n_ic, n_ic);
        set(c.n_bc, n_bc);
        set(c.n_f, n_f);
        set(c.n_data, n_data);
        if (weights) { c.weights = parse_weights(*weights); }
        set(c.noise_level, noise);
        set(c.lambda_init, lambda_init);
        set(c.adam_steps, adam_steps);
        set(c.adam_lr, adam_lr);
        set(c.lbfgs.max_iters, lbfgs_max_iters);
        set(c.lbfgs.memory, lbfgs_memory);
        set(c.lbfgs.grad_tol, lbfgs_grad_tol);
        set(c.lbfgs.f_rel_tol, lbfgs_f_rel_tol);
        set(c.seed, seed);
        set(c.out_dir, out);
        set(c.grid_t, grid_t);
        set(c.grid_x, grid_x);
        set(c.scale_inputs, scale_inputs);
        c.validate();
        return c;
    }

    static auto parse_weights(std::string const& s) -> cfpinn::losses::LossWeights
    {
        auto const comma = s.find(',');
        if (comma == std::string::npos) { throw cfpinn::InvalidConfig("--weights expects wu,wf"); }
        try {
            return {cfpinn::harness::parse_double(s.substr(0, comma)), cfpinn::harness::parse_double(s.substr(comma + 1))};
        } catch (cfpinn::CorruptFile const&) {
            throw cfpinn::InvalidConfig("--weights expects two numbers, got '" + s + "'");
        }
    }
};

void print_summary(cfpinn::harness::RunSummary const& s)
{
    auto j = cfpinn::harness::to_json(s);
    j["run_dir"] = s.run_dir.string();
    std::cout << j.dump(2) << '\n';
}

void print_table(cfpinn::harness::SweepTable const& t)
{
    cfpinn::harness::write_table_csv(std::cout, t);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Conformable time-fractional diffusion PINN experiments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML file supplying any shared flag");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.fallthrough();

    SharedFlags flags;
    flags.attach(app);

    auto* forward = app.add_subcommand("forward", "solve the forward problem");
    bool weighted = false;
    forward->add_flag("--weighted", weighted, "use the near-integer weighting (w_u, w_f) = (1, 0.1)");

    auto* inverse = app.add_subcommand("inverse", "identify lambda from interior data");

    auto* sweep_data = app.add_subcommand("sweep-data", "relative L2 error over N_u x N_f");
    std::vector<int> n_u_list{20, 40, 60, 80, 100, 200};
    std::vector<int> n_f_list{2000, 4000, 6000, 8000, 10000};
    sweep_data->add_option("--n-u-list", n_u_list)->delimiter(',')->capture_default_str();
    sweep_data->add_option("--n-f-list", n_f_list)->delimiter(',')->capture_default_str();
    bool sweep_data_weighted = false;
    sweep_data->add_flag("--weighted", sweep_data_weighted);

    auto* sweep_arch = app.add_subcommand("sweep-arch", "relative L2 error over hidden layers x width");
    std::vector<int> layers_list{2, 4, 6, 8};
    std::vector<int> width_list{10, 20, 40};
    sweep_arch->add_option("--layers-list", layers_list)->delimiter(',')->capture_default_str();
    sweep_arch->add_option("--width-list", width_list)->delimiter(',')->capture_default_str();
    bool sweep_arch_weighted = false;
    sweep_arch->add_flag("--weighted", sweep_arch_weighted);

    auto* export_grid = app.add_subcommand("export-grid", "evaluate a checkpoint on a uniform grid");
    std::string checkpoint;
    int nt = 256;
    int nx = 100;
    std::string grid_out;
    export_grid->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    export_grid->add_option("--nt", nt)->capture_default_str();
    export_grid->add_option("--nx", nx)->capture_default_str();
    export_grid->add_option("output", grid_out, "CSV file to write")->required();

    auto* oracle = app.add_subcommand("eval-oracle", "print closed-form solution values");
    std::vector<double> oracle_t{1.0};
    std::vector<double> oracle_x{0.0};
    oracle->add_option("--t", oracle_t)->delimiter(',')->capture_default_str();
    oracle->add_option("--x", oracle_x)->delimiter(',')->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*forward) {
            print_summary(cfpinn::harness::run_forward(flags.build(Mode::forward, weighted)));
        } else if (*inverse) {
            print_summary(cfpinn::harness::run_inverse(flags.build(Mode::inverse, false)));
        } else if (*sweep_data || *sweep_arch) {
            auto f = flags;
            if (!f.lbfgs_max_iters) { f.lbfgs_max_iters = cfpinn::harness::sweep_lbfgs_cap; }
            if (*sweep_data) {
                print_table(cfpinn::harness::sweep_data(f.build(Mode::forward, sweep_data_weighted), n_u_list, n_f_list));
            } else {
                print_table(
                    cfpinn::harness::sweep_arch(f.build(Mode::forward, sweep_arch_weighted), layers_list, width_list));
            }
        } else if (*export_grid) {
            auto const ckpt = cfpinn::harness::load_checkpoint(std::filesystem::path{checkpoint});
            // The reference solution uses the checkpoint's order and, unless
            // lambda was learned, its lambda; --lambda overrides either way.
            cfpinn::conformable::DomainSpec d;
            d.alpha = flags.alpha.value_or(ckpt.alpha);
            d.lambda = flags.lambda.value_or(ckpt.lambda_learned ? d.lambda : ckpt.lambda);
            d.t_lo = flags.t_lo.value_or(d.t_lo);
            d.t_hi = flags.t_hi.value_or(d.t_hi);
            d.x_lo = flags.x_lo.value_or(d.x_lo);
            d.x_hi = flags.x_hi.value_or(d.x_hi);
            d.validate();
            cfpinn::harness::export_grid(ckpt, d, nt, nx, grid_out);
        } else if (*oracle) {
            double const alpha = flags.alpha.value_or(cfpinn::conformable::DomainSpec{}.alpha);
            double const lambda = flags.lambda.value_or(cfpinn::conformable::DomainSpec{}.lambda);
            std::cout << "t,x,u\n";
            for (double t : oracle_t) {
                for (double x : oracle_x) {
                    std::cout << cfpinn::harness::format_double(t) << ',' << cfpinn::harness::format_double(x) << ','
                              << cfpinn::harness::format_double(cfpinn::conformable::analytic_solution(alpha, lambda, t, x))
                              << '\n';
                }
            }
        }
    } catch (cfpinn::Error const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
