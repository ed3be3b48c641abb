// Command-line driver: synthetic benchmark generation, single fits from CSV,
// the two benchmark tables, and the inflation pipeline. Exit codes: 0 on
// success, 2 for configuration errors, 3 for data errors, 4 for numerical
// failures.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynss/datagen.hpp"
#include "dynss/io.hpp"
#include "dynss/sampler.hpp"

namespace {

using namespace dynss;
namespace fs = std::filesystem;

// Flag values are folded into a key-value map so file keys and command-line
// overrides travel through the same typed parser.
struct McmcFlags {
    std::string config, prior, out, response, predictors;
    int iters = 0, burn = 0, thin = 0;
    std::uint64_t seed = 0;
    bool save_draws = false, standardize = false, back_transform = false;
    CLI::Option *o_prior = nullptr, *o_iters = nullptr, *o_burn = nullptr, *o_thin = nullptr,
                *o_seed = nullptr, *o_out = nullptr, *o_config = nullptr, *o_save = nullptr,
                *o_std = nullptr, *o_back = nullptr, *o_response = nullptr, *o_pred = nullptr;

    void attach(CLI::App* cmd, bool column_flags) {
        o_prior = cmd->add_option("--prior", prior, "Prior kind: nmig, ng or laplace");
        o_iters = cmd->add_option("--iters", iters, "Total MCMC iterations");
        o_burn = cmd->add_option("--burn", burn, "Burn-in iterations");
        o_thin = cmd->add_option("--thin", thin, "Keep every n-th post-burn draw");
        o_seed = cmd->add_option("--seed", seed, "RNG seed");
        o_out = cmd->add_option("--out", out, "Output directory");
        o_config = cmd->add_option("--config", config, "Key-value or run.json config file");
        o_save = cmd->add_flag("--save-draws", save_draws, "Write per-block draw shards");
        if (column_flags) {
            o_response = cmd->add_option("--response", response, "Response column name");
            o_pred = cmd->add_option("--predictors", predictors,
                                     "Comma-separated predictor columns (default: all others)");
            o_std = cmd->add_flag("--standardize,!--no-standardize", standardize,
                                  "Standardize response and predictors");
            o_back = cmd->add_flag("--back-transform", back_transform,
                                   "Also emit coefficient summaries on the original scale");
        }
    }

    mutable ConfigMap file_kv;

    bool explicitly_set(const char* key, const CLI::Option* opt) const {
        return (opt && opt->count()) || file_kv.count(key);
    }

    RunConfig resolve(const std::string& command, const std::string& profile) const {
        RunConfig cfg;
        cfg.command = command;
        if (!profile.empty()) apply_profile(cfg, profile);
        if (o_config->count()) {
            file_kv = load_config_file(config);
            apply_config(cfg, file_kv);
        }
        ConfigMap ov;
        if (o_prior->count()) ov["prior"] = prior;
        if (o_iters->count()) ov["iters"] = std::to_string(iters);
        if (o_burn->count()) ov["burn"] = std::to_string(burn);
        if (o_thin->count()) ov["thin"] = std::to_string(thin);
        if (o_seed->count()) ov["seed"] = std::to_string(seed);
        if (o_out->count()) ov["out"] = out;
        if (o_save->count()) ov["save_draws"] = "true";
        if (o_response && o_response->count()) ov["response"] = response;
        if (o_pred && o_pred->count()) ov["predictors"] = predictors;
        if (o_std && o_std->count()) ov["standardize"] = standardize ? "true" : "false";
        if (o_back && o_back->count()) ov["back_transform"] = "true";
        apply_config(cfg, ov);
        // Shrinking --iters below a profile's burn-in without saying --burn
        // means "keep the half-discarded convention", not "reject the run".
        if (!explicitly_set("burn", o_burn) && cfg.mcmc.n_burn >= cfg.mcmc.n_iter)
            cfg.mcmc.n_burn = cfg.mcmc.n_iter / 2;
        return cfg;
    }
};

int run_fit(RunConfig cfg, bool inflation) {
    if (cfg.data_path.empty()) throw ConfigError("config: no data file set (use --data)");
    TabularData tab = load_table(cfg.data_path);
    if (inflation) {
        validate_inflation_schema(tab.header);
        for (std::string& h : tab.header) h = normalize_header(h);
        cfg.response = kInflationResponse;
        cfg.predictors = inflation_predictor_names();
    }
    if (cfg.response.empty()) throw ConfigError("config: response column not set");
    ColumnSelection sel = select_columns(tab, cfg.response, cfg.predictors);
    cfg.predictors = sel.predictors;

    std::optional<Eigen::MatrixXd> truth;
    if (!cfg.truth_path.empty()) {
        if (cfg.standardize_data)
            throw ConfigError("config: RMSE against a truth file requires an unstandardized fit");
        TabularData tt = load_table(cfg.truth_path);
        if (tt.values.rows() != sel.data.X.rows() || tt.values.cols() != sel.data.X.cols())
            throw DataError("truth '" + cfg.truth_path + "': shape must match the design ("
                            + std::to_string(sel.data.X.rows()) + "x"
                            + std::to_string(sel.data.X.cols()) + ")");
        truth = tt.values;
    }

    Dataset data = std::move(sel.data);
    std::optional<Standardization> rec;
    if (cfg.standardize_data) {
        auto [ds, r] = standardize(data, cfg.predictors, cfg.response);
        data = std::move(ds);
        rec = std::move(r);
    }
    cfg.validate();
    ChainResult res = run_chain(data, cfg.mcmc);
    emit_results(res, cfg, truth ? &*truth : nullptr, rec ? &*rec : nullptr);
    std::printf("wrote %s\n", (fs::path(cfg.out_dir) / "summary.csv").string().c_str());
    return 0;
}

int run_simulate(const std::string& generator, std::uint64_t seed, int vars,
                 const std::string& out_dir) {
    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("emit: cannot create directory '" + dir.string() + "'");

    if (generator == "example-1") {
        Dataset d = generate_example1(seed);
        write_dataset_csv(dir / "data.csv", d);
        write_matrix_csv(dir / "truth.csv", *d.truth, "beta");
        std::printf("wrote %s and truth.csv (T=%d, q=%d)\n",
                    (dir / "data.csv").string().c_str(), static_cast<int>(d.X.rows()),
                    static_cast<int>(d.X.cols()));
    } else if (generator == "example-2") {
        Example2 ex = generate_example2(seed, vars);
        for (size_t e = 0; e < ex.equations.size(); ++e) {
            const Dataset& d = ex.equations[e];
            const int i = static_cast<int>(e) + 2; // equation index: variable 2 regresses on 1
            std::vector<std::string> names;
            for (int j = 1; j < i; ++j) names.push_back("y" + std::to_string(j));
            write_dataset_csv(dir / ("data_eq" + std::to_string(i) + ".csv"), d,
                              "y" + std::to_string(i), names);
            write_matrix_csv(dir / ("truth_eq" + std::to_string(i) + ".csv"), *d.truth, "beta");
        }
        std::printf("wrote %zu equation datasets under %s\n", ex.equations.size(),
                    dir.string().c_str());
    } else {
        throw ConfigError("config: unknown generator '" + generator
                          + "' (expected example-1 or example-2)");
    }
    return 0;
}

void write_prior_table(const fs::path& path, const std::vector<std::string>& priors,
                       const std::vector<std::pair<double, double>>& rmse) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("emit: cannot write '" + path.string() + "'");
    out << "prior,rmse_mean,rmse_median\n";
    for (size_t k = 0; k < priors.size(); ++k)
        out << priors[k] << ',' << dynss::detail::fmt(rmse[k].first) << ','
            << dynss::detail::fmt(rmse[k].second) << '\n';
}

int run_table2(RunConfig cfg, int reps) {
    cfg.validate();
    if (reps < 1) throw ConfigError("config: need at least one replication");
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("emit: cannot create directory '" + dir.string() + "'");

    const std::vector<std::string> priors = {"nmig", "ng", "laplace"};
    std::vector<std::pair<double, double>> rmse;
    for (size_t k = 0; k < priors.size(); ++k) {
        double acc_mean = 0.0, acc_median = 0.0;
        for (int rep = 0; rep < reps; ++rep) {
            Dataset d = generate_example1(derive_seed(cfg.mcmc.seed, rep));
            McmcConfig mc = cfg.mcmc;
            mc.kind = prior_from_name(priors[k]);
            mc.seed = derive_seed(cfg.mcmc.seed, 1000 + static_cast<int>(k) * reps + rep);
            ChainResult res = run_chain(d, mc);
            acc_mean += compute_rmse(res.summary.beta_mean, *d.truth);
            acc_median += compute_rmse(res.summary.beta_median, *d.truth);
        }
        rmse.emplace_back(acc_mean / reps, acc_median / reps);
        std::printf("%-8s rmse(mean) %.4f  rmse(median) %.4f\n", priors[k].c_str(),
                    rmse.back().first, rmse.back().second);
        std::fflush(stdout);
    }
    write_prior_table(dir / "table2.csv", priors, rmse);
    std::ofstream out(dir / "run.json", std::ios::binary);
    if (!out) throw DataError("emit: cannot write run.json");
    nlohmann::json j = config_to_json(cfg, 0, 0);
    j["replications"] = reps;
    out << j.dump(2) << '\n';
    return 0;
}

int run_table3(RunConfig cfg, int vars, int reps) {
    cfg.validate();
    if (vars < 2) throw ConfigError("config: need at least two variables");
    if (reps < 1) throw ConfigError("config: need at least one replication");
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("emit: cannot create directory '" + dir.string() + "'");

    const std::vector<std::string> priors = {"nmig", "ng", "laplace"};
    std::vector<std::pair<double, double>> rmse;
    for (size_t k = 0; k < priors.size(); ++k) {
        // Squared error pooled over every coefficient path of every equation.
        double ss_mean = 0.0, ss_median = 0.0;
        long n = 0;
        for (int rep = 0; rep < reps; ++rep) {
            Example2 ex = generate_example2(derive_seed(cfg.mcmc.seed, rep), vars);
            for (size_t e = 0; e < ex.equations.size(); ++e) {
                const Dataset& d = ex.equations[e];
                McmcConfig mc = cfg.mcmc;
                mc.kind = prior_from_name(priors[k]);
                mc.seed = derive_seed(cfg.mcmc.seed,
                                      1000 + (static_cast<int>(k) * reps + rep) * 64
                                          + static_cast<int>(e));
                ChainResult res = run_chain(d, mc);
                ss_mean += (res.summary.beta_mean - *d.truth).squaredNorm();
                ss_median += (res.summary.beta_median - *d.truth).squaredNorm();
                n += d.truth->size();
            }
        }
        rmse.emplace_back(std::sqrt(ss_mean / n), std::sqrt(ss_median / n));
        std::printf("%-8s rmse(mean) %.4f  rmse(median) %.4f\n", priors[k].c_str(),
                    rmse.back().first, rmse.back().second);
        std::fflush(stdout);
    }
    write_prior_table(dir / "table3.csv", priors, rmse);
    std::ofstream out(dir / "run.json", std::ios::binary);
    if (!out) throw DataError("emit: cannot write run.json");
    nlohmann::json j = config_to_json(cfg, 0, 0);
    j["variables"] = vars;
    j["replications"] = reps;
    out << j.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-varying sparse regression with dynamic spike-and-slab priors"};
    app.require_subcommand(1);
    int rc = 0;

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic benchmark dataset");
    std::string sim_gen;
    std::uint64_t sim_seed = 1;
    int sim_vars = 10;
    std::string sim_out = "out";
    sim->add_option("--generator", sim_gen, "example-1 or example-2")->required();
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--vars", sim_vars, "Number of variables (example-2 only)");
    sim->add_option("--out", sim_out, "Output directory");
    sim->callback([&] { rc = run_simulate(sim_gen, sim_seed, sim_vars, sim_out); });

    auto* fit = app.add_subcommand("fit", "Fit the model to a CSV dataset");
    McmcFlags fit_flags;
    std::string fit_data, fit_truth;
    fit->add_option("--data", fit_data, "Input CSV file");
    fit->add_option("--truth", fit_truth, "True coefficient paths (enables rmse.csv)");
    fit_flags.attach(fit, true);
    fit->callback([&] {
        RunConfig cfg = fit_flags.resolve("fit", "");
        if (!fit_data.empty()) cfg.data_path = fit_data;
        if (!fit_truth.empty()) cfg.truth_path = fit_truth;
        rc = run_fit(std::move(cfg), false);
    });

    auto* inf = app.add_subcommand("fit-inflation", "Fit the quarterly inflation dataset");
    McmcFlags inf_flags;
    std::string inf_data = "data/inflation_fixture.csv";
    inf->add_option("--data", inf_data, "Inflation CSV (defaults to the synthetic fixture)");
    inf_flags.attach(inf, true);
    inf->callback([&] {
        RunConfig cfg = inf_flags.resolve("fit-inflation", "inflation");
        if (inf->get_option("--data")->count() || cfg.data_path.empty()) cfg.data_path = inf_data;
        rc = run_fit(std::move(cfg), true);
    });

    auto* t2 = app.add_subcommand("reproduce-table2", "Five-replication benchmark table");
    McmcFlags t2_flags;
    int t2_reps = 5;
    t2->add_option("--reps", t2_reps, "Number of replications");
    t2_flags.attach(t2, false);
    t2->callback([&] { rc = run_table2(t2_flags.resolve("reproduce-table2", "example-1"), t2_reps); });

    auto* t3 = app.add_subcommand("reproduce-table3", "Recursive-system benchmark table");
    McmcFlags t3_flags;
    int t3_vars = 6, t3_reps = 1;
    bool t3_full = false;
    t3->add_option("--vars", t3_vars, "Number of system variables");
    t3->add_option("--reps", t3_reps, "Number of replications");
    t3->add_flag("--full", t3_full, "Full scale: 10 variables, 10000 iterations");
    t3_flags.attach(t3, false);
    t3->callback([&] {
        RunConfig cfg = t3_flags.resolve("reproduce-table3", "example-2");
        if (!t3_flags.explicitly_set("iters", t3_flags.o_iters)) {
            cfg.mcmc.n_iter = t3_full ? 10000 : 4000;
            if (!t3_flags.explicitly_set("burn", t3_flags.o_burn))
                cfg.mcmc.n_burn = cfg.mcmc.n_iter / 2;
        }
        if (t3_full && !t3->get_option("--vars")->count()) t3_vars = 10;
        rc = run_table3(std::move(cfg), t3_vars, t3_reps);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const dynss::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const dynss::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const dynss::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const dynss::DomainError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
