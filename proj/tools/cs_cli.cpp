// Command-line front end: every analysis pipeline as a subcommand emitting
// CSV or JSON plot data. Exit codes: 0 success, 2 usage error, 3 numerical
// failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csregions/experiments.hpp"
#include "csregions/io.hpp"
#include "csregions/regions.hpp"
#include "csregions/tanaka.hpp"

namespace {

using namespace csregions;

struct OutputSpec {
    std::string format = "csv";
    std::string path = "-";  // "-" = stdout
};

void add_output_flags(CLI::App* cmd, OutputSpec& out) {
    cmd->add_option("--format", out.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--out", out.path, "Output file path, or - for stdout");
}

void emit(const io::Table& table, const OutputSpec& out) {
    if (out.path == "-") {
        io::write_table(table, std::cout, out.format);
        return;
    }
    std::ofstream file(out.path, std::ios::binary);
    if (!file) throw std::invalid_argument("cannot open output file: " + out.path);
    io::write_table(table, file, out.format);
}

tanaka::EnergyBase parse_base(const std::string& name) {
    return name == "mixed" ? tanaka::EnergyBase::mixed : tanaka::EnergyBase::nats;
}

std::vector<double> linspace(double lo, double hi, int steps) {
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (steps == 1) return {lo};
    if (!(hi >= lo)) throw std::invalid_argument("max must be >= min");
    std::vector<double> grid(steps);
    for (int i = 0; i < steps; ++i) grid[i] = lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
    return grid;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) values.push_back(std::stod(item));
    }
    return values;
}

/// Flat key = value file mirroring ExperimentConfig; '#' starts a comment.
experiments::ExperimentConfig parse_compare_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::invalid_argument("cannot read config file: " + path);
    experiments::ExperimentConfig cfg;
    cfg.rates.clear();
    cfg.gammas_db.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(file, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "p") cfg.p = std::stod(value);
            else if (key == "n") cfg.n = std::stoi(value);
            else if (key == "rates") cfg.rates = parse_double_list(value);
            else if (key == "gammas_db") cfg.gammas_db = parse_double_list(value);
            else if (key == "trials") cfg.trials = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "max_iters") cfg.amp_cfg.max_iters = std::stoi(value);
            else if (key == "tol") cfg.amp_cfg.tol = std::stod(value);
            else if (key == "damping") cfg.amp_cfg.damping = std::stod(value);
            else if (key == "normalize_rows") cfg.normalize_rows = (value == "true" || value == "1");
            else if (key == "threads") cfg.threads = std::stoi(value);
            else throw std::invalid_argument("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad value for " + key);
        }
    }
    return cfg;
}

nlohmann::ordered_json fixed_point_row(const tanaka::FixedPoint& fp, bool selected) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    row["eta"] = io::round_g12(fp.eta);
    row["a"] = io::round_g12(fp.a);
    row["mmse"] = io::round_g12(fp.mmse);
    row["free_energy_nats"] = io::round_g12(fp.free_energy);
    row["branch"] = tanaka::to_string(fp.branch);
    row["selected"] = selected;
    return row;
}

int run(int argc, char** argv) {
    CLI::App app{"Optimal-MMSE phase diagrams and AMP experiments for noisy compressed sensing of sparse Gaussian signals"};
    app.require_subcommand(1);

    // ---- mmse ----
    double mmse_p = 0.1, mmse_s = 0.0;
    auto* cmd_mmse = app.add_subcommand("mmse", "Scalar-channel MMSE at a given effective SNR");
    cmd_mmse->add_option("--p", mmse_p, "Sparsity rate")->required();
    cmd_mmse->add_option("--snr-eff", mmse_s, "Effective SNR coefficient")->required();

    // ---- fixed-points ----
    double fp_p = 0.1, fp_db = 60.0, fp_rate = 0.2;
    std::string fp_base = "nats";
    OutputSpec fp_out;
    auto* cmd_fp = app.add_subcommand("fixed-points", "All fixed points with free energies and selection");
    cmd_fp->add_option("--p", fp_p, "Sparsity rate")->required();
    cmd_fp->add_option("--gamma-db", fp_db, "Inverse noise level in dB")->required();
    cmd_fp->add_option("--rate", fp_rate, "Measurement rate")->required();
    cmd_fp->add_option("--energy-base", fp_base, "Free-energy base convention")
        ->check(CLI::IsMember({"nats", "mixed"}));
    add_output_flags(cmd_fp, fp_out);

    // ---- surface ----
    double sf_p = 0.1, sf_rmin = 0.12, sf_rmax = 0.23, sf_gmin = 10.0, sf_gmax = 70.0;
    int sf_rsteps = 12, sf_gsteps = 13, sf_threads = 0;
    std::string sf_base = "nats";
    OutputSpec sf_out;
    auto* cmd_surface = app.add_subcommand("surface", "Selected-MMSE surface over a (rate, gamma) grid");
    cmd_surface->add_option("--p", sf_p, "Sparsity rate")->required();
    cmd_surface->add_option("--rate-min", sf_rmin)->required();
    cmd_surface->add_option("--rate-max", sf_rmax)->required();
    cmd_surface->add_option("--rate-steps", sf_rsteps)->required();
    cmd_surface->add_option("--gamma-db-min", sf_gmin)->required();
    cmd_surface->add_option("--gamma-db-max", sf_gmax)->required();
    cmd_surface->add_option("--gamma-db-steps", sf_gsteps)->required();
    cmd_surface->add_option("--energy-base", sf_base)->check(CLI::IsMember({"nats", "mixed"}));
    cmd_surface->add_option("--threads", sf_threads, "Worker threads (0 = auto)");
    add_output_flags(cmd_surface, sf_out);

    // ---- thresholds ----
    double th_p = 0.1, th_db = 60.0;
    int th_threads = 0;
    std::string th_base = "nats";
    OutputSpec th_out;
    auto* cmd_th = app.add_subcommand("thresholds", "Robust/consistency/low-noise/BP thresholds at one gamma");
    cmd_th->add_option("--p", th_p, "Sparsity rate")->required();
    cmd_th->add_option("--gamma-db", th_db, "Inverse noise level in dB")->required();
    cmd_th->add_option("--energy-base", th_base)->check(CLI::IsMember({"nats", "mixed"}));
    cmd_th->add_option("--threads", th_threads, "Worker threads (0 = auto)");
    add_output_flags(cmd_th, th_out);

    // ---- rbp-sweep ----
    std::vector<double> rbp_ps;
    double rbp_db = 70.0;
    int rbp_threads = 0;
    OutputSpec rbp_out;
    auto* cmd_rbp = app.add_subcommand("rbp-sweep", "Upper band edge R_bp for a list of sparsity rates");
    cmd_rbp->add_option("--p-list", rbp_ps, "Comma-separated sparsity rates")->required()->delimiter(',');
    cmd_rbp->add_option("--gamma-db-ref", rbp_db, "Reference gamma in dB");
    cmd_rbp->add_option("--threads", rbp_threads, "Worker threads (0 = auto)");
    add_output_flags(cmd_rbp, rbp_out);

    // ---- simulate ----
    experiments::ExperimentConfig sim_cfg;
    double sim_rate = 0.2, sim_db = 60.0;
    OutputSpec sim_out;
    auto* cmd_sim = app.add_subcommand("simulate", "AMP reconstruction trials at one (rate, gamma) cell");
    cmd_sim->add_option("--p", sim_cfg.p, "Sparsity rate")->required();
    cmd_sim->add_option("--rate", sim_rate, "Measurement rate")->required();
    cmd_sim->add_option("--gamma-db", sim_db, "Inverse noise level in dB")->required();
    cmd_sim->add_option("--n", sim_cfg.n, "Signal length")->required();
    cmd_sim->add_option("--trials", sim_cfg.trials, "Number of trials")->required();
    cmd_sim->add_option("--seed", sim_cfg.seed, "Base seed");
    cmd_sim->add_option("--max-iters", sim_cfg.amp_cfg.max_iters, "AMP iteration cap");
    cmd_sim->add_option("--tol", sim_cfg.amp_cfg.tol, "AMP relative-change stop");
    cmd_sim->add_option("--damping", sim_cfg.amp_cfg.damping, "AMP damping in [0,1]");
    cmd_sim->add_flag("--normalize-rows", sim_cfg.normalize_rows, "Normalize matrix rows exactly");
    cmd_sim->add_option("--threads", sim_cfg.threads, "Worker threads (0 = auto)");
    add_output_flags(cmd_sim, sim_out);

    // ---- compare ----
    std::string cmp_config;
    int cmp_threads = -1;
    OutputSpec cmp_out;
    auto* cmd_cmp = app.add_subcommand("compare", "Grid of AMP trials against fixed-point predictions");
    cmd_cmp->add_option("--config-file", cmp_config, "Flat key=value experiment config")->required();
    cmd_cmp->add_option("--threads", cmp_threads, "Override config threads");
    add_output_flags(cmd_cmp, cmp_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return 2;
    }

    if (cmd_mmse->parsed()) {
        const double value = prior::scalar_mmse(prior::SparseGaussianPrior(mmse_p), mmse_s);
        std::printf("%s\n", io::format_g12(value).c_str());
        return 0;
    }

    if (cmd_fp->parsed()) {
        const tanaka::ChannelSpec spec(fp_p, experiments::db_to_gamma(fp_db), fp_rate);
        const auto sol = tanaka::solve(spec, parse_base(fp_base));
        io::Table table;
        table.comments = {"energy_base=" + fp_base};
        table.columns = {"eta", "a", "mmse", "free_energy_nats", "branch", "selected"};
        for (const auto& fp : sol.all) table.rows.push_back(fixed_point_row(fp, fp.eta == sol.selected.eta));
        emit(table, fp_out);
        return 0;
    }

    if (cmd_surface->parsed()) {
        const auto rates = linspace(sf_rmin, sf_rmax, sf_rsteps);
        const auto gammas_db = linspace(sf_gmin, sf_gmax, sf_gsteps);
        const auto base = parse_base(sf_base);
        const regions::RegionClassifier classifier(sf_p, sf_threads);

        struct Cell {
            tanaka::SurfaceRow row;
            regions::RegionLabel label;
        };
        std::vector<Cell> cells(rates.size() * gammas_db.size());
        par::parallel_for_index(cells.size(), [&](std::size_t idx) {
            const double rate = rates[idx / gammas_db.size()];
            const double gamma = experiments::db_to_gamma(gammas_db[idx % gammas_db.size()]);
            const auto sol = tanaka::solve(tanaka::ChannelSpec(sf_p, gamma, rate), base);
            cells[idx].row = tanaka::SurfaceRow{rate, gamma, sol.selected.mmse, static_cast<int>(sol.all.size()),
                                                sol.selected.eta};
            cells[idx].label = classifier.classify(rate, gamma, sol);
        }, sf_threads);

        io::Table table;
        table.comments = {"energy_base=" + sf_base};
        table.columns = {"rate", "gamma_db", "mmse", "eta", "fixed_point_count", "region"};
        for (std::size_t idx = 0; idx < cells.size(); ++idx) {
            auto& row = table.add_row();
            row["rate"] = io::round_g12(cells[idx].row.rate);
            row["gamma_db"] = io::round_g12(gammas_db[idx % gammas_db.size()]);
            row["mmse"] = io::round_g12(cells[idx].row.mmse);
            row["eta"] = io::round_g12(cells[idx].row.eta);
            row["fixed_point_count"] = cells[idx].row.fixed_point_count;
            row["region"] = regions::to_string(cells[idx].label.region);
        }
        emit(table, sf_out);
        return 0;
    }

    if (cmd_th->parsed()) {
        const auto set =
            regions::thresholds(th_p, experiments::db_to_gamma(th_db), th_threads, parse_base(th_base));
        io::Table table;
        table.comments = {"energy_base=" + th_base};
        table.columns = {"gamma_db", "r_robust", "r_consistency", "r_low_noise", "r_bp"};
        auto& row = table.add_row();
        row["gamma_db"] = io::round_g12(th_db);
        row["r_robust"] = io::round_g12(set.r_robust);
        row["r_consistency"] = set.r_consistency ? nlohmann::ordered_json(io::round_g12(*set.r_consistency))
                                                 : nlohmann::ordered_json(nullptr);
        row["r_low_noise"] = set.r_low_noise ? nlohmann::ordered_json(io::round_g12(*set.r_low_noise))
                                             : nlohmann::ordered_json(nullptr);
        row["r_bp"] = set.r_bp ? nlohmann::ordered_json(io::round_g12(*set.r_bp)) : nlohmann::ordered_json(nullptr);
        emit(table, th_out);
        return 0;
    }

    if (cmd_rbp->parsed()) {
        const auto rows = regions::rbp_vs_sparsity(rbp_ps, experiments::db_to_gamma(rbp_db), rbp_threads);
        io::Table table;
        table.columns = {"p", "r_bp"};
        for (const auto& r : rows) {
            auto& row = table.add_row();
            row["p"] = io::round_g12(r.p);
            row["r_bp"] = r.r_bp ? nlohmann::ordered_json(io::round_g12(*r.r_bp)) : nlohmann::ordered_json(nullptr);
        }
        emit(table, rbp_out);
        return 0;
    }

    if (cmd_sim->parsed()) {
        sim_cfg.rates = {sim_rate};
        sim_cfg.gammas_db = {sim_db};
        sim_cfg.validate();
        std::vector<experiments::TrialResult> trials(sim_cfg.trials);
        par::parallel_for_index(trials.size(), [&](std::size_t t) {
            trials[t] = experiments::run_trial(sim_cfg, 0, 0, static_cast<int>(t));
        }, sim_cfg.threads);

        double mean = 0.0;
        int nonconverged = 0;
        for (const auto& t : trials) {
            mean += t.empirical_mse;
            if (!t.converged) ++nonconverged;
        }
        mean /= trials.size();
        double sq_dev = 0.0;
        for (const auto& t : trials) sq_dev += (t.empirical_mse - mean) * (t.empirical_mse - mean);
        const double std_err =
            trials.size() > 1 ? std::sqrt(sq_dev / (trials.size() - 1.0)) / std::sqrt(double(trials.size())) : 0.0;

        io::Table table;
        table.comments = {"summary: trials=" + std::to_string(trials.size()) + " mean_mse=" + io::format_g12(mean) +
                          " std_err=" + io::format_g12(std_err) +
                          " nonconverged=" + std::to_string(nonconverged)};
        table.columns = {"trial", "mse", "iterations", "converged"};
        for (std::size_t t = 0; t < trials.size(); ++t) {
            auto& row = table.add_row();
            row["trial"] = static_cast<long long>(t);
            row["mse"] = io::round_g12(trials[t].empirical_mse);
            row["iterations"] = trials[t].iterations;
            row["converged"] = trials[t].converged;
        }
        emit(table, sim_out);
        std::fprintf(stderr, "summary: trials=%zu mean_mse=%s std_err=%s nonconverged=%d\n", trials.size(),
                     io::format_g12(mean).c_str(), io::format_g12(std_err).c_str(), nonconverged);
        return 0;
    }

    if (cmd_cmp->parsed()) {
        auto cfg = parse_compare_config(cmp_config);
        if (cmp_threads >= 0) cfg.threads = cmp_threads;
        cfg.validate();
        const auto rows = experiments::run_grid(cfg);
        io::Table table;
        table.comments = {"energy_base=nats"};
        table.columns = {"rate",        "gamma_db",         "mean_mse", "std_err",
                         "tanaka_mmse", "smallest_fp_mmse", "region",   "nonconverged_trials"};
        for (const auto& r : rows) {
            auto& row = table.add_row();
            row["rate"] = io::round_g12(r.rate);
            row["gamma_db"] = io::round_g12(r.gamma_db);
            row["mean_mse"] = io::round_g12(r.mean_mse);
            row["std_err"] = io::round_g12(r.std_err);
            row["tanaka_mmse"] = io::round_g12(r.tanaka_mmse);
            row["smallest_fp_mmse"] = io::round_g12(r.smallest_fp_mmse);
            row["region"] = regions::to_string(r.region.region);
            row["nonconverged_trials"] = r.nonconverged_trials;
        }
        emit(table, cmp_out);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ParseError&) {
        return 2;  // unreachable; CLI11_PARSE handles these
    } catch (const csregions::NumericalError& err) {
        std::fprintf(stderr, "numerical failure: %s\n", err.what());
        return 3;
    } catch (const std::domain_error& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return 2;
    } catch (const std::invalid_argument& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return 2;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 3;
    }
}
