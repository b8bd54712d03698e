// Command-line front end: estimate MI on CSV data, run canned simulation
// scenarios, and run k/prior sweeps. Exit codes follow sysexits where it
// makes sense: 0 ok, 64 usage, 65 bad data, 70 numerical degeneracy.

#include <cctype>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <dpmi/dpmi.hpp>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 64;
constexpr int exit_data = 65;
constexpr int exit_degenerate = 70;

struct ConfigFlags {
    double a = 0.05;
    unsigned k = 3;
    std::size_t atoms = 1000;
    std::size_t draws = 1000;
    double jitter_scale = 0.01;
    std::uint64_t seed = 0;
    std::string marginal_mode = "projected";

    void attach(CLI::App* cmd) {
        cmd->add_option("--a", a, "DP concentration parameter")->capture_default_str();
        cmd->add_option("--k", k, "nearest-neighbour order")->capture_default_str();
        cmd->add_option("--atoms", atoms, "DP approximation size N")->capture_default_str();
        cmd->add_option("--draws", draws, "posterior draws per estimate")
            ->capture_default_str();
        cmd->add_option("--jitter-scale", jitter_scale,
                        "tie-breaking jitter, in units of per-column sd")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "master RNG seed")->capture_default_str();
        cmd->add_option("--marginal-mode", marginal_mode,
                        "marginal posterior construction")
            ->check(CLI::IsMember({"projected", "independent"}))
            ->capture_default_str();
    }

    dpmi::EstimatorConfig to_config() const {
        dpmi::EstimatorConfig c;
        c.a = a;
        c.k = k;
        c.N = atoms;
        c.ell = draws;
        c.jitter_scale = jitter_scale;
        c.seed = seed;
        c.marginal_mode = marginal_mode == "independent"
                              ? dpmi::MarginalMode::Independent
                              : dpmi::MarginalMode::Projected;
        c.validate();
        return c;
    }
};

std::string config_echo(const dpmi::EstimatorConfig& c) {
    std::ostringstream os;
    os << "config: a=" << c.a << " k=" << c.k << " atoms=" << c.N << " draws=" << c.ell
       << " jitter_scale=" << c.jitter_scale << " seed=" << c.seed << " marginal_mode="
       << (c.marginal_mode == dpmi::MarginalMode::Projected ? "projected" : "independent");
    if (c.prior_base) os << " prior_base=" << dpmi::format_scenario(*c.prior_base);
    return os.str();
}

std::vector<std::string> split_on(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char ch : s)
        if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
    return true;
}

// "T,V,AP,RH" or "0,1,3": all-numeric tokens mean 0-based indices.
dpmi::ColumnSelection parse_columns(const std::string& spec) {
    dpmi::ColumnSelection sel;
    if (spec.empty()) return sel;
    std::vector<std::string> tokens = split_on(spec, ',');
    bool numeric = true;
    for (const std::string& t : tokens)
        if (!all_digits(t)) {
            numeric = false;
            break;
        }
    if (numeric)
        for (const std::string& t : tokens) sel.indices.push_back(std::stoul(t));
    else
        sel.names = tokens;
    return sel;
}

// "1..20", "3,15,20", or a mix like "1..4,10".
std::vector<unsigned> parse_k_list(const std::string& spec) {
    std::vector<unsigned> out;
    for (const std::string& tok : split_on(spec, ',')) {
        const auto dots = tok.find("..");
        if (dots != std::string::npos) {
            const unsigned lo = static_cast<unsigned>(std::stoul(tok.substr(0, dots)));
            const unsigned hi = static_cast<unsigned>(std::stoul(tok.substr(dots + 2)));
            if (hi < lo) throw dpmi::usage_error("bad k range '" + tok + "'");
            for (unsigned k = lo; k <= hi; ++k) out.push_back(k);
        } else if (!tok.empty()) {
            out.push_back(static_cast<unsigned>(std::stoul(tok)));
        }
    }
    if (out.empty()) throw dpmi::usage_error("empty k list");
    return out;
}

std::vector<double> parse_double_list(const std::string& spec) {
    std::vector<double> out;
    for (const std::string& tok : split_on(spec, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    if (out.empty()) throw dpmi::usage_error("empty numeric list");
    return out;
}

std::string sanitize_stem(const std::string& label) {
    std::string out;
    for (char ch : label)
        out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.')
                   ? ch
                   : '_';
    return out;
}

std::string round3(double x) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << x;
    return os.str();
}

// ---- estimate ---------------------------------------------------------------

struct EstimateArgs {
    std::string input;
    std::string columns;
    std::optional<std::size_t> subsample;
    std::optional<std::uint64_t> subsample_seed;
    std::string format = "text";
    ConfigFlags config;
};

int run_estimate(const EstimateArgs& args) {
    dpmi::EstimatorConfig config = args.config.to_config();

    dpmi::ColumnSelection selection = parse_columns(args.columns);
    selection.subsample = args.subsample;
    selection.subsample_seed = args.subsample_seed.value_or(config.seed);
    const dpmi::LoadedTable table = dpmi::load_csv(args.input, selection);

    const dpmi::MIPosteriorSample sample = dpmi::estimate_mi(table.data, config);
    const double estimate = sample.point_estimate();
    const double q1 = dpmi::quantile(sample.draws, 0.25, config.quartile_method);
    const double median = dpmi::quantile(sample.draws, 0.5, config.quartile_method);
    const double q3 = dpmi::quantile(sample.draws, 0.75, config.quartile_method);
    const double mean = dpmi::mean_of(sample.draws);
    std::size_t zero_distance_draws = 0;
    for (std::size_t z : sample.zero_distance_counts)
        if (z > 0) ++zero_distance_draws;

    std::string joined_columns;
    for (std::size_t i = 0; i < table.column_names.size(); ++i) {
        if (i) joined_columns += ',';
        joined_columns += table.column_names[i];
    }

    if (args.format == "json") {
        nlohmann::json j{
            {"config", dpmi::config_to_json(config)},
            {"input",
             {{"path", args.input},
              {"columns", table.column_names},
              {"rows_used", table.data.rows()},
              {"rows_parsed", table.parsed_rows},
              {"rows_rejected", table.rejected_rows}}},
            {"estimate", estimate},
            {"draws",
             {{"count", sample.draws.size()},
              {"mean", mean},
              {"q1", q1},
              {"median", median},
              {"q3", q3}}},
            {"diagnostics", {{"zero_distance_draws", zero_distance_draws}}},
        };
        std::cout << j.dump(2) << '\n';
    } else if (args.format == "csv") {
        std::cerr << config_echo(config) << '\n';
        std::cout << "estimate,mean,q1,median,q3,rows_used,rows_rejected,a,k,atoms,draws,seed\n";
        std::cout.precision(17);
        std::cout << estimate << ',' << mean << ',' << q1 << ',' << median << ',' << q3
                  << ',' << table.data.rows() << ',' << table.rejected_rows << ','
                  << config.a << ',' << config.k << ',' << config.N << ',' << config.ell
                  << ',' << config.seed << '\n';
    } else {
        std::cout << config_echo(config) << '\n';
        std::cout << "input: " << args.input << " rows_used=" << table.data.rows()
                  << " rows_rejected=" << table.rejected_rows
                  << " columns=" << joined_columns << '\n';
        std::cout << "estimate: " << round3(estimate) << '\n';
        std::cout << "draws: mean=" << round3(mean) << " q1=" << round3(q1)
                  << " median=" << round3(median) << " q3=" << round3(q3) << '\n';
        std::cout << "diagnostics: zero_distance_draws=" << zero_distance_draws << '\n';
    }
    return exit_ok;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string scenario;
    std::size_t n = 50;
    std::size_t replicates = 200;
    std::optional<unsigned> baseline_k;
    unsigned threads = 0;
    std::string out_dir = ".";
    std::string stem;
    std::string format = "text";
    ConfigFlags config;
};

void print_cell(const dpmi::ExperimentResult& r, const std::string& prefix = "") {
    std::cout << prefix << "average=" << round3(r.average);
    if (!std::isnan(r.mse)) std::cout << " mse=" << round3(r.mse);
    if (r.plan.scenario.true_mi)
        std::cout << " true=" << round3(*r.plan.scenario.true_mi);
    if (!std::isnan(r.baseline_average)) {
        std::cout << " baseline_average=" << round3(r.baseline_average);
        if (!std::isnan(r.baseline_mse)) std::cout << " baseline_mse=" << round3(r.baseline_mse);
    }
    std::cout << " runtime=" << round3(r.runtime_seconds) << "s\n";
}

int run_simulate(const SimulateArgs& args) {
    dpmi::ExperimentPlan plan;
    plan.scenario = dpmi::parse_scenario(args.scenario);
    plan.n = args.n;
    plan.r = args.replicates;
    plan.config = args.config.to_config();
    plan.baseline_k = args.baseline_k;
    plan.threads = args.threads;

    const dpmi::ExperimentResult result = dpmi::run_experiment(plan);
    const std::string stem =
        args.stem.empty() ? sanitize_stem(args.scenario) + "_n" + std::to_string(args.n)
                          : args.stem;
    std::filesystem::create_directories(args.out_dir);
    dpmi::write_experiment_files({result}, args.out_dir, stem);

    if (args.format == "json") {
        std::cout << dpmi::manifest_json(result).dump(2) << '\n';
    } else {
        std::cout << config_echo(plan.config) << '\n';
        std::cout << "scenario: " << dpmi::format_scenario(plan.scenario)
                  << " n=" << plan.n << " replicates=" << plan.r << '\n';
        print_cell(result);
        std::cout << "wrote " << args.out_dir << '/' << stem << "_{raw,summary}.csv and "
                  << stem << "_manifest.json\n";
    }
    return exit_ok;
}

// ---- sweep-k ----------------------------------------------------------------

struct SweepKArgs {
    std::string scenario;
    std::size_t n = 50;
    std::size_t replicates = 100;
    std::string k_list = "1..20";
    unsigned threads = 0;
    std::string out_dir = ".";
    std::string stem;
    std::string format = "text";
    ConfigFlags config;
};

int run_sweep_k(const SweepKArgs& args) {
    const dpmi::ScenarioSpec scenario = dpmi::parse_scenario(args.scenario);
    const std::vector<unsigned> ks = parse_k_list(args.k_list);
    dpmi::EstimatorConfig config = args.config.to_config();

    const std::vector<dpmi::KSweepCell> cells =
        dpmi::sweep_k(scenario, args.n, ks, args.replicates, config, args.threads);

    std::vector<dpmi::ExperimentResult> results;
    results.reserve(cells.size());
    for (const dpmi::KSweepCell& c : cells) results.push_back(c.result);
    const std::string stem = args.stem.empty()
                                 ? sanitize_stem(args.scenario) + "_ksweep"
                                 : args.stem;
    std::filesystem::create_directories(args.out_dir);
    dpmi::write_experiment_files(results, args.out_dir, stem);

    if (args.format == "json") {
        nlohmann::json j = nlohmann::json::array();
        for (const dpmi::KSweepCell& c : cells) {
            nlohmann::json cell = dpmi::manifest_json(c.result);
            cell["k"] = c.k;
            j.push_back(cell);
        }
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << config_echo(config) << '\n';
        std::cout << "scenario: " << dpmi::format_scenario(scenario) << " n=" << args.n
                  << " replicates=" << args.replicates << '\n';
        for (const dpmi::KSweepCell& c : cells)
            print_cell(c.result, "k=" + std::to_string(c.k) + ": ");
        std::cout << "wrote " << args.out_dir << '/' << stem << "_{raw,summary}.csv\n";
    }
    return exit_ok;
}

// ---- sweep-prior -------------------------------------------------------------

struct SweepPriorArgs {
    std::string scenario;
    std::size_t n = 30;
    std::size_t replicates = 100;
    std::string a_list = "0.05";
    std::string base_list;  // semicolon-separated scenario specs
    unsigned threads = 0;
    std::string out_dir = ".";
    std::string stem;
    std::string format = "text";
    ConfigFlags config;
};

int run_sweep_prior(const SweepPriorArgs& args) {
    const dpmi::ScenarioSpec scenario = dpmi::parse_scenario(args.scenario);
    const std::vector<double> a_values = parse_double_list(args.a_list);
    std::vector<dpmi::BaseMeasure> bases;
    if (args.base_list.empty()) {
        bases.push_back(dpmi::standard_normal_base(scenario.dim));
    } else {
        for (const std::string& spec : split_on(args.base_list, ';'))
            if (!spec.empty()) bases.push_back(dpmi::parse_scenario(spec));
    }
    dpmi::EstimatorConfig config = args.config.to_config();

    const std::vector<dpmi::PriorSweepCell> cells = dpmi::sweep_prior(
        scenario, args.n, a_values, bases, args.replicates, config, args.threads);

    const std::string stem = args.stem.empty()
                                 ? sanitize_stem(args.scenario) + "_priorsweep"
                                 : args.stem;
    std::filesystem::create_directories(args.out_dir);
    const std::string grid_path = args.out_dir + "/" + stem + "_summary.csv";
    {
        std::ofstream os(grid_path);
        if (!os) throw dpmi::data_error("cannot write " + grid_path);
        dpmi::write_prior_sweep_csv(cells, os);
    }

    if (args.format == "json") {
        nlohmann::json j = nlohmann::json::array();
        for (const dpmi::PriorSweepCell& c : cells) {
            nlohmann::json cell = dpmi::manifest_json(c.result);
            cell["a"] = c.a;
            cell["base"] = c.base_label;
            j.push_back(cell);
        }
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << config_echo(config) << '\n';
        std::cout << "scenario: " << dpmi::format_scenario(scenario) << " n=" << args.n
                  << " replicates=" << args.replicates << '\n';
        for (const dpmi::PriorSweepCell& c : cells)
            print_cell(c.result, "a=" + round3(c.a) + " base=" + c.base_label + ": ");
        std::cout << "wrote " << grid_path << '\n';
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian nonparametric mutual information estimation"};
    app.require_subcommand(1);

    EstimateArgs est;
    CLI::App* estimate = app.add_subcommand("estimate", "estimate MI on CSV data");
    estimate->add_option("--input", est.input, "CSV file path")->required();
    estimate->add_option("--columns", est.columns,
                         "comma-separated column names or 0-based indices "
                         "(default: all columns)");
    estimate->add_option("--subsample", est.subsample,
                         "uniform subsample size (without replacement)");
    estimate->add_option("--subsample-seed", est.subsample_seed,
                         "subsample RNG seed (default: --seed)");
    estimate->add_option("--format", est.format, "output format")
        ->check(CLI::IsMember({"text", "json", "csv"}))
        ->capture_default_str();
    est.config.attach(estimate);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "run a canned scenario");
    simulate->add_option("scenario", sim.scenario,
                         "e.g. normal:d=4:cov=Sigma, student:df=3:d=4, maxwell:c=10:d=2")
        ->required();
    simulate->add_option("--n", sim.n, "sample size per replicate")->capture_default_str();
    simulate->add_option("--replicates", sim.replicates, "replicate count")
        ->capture_default_str();
    simulate->add_option("--baseline-k", sim.baseline_k,
                         "also run the plain kNN baseline at this k");
    simulate->add_option("--threads", sim.threads,
                         "worker threads (0 = DPMI_THREADS env or hardware)");
    simulate->add_option("--out", sim.out_dir, "output directory")->capture_default_str();
    simulate->add_option("--stem", sim.stem, "output file stem (default: from scenario)");
    simulate->add_option("--format", sim.format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    sim.config.attach(simulate);

    SweepKArgs swk;
    CLI::App* sweep_k_cmd = app.add_subcommand("sweep-k", "average estimate per k");
    sweep_k_cmd->add_option("scenario", swk.scenario, "scenario spec")->required();
    sweep_k_cmd->add_option("--n", swk.n, "sample size")->capture_default_str();
    sweep_k_cmd->add_option("--replicates", swk.replicates, "replicate count")
        ->capture_default_str();
    sweep_k_cmd->add_option("--k-list", swk.k_list, "e.g. 1..20 or 3,15,20")
        ->capture_default_str();
    sweep_k_cmd->add_option("--threads", swk.threads, "worker threads");
    sweep_k_cmd->add_option("--out", swk.out_dir, "output directory")->capture_default_str();
    sweep_k_cmd->add_option("--stem", swk.stem, "output file stem");
    sweep_k_cmd->add_option("--format", swk.format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    swk.config.attach(sweep_k_cmd);

    SweepPriorArgs swp;
    CLI::App* sweep_prior_cmd =
        app.add_subcommand("sweep-prior", "average estimate per (a, base measure)");
    sweep_prior_cmd->add_option("scenario", swp.scenario, "scenario spec")->required();
    sweep_prior_cmd->add_option("--n", swp.n, "sample size")->capture_default_str();
    sweep_prior_cmd->add_option("--replicates", swp.replicates, "replicate count")
        ->capture_default_str();
    sweep_prior_cmd->add_option("--a-list", swp.a_list, "e.g. 0.05,5,10")
        ->capture_default_str();
    sweep_prior_cmd->add_option("--base-list", swp.base_list,
                                "semicolon-separated base measures, e.g. "
                                "\"normal:d=3:cov=identity;spherical:d=3:logsd=0.5\" "
                                "(default: standard normal)");
    sweep_prior_cmd->add_option("--threads", swp.threads, "worker threads");
    sweep_prior_cmd->add_option("--out", swp.out_dir, "output directory")
        ->capture_default_str();
    sweep_prior_cmd->add_option("--stem", swp.stem, "output file stem");
    sweep_prior_cmd->add_option("--format", swp.format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    swp.config.attach(sweep_prior_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (estimate->parsed()) return run_estimate(est);
        if (simulate->parsed()) return run_simulate(sim);
        if (sweep_k_cmd->parsed()) return run_sweep_k(swk);
        if (sweep_prior_cmd->parsed()) return run_sweep_prior(swp);
        std::cerr << "error: no subcommand\n";
        return exit_usage;
    } catch (const dpmi::usage_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const dpmi::degenerate_error& e) {
        std::cerr << "degeneracy: " << e.what() << '\n';
        return exit_degenerate;
    } catch (const dpmi::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
