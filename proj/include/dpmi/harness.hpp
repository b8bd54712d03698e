#pragma once

// Monte Carlo experiment engine: r-replicate averages and MSEs, k-sweeps,
// prior sweeps, and the mean-vs-midhinge summary comparison. Replicates are
// embarrassingly parallel; every replicate derives its RNG streams from the
// master seed and its own index, so output is bit-identical no matter how
// many workers run.

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "mi.hpp"
#include "stats.hpp"

namespace dpmi {

// Stream tags for the per-replicate seed derivation (recorded in manifests).
inline constexpr std::uint64_t seed_tag_data = 0xda7aull;
inline constexpr std::uint64_t seed_tag_estimator = 0xe571ull;

struct ExperimentPlan {
    ScenarioSpec scenario;
    std::size_t n = 50;
    std::size_t r = 200;
    EstimatorConfig config;
    std::optional<unsigned> baseline_k;  // also run knn_mi_plain at this k
    unsigned threads = 0;                // 0 = DPMI_THREADS env var or hardware

    void validate() const {
        if (r < 1) throw usage_error("plan: r >= 1 required");
        if (scenario.dim < 2) throw usage_error("plan: scenario dimension >= 2 required");
        if (n < static_cast<std::size_t>(config.k) + 1)
            throw usage_error("plan: n >= k+1 required");
        config.validate();
    }
};

struct ReplicateRecord {
    std::size_t index = 0;
    std::uint64_t data_seed = 0;
    std::uint64_t estimator_seed = 0;
    double estimate = 0.0;           // midhinge of MI^{pos+}
    SummaryTable summaries;          // all four Table-1 variants
    double baseline = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
    ExperimentPlan plan;
    std::vector<ReplicateRecord> replicates;  // ordered by index
    double average = 0.0;
    double mse = std::numeric_limits<double>::quiet_NaN();
    double baseline_average = std::numeric_limits<double>::quiet_NaN();
    double baseline_mse = std::numeric_limits<double>::quiet_NaN();
    double runtime_seconds = 0.0;
};

namespace detail {

inline unsigned resolve_thread_count(unsigned requested, std::size_t jobs) {
    unsigned t = requested;
    if (t == 0) {
        if (const char* env = std::getenv("DPMI_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v >= 1) t = static_cast<unsigned>(v);
        }
    }
    if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(t, jobs));
}

inline ReplicateRecord run_replicate(const ExperimentPlan& plan, std::size_t i) {
    ReplicateRecord rec;
    rec.index = i;
    rec.data_seed = derive_seed(plan.config.seed, seed_tag_data, i);
    rec.estimator_seed = derive_seed(plan.config.seed, seed_tag_estimator, i);

    std::mt19937_64 data_rng(rec.data_seed);
    const Matrix data = sample_scenario(plan.scenario, plan.n, data_rng);

    EstimatorConfig cfg = plan.config;
    cfg.seed = rec.estimator_seed;
    const MIPosteriorSample sample = estimate_mi(data, cfg);
    rec.estimate = sample.point_estimate();
    rec.summaries = summarize(sample);
    if (plan.baseline_k)
        rec.baseline = knn_mi_plain(data, *plan.baseline_k, cfg.epsilon_floor);
    return rec;
}

// Runs fn(i) for i in [0, jobs) across the resolved worker count. Failures
// abort the whole batch; the first one observed is rethrown with context.
template <typename Fn>
inline void parallel_for(std::size_t jobs, unsigned threads, Fn&& fn) {
    const unsigned t = resolve_thread_count(threads, jobs);
    if (t <= 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned w = 0; w < t; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline double mse_against(const std::vector<double>& estimates, double truth) {
    double acc = 0.0;
    for (double e : estimates) {
        const double dlt = e - truth;
        acc += dlt * dlt;
    }
    return acc / static_cast<double>(estimates.size());
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
    plan.validate();
    const auto t0 = std::chrono::steady_clock::now();

    ExperimentResult result;
    result.plan = plan;
    result.replicates.resize(plan.r);
    detail::parallel_for(plan.r, plan.threads, [&](std::size_t i) {
        try {
            result.replicates[i] = detail::run_replicate(plan, i);
        } catch (const std::exception& e) {
            // Abort the cell; report which replicate's seed went bad.
            throw data_error("replicate " + std::to_string(i) + " (data seed " +
                             std::to_string(derive_seed(plan.config.seed, seed_tag_data, i)) +
                             ") failed: " + e.what());
        }
    });

    std::vector<double> estimates(plan.r), baselines;
    for (std::size_t i = 0; i < plan.r; ++i) estimates[i] = result.replicates[i].estimate;
    result.average = mean_of(estimates);
    if (plan.scenario.true_mi) {
        result.mse = detail::mse_against(estimates, *plan.scenario.true_mi);
    }
    if (plan.baseline_k) {
        baselines.resize(plan.r);
        for (std::size_t i = 0; i < plan.r; ++i) baselines[i] = result.replicates[i].baseline;
        result.baseline_average = mean_of(baselines);
        if (plan.scenario.true_mi)
            result.baseline_mse = detail::mse_against(baselines, *plan.scenario.true_mi);
    }
    result.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// ---- k sweep (Fig. 1 protocol) ---------------------------------------------
// Every k reuses the same per-replicate datasets (the data seeds depend only
// on the master seed and replicate index), so the sweep is a paired
// comparison and the k trend is not drowned in sampling noise.

struct KSweepCell {
    unsigned k = 0;
    ExperimentResult result;
};

inline std::vector<KSweepCell> sweep_k(const ScenarioSpec& scenario, std::size_t n,
                                       const std::vector<unsigned>& k_list, std::size_t r,
                                       EstimatorConfig config, unsigned threads = 0) {
    if (k_list.empty()) throw usage_error("sweep_k: empty k list");
    for (unsigned k : k_list)
        if (k > config.N - 1) throw usage_error("sweep_k: k exceeds N-1");
    std::vector<KSweepCell> cells;
    cells.reserve(k_list.size());
    for (unsigned k : k_list) {
        ExperimentPlan plan;
        plan.scenario = scenario;
        plan.n = n;
        plan.r = r;
        plan.config = config;
        plan.config.k = k;
        plan.threads = threads;
        cells.push_back({k, run_experiment(plan)});
    }
    return cells;
}

// ---- prior sweep (Table 2 protocol) ----------------------------------------

struct PriorSweepCell {
    double a = 0.0;
    std::string base_label;
    ExperimentResult result;
};

inline std::vector<PriorSweepCell> sweep_prior(const ScenarioSpec& scenario, std::size_t n,
                                               const std::vector<double>& a_list,
                                               const std::vector<BaseMeasure>& base_list,
                                               std::size_t r, EstimatorConfig config,
                                               unsigned threads = 0) {
    if (a_list.empty() || base_list.empty())
        throw usage_error("sweep_prior: empty sweep axis");
    for (const BaseMeasure& base : base_list)
        if (base.dim != scenario.dim)
            throw usage_error("sweep_prior: base measure dimension mismatch for " +
                              format_scenario(base));
    std::vector<PriorSweepCell> cells;
    cells.reserve(a_list.size() * base_list.size());
    for (double a : a_list) {
        for (const BaseMeasure& base : base_list) {
            ExperimentPlan plan;
            plan.scenario = scenario;
            plan.n = n;
            plan.r = r;
            plan.config = config;
            plan.config.a = a;
            plan.config.prior_base = base;
            plan.threads = threads;
            cells.push_back({a, format_scenario(base), run_experiment(plan)});
        }
    }
    return cells;
}

// ---- mean vs midhinge comparison (Table 1 protocol) ------------------------

struct SummaryComparison {
    // Index order: mean(pos), midhinge(pos), mean(pos+), midhinge(pos+).
    static constexpr std::size_t variant_count = 4;
    std::array<std::string, variant_count> names = {
        "mean_pos", "midhinge_pos", "mean_pos_plus", "midhinge_pos_plus"};
    std::array<double, variant_count> average{};
    std::array<double, variant_count> mse{};
    ExperimentResult base;  // the underlying per-replicate records
};

inline SummaryComparison compare_summaries(const ScenarioSpec& scenario, std::size_t n,
                                           std::size_t r, EstimatorConfig config,
                                           unsigned threads = 0) {
    ExperimentPlan plan;
    plan.scenario = scenario;
    plan.n = n;
    plan.r = r;
    plan.config = config;
    plan.threads = threads;
    SummaryComparison out;
    out.base = run_experiment(plan);

    std::array<std::vector<double>, SummaryComparison::variant_count> columns;
    for (auto& c : columns) c.reserve(r);
    for (const ReplicateRecord& rec : out.base.replicates) {
        columns[0].push_back(rec.summaries.mean_pos);
        columns[1].push_back(rec.summaries.midhinge_pos);
        columns[2].push_back(rec.summaries.mean_pos_plus);
        columns[3].push_back(rec.summaries.midhinge_pos_plus);
    }
    for (std::size_t v = 0; v < SummaryComparison::variant_count; ++v) {
        out.average[v] = mean_of(columns[v]);
        if (scenario.true_mi)
            out.mse[v] = detail::mse_against(columns[v], *scenario.true_mi);
        else
            out.mse[v] = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// ---- structured output ------------------------------------------------------

namespace detail {

inline std::string csv_number(double x) {
    if (std::isnan(x)) return "";
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace detail

// One row per cell per replicate.
inline void write_raw_csv(const std::vector<ExperimentResult>& results, std::ostream& os) {
    os << "scenario,n,a,k,atoms,draws,replicate,data_seed,estimator_seed,"
          "estimate,mean_pos,midhinge_pos,mean_pos_plus,baseline\n";
    for (const ExperimentResult& result : results) {
        for (const ReplicateRecord& rec : result.replicates) {
            os << format_scenario(result.plan.scenario) << ',' << result.plan.n << ','
               << detail::csv_number(result.plan.config.a) << ',' << result.plan.config.k
               << ',' << result.plan.config.N << ',' << result.plan.config.ell << ','
               << rec.index << ',' << rec.data_seed << ',' << rec.estimator_seed << ','
               << detail::csv_number(rec.estimate) << ','
               << detail::csv_number(rec.summaries.mean_pos) << ','
               << detail::csv_number(rec.summaries.midhinge_pos) << ','
               << detail::csv_number(rec.summaries.mean_pos_plus) << ','
               << detail::csv_number(rec.baseline) << '\n';
        }
    }
}

inline void write_summary_csv(const std::vector<ExperimentResult>& results, std::ostream& os) {
    os << "scenario,n,a,k,atoms,draws,replicates,true_mi,average,mse,"
          "baseline_average,baseline_mse,runtime_seconds\n";
    for (const ExperimentResult& r : results) {
        os << format_scenario(r.plan.scenario) << ',' << r.plan.n << ','
           << detail::csv_number(r.plan.config.a) << ',' << r.plan.config.k << ','
           << r.plan.config.N << ',' << r.plan.config.ell << ',' << r.plan.r << ','
           << (r.plan.scenario.true_mi ? detail::csv_number(*r.plan.scenario.true_mi) : "")
           << ',' << detail::csv_number(r.average) << ',' << detail::csv_number(r.mse) << ','
           << detail::csv_number(r.baseline_average) << ','
           << detail::csv_number(r.baseline_mse) << ','
           << detail::csv_number(r.runtime_seconds) << '\n';
    }
}

inline nlohmann::json config_to_json(const EstimatorConfig& c) {
    nlohmann::json j{
        {"a", c.a},
        {"k", c.k},
        {"atoms", c.N},
        {"draws", c.ell},
        {"jitter_scale", c.jitter_scale},
        {"epsilon_floor", c.epsilon_floor},
        {"quartile_method", "linear_interpolation"},
        {"seed", c.seed},
        {"marginal_mode",
         c.marginal_mode == MarginalMode::Projected ? "projected" : "independent"},
    };
    if (c.prior_base) j["prior_base"] = format_scenario(*c.prior_base);
    return j;
}

inline nlohmann::json manifest_json(const ExperimentResult& result) {
    const ExperimentPlan& plan = result.plan;
    nlohmann::json j{
        {"version", version_string},
        {"scenario", format_scenario(plan.scenario)},
        {"n", plan.n},
        {"replicates", plan.r},
        {"config", config_to_json(plan.config)},
        {"seed_derivation",
         {{"rule", "splitmix64 chain over (master_seed, tag, replicate_index)"},
          {"master_seed", plan.config.seed},
          {"data_tag", seed_tag_data},
          {"estimator_tag", seed_tag_estimator}}},
        {"average", result.average},
        {"runtime_seconds", result.runtime_seconds},
    };
    if (plan.scenario.true_mi) j["true_mi"] = *plan.scenario.true_mi;
    if (!std::isnan(result.mse)) j["mse"] = result.mse;
    if (plan.baseline_k) {
        j["baseline_k"] = *plan.baseline_k;
        j["baseline_average"] = result.baseline_average;
        if (!std::isnan(result.baseline_mse)) j["baseline_mse"] = result.baseline_mse;
    }
    return j;
}

inline void write_prior_sweep_csv(const std::vector<PriorSweepCell>& cells, std::ostream& os) {
    os << "a,base,scenario,n,replicates,average,mse\n";
    for (const PriorSweepCell& c : cells) {
        os << detail::csv_number(c.a) << ',' << c.base_label << ','
           << format_scenario(c.result.plan.scenario) << ',' << c.result.plan.n << ','
           << c.result.plan.r << ',' << detail::csv_number(c.result.average) << ','
           << detail::csv_number(c.result.mse) << '\n';
    }
}

inline void write_experiment_files(const std::vector<ExperimentResult>& results,
                                   const std::string& directory,
                                   const std::string& stem) {
    if (results.empty()) throw usage_error("write_experiment_files: no results");
    const std::string raw_path = directory + "/" + stem + "_raw.csv";
    const std::string summary_path = directory + "/" + stem + "_summary.csv";
    const std::string manifest_path = directory + "/" + stem + "_manifest.json";
    std::ofstream raw(raw_path);
    if (!raw) throw data_error("cannot write " + raw_path);
    write_raw_csv(results, raw);
    std::ofstream summary(summary_path);
    if (!summary) throw data_error("cannot write " + summary_path);
    write_summary_csv(results, summary);
    std::ofstream manifest(manifest_path);
    if (!manifest) throw data_error("cannot write " + manifest_path);
    nlohmann::json cells = nlohmann::json::array();
    for (const ExperimentResult& r : results) cells.push_back(manifest_json(r));
    manifest << (cells.size() == 1 ? cells.front() : cells).dump(2) << '\n';
}

}  // namespace dpmi
