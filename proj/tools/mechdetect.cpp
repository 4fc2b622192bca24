#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mechdetect/benchmark.hpp"
#include "mechdetect/csv.hpp"
#include "mechdetect/detect.hpp"
#include "mechdetect/error.hpp"
#include "mechdetect/mask.hpp"
#include "mechdetect/perturb.hpp"
#include "mechdetect/record.hpp"
#include "mechdetect/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mechdetect;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitUnsuitable = 3;

struct InjectArgs {
    std::string input;
    std::string column;
    std::string mechanism;
    double rate = 0.0;
    std::string cond_column;
    std::string tail = "upper";
    std::uint64_t seed = 0;
    std::string out_prefix;
};

struct DetectArgs {
    std::string clean;
    std::string perturbed;
    std::string mask;
    std::string column;
    double alpha = 0.05;
    std::string train_source = "clean";
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    std::string dataset;
};

struct BenchmarkArgs {
    std::string config;
    std::string out_dir;
    std::vector<std::string> datasets;
    std::size_t synthetic = 0;
    std::size_t rows = 2000;
    std::vector<std::string> mechanisms;
    std::vector<double> rates;
    std::vector<std::string> sources;
    std::size_t repetitions = 0;
    std::optional<std::uint64_t> seed;
    std::string column_policy;
    std::size_t workers = 0;
    bool quiet = false;
};

struct SynthArgs {
    std::size_t rows = 2000;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_inject(const InjectArgs& a) {
    const Table table = load_csv(a.input);
    MechanismSpec spec;
    spec.mechanism = parse_mechanism(a.mechanism);
    spec.error_rate = a.rate;
    spec.target_column = table.column_index(a.column);
    if (!a.cond_column.empty()) spec.conditioning_column = table.column_index(a.cond_column);
    spec.tail = parse_tail(a.tail);
    spec.seed = a.seed;

    const auto result = inject(table, spec);
    save_csv(result.perturbed, a.out_prefix + ".perturbed.csv");
    save_mask(result.mask, a.out_prefix + ".mask.txt");
    write_text_file(a.out_prefix + ".spec.json",
                    perturbation_record(result, table, a.input).dump(2) + "\n");
    return 0;
}

int cmd_detect(const DetectArgs& a) {
    DetectionConfig config;
    config.alpha = a.alpha;
    config.train_source = parse_train_source(a.train_source);
    config.cv.n_folds = a.folds;
    apply_run_seed(config, a.seed);

    if (a.clean.empty() && config.train_source == TrainSource::Clean)
        throw InvalidArgument("--clean is required unless --train-source=perturbed");
    const Table perturbed = load_csv(a.perturbed);
    const Table clean = a.clean.empty() ? perturbed : load_csv(a.clean);
    const ErrorMask mask = load_mask(a.mask);
    const std::size_t j = perturbed.column_index(a.column);

    const auto result = detect_mechanism(clean, perturbed, mask, j, config);
    const std::string name =
        a.dataset.empty() ? fs::path(a.clean.empty() ? a.perturbed : a.clean).stem().string()
                          : a.dataset;
    std::cout << to_json_line(detection_record(result, {name, std::nullopt, std::nullopt}));
    return 0;
}

int cmd_benchmark(const BenchmarkArgs& a) {
    BenchmarkGrid grid = a.config.empty() ? BenchmarkGrid{} : load_grid(a.config);
    for (const auto& d : a.datasets) {
        CsvDatasetEntry entry;
        entry.path = d;
        entry.name = entry.path.stem().string();
        grid.datasets.push_back(std::move(entry));
    }
    if (a.synthetic > 0) grid.synthetic = SyntheticSuiteConfig{a.synthetic, a.rows, a.seed.value_or(0)};
    if (!a.mechanisms.empty()) {
        grid.mechanisms.clear();
        for (const auto& m : a.mechanisms) grid.mechanisms.push_back(parse_mechanism(m));
    }
    if (!a.rates.empty()) grid.error_rates = a.rates;
    if (!a.sources.empty()) {
        grid.train_sources.clear();
        for (const auto& s : a.sources) grid.train_sources.push_back(parse_train_source(s));
    }
    if (a.repetitions > 0) grid.repetitions = a.repetitions;
    if (a.seed) grid.base_seed = *a.seed;
    if (a.column_policy == "all") grid.column_policy = ColumnPolicy::All;
    else if (a.column_policy == "rotate") grid.column_policy = ColumnPolicy::Rotate;
    else if (!a.column_policy.empty()) throw InvalidArgument("--column-policy must be all or rotate");
    if (a.workers > 0) grid.workers = a.workers;
    grid.validate();

    const auto datasets = materialize_datasets(grid);
    ProgressCallback progress;
    if (!a.quiet) {
        progress = [](std::size_t done, std::size_t total) {
            if (done == total || done % 25 == 0) std::fprintf(stderr, "\r%zu/%zu cells", done, total);
            if (done == total) std::fprintf(stderr, "\n");
        };
    }
    const auto report = run_benchmark(grid, datasets, progress);
    write_report(report, a.out_dir);

    for (const auto& c : report.cells)
        if (c.rejected)
            std::fprintf(stderr, "rejected: %s/%s %s r=%g: %s\n", datasets[c.coord.dataset].name.c_str(),
                         datasets[c.coord.dataset].table.column(c.coord.column).name().c_str(),
                         std::string(to_string(c.coord.mechanism)).c_str(),
                         grid.error_rates[c.coord.rate_index], c.reason.c_str());
    std::fprintf(stderr, "%zu cells, %zu rejected\n", report.cells.size(), report.rejected);
    return 0;
}

int cmd_synth(const SynthArgs& a) {
    save_csv(make_synthetic_dataset(a.seed, a.rows).table, a.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Error-mechanism detection for tabular data"};
    app.require_subcommand(1);

    InjectArgs inject_args;
    auto* inject_cmd = app.add_subcommand("inject", "Inject errors into one column of a CSV");
    inject_cmd->add_option("--input", inject_args.input, "Clean CSV")->required();
    inject_cmd->add_option("--column", inject_args.column, "Target column name")->required();
    inject_cmd->add_option("--mechanism", inject_args.mechanism, "mcar, mar or mnar")->required();
    inject_cmd->add_option("--rate", inject_args.rate, "Error rate in (0, 1)")->required();
    inject_cmd->add_option("--cond-column", inject_args.cond_column, "MAR conditioning column");
    inject_cmd->add_option("--tail", inject_args.tail, "lower or upper");
    inject_cmd->add_option("--seed", inject_args.seed, "Injection seed")->required();
    inject_cmd->add_option("--out-prefix", inject_args.out_prefix, "Output path prefix")->required();

    DetectArgs detect_args;
    auto* detect_cmd = app.add_subcommand("detect", "Classify the error mechanism of one column");
    detect_cmd->add_option("--clean", detect_args.clean, "Clean CSV");
    detect_cmd->add_option("--perturbed", detect_args.perturbed, "Perturbed CSV")->required();
    detect_cmd->add_option("--mask", detect_args.mask, "Error mask file")->required();
    detect_cmd->add_option("--column", detect_args.column, "Column name")->required();
    detect_cmd->add_option("--alpha", detect_args.alpha, "Family-wise significance level")->capture_default_str();
    detect_cmd->add_option("--train-source", detect_args.train_source, "clean or perturbed");
    detect_cmd->add_option("--folds", detect_args.folds, "Cross-validation folds")->capture_default_str();
    detect_cmd->add_option("--seed", detect_args.seed, "Run seed")->capture_default_str();
    detect_cmd->add_option("--dataset", detect_args.dataset, "Dataset name in the record");

    BenchmarkArgs bench_args;
    auto* bench_cmd = app.add_subcommand("benchmark", "Run injection and detection over a grid");
    bench_cmd->add_option("--config", bench_args.config, "Grid config JSON");
    bench_cmd->add_option("--out-dir", bench_args.out_dir, "Report directory")->required();
    bench_cmd->add_option("--dataset", bench_args.datasets, "Extra CSV dataset");
    bench_cmd->add_option("--synthetic", bench_args.synthetic, "Number of generated datasets");
    bench_cmd->add_option("--rows", bench_args.rows, "Rows per generated dataset");
    bench_cmd->add_option("--mechanisms", bench_args.mechanisms, "Comma-separated mechanisms")->delimiter(',');
    bench_cmd->add_option("--rates", bench_args.rates, "Comma-separated error rates")->delimiter(',');
    bench_cmd->add_option("--train-sources", bench_args.sources, "Comma-separated: clean, perturbed")->delimiter(',');
    bench_cmd->add_option("--repetitions", bench_args.repetitions, "Repetitions per cell");
    bench_cmd->add_option("--seed", bench_args.seed, "Base seed");
    bench_cmd->add_option("--column-policy", bench_args.column_policy, "all or rotate");
    bench_cmd->add_option("--workers", bench_args.workers, "Worker threads, 0 for all cores");
    bench_cmd->add_flag("--quiet", bench_args.quiet, "No progress output");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Write one generated dataset as CSV");
    synth_cmd->add_option("--rows", synth_args.rows, "Row count")->capture_default_str();
    synth_cmd->add_option("--seed", synth_args.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--out", synth_args.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*inject_cmd) return cmd_inject(inject_args);
        if (*detect_cmd) return cmd_detect(detect_args);
        if (*bench_cmd) return cmd_benchmark(bench_args);
        if (*synth_cmd) return cmd_synth(synth_args);
    } catch (const UnsuitableData& e) {
        std::fprintf(stderr, "mechdetect: unsuitable data: %s\n", e.what());
        return kExitUnsuitable;
    } catch (const Error& e) {
        std::fprintf(stderr, "mechdetect: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "mechdetect: internal error: %s\n", e.what());
        return 1;
    }
    return kExitUsage;
}
