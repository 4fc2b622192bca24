#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mechdetect/detect.hpp"
#include "mechdetect/perturb.hpp"
#include "mechdetect/record.hpp"
#include "mechdetect/synthetic.hpp"
#include "mechdetect/table.hpp"

namespace mechdetect {

/// Which columns of a dataset are perturbed and tested.
enum class ColumnPolicy {
    All,    // every non-excluded column
    Rotate, // one column per dataset: dataset index modulo column count
};

struct CsvDatasetEntry {
    std::filesystem::path path;
    /// Defaults to the file stem.
    std::string name;
    /// Dropped before the run (e.g. a supervised-learning label).
    std::vector<std::string> exclude;
};

struct SyntheticSuiteConfig {
    std::size_t count = 30;
    std::size_t rows = 2000;
    std::uint64_t seed = 0;
};

struct BenchmarkGrid {
    std::vector<CsvDatasetEntry> datasets;
    std::optional<SyntheticSuiteConfig> synthetic;
    std::vector<Mechanism> mechanisms{Mechanism::MCAR, Mechanism::MAR, Mechanism::MNAR};
    std::vector<double> error_rates{0.1, 0.25, 0.5, 0.75, 0.9};
    std::vector<TrainSource> train_sources{TrainSource::Clean};
    std::size_t repetitions = 1;
    std::uint64_t base_seed = 0;
    ColumnPolicy column_policy = ColumnPolicy::All;
    Tail tail = Tail::Upper;
    double alpha = 0.05;
    std::size_t n_folds = 10;
    GbdtParams gbdt;
    /// Worker threads; 0 means hardware concurrency.
    std::size_t workers = 0;

    void validate() const;
};

// Grid config file: every BenchmarkGrid field under its snake_case name;
// datasets are paths or {"path", "name", "exclude"} objects, relative paths
// resolve against `base_dir`; "synthetic" is {"count", "rows", "seed"}.
BenchmarkGrid parse_grid(const Json& config, const std::filesystem::path& base_dir = {});
BenchmarkGrid load_grid(const std::filesystem::path& path);

struct BenchDataset {
    std::string name;
    Table table;
    /// Columns the grid perturbs.
    std::vector<std::size_t> target_columns;
    /// Filled for generated datasets.
    std::vector<ColumnRole> roles;
};

/// Loads CSV datasets and generates the synthetic suite, applying the column policy.
std::vector<BenchDataset> materialize_datasets(const BenchmarkGrid& grid);

struct CellCoord {
    std::size_t dataset = 0;
    std::size_t column = 0;
    Mechanism mechanism = Mechanism::MCAR;
    std::size_t rate_index = 0;
    TrainSource source = TrainSource::Clean;
    std::size_t repetition = 0;
};

struct CellSeeds {
    /// Identifies the cell; also the detection run seed.
    std::uint64_t cell = 0;
    /// Shared by the clean and perturbed variants of a cell so both see the same mask.
    std::uint64_t injection = 0;
};

/// Stable hash of the cell coordinates (dataset and column by name).
CellSeeds derive_cell_seeds(std::uint64_t base_seed, const std::string& dataset,
                            const std::string& column, Mechanism mechanism, double rate,
                            TrainSource source, std::size_t repetition);

struct CellOutcome {
    CellCoord coord;
    CellSeeds seeds;
    bool rejected = false;
    std::string reason;
    std::optional<DetectionResult> result;
    /// The report.jsonl row.
    Json row;
};

/// Injects and detects one grid cell.
CellOutcome run_cell(const BenchDataset& dataset, const CellCoord& coord, const BenchmarkGrid& grid);

/// All cells of the grid in report order: dataset, column, mechanism, rate,
/// source, repetition.
std::vector<CellCoord> enumerate_cells(const BenchmarkGrid& grid,
                                       const std::vector<BenchDataset>& datasets);

struct SummaryRow {
    Mechanism mechanism = Mechanism::MCAR;
    double error_rate = 0.0;
    TrainSource source = TrainSource::Clean;
    double accuracy = 0.0;
    /// 1.96 standard errors of the mean accuracy.
    double ci_half_width = 0.0;
    std::size_t n = 0;
};

struct BenchmarkReport {
    std::vector<CellOutcome> cells;
    std::vector<SummaryRow> summary;
    std::size_t rejected = 0;

    /// Rows of the completed cells.
    std::string report_jsonl() const;
    /// Rows of the rejected cells, with the reason.
    std::string rejected_jsonl() const;
    std::string summary_csv() const;
};

/// Per (mechanism, rate, source) accuracy over the non-rejected cells.
std::vector<SummaryRow> summarize(const BenchmarkGrid& grid, const std::vector<CellOutcome>& cells);

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

BenchmarkReport run_benchmark(const BenchmarkGrid& grid, const std::vector<BenchDataset>& datasets,
                              const ProgressCallback& progress = {});

/// Writes report.jsonl, rejected.jsonl and summary.csv into out_dir (created if needed).
void write_report(const BenchmarkReport& report, const std::filesystem::path& out_dir);

} // namespace mechdetect
