#include "mechdetect/benchmark.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "mechdetect/csv.hpp"
#include "mechdetect/error.hpp"
#include "mechdetect/random.hpp"

namespace mechdetect {

void BenchmarkGrid::validate() const {
    if (datasets.empty() && !synthetic) throw InvalidArgument("grid has no datasets");
    if (synthetic && synthetic->count == 0) throw InvalidArgument("synthetic suite count must be >= 1");
    if (mechanisms.empty()) throw InvalidArgument("grid has no mechanisms");
    if (error_rates.empty()) throw InvalidArgument("grid has no error rates");
    for (double r : error_rates)
        if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("error rates must lie in (0, 1)");
    if (train_sources.empty()) throw InvalidArgument("grid has no train sources");
    if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
    bonferroni_threshold(alpha, 2);
    if (n_folds < 2) throw InvalidArgument("folds must be >= 2");
    gbdt.validate();
}

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

ColumnPolicy parse_column_policy(const std::string& s) {
    if (s == "all") return ColumnPolicy::All;
    if (s == "rotate") return ColumnPolicy::Rotate;
    throw InvalidArgument("column_policy must be 'all' or 'rotate'");
}

std::string format_rate(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", r);
    return buf;
}

} // namespace

BenchmarkGrid parse_grid(const Json& config, const std::filesystem::path& base_dir) {
    static const std::unordered_set<std::string> known = {
        "datasets", "synthetic", "mechanisms", "error_rates", "train_sources", "repetitions",
        "base_seed", "column_policy", "tail", "alpha", "folds", "gbdt", "workers"};
    if (!config.is_object()) throw InvalidArgument("grid config must be a JSON object");
    for (const auto& [key, value] : config.items())
        if (!known.contains(key)) throw InvalidArgument("unknown grid config key '" + key + "'");

    BenchmarkGrid grid;
    try {
        if (config.contains("datasets")) {
            for (const auto& d : config.at("datasets")) {
                CsvDatasetEntry entry;
                if (d.is_string()) {
                    entry.path = d.get<std::string>();
                } else {
                    entry.path = d.at("path").get<std::string>();
                    entry.name = get_or<std::string>(d, "name", "");
                    entry.exclude = get_or<std::vector<std::string>>(d, "exclude", {});
                }
                if (entry.path.is_relative() && !base_dir.empty()) entry.path = base_dir / entry.path;
                if (entry.name.empty()) entry.name = entry.path.stem().string();
                grid.datasets.push_back(std::move(entry));
            }
        }
        if (config.contains("synthetic")) {
            const auto& s = config.at("synthetic");
            SyntheticSuiteConfig sc;
            sc.count = get_or<std::size_t>(s, "count", sc.count);
            sc.rows = get_or<std::size_t>(s, "rows", sc.rows);
            sc.seed = get_or<std::uint64_t>(s, "seed", sc.seed);
            grid.synthetic = sc;
        }
        if (config.contains("mechanisms")) {
            grid.mechanisms.clear();
            for (const auto& m : config.at("mechanisms"))
                grid.mechanisms.push_back(parse_mechanism(m.get<std::string>()));
        }
        grid.error_rates = get_or(config, "error_rates", grid.error_rates);
        if (config.contains("train_sources")) {
            grid.train_sources.clear();
            for (const auto& s : config.at("train_sources"))
                grid.train_sources.push_back(parse_train_source(s.get<std::string>()));
        }
        grid.repetitions = get_or(config, "repetitions", grid.repetitions);
        grid.base_seed = get_or(config, "base_seed", grid.base_seed);
        grid.column_policy = parse_column_policy(get_or<std::string>(config, "column_policy", "all"));
        grid.tail = parse_tail(get_or<std::string>(config, "tail", "upper"));
        grid.alpha = get_or(config, "alpha", grid.alpha);
        grid.n_folds = get_or(config, "folds", grid.n_folds);
        grid.workers = get_or(config, "workers", grid.workers);
        if (config.contains("gbdt")) {
            const auto& g = config.at("gbdt");
            grid.gbdt.n_iterations = get_or(g, "n_iterations", grid.gbdt.n_iterations);
            grid.gbdt.learning_rate = get_or(g, "learning_rate", grid.gbdt.learning_rate);
            grid.gbdt.max_leaves = get_or(g, "max_leaves", grid.gbdt.max_leaves);
            grid.gbdt.min_samples_leaf = get_or(g, "min_samples_leaf", grid.gbdt.min_samples_leaf);
            grid.gbdt.max_bins = get_or(g, "max_bins", grid.gbdt.max_bins);
            grid.gbdt.l2_regularization = get_or(g, "l2_regularization", grid.gbdt.l2_regularization);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("grid config: ") + e.what());
    }
    grid.validate();
    return grid;
}

BenchmarkGrid load_grid(const std::filesystem::path& path) {
    Json config;
    try {
        config = Json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("grid config '" + path.string() + "': " + e.what());
    }
    return parse_grid(config, path.parent_path());
}

std::vector<BenchDataset> materialize_datasets(const BenchmarkGrid& grid) {
    std::vector<BenchDataset> out;
    for (const auto& entry : grid.datasets) {
        Table table = load_csv(entry.path);
        for (const auto& name : entry.exclude) {
            const auto j = table.find_column(name);
            if (!j)
                throw InvalidArgument("dataset '" + entry.name + "': excluded column '" + name +
                                      "' not found");
            table = drop_column(table, *j);
        }
        out.push_back(BenchDataset{entry.name, std::move(table), {}, {}});
    }
    if (grid.synthetic) {
        for (auto& s : make_synthetic_suite(grid.synthetic->count, grid.synthetic->rows,
                                            grid.synthetic->seed))
            out.push_back(BenchDataset{std::move(s.name), std::move(s.table), {}, std::move(s.roles)});
    }
    for (std::size_t d = 0; d < out.size(); ++d) {
        auto& ds = out[d];
        const std::size_t n_cols = ds.table.n_cols();
        if (grid.column_policy == ColumnPolicy::Rotate) {
            ds.target_columns = {d % n_cols};
        } else {
            for (std::size_t j = 0; j < n_cols; ++j) ds.target_columns.push_back(j);
        }
    }
    return out;
}

CellSeeds derive_cell_seeds(std::uint64_t base_seed, const std::string& dataset,
                            const std::string& column, Mechanism mechanism, double rate,
                            TrainSource source, std::size_t repetition) {
    const std::string shared = dataset + '\x1f' + column + '\x1f' + std::string(to_string(mechanism)) +
                               '\x1f' + format_rate(rate) + '\x1f' + std::to_string(repetition);
    CellSeeds seeds;
    seeds.injection = derive_seed(base_seed, fnv1a64("inject\x1f" + shared));
    seeds.cell = derive_seed(base_seed,
                             fnv1a64("cell\x1f" + shared + '\x1f' + std::string(to_string(source))));
    return seeds;
}

CellOutcome run_cell(const BenchDataset& dataset, const CellCoord& coord, const BenchmarkGrid& grid) {
    CellOutcome out;
    out.coord = coord;
    const double rate = grid.error_rates.at(coord.rate_index);
    const std::string& column_name = dataset.table.column(coord.column).name();
    out.seeds = derive_cell_seeds(grid.base_seed, dataset.name, column_name, coord.mechanism, rate,
                                  coord.source, coord.repetition);
    const Json seeds_extra{{"cell", out.seeds.cell}, {"injection", out.seeds.injection}};
    try {
        MechanismSpec spec;
        spec.mechanism = coord.mechanism;
        spec.error_rate = rate;
        spec.target_column = coord.column;
        spec.tail = grid.tail;
        spec.seed = out.seeds.injection;
        const auto perturbation = inject(dataset.table, spec);

        DetectionConfig config;
        config.alpha = grid.alpha;
        config.train_source = coord.source;
        config.cv.n_folds = grid.n_folds;
        config.gbdt = grid.gbdt;
        apply_run_seed(config, out.seeds.cell);
        out.result = detect_mechanism(dataset.table, perturbation.perturbed, perturbation.mask,
                                      coord.column, config);

        out.row = detection_record(*out.result, {dataset.name, coord.mechanism, rate});
        out.row["seeds"].update(seeds_extra);
        out.row["repetition"] = coord.repetition;
        out.row["status"] = "ok";
    } catch (const std::exception& e) {
        out.rejected = true;
        out.reason = e.what();
        out.result.reset();
        out.row = Json{{"dataset", dataset.name},
                       {"column", column_name},
                       {"true_mechanism", std::string(to_string(coord.mechanism))},
                       {"error_rate", rate},
                       {"train_source", std::string(to_string(coord.source))},
                       {"seeds", seeds_extra},
                       {"repetition", coord.repetition},
                       {"status", "rejected"},
                       {"reason", out.reason}};
    }
    return out;
}

std::vector<CellCoord> enumerate_cells(const BenchmarkGrid& grid,
                                       const std::vector<BenchDataset>& datasets) {
    std::vector<CellCoord> cells;
    for (std::size_t d = 0; d < datasets.size(); ++d)
        for (std::size_t j : datasets[d].target_columns)
            for (Mechanism m : grid.mechanisms)
                for (std::size_t r = 0; r < grid.error_rates.size(); ++r)
                    for (TrainSource s : grid.train_sources)
                        for (std::size_t rep = 0; rep < grid.repetitions; ++rep)
                            cells.push_back(CellCoord{d, j, m, r, s, rep});
    return cells;
}

std::vector<SummaryRow> summarize(const BenchmarkGrid& grid, const std::vector<CellOutcome>& cells) {
    std::vector<SummaryRow> rows;
    for (Mechanism m : grid.mechanisms) {
        for (std::size_t r = 0; r < grid.error_rates.size(); ++r) {
            for (TrainSource s : grid.train_sources) {
                std::vector<std::pair<Mechanism, Mechanism>> pairs;
                for (const auto& c : cells) {
                    if (c.rejected || c.coord.mechanism != m || c.coord.rate_index != r ||
                        c.coord.source != s)
                        continue;
                    pairs.emplace_back(c.result->mechanism, m);
                }
                SummaryRow row;
                row.mechanism = m;
                row.error_rate = grid.error_rates[r];
                row.source = s;
                row.n = pairs.size();
                if (!pairs.empty()) {
                    row.accuracy = detection_accuracy(pairs);
                    row.ci_half_width = 1.96 * std::sqrt(row.accuracy * (1.0 - row.accuracy) /
                                                         static_cast<double>(row.n));
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

BenchmarkReport run_benchmark(const BenchmarkGrid& grid, const std::vector<BenchDataset>& datasets,
                              const ProgressCallback& progress) {
    grid.validate();
    const auto coords = enumerate_cells(grid, datasets);

    std::unordered_set<std::uint64_t> seen;
    for (const auto& c : coords) {
        const auto& ds = datasets[c.dataset];
        const auto seeds =
            derive_cell_seeds(grid.base_seed, ds.name, ds.table.column(c.column).name(), c.mechanism,
                              grid.error_rates[c.rate_index], c.source, c.repetition);
        if (!seen.insert(seeds.cell).second)
            throw Error("cell seed collision in grid (duplicate dataset or column names?)");
    }

    BenchmarkReport report;
    report.cells.resize(coords.size());
    std::size_t workers = grid.workers ? grid.workers : std::thread::hardware_concurrency();
    workers = std::max<std::size_t>(1, std::min(workers, coords.size()));

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= coords.size()) return;
            report.cells[i] = run_cell(datasets[coords[i].dataset], coords[i], grid);
            const std::size_t finished = done.fetch_add(1) + 1;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(finished, coords.size());
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    for (const auto& c : report.cells) report.rejected += c.rejected ? 1 : 0;
    report.summary = summarize(grid, report.cells);
    return report;
}

std::string BenchmarkReport::report_jsonl() const {
    std::string out;
    for (const auto& c : cells)
        if (!c.rejected) out += to_json_line(c.row);
    return out;
}

std::string BenchmarkReport::rejected_jsonl() const {
    std::string out;
    for (const auto& c : cells)
        if (c.rejected) out += to_json_line(c.row);
    return out;
}

std::string BenchmarkReport::summary_csv() const {
    std::string out = "mechanism,error_rate,train_source,accuracy,ci_half_width,n\n";
    char buf[160];
    for (const auto& r : summary) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6f,%.6f,%zu\n",
                      std::string(to_string(r.mechanism)).c_str(), format_rate(r.error_rate).c_str(),
                      std::string(to_string(r.source)).c_str(), r.accuracy, r.ci_half_width, r.n);
        out += buf;
    }
    return out;
}

void write_report(const BenchmarkReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
    write_text_file(out_dir / "report.jsonl", report.report_jsonl());
    write_text_file(out_dir / "rejected.jsonl", report.rejected_jsonl());
    write_text_file(out_dir / "summary.csv", report.summary_csv());
}

} // namespace mechdetect
