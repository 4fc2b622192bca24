#include "mechdetect/perturb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "mechdetect/error.hpp"
#include "mechdetect/random.hpp"

namespace mechdetect {

std::string_view to_string(Mechanism m) {
    switch (m) {
    case Mechanism::MCAR: return "MCAR";
    case Mechanism::MAR: return "MAR";
    case Mechanism::MNAR: return "MNAR";
    }
    return "?";
}

std::string_view to_string(Tail t) { return t == Tail::Lower ? "lower" : "upper"; }

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

Mechanism parse_mechanism(std::string_view text) {
    const auto s = lower(text);
    if (s == "mcar") return Mechanism::MCAR;
    if (s == "mar") return Mechanism::MAR;
    if (s == "mnar") return Mechanism::MNAR;
    throw InvalidArgument("unknown mechanism '" + std::string(text) + "'");
}

Tail parse_tail(std::string_view text) {
    const auto s = lower(text);
    if (s == "lower") return Tail::Lower;
    if (s == "upper") return Tail::Upper;
    throw InvalidArgument("unknown tail '" + std::string(text) + "'");
}

std::size_t error_budget(double rate, std::size_t n) {
    return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

std::size_t default_conditioning_column(const Table& table, std::size_t target) {
    if (table.n_cols() < 2) throw InvalidArgument("MAR needs a second column to condition on");
    std::size_t best = target == 0 ? 1 : 0;
    std::size_t best_distinct = 0;
    bool first = true;
    for (std::size_t k = 0; k < table.n_cols(); ++k) {
        if (k == target) continue;
        const auto d = table.column(k).distinct_count();
        if (first || d > best_distinct) {
            best = k;
            best_distinct = d;
            first = false;
        }
    }
    return best;
}

std::vector<std::size_t> rank_rows(const Column& column, std::uint64_t seed) {
    const std::size_t n = column.size();
    Rng rng(seed);
    std::vector<std::uint64_t> tie_key(n);
    for (auto& k : tie_key) k = rng.next_u64();

    std::vector<double> primary(n, 0.0);
    if (column.is_numeric()) {
        for (std::size_t i = 0; i < n; ++i)
            if (!column.is_null(i)) primary[i] = column.number(i);
    } else {
        const auto dict = column.dictionary();
        std::vector<std::size_t> freq(dict.size(), 0);
        for (std::size_t i = 0; i < n; ++i)
            if (!column.is_null(i)) ++freq[column.code(i)];
        std::vector<std::uint32_t> order(dict.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (freq[a] != freq[b]) return freq[a] < freq[b];
            return dict[a] < dict[b];
        });
        std::vector<double> rank_of(dict.size(), 0.0);
        for (std::size_t r = 0; r < order.size(); ++r) rank_of[order[r]] = static_cast<double>(r);
        for (std::size_t i = 0; i < n; ++i)
            if (!column.is_null(i)) primary[i] = rank_of[column.code(i)];
    }

    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        const bool na = column.is_null(a), nb = column.is_null(b);
        if (na != nb) return nb;
        if (!na && primary[a] != primary[b]) return primary[a] < primary[b];
        if (tie_key[a] != tie_key[b]) return tie_key[a] < tie_key[b];
        return a < b;
    });
    return rows;
}

namespace {

void check_common(const Table& table, const MechanismSpec& spec, Mechanism expected) {
    if (spec.mechanism != expected)
        throw InvalidArgument("spec mechanism " + std::string(to_string(spec.mechanism)) +
                              " passed to the " + std::string(to_string(expected)) + " injector");
    if (!(spec.error_rate > 0.0 && spec.error_rate < 1.0))
        throw InvalidArgument("error rate must lie in (0, 1)");
    if (spec.target_column >= table.n_cols())
        throw InvalidArgument("target column index out of range");
    if (expected != Mechanism::MAR && spec.conditioning_column)
        throw InvalidArgument("a conditioning column is only meaningful for MAR");
    if (error_budget(spec.error_rate, table.n_rows()) == 0)
        throw InvalidArgument("error rate " + std::to_string(spec.error_rate) + " yields no errors on " +
                              std::to_string(table.n_rows()) + " rows");
}

PerturbationResult apply(const Table& table, const MechanismSpec& spec,
                         std::span<const std::size_t> erased_rows) {
    std::vector<std::uint8_t> erase(table.n_rows(), 0);
    for (auto r : erased_rows) erase[r] = 1;
    const std::size_t j = spec.target_column;
    Table perturbed = table.with_column(j, table.column(j).with_erased(erase));
    ErrorMask mask = ErrorMask(table.n_rows(), table.n_cols()).with_column(j, erase);
    return PerturbationResult{std::move(perturbed), std::move(mask), spec};
}

std::vector<std::size_t> tail_rows(const Column& ranked_by, Tail tail, std::size_t budget,
                                   std::uint64_t seed) {
    auto order = rank_rows(ranked_by, seed);
    if (tail == Tail::Lower) return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(budget)};
    // Nulls rank last; the upper tail starts at the largest present value.
    std::size_t present = order.size();
    while (present > 0 && ranked_by.is_null(order[present - 1])) --present;
    std::vector<std::size_t> rows;
    rows.reserve(budget);
    for (std::size_t i = present; i > 0 && rows.size() < budget; --i) rows.push_back(order[i - 1]);
    for (std::size_t i = present; i < order.size() && rows.size() < budget; ++i) rows.push_back(order[i]);
    return rows;
}

} // namespace

PerturbationResult inject_mcar(const Table& table, const MechanismSpec& spec) {
    check_common(table, spec, Mechanism::MCAR);
    const std::size_t budget = error_budget(spec.error_rate, table.n_rows());
    std::vector<std::size_t> rows(table.n_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng(spec.seed);
    // Partial Fisher-Yates: the first `budget` slots are a uniform sample.
    for (std::size_t i = 0; i < budget; ++i) {
        const auto k = i + static_cast<std::size_t>(rng.uniform_index(rows.size() - i));
        std::swap(rows[i], rows[k]);
    }
    rows.resize(budget);
    return apply(table, spec, rows);
}

PerturbationResult inject_mar(const Table& table, const MechanismSpec& spec) {
    check_common(table, spec, Mechanism::MAR);
    MechanismSpec resolved = spec;
    if (!resolved.conditioning_column)
        resolved.conditioning_column = default_conditioning_column(table, spec.target_column);
    const std::size_t k = *resolved.conditioning_column;
    if (k >= table.n_cols()) throw InvalidArgument("conditioning column index out of range");
    if (k == spec.target_column)
        throw InvalidArgument("MAR conditioning column must differ from the target column");
    const std::size_t budget = error_budget(spec.error_rate, table.n_rows());
    auto rows = tail_rows(table.column(k), spec.tail, budget, spec.seed);
    return apply(table, resolved, rows);
}

PerturbationResult inject_mnar(const Table& table, const MechanismSpec& spec) {
    check_common(table, spec, Mechanism::MNAR);
    const std::size_t budget = error_budget(spec.error_rate, table.n_rows());
    auto rows = tail_rows(table.column(spec.target_column), spec.tail, budget, spec.seed);
    return apply(table, spec, rows);
}

PerturbationResult inject(const Table& table, const MechanismSpec& spec) {
    switch (spec.mechanism) {
    case Mechanism::MCAR: return inject_mcar(table, spec);
    case Mechanism::MAR: return inject_mar(table, spec);
    case Mechanism::MNAR: return inject_mnar(table, spec);
    }
    throw InvalidArgument("unknown mechanism");
}

} // namespace mechdetect
