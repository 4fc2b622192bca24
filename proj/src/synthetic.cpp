#include "mechdetect/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mechdetect/random.hpp"

namespace mechdetect {

std::string_view to_string(ColumnRole r) {
    switch (r) {
    case ColumnRole::IndependentNumeric: return "independent_numeric";
    case ColumnRole::CorrelatedNumeric: return "correlated_numeric";
    case ColumnRole::IndependentCategorical: return "independent_categorical";
    case ColumnRole::DependentCategorical: return "dependent_categorical";
    }
    return "?";
}

namespace {

constexpr std::size_t kColumns = 8;

struct Draft {
    Column column;
    ColumnRole role;
};

std::vector<double> independent_values(Rng& rng, std::size_t n, int family) {
    std::vector<double> v(n);
    for (auto& x : v) {
        switch (family) {
        case 0: x = rng.normal(); break;
        case 1: x = rng.uniform(-3.0, 3.0); break;
        case 2: x = std::exp(0.5 * rng.normal()); break;
        default: {
            double u = rng.uniform01();
            while (u <= 0.0) u = rng.uniform01();
            x = -std::log(u);
        }
        }
    }
    return v;
}

Column skewed_categorical(Rng& rng, std::size_t n, std::string name) {
    const std::size_t k = 3 + static_cast<std::size_t>(rng.uniform_index(6));
    std::vector<double> cumulative(k);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        total += 1.0 / static_cast<double>(c + 1);
        cumulative[c] = total;
    }
    std::vector<std::string> dict(k);
    for (std::size_t c = 0; c < k; ++c) dict[c] = "c" + std::to_string(c);
    std::vector<std::uint32_t> codes(n);
    for (auto& code : codes) {
        const double u = rng.uniform01() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        code = static_cast<std::uint32_t>(std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative.begin()), k - 1));
    }
    return Column::categorical(std::move(name), std::move(dict), std::move(codes));
}

// Quartile bucket of `source`, replaced by a uniform bucket with probability 0.3.
Column bucketed_categorical(Rng& rng, const std::vector<double>& source, std::string name) {
    std::vector<double> sorted = source;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = source.size();
    const double q1 = sorted[n / 4], q2 = sorted[n / 2], q3 = sorted[3 * n / 4];
    std::vector<std::string> dict = {"low", "mid_low", "mid_high", "high"};
    std::vector<std::uint32_t> codes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = source[i];
        std::uint32_t b = x <= q1 ? 0 : x <= q2 ? 1 : x <= q3 ? 2 : 3;
        if (rng.uniform01() < 0.3) b = static_cast<std::uint32_t>(rng.uniform_index(4));
        codes[i] = b;
    }
    return Column::categorical(std::move(name), std::move(dict), std::move(codes));
}

} // namespace

SyntheticDataset make_synthetic_dataset(std::uint64_t seed, std::size_t n_rows, std::string name) {
    Rng rng(seed);
    const std::size_t n_pairs = 1 + static_cast<std::size_t>(rng.uniform_index(2));
    const bool dependent_cat = rng.uniform_index(2) == 1;
    const std::size_t n_independent = kColumns - 2 * n_pairs - 1 - (dependent_cat ? 1 : 0);

    std::vector<Draft> drafts;
    std::vector<double> first_pair_member;
    for (std::size_t p = 0; p < n_pairs; ++p) {
        const double rho = rng.uniform(0.5, 0.8);
        std::vector<double> a(n_rows), b(n_rows);
        for (std::size_t i = 0; i < n_rows; ++i) {
            a[i] = rng.normal();
            b[i] = rho * a[i] + std::sqrt(1.0 - rho * rho) * rng.normal();
        }
        if (p == 0) first_pair_member = a;
        drafts.push_back({Column::numeric("pair" + std::to_string(p) + "_a", std::move(a)),
                          ColumnRole::CorrelatedNumeric});
        drafts.push_back({Column::numeric("pair" + std::to_string(p) + "_b", std::move(b)),
                          ColumnRole::CorrelatedNumeric});
    }
    for (std::size_t k = 0; k < n_independent; ++k) {
        const int family = static_cast<int>(rng.uniform_index(4));
        drafts.push_back({Column::numeric("indep" + std::to_string(k),
                                          independent_values(rng, n_rows, family)),
                          ColumnRole::IndependentNumeric});
    }
    drafts.push_back({skewed_categorical(rng, n_rows, "cat_indep"), ColumnRole::IndependentCategorical});
    if (dependent_cat)
        drafts.push_back({bucketed_categorical(rng, first_pair_member, "cat_dep"),
                          ColumnRole::DependentCategorical});

    std::vector<std::size_t> order(drafts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));

    std::vector<Column> columns;
    std::vector<ColumnRole> roles;
    for (auto idx : order) {
        columns.push_back(drafts[idx].column);
        roles.push_back(drafts[idx].role);
    }
    if (name.empty()) name = "synthetic";
    return SyntheticDataset{std::move(name), Table(std::move(columns)), std::move(roles)};
}

std::vector<SyntheticDataset> make_synthetic_suite(std::size_t count, std::size_t n_rows,
                                                   std::uint64_t base_seed) {
    std::vector<SyntheticDataset> suite;
    suite.reserve(count);
    for (std::size_t d = 0; d < count; ++d) {
        char name[32];
        std::snprintf(name, sizeof name, "synthetic_%02zu", d);
        suite.push_back(make_synthetic_dataset(derive_seed(base_seed, d), n_rows, name));
    }
    return suite;
}

} // namespace mechdetect
