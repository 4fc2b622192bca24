#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mechdetect/error.hpp"
#include "mechdetect/mask.hpp"
#include "mechdetect/perturb.hpp"
#include "mechdetect/random.hpp"
#include "mechdetect/synthetic.hpp"

using namespace mechdetect;

namespace {

std::vector<double> iota_values(std::size_t n, double start = 0.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = start + static_cast<double>(i);
    return v;
}

MechanismSpec make_spec(Mechanism m, double rate, std::size_t j, std::uint64_t seed = 1,
                        Tail tail = Tail::Upper) {
    MechanismSpec s;
    s.mechanism = m;
    s.error_rate = rate;
    s.target_column = j;
    s.tail = tail;
    s.seed = seed;
    return s;
}

std::vector<std::size_t> erased_rows(const ErrorMask& mask, std::size_t j) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < mask.rows(); ++i)
        if (mask.at(i, j)) rows.push_back(i);
    return rows;
}

} // namespace

TEST(ErrorBudget, FloorRule) {
    EXPECT_EQ(error_budget(0.1, 100), 10u);
    EXPECT_EQ(error_budget(0.29, 100), 29u);
    EXPECT_EQ(error_budget(0.05, 10), 0u);
    EXPECT_EQ(error_budget(0.25, 2000), 500u);
    EXPECT_EQ(error_budget(0.999, 7), 6u);
}

TEST(Mcar, ExactCountAndDeterminism) {
    const Table t({Column::numeric("a", iota_values(100)), Column::numeric("b", iota_values(100))});
    const auto r1 = inject_mcar(t, make_spec(Mechanism::MCAR, 0.1, 0, 9));
    const auto r2 = inject_mcar(t, make_spec(Mechanism::MCAR, 0.1, 0, 9));
    EXPECT_EQ(r1.mask.column_count(0), 10u);
    EXPECT_EQ(r1.mask.column_count(1), 0u);
    EXPECT_EQ(r1.mask, r2.mask);
    EXPECT_EQ(r1.perturbed, r2.perturbed);
    EXPECT_EQ(r1.perturbed.column(0).null_count(), 10u);
    const auto r3 = inject_mcar(t, make_spec(Mechanism::MCAR, 0.1, 0, 10));
    EXPECT_NE(r1.mask, r3.mask);
}

TEST(Mcar, ZeroBudgetIsRejected) {
    const Table t({Column::numeric("a", iota_values(10)), Column::numeric("b", iota_values(10))});
    EXPECT_THROW(inject_mcar(t, make_spec(Mechanism::MCAR, 0.05, 0)), InvalidArgument);
}

TEST(Inject, ValidatesSpec) {
    const Table t({Column::numeric("a", iota_values(20)), Column::numeric("b", iota_values(20))});
    EXPECT_THROW(inject(t, make_spec(Mechanism::MCAR, 0.0, 0)), InvalidArgument);
    EXPECT_THROW(inject(t, make_spec(Mechanism::MCAR, 1.0, 0)), InvalidArgument);
    EXPECT_THROW(inject(t, make_spec(Mechanism::MCAR, 1.5, 0)), InvalidArgument);
    EXPECT_THROW(inject(t, make_spec(Mechanism::MNAR, 0.5, 2)), InvalidArgument);
    auto s = make_spec(Mechanism::MNAR, 0.5, 0);
    s.conditioning_column = 1;
    EXPECT_THROW(inject(t, s), InvalidArgument);
    auto m = make_spec(Mechanism::MAR, 0.5, 0);
    m.conditioning_column = 0;
    EXPECT_THROW(inject(t, m), InvalidArgument);
    EXPECT_THROW(inject_mar(t, make_spec(Mechanism::MNAR, 0.5, 0)), InvalidArgument);
    const Table single({Column::numeric("a", iota_values(20))});
    EXPECT_THROW(inject(single, make_spec(Mechanism::MAR, 0.5, 0)), InvalidArgument);
}

TEST(Inject, CardinalityForEveryMechanismAndRate) {
    const auto ds = make_synthetic_dataset(4, 333);
    for (Mechanism m : {Mechanism::MCAR, Mechanism::MAR, Mechanism::MNAR})
        for (double r : {0.1, 0.25, 0.5, 0.75, 0.9})
            for (std::size_t j = 0; j < ds.table.n_cols(); ++j) {
                const auto res = inject(ds.table, make_spec(m, r, j, 17));
                EXPECT_EQ(res.mask.column_count(j), error_budget(r, 333));
                EXPECT_EQ(mask_from_missing(res.perturbed), res.mask);
            }
}

TEST(Mcar, IndependentOfABalancedBinaryFeature) {
    // Errors landing in the "1" half follow a hypergeometric law with mean
    // budget/2; the average over repetitions must be within 3 sigma of it.
    const std::size_t n = 200, budget = 50, reps = 1000;
    std::vector<double> half(n);
    for (std::size_t i = 0; i < n; ++i) half[i] = i < n / 2 ? 0.0 : 1.0;
    const Table t({Column::numeric("x", iota_values(n)), Column::numeric("half", half)});
    double total = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const auto r = inject_mcar(t, make_spec(Mechanism::MCAR, 0.25, 0, rep));
        std::size_t upper = 0;
        for (std::size_t i = n / 2; i < n; ++i) upper += r.mask.at(i, 0);
        total += static_cast<double>(upper) / static_cast<double>(budget);
    }
    const double mean_fraction = total / static_cast<double>(reps);
    const double N = n, K = n / 2.0, k = budget;
    const double var_count = k * (K / N) * (1 - K / N) * (N - k) / (N - 1);
    const double sigma = std::sqrt(var_count) / k / std::sqrt(static_cast<double>(reps));
    EXPECT_LT(std::abs(mean_fraction - 0.5), 3 * sigma);
}

TEST(Mar, LowerTailOfRowIndexColumn) {
    const Table t({Column::numeric("j", {5, 3, 8, 1, 9, 2, 7, 4, 6, 0}),
                   Column::numeric("k", iota_values(10))});
    auto s = make_spec(Mechanism::MAR, 0.5, 0, 1, Tail::Lower);
    s.conditioning_column = 1;
    const auto r = inject_mar(t, s);
    EXPECT_EQ(erased_rows(r.mask, 0), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    EXPECT_EQ(r.spec.conditioning_column, std::optional<std::size_t>(1));
}

TEST(Mar, DefaultConditioningColumnHasMostDistinctValues) {
    const Table t({Column::numeric("a", {1, 1, 2, 2}), Column::numeric("b", {1, 2, 3, 4}),
                   Column::numeric("c", {1, 2, 3, 3}), Column::numeric("d", {4, 3, 2, 1})});
    EXPECT_EQ(default_conditioning_column(t, 0), 1u);
    EXPECT_EQ(default_conditioning_column(t, 1), 3u);
    const auto r = inject_mar(t, make_spec(Mechanism::MAR, 0.5, 0));
    EXPECT_EQ(r.spec.conditioning_column, std::optional<std::size_t>(1));
}

TEST(Mar, CategoryTailDependsOnTheConditioningColumnOnly) {
    // Names starting with "P" are the rarest categories, so the lower tail
    // of the conditioning column picks exactly their rows.
    const std::vector<std::string> heroes{"Bruce", "Peter", "Clark", "Diana", "Pam",   "Bruce", "Clark",
                                          "Diana", "Peter", "Bruce", "Clark", "Diana", "Pam",   "Bruce",
                                          "Clark", "Diana", "Bruce", "Clark", "Diana", "Diana"};
    std::vector<std::optional<std::string>> cells(heroes.begin(), heroes.end());
    std::vector<double> quests(heroes.size());
    Rng rng(2);
    for (auto& q : quests) q = static_cast<double>(rng.uniform_index(20));
    const Table t({Column::categorical_from_strings("hero", cells), Column::numeric("quests", quests)});

    auto s = make_spec(Mechanism::MAR, 0.2, 1, 3, Tail::Lower);
    s.conditioning_column = 0;
    const auto r = inject_mar(t, s);
    for (std::size_t i = 0; i < heroes.size(); ++i)
        EXPECT_EQ(r.mask.at(i, 1), heroes[i][0] == 'P' ? 1 : 0) << heroes[i];
}

TEST(Mar, MaskInvariantUnderPermutationOfTargetValues) {
    const auto ds = make_synthetic_dataset(21, 500);
    Rng rng(8);
    for (std::size_t j = 0; j < ds.table.n_cols(); ++j) {
        std::vector<std::size_t> perm(ds.table.n_rows());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        rng.shuffle(std::span(perm));
        const Table permuted =
            ds.table.with_column(j, ds.table.column(j).take(perm));
        for (double rate : {0.1, 0.5, 0.9}) {
            const auto spec = make_spec(Mechanism::MAR, rate, j, 99);
            EXPECT_EQ(inject_mar(ds.table, spec).mask, inject_mar(permuted, spec).mask);
        }
    }
}

TEST(Mnar, UpperTailOfOneToTen) {
    const Table t({Column::numeric("j", {4, 9, 1, 10, 2, 8, 3, 7, 5, 6}),
                   Column::numeric("k", iota_values(10))});
    const auto r = inject_mnar(t, make_spec(Mechanism::MNAR, 0.3, 0));
    std::vector<double> erased;
    for (auto i : erased_rows(r.mask, 0)) erased.push_back(t.column(0).number(i));
    std::sort(erased.begin(), erased.end());
    EXPECT_EQ(erased, (std::vector<double>{8, 9, 10}));
}

TEST(Mnar, QuestsAboveFiveAreErased) {
    const std::vector<double> quests{3, 9, 2, 5, 12, 7, 1, 4, 8, 6};
    const Table t({Column::numeric("quests", quests), Column::numeric("id", iota_values(10))});
    const auto r = inject_mnar(t, make_spec(Mechanism::MNAR, 0.5, 0));
    for (std::size_t i = 0; i < quests.size(); ++i) EXPECT_EQ(r.mask.at(i, 0), quests[i] > 5 ? 1 : 0);
}

TEST(Mnar, ConstantColumnUsesSeededTieBreak) {
    const Table t({Column::numeric("c", std::vector<double>(50, 3.0)),
                   Column::numeric("k", iota_values(50))});
    const auto a = inject_mnar(t, make_spec(Mechanism::MNAR, 0.3, 0, 5));
    const auto b = inject_mnar(t, make_spec(Mechanism::MNAR, 0.3, 0, 5));
    const auto c = inject_mnar(t, make_spec(Mechanism::MNAR, 0.3, 0, 6));
    EXPECT_EQ(a.mask.column_count(0), 15u);
    EXPECT_EQ(a.mask, b.mask);
    EXPECT_NE(a.mask, c.mask);
}

TEST(Mnar, ErasedValuesDominateRetainedOnMonotoneColumns) {
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 20 + rng.uniform_index(200);
        auto v = iota_values(n);
        for (auto& x : v) x = std::exp(x / 50.0);  // strictly increasing transform
        rng.shuffle(std::span(v));
        const Table t({Column::numeric("j", v), Column::numeric("k", iota_values(n))});
        const double rate = 0.05 + 0.9 * rng.uniform01();
        if (error_budget(rate, n) == 0) continue;
        for (Tail tail : {Tail::Upper, Tail::Lower}) {
            const auto r = inject_mnar(t, make_spec(Mechanism::MNAR, rate, 0, rep, tail));
            double min_erased = INFINITY, max_erased = -INFINITY;
            double min_kept = INFINITY, max_kept = -INFINITY;
            for (std::size_t i = 0; i < n; ++i) {
                if (r.mask.at(i, 0)) {
                    min_erased = std::min(min_erased, v[i]);
                    max_erased = std::max(max_erased, v[i]);
                } else {
                    min_kept = std::min(min_kept, v[i]);
                    max_kept = std::max(max_kept, v[i]);
                }
            }
            if (tail == Tail::Upper) EXPECT_GT(min_erased, max_kept);
            else EXPECT_LT(max_erased, min_kept);
        }
    }
}

TEST(RankRows, NullsRankLastAndCategoriesByFrequency) {
    const auto num = Column::numeric("x", {3, 0, 1, 2}, {1, 0, 1, 1});
    EXPECT_EQ(rank_rows(num, 1), (std::vector<std::size_t>{2, 3, 0, 1}));

    std::vector<std::optional<std::string>> cells{"b", "a", "b", "c", "a", "b"};
    const auto cat = Column::categorical_from_strings("k", cells);
    const auto order = rank_rows(cat, 1);
    // c (1) < a (2) < b (3).
    EXPECT_EQ(order[0], 3u);
    EXPECT_TRUE((order[1] == 1 && order[2] == 4) || (order[1] == 4 && order[2] == 1));
}

TEST(Inject, UpperTailSkipsExistingNulls) {
    const Table t({Column::numeric("j", {1, 2, 3, 4, 0, 0}, {1, 1, 1, 1, 0, 0}),
                   Column::numeric("k", iota_values(6))});
    const auto r = inject_mnar(t, make_spec(Mechanism::MNAR, 0.34, 0));
    EXPECT_EQ(erased_rows(r.mask, 0), (std::vector<std::size_t>{2, 3}));
}

TEST(Synthetic, SuiteIsDeterministicAndWellFormed) {
    const auto a = make_synthetic_suite(3, 200, 42);
    const auto b = make_synthetic_suite(3, 200, 42);
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t d = 0; d < a.size(); ++d) {
        EXPECT_EQ(a[d].table, b[d].table);
        EXPECT_EQ(a[d].table.n_cols(), 8u);
        EXPECT_EQ(a[d].table.n_rows(), 200u);
        EXPECT_EQ(a[d].roles.size(), 8u);
        EXPECT_TRUE(std::any_of(a[d].roles.begin(), a[d].roles.end(), is_independent));
    }
    EXPECT_EQ(a[0].name, "synthetic_00");
    EXPECT_FALSE(a[0].table == a[1].table);
}
