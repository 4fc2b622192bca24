#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mechdetect/csv.hpp"
#include "mechdetect/error.hpp"
#include "mechdetect/mask.hpp"
#include "mechdetect/perturb.hpp"
#include "mechdetect/random.hpp"
#include "mechdetect/table.hpp"

using namespace mechdetect;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    return fs::temp_directory_path() / ("mechdetect_test_data_" + name);
}

Table three_columns() {
    return Table({Column::numeric("a", {1, 2, 3}), Column::numeric("b", {4, 5, 6}),
                  Column::numeric("c", {7, 8, 9})});
}

} // namespace

TEST(Table, RejectsMismatchedLengthsAndDuplicateNames) {
    EXPECT_THROW(Table({Column::numeric("a", {1, 2}), Column::numeric("b", {1})}), InvalidArgument);
    EXPECT_THROW(Table({Column::numeric("a", {1}), Column::numeric("a", {2})}), InvalidArgument);
    EXPECT_THROW(Table(std::vector<Column>{}), InvalidArgument);
}

TEST(Table, NullsAreTrackedOutOfBand) {
    const auto c = Column::numeric("x", {1.0, 0.0, 3.0}, {1, 0, 1});
    EXPECT_FALSE(c.is_null(0));
    EXPECT_TRUE(c.is_null(1));
    EXPECT_EQ(c.null_count(), 1u);
    // A real zero next to a null is still a value.
    const auto z = Column::numeric("x", {0.0, 0.0}, {1, 0});
    EXPECT_FALSE(z.is_null(0));
    EXPECT_EQ(z.distinct_count(), 1u);
}

TEST(Table, CategoricalFromStringsKeepsFirstAppearanceOrder) {
    std::vector<std::optional<std::string>> cells{"y", "x", std::nullopt, "y"};
    const auto c = Column::categorical_from_strings("k", cells);
    ASSERT_EQ(c.dictionary().size(), 2u);
    EXPECT_EQ(c.dictionary()[0], "y");
    EXPECT_EQ(c.category(1), "x");
    EXPECT_TRUE(c.is_null(2));
    EXPECT_EQ(c.distinct_count(), 2u);
}

TEST(DropColumn, RemovesOneColumnKeepingOrder) {
    const auto t = drop_column(three_columns(), 1);
    ASSERT_EQ(t.n_cols(), 2u);
    EXPECT_EQ(t.column_names(), (std::vector<std::string>{"a", "c"}));
    EXPECT_EQ(t.n_rows(), 3u);
}

TEST(DropColumn, FiveColumnsGiveFourForEveryIndex) {
    std::vector<Column> cols;
    for (int k = 0; k < 5; ++k) cols.push_back(Column::numeric("c" + std::to_string(k), {1, 2, 3, 4}));
    const Table t(cols);
    for (std::size_t j = 0; j < 5; ++j) {
        const auto d = drop_column(t, j);
        EXPECT_EQ(d.n_cols(), 4u);
        EXPECT_EQ(d.n_rows(), 4u);
        EXPECT_FALSE(d.find_column("c" + std::to_string(j)).has_value());
    }
}

TEST(DropColumn, RepeatedDropsNeverReorderAndStopAtOneColumn) {
    Table t = three_columns();
    t = drop_column(t, 2);
    EXPECT_EQ(t.column_names(), (std::vector<std::string>{"a", "b"}));
    t = drop_column(t, 0);
    EXPECT_EQ(t.column_names(), (std::vector<std::string>{"b"}));
    EXPECT_THROW(drop_column(t, 0), InvalidArgument);
    EXPECT_THROW(drop_column(three_columns(), 3), InvalidArgument);
}

TEST(Csv, InfersNumericAndCategorical) {
    const auto t = parse_csv("a,b\n1,x\n2,y\n");
    EXPECT_EQ(t.n_rows(), 2u);
    EXPECT_TRUE(t.column(0).is_numeric());
    EXPECT_TRUE(t.column(1).is_categorical());
    EXPECT_EQ(t.column(0).number(1), 2.0);
}

TEST(Csv, OneUnparseableCellMakesColumnCategorical) {
    const auto t = parse_csv("v\n1\n2\nthree\n");
    EXPECT_TRUE(t.column(0).is_categorical());
    EXPECT_EQ(t.column(0).distinct_count(), 3u);
}

TEST(Csv, RaggedRowIsAParseError) {
    EXPECT_THROW(parse_csv("a,b\n1,x,EXTRA\n"), ParseError);
    EXPECT_THROW(parse_csv("a,b\n1\n"), ParseError);
}

TEST(Csv, QuotingAndEmptyFields) {
    const auto t = parse_csv("name,n\r\n\"Smith, J\",1\r\n\"say \"\"hi\"\"\",\r\n,3\r\n");
    ASSERT_EQ(t.n_rows(), 3u);
    EXPECT_EQ(t.column(0).category(0), "Smith, J");
    EXPECT_EQ(t.column(0).category(1), "say \"hi\"");
    EXPECT_TRUE(t.column(0).is_null(2));
    EXPECT_TRUE(t.column(1).is_numeric());
    EXPECT_TRUE(t.column(1).is_null(1));
}

TEST(Csv, HintsOverrideInference) {
    const auto t = parse_csv("zip,v\n01234,1\n98765,2\n", {{"zip", ColumnKind::Categorical}});
    EXPECT_TRUE(t.column(0).is_categorical());
    EXPECT_EQ(t.column(0).category(0), "01234");
    EXPECT_THROW(parse_csv("a\nx\n", {{"a", ColumnKind::Numeric}}), ParseError);
    EXPECT_THROW(parse_csv("a\n1\n", {{"nope", ColumnKind::Numeric}}), InvalidArgument);
}

TEST(Csv, HeaderErrors) {
    EXPECT_THROW(parse_csv(""), ParseError);
    EXPECT_THROW(parse_csv("a,a\n1,2\n"), ParseError);
}

TEST(Csv, MissingFileIsAnIoError) {
    EXPECT_THROW(load_csv(temp_path("does_not_exist.csv")), IoError);
}

TEST(Csv, WriterOutputLoadsBackIdentically) {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 1 + rng.uniform_index(30);
        std::vector<double> x(n);
        std::vector<std::uint8_t> valid(n);
        std::vector<std::optional<std::string>> cats(n);
        const std::vector<std::string> names{"plain", "with,comma", "with \"quote\"", " lead", "1e5x"};
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal() * std::pow(10.0, static_cast<double>(rng.uniform_index(12)) - 6.0);
            valid[i] = rng.uniform01() < 0.8;
            if (rng.uniform01() < 0.85) cats[i] = names[rng.uniform_index(names.size())];
        }
        valid[0] = 1;  // keep the column numeric-inferable
        cats[0] = "plain";
        const Table t({Column::numeric("x", x, valid), Column::categorical_from_strings("c", cats)});
        const Table back = parse_csv(to_csv(t));
        EXPECT_EQ(back, t);
        EXPECT_EQ(to_csv(back), to_csv(t));
    }
}

TEST(Mask, FromMissingMarksExactlyTheNullCells) {
    const Table clean({Column::numeric("a", {1, 2}), Column::numeric("b", {3, 4})});
    EXPECT_EQ(mask_from_missing(clean).column_count(0) + mask_from_missing(clean).column_count(1), 0u);

    const Table one({Column::numeric("a", {1, 2}), Column::numeric("b", {3, 4}, {0, 1})});
    const auto m = mask_from_missing(one);
    EXPECT_EQ(m.at(0, 1), 1);
    EXPECT_EQ(m.at(0, 0) + m.at(1, 0) + m.at(1, 1), 0);
}

TEST(Mask, FromMissingIsExhaustivelyCorrectOnSmallTables) {
    // Every null pattern of a 3 x 2 table.
    for (unsigned pattern = 0; pattern < 64; ++pattern) {
        std::vector<std::uint8_t> va(3), vb(3);
        for (int i = 0; i < 3; ++i) {
            va[i] = !((pattern >> i) & 1);
            vb[i] = !((pattern >> (i + 3)) & 1);
        }
        const Table t({Column::numeric("a", {1, 2, 3}, va), Column::numeric("b", {1, 2, 3}, vb)});
        const auto m = mask_from_missing(t);
        for (int i = 0; i < 3; ++i) {
            EXPECT_EQ(m.at(i, 0), (pattern >> i) & 1);
            EXPECT_EQ(m.at(i, 1), (pattern >> (i + 3)) & 1);
        }
    }
}

TEST(Mask, ColumnExtraction) {
    const ErrorMask zeros(4, 3);
    EXPECT_EQ(mask_column(zeros, 1).error_count(), 0u);
    EXPECT_FALSE(mask_column(zeros, 1).has_both_classes());

    const std::vector<std::uint8_t> col{1, 0, 1, 1};
    const auto m = zeros.with_column(2, col);
    const auto c = mask_column(m, 2);
    EXPECT_EQ(c.bits, col);
    EXPECT_EQ(c.source_column, 2u);
    EXPECT_EQ(mask_column(m, 0).error_count(), 0u);
    EXPECT_THROW(mask_column(m, 3), InvalidArgument);
}

TEST(Mask, McarOnHundredRowsGivesTenErrors) {
    std::vector<double> v(100);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    const Table t({Column::numeric("a", v), Column::numeric("b", v)});
    MechanismSpec spec;
    spec.error_rate = 0.1;
    spec.target_column = 1;
    spec.seed = 5;
    const auto r = inject(t, spec);
    EXPECT_EQ(mask_column(r.mask, 1).error_count(), 10u);
    EXPECT_EQ(mask_from_missing(r.perturbed), r.mask);
}

TEST(Mask, RoundTripsThroughFiles) {
    Rng rng(3);
    std::vector<std::uint8_t> bits(10 * 3);
    for (auto& b : bits) b = rng.uniform01() < 0.3;
    const ErrorMask m(10, 3, bits);
    const auto path = temp_path("mask.txt");
    save_mask(m, path);
    EXPECT_EQ(load_mask(path), m);

    const ErrorMask zeros(5, 2);
    save_mask(zeros, path);
    EXPECT_EQ(load_mask(path), zeros);
    fs::remove(path);
}

TEST(Mask, ParseErrors) {
    std::string text = "10 3\n";
    for (int i = 0; i < 9; ++i) text += "0 1 0\n";
    EXPECT_THROW(parse_mask(text), ParseError);
    EXPECT_THROW(parse_mask("2 2\n0 1\n0 2\n"), ParseError);
    EXPECT_THROW(parse_mask("2 2\n0 1\n0\n"), ParseError);
    EXPECT_THROW(load_mask(temp_path("missing_mask.txt")), IoError);
    EXPECT_THROW(ErrorMask(2, 2, {0, 1, 0}), InvalidArgument);
}
