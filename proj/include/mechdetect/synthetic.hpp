#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mechdetect/table.hpp"

namespace mechdetect {

enum class ColumnRole {
    IndependentNumeric,    // independent of every other column
    CorrelatedNumeric,     // member of a correlated pair
    IndependentCategorical,
    DependentCategorical,  // coarsened, noisy copy of a correlated column
};

std::string_view to_string(ColumnRole r);

inline bool is_independent(ColumnRole r) {
    return r == ColumnRole::IndependentNumeric || r == ColumnRole::IndependentCategorical;
}

struct SyntheticDataset {
    std::string name;
    Table table;
    std::vector<ColumnRole> roles; // one per column
};

// Deterministic mixed-type table of `n_rows` x 8 columns: independent
// numerics (normal, uniform, log-normal, exponential), one or two Gaussian
// pairs with correlation in [0.5, 0.8], one independent categorical with
// skewed frequencies, and optionally a categorical derived from a pair
// member. Column order is shuffled by the seed.
SyntheticDataset make_synthetic_dataset(std::uint64_t seed, std::size_t n_rows,
                                        std::string name = {});

/// `count` datasets named synthetic_00, synthetic_01, ... with seeds
/// derived from `base_seed`.
std::vector<SyntheticDataset> make_synthetic_suite(std::size_t count, std::size_t n_rows,
                                                   std::uint64_t base_seed);

} // namespace mechdetect
