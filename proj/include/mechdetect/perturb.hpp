#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mechdetect/mask.hpp"
#include "mechdetect/table.hpp"

namespace mechdetect {

enum class Mechanism { MCAR, MAR, MNAR };
enum class Tail { Lower, Upper };

std::string_view to_string(Mechanism m);
std::string_view to_string(Tail t);
/// Case-insensitive; throws InvalidArgument on unknown names.
Mechanism parse_mechanism(std::string_view text);
Tail parse_tail(std::string_view text);

struct MechanismSpec {
    Mechanism mechanism = Mechanism::MCAR;
    double error_rate = 0.1;
    std::size_t target_column = 0;
    /// MAR only; left empty, the highest-cardinality other column is used.
    std::optional<std::size_t> conditioning_column;
    Tail tail = Tail::Upper;
    std::uint64_t seed = 0;
};

struct PerturbationResult {
    Table perturbed;
    ErrorMask mask;
    /// The spec actually applied (MAR conditioning column resolved).
    MechanismSpec spec;
};

/// floor(rate * n). Products that land a rounding error below an integer
/// (0.29 * 100) count as that integer.
std::size_t error_budget(double rate, std::size_t n);

/// Non-target column with the most distinct present values; ties go to the
/// lowest index.
std::size_t default_conditioning_column(const Table& table, std::size_t target);

// Ascending row order of a column. Numeric cells order by value, categorical
// cells by category rank (frequency ascending, then name). Ties are broken by
// a per-row random key drawn from `seed`, so the order never depends on row
// position. Null cells come last.
std::vector<std::size_t> rank_rows(const Column& column, std::uint64_t seed);

PerturbationResult inject_mcar(const Table& table, const MechanismSpec& spec);
PerturbationResult inject_mar(const Table& table, const MechanismSpec& spec);
PerturbationResult inject_mnar(const Table& table, const MechanismSpec& spec);
/// Dispatches on spec.mechanism.
PerturbationResult inject(const Table& table, const MechanismSpec& spec);

} // namespace mechdetect
