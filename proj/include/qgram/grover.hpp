#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "qgram/errors.hpp"
#include "qgram/lookup_table.hpp"
#include "qgram/state_vector.hpp"

namespace qgram {

/// Derived parameters of one search: register layout, rotation angle and the
/// optimal iteration count for a single match among 2^k buckets.
struct GroverPlan {
    int index_bits = 0;
    int value_bits = 0;
    int carry_index = 0;  // = index_bits + value_bits
    int total_qubits = 0; // = index_bits + value_bits + 1
    int iterations = 0;
    double theta = 0.0; // arcsin(2^(-k/2))

    QubitRange index_range() const { return {0, std::uint32_t(index_bits)}; }
    QubitRange value_range() const { return {std::uint32_t(index_bits), std::uint32_t(value_bits)}; }
};

/// Optimal Grover iteration count for one match in 2^index_bits buckets:
/// floor(pi / (4 arcsin(2^(-k/2)))). The epsilon keeps the k = 1 case, whose
/// ratio is exactly 1, from flooring to 0 under rounding.
inline int iteration_count(int index_bits)
{
    if (index_bits < 1 || index_bits > 30) {
        throw argument_error("iteration_count: index_bits out of range: " +
                             std::to_string(index_bits));
    }
    const double theta = std::asin(std::pow(2.0, -0.5 * index_bits));
    return int(std::floor(std::numbers::pi / (4.0 * theta) + 1e-9));
}

/// ceil(sqrt(num_entries)): the reported expected-lookup figure. Never drives
/// the circuit; iteration_count does.
inline std::uint64_t lookup_estimate(std::uint64_t num_entries)
{
    if (num_entries < 1) {
        throw argument_error("lookup_estimate: num_entries must be >= 1");
    }
    std::uint64_t r = std::uint64_t(std::ceil(std::sqrt(double(num_entries))));
    while (r > 0 && (r - 1) * (r - 1) >= num_entries) {
        --r;
    }
    while (r * r < num_entries) {
        ++r;
    }
    return r;
}

/// Success probability after m completed iterations on a single-match table:
/// sin^2((2m+1) arcsin(2^(-k/2))). The independent oracle for trace checks.
inline double analytic_probability(int index_bits, int completed_iterations)
{
    if (index_bits < 1 || index_bits > 30) {
        throw argument_error("analytic_probability: index_bits out of range");
    }
    if (completed_iterations < 0) {
        throw argument_error("analytic_probability: negative iteration count");
    }
    const double theta = std::asin(std::pow(2.0, -0.5 * index_bits));
    const double s = std::sin((2.0 * completed_iterations + 1.0) * theta);
    return s * s;
}

inline GroverPlan make_plan(int index_bits, int value_bits, int qubit_budget = default_qubit_budget)
{
    if (index_bits < 1 || value_bits < 1) {
        throw argument_error("make_plan: register widths must be >= 1");
    }
    GroverPlan plan;
    plan.index_bits = index_bits;
    plan.value_bits = value_bits;
    plan.carry_index = index_bits + value_bits;
    plan.total_qubits = index_bits + value_bits + 1;
    plan.iterations = iteration_count(index_bits);
    plan.theta = std::asin(std::pow(2.0, -0.5 * index_bits));
    if (plan.total_qubits > qubit_budget) {
        const std::uint64_t bytes = memory_estimate(plan.total_qubits, 8);
        throw resource_error("search needs " + std::to_string(plan.total_qubits) +
                                 " qubits (up to " + std::to_string(bytes) +
                                 " bytes at double precision), over the " +
                                 std::to_string(qubit_budget) + "-qubit budget",
                             bytes);
    }
    return plan;
}

/// Oracle: negates exactly the amplitudes whose value field equals target,
/// realized as DEC(target) -> flip the |0> subregister -> INC(target).
template <typename Scalar>
StateVector<Scalar>& tag_value(StateVector<Scalar>& sv, QubitRange value, basis_t target)
{
    sv.require_range(value, "tag_value");
    if (target > value.field_mask()) {
        throw argument_error("tag_value: target does not fit " + std::to_string(value.length) +
                             " bits");
    }
    sub_constant(sv, target, value);
    zero_phase_flip(sv, value);
    add_constant(sv, target, value);
    return sv;
}

/// Reflection about the uniform superposition on the index register,
/// 2|s><s| - I, as H -> flip |0...0> -> H -> global flip. The trailing global
/// flip fixes the overall sign so the operator identity holds exactly.
template <typename Scalar>
StateVector<Scalar>& diffuse(StateVector<Scalar>& sv, QubitRange index)
{
    sv.require_range(index, "diffuse");
    apply_hadamard(sv, index);
    zero_phase_flip(sv, index);
    apply_hadamard(sv, index);
    global_phase_flip(sv);
    return sv;
}

struct SearchOptions {
    std::uint64_t seed = 0;
    int qubit_budget = default_qubit_budget;
};

/// Everything one search run produced: the plan, the per-iteration match
/// probability (entry m = after m+1 completed iterations), and the measured
/// (hash, n-gram) pair.
struct SearchTrace {
    GroverPlan plan;
    std::vector<double> per_iteration_probability;
    std::uint64_t measured_hash = 0;
    std::uint64_t measured_value = 0;
    std::vector<std::uint8_t> measured_ngram;
    bool matched = false;
    std::uint64_t multiplicity = 0;
};

/// Runs the full search: uniform index superposition, superposed table load,
/// then `iterations` rounds of tag -> unload -> diffuse -> reload, recording
/// after each round the total probability that the value register holds the
/// target. Finally measures value then index and reports the collapsed pair.
/// A target absent from the table completes with matched = false.
template <typename Scalar>
SearchTrace grover_search(const LookupTable& table, std::span<const std::uint8_t> target_ngram,
                          const SearchOptions& options = {})
{
    table.validate();
    if (target_ngram.size() * 8 != std::size_t(table.value_bits)) {
        throw argument_error("target n-gram is " + std::to_string(target_ngram.size()) +
                             " bytes but the table stores " +
                             std::to_string(table.value_bits / 8) + "-byte values");
    }
    const std::uint64_t target = pack_ngram(target_ngram);

    SearchTrace trace;
    trace.plan = make_plan(table.index_bits, table.value_bits, options.qubit_budget);
    trace.multiplicity = classical_find_value(table, target).size();
    trace.per_iteration_probability.reserve(std::size_t(trace.plan.iterations));

    const QubitRange index = trace.plan.index_range();
    const QubitRange value = trace.plan.value_range();
    const auto carry = std::uint32_t(trace.plan.carry_index);
    const std::span<const std::uint64_t> memory(table.entries);

    auto sv = create_state<Scalar>(trace.plan.total_qubits, 0, options.qubit_budget);
    apply_hadamard(sv, index);
    indexed_lda(sv, index, value, memory);

    for (int m = 0; m < trace.plan.iterations; ++m) {
        tag_value(sv, value, target);
        indexed_sbc(sv, index, value, carry, memory);
        diffuse(sv, index);
        indexed_adc(sv, index, value, carry, memory);
        trace.per_iteration_probability.push_back(probability_of(sv, value, target));
    }

    sv.release_scratch();
    std::mt19937_64 rng(options.seed);
    trace.measured_value = measure(sv, value, rng);
    trace.measured_hash = measure(sv, index, rng);
    trace.measured_ngram = unpack_ngram(trace.measured_value, std::size_t(table.value_bits) / 8);
    trace.matched = table.entries[trace.measured_hash] == target && trace.measured_value == target;
    return trace;
}

} // namespace qgram
