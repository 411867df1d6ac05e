#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "qgram/errors.hpp"
#include "qgram/lookup_table.hpp"

#if defined(_OPENMP)
#define QGRAM_OMP(directive) _Pragma(#directive)
#else
#define QGRAM_OMP(directive)
#endif

namespace qgram {

/// Basis-state label. Qubit 0 is the least significant bit.
using basis_t = std::uint64_t;

inline constexpr int default_qubit_budget = 28;

/// A contiguous run of qubits inside a register, [start, start + length).
struct QubitRange {
    std::uint32_t start = 0;
    std::uint32_t length = 0;

    constexpr basis_t field_mask() const { return (basis_t(1) << length) - 1; }
    constexpr basis_t mask() const { return field_mask() << start; }
    constexpr basis_t extract(basis_t label) const { return (label >> start) & field_mask(); }
    constexpr basis_t insert(basis_t label, basis_t field) const
    {
        return (label & ~mask()) | (field << start);
    }
};

namespace detail {

// Reductions are computed over fixed 2^14-element chunks whose partials are
// combined in chunk order, so results do not depend on thread count.
inline constexpr Eigen::Index reduction_chunk_shift = 14;

template <typename PartialFn>
double chunked_sum(Eigen::Index count, PartialFn&& partial)
{
    const Eigen::Index chunk = Eigen::Index(1) << reduction_chunk_shift;
    const Eigen::Index chunks = (count + chunk - 1) >> reduction_chunk_shift;
    if (chunks <= 1) {
        return count > 0 ? partial(Eigen::Index(0), count) : 0.0;
    }
    std::vector<double> partials(static_cast<std::size_t>(chunks));
    QGRAM_OMP(omp parallel for schedule(static))
    for (Eigen::Index c = 0; c < chunks; ++c) {
        const Eigen::Index begin = c << reduction_chunk_shift;
        const Eigen::Index end = std::min(begin + chunk, count);
        partials[static_cast<std::size_t>(c)] = partial(begin, end);
    }
    double total = 0.0;
    for (double p : partials) {
        total += p;
    }
    return total;
}

} // namespace detail

/// Dense state vector of an n-qubit register: 2^n complex amplitudes of the
/// chosen scalar precision (float or double).
template <typename Scalar>
class StateVector {
    static_assert(std::is_floating_point_v<Scalar>, "amplitude scalar must be float or double");

public:
    using Complex = std::complex<Scalar>;
    using Amplitudes = Eigen::Vector<Complex, Eigen::Dynamic>;

    StateVector(int qubit_count, Amplitudes amplitudes)
        : qubit_count_(qubit_count), amp_(std::move(amplitudes))
    {
        if (qubit_count < 1 || qubit_count > 62) {
            throw argument_error("qubit count out of range: " + std::to_string(qubit_count));
        }
        if (amp_.size() != Eigen::Index(1) << qubit_count) {
            throw argument_error("amplitude array length must be exactly 2^qubit_count");
        }
    }

    StateVector(const StateVector& other) : qubit_count_(other.qubit_count_), amp_(other.amp_) {}
    StateVector(StateVector&&) noexcept = default;
    StateVector& operator=(const StateVector& other)
    {
        qubit_count_ = other.qubit_count_;
        amp_ = other.amp_;
        return *this;
    }
    StateVector& operator=(StateVector&&) noexcept = default;

    int qubit_count() const { return qubit_count_; }
    Eigen::Index size() const { return amp_.size(); }

    const Amplitudes& amplitudes() const { return amp_; }
    Amplitudes& amp() { return amp_; }
    Complex amplitude(basis_t label) const { return amp_(static_cast<Eigen::Index>(label)); }

    bool range_valid(QubitRange r) const
    {
        return r.length >= 1 && r.start + r.length <= static_cast<std::uint32_t>(qubit_count_);
    }

    void require_range(QubitRange r, const char* what) const
    {
        if (!range_valid(r)) {
            throw argument_error(std::string(what) + ": qubit range [" + std::to_string(r.start) +
                                 ", " + std::to_string(r.start + r.length) + ") exceeds " +
                                 std::to_string(qubit_count_) + " qubits");
        }
    }

    /// Σ|a_i|², accumulated in double regardless of Scalar.
    double squared_norm() const
    {
        const auto* a = amp_.data();
        return detail::chunked_sum(amp_.size(), [a](Eigen::Index b, Eigen::Index e) {
            double s = 0.0;
            for (Eigen::Index i = b; i < e; ++i) {
                s += double(a[i].real()) * a[i].real() + double(a[i].imag()) * a[i].imag();
            }
            return s;
        });
    }

    double norm() const { return std::sqrt(squared_norm()); }

    /// Scatters amp into the scratch buffer through a bijective relabeling,
    /// then swaps the buffers. The scratch is kept allocated across calls.
    template <typename Relabel>
    void permute_labels(Relabel&& relabel)
    {
        if (scratch_.size() != amp_.size()) {
            scratch_.resize(amp_.size());
        }
        const Eigen::Index n = amp_.size();
        const auto* src = amp_.data();
        auto* dst = scratch_.data();
        QGRAM_OMP(omp parallel for schedule(static))
        for (Eigen::Index i = 0; i < n; ++i) {
            dst[relabel(static_cast<basis_t>(i))] = src[i];
        }
        amp_.swap(scratch_);
    }

    /// Drops the reusable permutation buffer (e.g. before a measurement-only phase).
    void release_scratch() { scratch_.resize(0); }

private:
    int qubit_count_;
    Amplitudes amp_;
    Amplitudes scratch_;
};

/// Builds an n-qubit register collapsed onto one basis state.
/// Refuses (without allocating) any register over the qubit budget.
template <typename Scalar>
StateVector<Scalar> create_state(int qubit_count, basis_t permutation,
                                 int qubit_budget = default_qubit_budget)
{
    if (qubit_count < 1) {
        throw argument_error("qubit count must be at least 1");
    }
    if (qubit_count > qubit_budget) {
        const std::uint64_t bytes = memory_estimate(qubit_count, sizeof(Scalar));
        throw resource_error("state of " + std::to_string(qubit_count) + " qubits needs " +
                                 std::to_string(bytes) + " bytes, over the " +
                                 std::to_string(qubit_budget) + "-qubit budget",
                             bytes);
    }
    if (qubit_count < 62 && permutation >= (basis_t(1) << qubit_count)) {
        throw argument_error("initial permutation " + std::to_string(permutation) +
                             " out of range for " + std::to_string(qubit_count) + " qubits");
    }
    typename StateVector<Scalar>::Amplitudes amp =
        StateVector<Scalar>::Amplitudes::Zero(Eigen::Index(1) << qubit_count);
    amp(static_cast<Eigen::Index>(permutation)) = {Scalar(1), Scalar(0)};
    return StateVector<Scalar>(qubit_count, std::move(amp));
}

namespace detail {

// One in-place Hadamard butterfly pass restricted to amp[begin, begin+count).
// count must be a multiple of 2^(q+1).
template <typename Complex>
void hadamard_pass(Complex* amp, Eigen::Index begin, Eigen::Index count, std::uint32_t q)
{
    using Scalar = typename Complex::value_type;
    const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
    const Eigen::Index half = Eigen::Index(1) << q;
    const Eigen::Index pairs = count >> 1;
    const Eigen::Index low_mask = half - 1;
    for (Eigen::Index t = 0; t < pairs; ++t) {
        const Eigen::Index i = begin + (((t >> q) << (q + 1)) | (t & low_mask));
        const Complex a = amp[i];
        const Complex b = amp[i + half];
        amp[i] = (a + b) * inv_sqrt2;
        amp[i + half] = (a - b) * inv_sqrt2;
    }
}

} // namespace detail

/// Hadamard on every qubit of the range. Qubit ranges that fit inside a
/// cache-sized block are transformed block-by-block in one sweep; the
/// butterfly network (and hence the floating-point result) is identical
/// either way.
template <typename Scalar>
StateVector<Scalar>& apply_hadamard(StateVector<Scalar>& sv, QubitRange range)
{
    sv.require_range(range, "apply_hadamard");
    auto* amp = sv.amp().data();
    const Eigen::Index n = sv.size();
    constexpr std::uint32_t block_shift = 16;
    const std::uint32_t top = range.start + range.length;
    if (top <= block_shift && n >= (Eigen::Index(1) << block_shift)) {
        const Eigen::Index block = Eigen::Index(1) << top;
        const Eigen::Index blocks = n >> top;
        QGRAM_OMP(omp parallel for schedule(static))
        for (Eigen::Index b = 0; b < blocks; ++b) {
            for (std::uint32_t q = range.start; q < top; ++q) {
                detail::hadamard_pass(amp, b * block, block, q);
            }
        }
    } else {
        for (std::uint32_t q = range.start; q < top; ++q) {
            const Eigen::Index pairs = n >> 1;
            const Eigen::Index half = Eigen::Index(1) << q;
            const Eigen::Index low_mask = half - 1;
            const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
            QGRAM_OMP(omp parallel for schedule(static))
            for (Eigen::Index t = 0; t < pairs; ++t) {
                const Eigen::Index i = ((t >> q) << (q + 1)) | (t & low_mask);
                const std::complex<Scalar> a = amp[i];
                const std::complex<Scalar> b = amp[i + half];
                amp[i] = (a + b) * inv_sqrt2;
                amp[i + half] = (a - b) * inv_sqrt2;
            }
        }
    }
    return sv;
}

/// NOT on every qubit of the range: basis labels get the range's bits
/// complemented. Pure amplitude permutation, done as pairwise swaps.
template <typename Scalar>
StateVector<Scalar>& apply_x(StateVector<Scalar>& sv, QubitRange range)
{
    sv.require_range(range, "apply_x");
    auto* amp = sv.amp().data();
    const Eigen::Index n = sv.size();
    const basis_t mask = range.mask();
    QGRAM_OMP(omp parallel for schedule(static))
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = static_cast<Eigen::Index>(static_cast<basis_t>(i) ^ mask);
        if (i < j) {
            std::swap(amp[i], amp[j]);
        }
    }
    return sv;
}

/// Pauli Z on one qubit: negates every amplitude whose label has that bit set.
template <typename Scalar>
StateVector<Scalar>& apply_z(StateVector<Scalar>& sv, std::uint32_t qubit)
{
    if (qubit >= static_cast<std::uint32_t>(sv.qubit_count())) {
        throw argument_error("apply_z: qubit " + std::to_string(qubit) + " out of range");
    }
    auto* amp = sv.amp().data();
    const Eigen::Index half = sv.size() >> 1;
    const Eigen::Index bit = Eigen::Index(1) << qubit;
    const Eigen::Index low_mask = bit - 1;
    QGRAM_OMP(omp parallel for schedule(static))
    for (Eigen::Index t = 0; t < half; ++t) {
        const Eigen::Index i = ((t >> qubit) << (qubit + 1)) | bit | (t & low_mask);
        amp[i] = -amp[i];
    }
    return sv;
}

/// Negates every amplitude whose label restricted to the range equals zero
/// (the |0...0> subregister phase flip used by the oracle and the diffusion).
template <typename Scalar>
StateVector<Scalar>& zero_phase_flip(StateVector<Scalar>& sv, QubitRange range)
{
    sv.require_range(range, "zero_phase_flip");
    auto* amp = sv.amp().data();
    const std::uint32_t top = range.start + range.length;
    const Eigen::Index outer = sv.size() >> range.length;
    const Eigen::Index low_mask = (Eigen::Index(1) << range.start) - 1;
    QGRAM_OMP(omp parallel for schedule(static))
    for (Eigen::Index t = 0; t < outer; ++t) {
        const Eigen::Index i = ((t >> range.start) << top) | (t & low_mask);
        amp[i] = -amp[i];
    }
    return sv;
}

/// Negates every amplitude. Physically a global phase; kept so the diffusion
/// equals 2|s><s| - I exactly, sign included.
template <typename Scalar>
StateVector<Scalar>& global_phase_flip(StateVector<Scalar>& sv)
{
    auto* amp = sv.amp().data();
    const Eigen::Index n = sv.size();
    QGRAM_OMP(omp parallel for schedule(static))
    for (Eigen::Index i = 0; i < n; ++i) {
        amp[i] = -amp[i];
    }
    return sv;
}

namespace detail {

template <typename Scalar>
StateVector<Scalar>& add_to_field(StateVector<Scalar>& sv, basis_t amount, QubitRange range,
                                  const char* what)
{
    sv.require_range(range, what);
    if (amount >= (basis_t(1) << range.length)) {
        throw argument_error(std::string(what) + ": amount " + std::to_string(amount) +
                             " does not fit " + std::to_string(range.length) + " bits");
    }
    if (amount == 0) {
        return sv;
    }
    const basis_t fmask = range.field_mask();
    sv.permute_labels([=](basis_t label) {
        return range.insert(label, (range.extract(label) + amount) & fmask);
    });
    return sv;
}

} // namespace detail

/// INC: the range's field r becomes (r + amount) mod 2^length on every basis state.
template <typename Scalar>
StateVector<Scalar>& add_constant(StateVector<Scalar>& sv, basis_t amount, QubitRange range)
{
    return detail::add_to_field(sv, amount, range, "add_constant");
}

/// DEC: exact inverse of add_constant with the same amount.
template <typename Scalar>
StateVector<Scalar>& sub_constant(StateVector<Scalar>& sv, basis_t amount, QubitRange range)
{
    sv.require_range(range, "sub_constant");
    if (amount >= (basis_t(1) << range.length)) {
        throw argument_error("sub_constant: amount " + std::to_string(amount) +
                             " does not fit " + std::to_string(range.length) + " bits");
    }
    const basis_t complement = (basis_t(1) << range.length) - amount;
    return detail::add_to_field(sv, complement & range.field_mask(), range, "sub_constant");
}

namespace detail {

inline void require_disjoint(QubitRange a, QubitRange b, const char* what)
{
    if ((a.mask() & b.mask()) != 0) {
        throw argument_error(std::string(what) + ": index and value ranges overlap");
    }
}

inline void require_memory_shape(std::span<const std::uint64_t> memory, QubitRange index,
                                 const char* what)
{
    if (memory.size() != (std::size_t(1) << index.length)) {
        throw argument_error(std::string(what) + ": memory length " +
                             std::to_string(memory.size()) + " != 2^" +
                             std::to_string(index.length));
    }
}

} // namespace detail

/// Superposed table read: each basis component with index field i gets its
/// value field set to memory[i], entangling the index register with the
/// classical table in a single sweep. The value register must be |0> in
/// every component carrying amplitude, or the map would not be injective.
template <typename Scalar>
StateVector<Scalar>& indexed_lda(StateVector<Scalar>& sv, QubitRange index, QubitRange value,
                                 std::span<const std::uint64_t> memory)
{
    sv.require_range(index, "indexed_lda");
    sv.require_range(value, "indexed_lda");
    detail::require_disjoint(index, value, "indexed_lda");
    detail::require_memory_shape(memory, index, "indexed_lda");
    for (std::size_t i = 0; i < memory.size(); ++i) {
        if (value.length < 64 && memory[i] >= (basis_t(1) << value.length)) {
            throw argument_error("indexed_lda: memory entry " + std::to_string(i) +
                                 " does not fit " + std::to_string(value.length) + " value bits");
        }
    }
    const double zero_prob = probability_of(sv, value, 0);
    const double tol = std::is_same_v<Scalar, double> ? 1e-12 : 1e-6;
    if (std::abs(zero_prob - 1.0) > tol) {
        throw state_error("indexed_lda: value register is not |0> (P = " +
                          std::to_string(zero_prob) + ")");
    }

    auto* amp = sv.amp().data();
    const Eigen::Index n = sv.size();
    const auto* mem = memory.data();
    QGRAM_OMP(omp parallel for schedule(static))
    for (Eigen::Index m = 0; m < n; ++m) {
        const basis_t label = static_cast<basis_t>(m);
        const basis_t w = value.extract(label);
        const basis_t loaded = mem[index.extract(label)];
        if (w == 0) {
            if (loaded != 0) {
                amp[static_cast<Eigen::Index>(value.insert(label, loaded))] = amp[m];
                amp[m] = {Scalar(0), Scalar(0)};
            }
        } else if (w != loaded) {
            // Stale residue outside the image of the load; the precondition
            // guarantees it carries no probability.
            amp[m] = {Scalar(0), Scalar(0)};
        }
    }
    return sv;
}

namespace detail {

template <typename Scalar>
StateVector<Scalar>& indexed_add_sub(StateVector<Scalar>& sv, QubitRange index, QubitRange value,
                                     std::uint32_t carry, std::span<const std::uint64_t> memory,
                                     bool subtract, const char* what)
{
    sv.require_range(index, what);
    sv.require_range(value, what);
    require_disjoint(index, value, what);
    if (carry >= static_cast<std::uint32_t>(sv.qubit_count())) {
        throw argument_error(std::string(what) + ": carry qubit out of range");
    }
    if (((index.mask() | value.mask()) >> carry) & 1) {
        throw argument_error(std::string(what) + ": carry qubit overlaps a register");
    }
    require_memory_shape(memory, index, what);

    // Extended field w = value + 2^v * carry; the op adds or subtracts the
    // table entry mod 2^(v+1), a bijection for every index.
    const std::uint32_t vlen = value.length;
    const basis_t wmask = (basis_t(1) << (vlen + 1)) - 1;
    const basis_t vmask = value.field_mask();
    const basis_t carry_bit = basis_t(1) << carry;
    const auto* mem = memory.data();
    sv.permute_labels([=](basis_t label) {
        const basis_t entry = mem[index.extract(label)] & wmask;
        const basis_t w = value.extract(label) | (((label >> carry) & 1) << vlen);
        const basis_t wp = (subtract ? w + (wmask + 1) - entry : w + entry) & wmask;
        basis_t out = value.insert(label, wp & vmask);
        out = (out & ~carry_bit) | ((wp >> vlen) << carry);
        return out;
    });
    return sv;
}

} // namespace detail

/// Adds memory[index] into the extended (value, carry) field mod 2^(v+1).
template <typename Scalar>
StateVector<Scalar>& indexed_adc(StateVector<Scalar>& sv, QubitRange index, QubitRange value,
                                 std::uint32_t carry, std::span<const std::uint64_t> memory)
{
    return detail::indexed_add_sub(sv, index, value, carry, memory, false, "indexed_adc");
}

/// Subtracts memory[index] from the extended (value, carry) field; exact
/// inverse of indexed_adc over the same memory.
template <typename Scalar>
StateVector<Scalar>& indexed_sbc(StateVector<Scalar>& sv, QubitRange index, QubitRange value,
                                 std::uint32_t carry, std::span<const std::uint64_t> memory)
{
    return detail::indexed_add_sub(sv, index, value, carry, memory, true, "indexed_sbc");
}

/// Σ|a_j|² over basis states whose range field equals target. Non-mutating.
template <typename Scalar>
double probability_of(const StateVector<Scalar>& sv, QubitRange range, basis_t target)
{
    sv.require_range(range, "probability_of");
    if (target > range.field_mask()) {
        throw argument_error("probability_of: target " + std::to_string(target) +
                             " does not fit " + std::to_string(range.length) + " bits");
    }
    const auto* amp = sv.amplitudes().data();
    const std::uint32_t top = range.start + range.length;
    const Eigen::Index outer = sv.size() >> range.length;
    const Eigen::Index low_mask = (Eigen::Index(1) << range.start) - 1;
    const Eigen::Index target_bits = static_cast<Eigen::Index>(target) << range.start;
    return detail::chunked_sum(outer, [=](Eigen::Index b, Eigen::Index e) {
        double s = 0.0;
        for (Eigen::Index t = b; t < e; ++t) {
            const Eigen::Index i = ((t >> range.start) << top) | target_bits | (t & low_mask);
            s += double(amp[i].real()) * amp[i].real() + double(amp[i].imag()) * amp[i].imag();
        }
        return s;
    });
}

/// Samples an outcome for the range with Born-rule weights, collapses the
/// state onto it and renormalizes. One RNG draw per call.
template <typename Scalar>
basis_t measure(StateVector<Scalar>& sv, QubitRange range, std::mt19937_64& rng)
{
    sv.require_range(range, "measure");
    const auto* amp = sv.amplitudes().data();
    const Eigen::Index n = sv.size();

    const Eigen::Index chunk = Eigen::Index(1) << detail::reduction_chunk_shift;
    const Eigen::Index chunks = (n + chunk - 1) >> detail::reduction_chunk_shift;
    std::vector<double> partials(static_cast<std::size_t>(chunks));
    QGRAM_OMP(omp parallel for schedule(static))
    for (Eigen::Index c = 0; c < chunks; ++c) {
        const Eigen::Index end = std::min((c + 1) * chunk, n);
        double s = 0.0;
        for (Eigen::Index i = c * chunk; i < end; ++i) {
            s += double(amp[i].real()) * amp[i].real() + double(amp[i].imag()) * amp[i].imag();
        }
        partials[static_cast<std::size_t>(c)] = s;
    }
    double total = 0.0;
    for (double p : partials) {
        total += p;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw internal_error("measure: degenerate state (|psi|^2 = " + std::to_string(total) + ")");
    }

    const double u = (rng() >> 11) * 0x1.0p-53 * total;

    // Locate the sampled basis state: skip whole chunks, then walk one chunk.
    double acc = 0.0;
    Eigen::Index c = 0;
    while (c + 1 < chunks && acc + partials[static_cast<std::size_t>(c)] <= u) {
        acc += partials[static_cast<std::size_t>(c)];
        ++c;
    }
    Eigen::Index picked = -1;
    Eigen::Index last_nonzero = -1;
    const Eigen::Index end = std::min((c + 1) * chunk, n);
    for (Eigen::Index i = c * chunk; i < end; ++i) {
        const double p =
            double(amp[i].real()) * amp[i].real() + double(amp[i].imag()) * amp[i].imag();
        if (p > 0.0) {
            last_nonzero = i;
        }
        acc += p;
        if (u < acc) {
            picked = i;
            break;
        }
    }
    if (picked < 0) {
        picked = last_nonzero; // rounding pushed u past the final cumulative step
    }
    if (picked < 0) {
        throw internal_error("measure: no probability mass in sampled chunk");
    }

    const basis_t outcome = range.extract(static_cast<basis_t>(picked));

    const double keep = probability_of(sv, range, outcome);
    if (!(keep > 0.0)) {
        throw internal_error("measure: collapsed onto zero-probability outcome");
    }
    const Scalar scale = Scalar(1.0 / std::sqrt(keep));
    auto* mut = sv.amp().data();
    QGRAM_OMP(omp parallel for schedule(static))
    for (Eigen::Index i = 0; i < n; ++i) {
        if (range.extract(static_cast<basis_t>(i)) == outcome) {
            mut[i] *= scale;
        } else {
            mut[i] = {Scalar(0), Scalar(0)};
        }
    }
    return outcome;
}

} // namespace qgram
