#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qgram/errors.hpp"

namespace qgram {

/// Bytes needed to simulate a register of the given width: 2^qubits
/// amplitudes, each a real and an imaginary component.
constexpr std::uint64_t memory_estimate(int qubits, int bytes_per_component)
{
    return (std::uint64_t(1) << qubits) * 2u * std::uint64_t(bytes_per_component);
}

/// The persistent hash-bucket -> n-gram table shared by the classical scan
/// and the quantum search. Entry i holds the n-gram (as a big-endian packed
/// integer) whose hash bucket is i; 0 marks an unpopulated bucket.
struct LookupTable {
    std::uint8_t index_bits = 0;
    std::uint8_t value_bits = 0;
    std::uint64_t hash_base = 0;
    std::uint64_t hash_modulus = 0;
    std::string metadata;
    std::vector<std::uint64_t> entries;

    std::size_t bucket_count() const { return std::size_t(1) << index_bits; }

    void validate() const;
};

/// Packs an n-gram into its table value: first byte most significant, so the
/// hex rendering of the integer reads the same as the byte string.
std::uint64_t pack_ngram(std::span<const std::uint8_t> bytes);

/// Inverse of pack_ngram for a value of `width_bytes` bytes.
std::vector<std::uint8_t> unpack_ngram(std::uint64_t value, std::size_t width_bytes);

/// All buckets holding `value`, ascending. The classical O(2^k) ground truth
/// the quantum search is checked against.
std::vector<std::uint64_t> classical_find_value(const LookupTable& table, std::uint64_t value);

/// Bit-exact binary form: "QGT1", version byte, index/value widths, hash
/// parameters, length-prefixed metadata, then 2^k little-endian entries of
/// ceil(value_bits/8) bytes each.
std::vector<std::uint8_t> serialize(const LookupTable& table);

/// Strict inverse of serialize. Rejects bad magic, unknown versions,
/// truncation and trailing bytes, naming the offending byte offset.
LookupTable deserialize(std::span<const std::uint8_t> bytes);

void save_table(const LookupTable& table, const std::filesystem::path& path);
LookupTable load_table(const std::filesystem::path& path);

} // namespace qgram
