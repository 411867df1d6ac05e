#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qgram/errors.hpp"
#include "qgram/lookup_table.hpp"

namespace qgram {

/// How benign-corpus counts temper the malicious ranking: drop anything seen
/// in benign software at least `benign_threshold` times, or rank by the
/// count difference.
enum class BenignPolicy { exclude, subtract };

struct NgramConfig {
    std::uint32_t n = 2;                              // n-gram byte length
    std::uint32_t index_bits = 10;                    // bucket count = 2^index_bits
    std::uint64_t hash_base = 257;                    // polynomial base
    std::uint64_t hash_modulus = (1ull << 61) - 1;    // Mersenne prime
    BenignPolicy benign_policy = BenignPolicy::exclude;
    std::uint64_t benign_threshold = 1;

    std::uint32_t value_bits() const { return 8 * n; }
    std::uint64_t bucket_count() const { return std::uint64_t(1) << index_bits; }

    void validate() const;
};

/// Deterministic Miller-Rabin, exact for any 64-bit integer.
bool is_prime_u64(std::uint64_t x);

/// Full-width Rabin-Karp polynomial hash of a window, mod config.hash_modulus:
/// sum of bytes[i] * base^(n-1-i). The value roll_hash advances.
std::uint64_t hash_state(std::span<const std::uint8_t> bytes, const NgramConfig& config);

/// Advances the polynomial hash of a window by one byte in O(1).
std::uint64_t roll_hash(std::uint64_t prev, std::uint8_t outgoing, std::uint8_t incoming,
                        const NgramConfig& config);

/// Window hash reduced to its table bucket in [0, 2^index_bits).
std::uint64_t hash_ngram(std::span<const std::uint8_t> bytes, const NgramConfig& config);

/// Calls sink(window_bytes, bucket) for every length-n window at stride 1,
/// in order. Returns the window count, max(0, len - n + 1).
template <typename Sink>
std::size_t scan_stream(std::span<const std::uint8_t> bytes, const NgramConfig& config, Sink&& sink)
{
    config.validate();
    const std::size_t n = config.n;
    if (bytes.size() < n) {
        return 0;
    }
    const std::uint64_t bucket_mask = config.bucket_count() - 1;
    std::uint64_t state = hash_state(bytes.first(n), config);
    sink(bytes.first(n), state & bucket_mask);
    for (std::size_t i = n; i < bytes.size(); ++i) {
        state = roll_hash(state, bytes[i - n], bytes[i], config);
        sink(bytes.subspan(i - n + 1, n), state & bucket_mask);
    }
    return bytes.size() - n + 1;
}

enum class CorpusLabel { malicious, benign };

/// Exact per-bucket n-gram frequencies for one corpus. Each bucket keeps
/// every distinct n-gram (packed big-endian) it received, so the dominant
/// exact n-gram per bucket is recoverable after hashing collapses them.
struct BucketCounter {
    CorpusLabel label = CorpusLabel::malicious;
    std::uint32_t n = 0;
    std::uint32_t index_bits = 0;
    std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> per_bucket;
    std::uint64_t total_ngrams = 0;
    std::uint64_t files_processed = 0;
    std::vector<std::string> skipped_files;

    std::uint64_t bucket_total(std::size_t bucket) const;
    void merge(BucketCounter&& other);
};

/// All regular files under dir, recursively, sorted by path so repeated runs
/// see the corpus in one order.
std::vector<std::filesystem::path> collect_corpus_files(const std::filesystem::path& dir);

/// Streams every file (chunked, rolling across chunk boundaries) and
/// aggregates per-bucket counts. Unreadable files are recorded and skipped.
BucketCounter count_corpus(std::span<const std::filesystem::path> files, const NgramConfig& config,
                           CorpusLabel label);

/// An extracted n-gram with its bucket and per-corpus frequencies.
struct NgramRecord {
    std::vector<std::uint8_t> ngram;
    std::uint64_t bucket = 0;
    std::uint64_t malicious_count = 0;
    std::uint64_t benign_count = 0;
};

struct Selection {
    std::vector<NgramRecord> records;
    bool shortfall = false; // fewer survivors than requested
};

/// Applies the benign policy and returns the k_keep highest-ranked records,
/// rank-sorted; ties broken by smaller bucket, then lexicographic n-gram.
Selection select_top_k(const BucketCounter& malicious, const BucketCounter& benign,
                       std::size_t k_keep, const NgramConfig& config);

struct TableBuild {
    LookupTable table;
    std::uint64_t collisions = 0;
};

/// Places records into a 2^index_bits table of packed n-gram values. Bucket
/// collisions keep the higher malicious count (ties: lexicographically
/// smaller n-gram); unpopulated buckets hold the 0 sentinel.
TableBuild build_table(std::span<const NgramRecord> records, int index_bits, int value_bits);

} // namespace qgram
