#include "qgram/ngram.hpp"

#include <algorithm>
#include <fstream>

namespace qgram {

namespace {

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m)
{
    return std::uint64_t((unsigned __int128)a * b % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m)
{
    std::uint64_t r = 1 % m;
    base %= m;
    while (exp) {
        if (exp & 1) {
            r = mul_mod(r, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return r;
}

// Incremental polynomial accumulator over one window.
struct PolyHash {
    std::uint64_t modulus;
    std::uint64_t base;
    std::uint64_t top_power; // base^(n-1) mod modulus

    PolyHash(const NgramConfig& config)
        : modulus(config.hash_modulus), base(config.hash_base % config.hash_modulus),
          top_power(pow_mod(config.hash_base, config.n - 1, config.hash_modulus))
    {
    }

    std::uint64_t push(std::uint64_t state, std::uint8_t incoming) const
    {
        return (mul_mod(state, base, modulus) + incoming) % modulus;
    }

    std::uint64_t roll(std::uint64_t state, std::uint8_t outgoing, std::uint8_t incoming) const
    {
        const std::uint64_t drop = mul_mod(outgoing % modulus, top_power, modulus);
        state = (state + modulus - drop) % modulus;
        return push(state, incoming);
    }
};

} // namespace

bool is_prime_u64(std::uint64_t x)
{
    if (x < 2) {
        return false;
    }
    for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull,
                            31ull, 37ull}) {
        if (x % p == 0) {
            return x == p;
        }
    }
    std::uint64_t d = x - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    // These witnesses decide primality for every 64-bit integer.
    for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull,
                            31ull, 37ull}) {
        std::uint64_t v = pow_mod(a % x, d, x);
        if (v == 1 || v == x - 1) {
            continue;
        }
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            v = mul_mod(v, v, x);
            if (v == x - 1) {
                composite = false;
                break;
            }
        }
        if (composite) {
            return false;
        }
    }
    return true;
}

void NgramConfig::validate() const
{
    if (n < 1) {
        throw argument_error("n-gram length must be >= 1");
    }
    if (index_bits < 1 || index_bits > 30) {
        throw argument_error("index_bits out of range: " + std::to_string(index_bits));
    }
    if (hash_modulus < 2 || hash_base < 1 || hash_base >= hash_modulus) {
        throw argument_error("hash base must satisfy 1 <= base < modulus");
    }
    if (!is_prime_u64(hash_modulus)) {
        throw argument_error("hash modulus " + std::to_string(hash_modulus) + " is not prime");
    }
}

std::uint64_t hash_state(std::span<const std::uint8_t> bytes, const NgramConfig& config)
{
    config.validate();
    if (bytes.size() != config.n) {
        throw argument_error("hash_state: window is " + std::to_string(bytes.size()) +
                             " bytes, config expects " + std::to_string(config.n));
    }
    PolyHash hash(config);
    std::uint64_t state = 0;
    for (std::uint8_t b : bytes) {
        state = hash.push(state, b);
    }
    return state;
}

std::uint64_t roll_hash(std::uint64_t prev, std::uint8_t outgoing, std::uint8_t incoming,
                        const NgramConfig& config)
{
    config.validate();
    return PolyHash(config).roll(prev, outgoing, incoming);
}

std::uint64_t hash_ngram(std::span<const std::uint8_t> bytes, const NgramConfig& config)
{
    return hash_state(bytes, config) & (config.bucket_count() - 1);
}

std::uint64_t BucketCounter::bucket_total(std::size_t bucket) const
{
    if (bucket >= per_bucket.size()) {
        return 0;
    }
    std::uint64_t total = 0;
    for (const auto& [ngram, count] : per_bucket[bucket]) {
        total += count;
    }
    return total;
}

void BucketCounter::merge(BucketCounter&& other)
{
    if (per_bucket.empty()) {
        per_bucket.resize(other.per_bucket.size());
    }
    if (other.per_bucket.size() != per_bucket.size()) {
        throw argument_error("cannot merge counters with different bucket counts");
    }
    for (std::size_t b = 0; b < per_bucket.size(); ++b) {
        for (const auto& [ngram, count] : other.per_bucket[b]) {
            per_bucket[b][ngram] += count;
        }
    }
    total_ngrams += other.total_ngrams;
    files_processed += other.files_processed;
    skipped_files.insert(skipped_files.end(), other.skipped_files.begin(),
                         other.skipped_files.end());
}

std::vector<std::filesystem::path> collect_corpus_files(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw argument_error("not a directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(dir, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            throw argument_error("cannot walk " + dir.string() + ": " + ec.message());
        }
        if (it->is_regular_file(ec)) {
            files.push_back(it->path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

namespace {

// Streams one file in fixed-size chunks; the packed window and rolling hash
// carry across chunk boundaries.
bool scan_file_into(const std::filesystem::path& path, const NgramConfig& config,
                    const PolyHash& hash, BucketCounter& counter)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return false;
    }
    const std::size_t n = config.n;
    const std::uint64_t bucket_mask = config.bucket_count() - 1;
    const std::uint64_t packed_mask = n == 8 ? ~0ull : (1ull << (8 * n)) - 1;
    const int out_shift = int(8 * (n - 1));

    std::uint64_t packed = 0;
    std::uint64_t state = 0;
    std::uint64_t seen = 0;

    std::vector<char> chunk(std::size_t(256) << 10);
    while (in) {
        in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
        const std::size_t got = std::size_t(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            const auto byte = std::uint8_t(chunk[i]);
            if (seen >= n) {
                state = hash.roll(state, std::uint8_t(packed >> out_shift), byte);
            } else {
                state = hash.push(state, byte);
            }
            packed = ((packed << 8) | byte) & packed_mask;
            ++seen;
            if (seen >= n) {
                counter.per_bucket[state & bucket_mask][packed] += 1;
                ++counter.total_ngrams;
            }
        }
        if (got == 0) {
            break;
        }
    }
    return !in.bad();
}

} // namespace

BucketCounter count_corpus(std::span<const std::filesystem::path> files,
                           const NgramConfig& config, CorpusLabel label)
{
    config.validate();
    if (config.n > 8) {
        throw argument_error("corpus counting packs n-grams into 64 bits; n must be <= 8");
    }
    if (files.empty()) {
        throw argument_error("empty corpus file list");
    }

    const PolyHash hash(config);
    BucketCounter counter;
    counter.label = label;
    counter.n = config.n;
    counter.index_bits = config.index_bits;
    counter.per_bucket.resize(config.bucket_count());
    for (const auto& path : files) {
        if (scan_file_into(path, config, hash, counter)) {
            ++counter.files_processed;
        } else {
            counter.skipped_files.push_back(path.string());
        }
    }
    return counter;
}

Selection select_top_k(const BucketCounter& malicious, const BucketCounter& benign,
                       std::size_t k_keep, const NgramConfig& config)
{
    config.validate();
    if (k_keep > config.bucket_count()) {
        throw argument_error("k_keep " + std::to_string(k_keep) + " exceeds the " +
                             std::to_string(config.bucket_count()) + " available buckets");
    }
    if (malicious.per_bucket.size() != config.bucket_count()) {
        throw argument_error("malicious counter was built with a different bucket count");
    }
    if (!benign.per_bucket.empty() && benign.per_bucket.size() != config.bucket_count()) {
        throw argument_error("benign counter was built with a different bucket count");
    }

    struct Candidate {
        std::uint64_t packed;
        std::uint64_t bucket;
        std::uint64_t malicious_count;
        std::uint64_t benign_count;
        std::int64_t rank;
    };
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < malicious.per_bucket.size(); ++b) {
        const auto& grams = malicious.per_bucket[b];
        if (grams.empty()) {
            continue;
        }
        std::uint64_t total = 0;
        std::uint64_t rep = 0;
        std::uint64_t rep_count = 0;
        for (const auto& [packed, count] : grams) {
            total += count;
            if (count > rep_count || (count == rep_count && packed < rep)) {
                rep = packed;
                rep_count = count;
            }
        }
        const std::uint64_t benign_count = benign.bucket_total(b);
        if (config.benign_policy == BenignPolicy::exclude &&
            benign_count >= config.benign_threshold) {
            continue;
        }
        const std::int64_t rank = config.benign_policy == BenignPolicy::subtract
                                      ? std::int64_t(total) - std::int64_t(benign_count)
                                      : std::int64_t(total);
        candidates.push_back({rep, b, total, benign_count, rank});
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.rank != b.rank) {
            return a.rank > b.rank;
        }
        if (a.bucket != b.bucket) {
            return a.bucket < b.bucket;
        }
        return a.packed < b.packed;
    });

    Selection result;
    result.shortfall = candidates.size() < k_keep;
    const std::size_t keep = std::min(k_keep, candidates.size());
    result.records.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& c = candidates[i];
        result.records.push_back(
            {unpack_ngram(c.packed, config.n), c.bucket, c.malicious_count, c.benign_count});
    }
    return result;
}

TableBuild build_table(std::span<const NgramRecord> records, int index_bits, int value_bits)
{
    if (index_bits < 1 || index_bits > 30) {
        throw argument_error("index_bits out of range: " + std::to_string(index_bits));
    }
    if (value_bits < 8 || value_bits > 64 || value_bits % 8 != 0) {
        throw argument_error("value_bits must be a multiple of 8 in [8, 64]");
    }

    TableBuild result;
    result.table.index_bits = std::uint8_t(index_bits);
    result.table.value_bits = std::uint8_t(value_bits);
    result.table.entries.assign(std::size_t(1) << index_bits, 0);

    std::vector<const NgramRecord*> winners(std::size_t(1) << index_bits, nullptr);
    for (const NgramRecord& record : records) {
        if (record.bucket >= result.table.entries.size()) {
            throw argument_error("record bucket " + std::to_string(record.bucket) +
                                 " out of range for " + std::to_string(index_bits) +
                                 " index bits");
        }
        if (record.ngram.size() * 8 != std::size_t(value_bits)) {
            throw argument_error("record n-gram of " + std::to_string(record.ngram.size()) +
                                 " bytes does not fit " + std::to_string(value_bits) +
                                 " value bits");
        }
        const NgramRecord*& winner = winners[record.bucket];
        if (winner == nullptr) {
            winner = &record;
            continue;
        }
        ++result.collisions;
        if (record.malicious_count > winner->malicious_count ||
            (record.malicious_count == winner->malicious_count &&
             record.ngram < winner->ngram)) {
            winner = &record;
        }
    }
    for (std::size_t b = 0; b < winners.size(); ++b) {
        if (winners[b] != nullptr) {
            result.table.entries[b] = pack_ngram(winners[b]->ngram);
        }
    }
    return result;
}

} // namespace qgram
