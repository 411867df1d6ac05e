#include "qgram/lookup_table.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace qgram {

namespace {

constexpr char magic[4] = {'Q', 'G', 'T', '1'};
constexpr std::uint8_t format_version = 0x01;

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) {
        out.push_back(std::uint8_t(v >> (8 * i)));
    }
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(std::uint8_t(v >> (8 * i)));
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::span<const std::uint8_t> take(std::size_t count, const char* what)
    {
        if (remaining() < count) {
            throw format_error(std::string("truncated table stream while reading ") + what, pos_);
        }
        auto view = bytes_.subspan(pos_, count);
        pos_ += count;
        return view;
    }

    std::uint8_t u8(const char* what) { return take(1, what)[0]; }

    std::uint32_t u32le(const char* what)
    {
        auto b = take(4, what);
        return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
               std::uint32_t(b[3]) << 24;
    }

    std::uint64_t u64le(const char* what)
    {
        auto b = take(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= std::uint64_t(b[i]) << (8 * i);
        }
        return v;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

void LookupTable::validate() const
{
    if (index_bits < 1 || index_bits > 30) {
        throw argument_error("index_bits out of range: " + std::to_string(index_bits));
    }
    if (value_bits < 1 || value_bits > 64) {
        throw argument_error("value_bits out of range: " + std::to_string(value_bits));
    }
    if (entries.size() != bucket_count()) {
        throw argument_error("table must hold exactly 2^index_bits entries");
    }
    if (value_bits < 64) {
        const std::uint64_t limit = std::uint64_t(1) << value_bits;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i] >= limit) {
                throw argument_error("entry " + std::to_string(i) + " does not fit " +
                                     std::to_string(value_bits) + " value bits");
            }
        }
    }
}

std::uint64_t pack_ngram(std::span<const std::uint8_t> bytes)
{
    if (bytes.empty() || bytes.size() > 8) {
        throw argument_error("n-gram must be 1 to 8 bytes to pack into a table value");
    }
    std::uint64_t v = 0;
    for (std::uint8_t b : bytes) {
        v = (v << 8) | b;
    }
    return v;
}

std::vector<std::uint8_t> unpack_ngram(std::uint64_t value, std::size_t width_bytes)
{
    if (width_bytes < 1 || width_bytes > 8) {
        throw argument_error("n-gram width must be 1 to 8 bytes");
    }
    std::vector<std::uint8_t> bytes(width_bytes);
    for (std::size_t i = 0; i < width_bytes; ++i) {
        bytes[width_bytes - 1 - i] = std::uint8_t(value >> (8 * i));
    }
    return bytes;
}

std::vector<std::uint64_t> classical_find_value(const LookupTable& table, std::uint64_t value)
{
    if (table.value_bits < 64 && value >= (std::uint64_t(1) << table.value_bits)) {
        throw argument_error("value does not fit " + std::to_string(table.value_bits) + " bits");
    }
    std::vector<std::uint64_t> hits;
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        if (table.entries[i] == value) {
            hits.push_back(i);
        }
    }
    return hits;
}

std::vector<std::uint8_t> serialize(const LookupTable& table)
{
    table.validate();
    if (table.metadata.size() > 0xFFFFFFFFull) {
        throw argument_error("metadata blob too large");
    }
    const std::size_t entry_bytes = (table.value_bits + 7) / 8;
    std::vector<std::uint8_t> out;
    out.reserve(26 + table.metadata.size() + table.entries.size() * entry_bytes);

    out.insert(out.end(), magic, magic + 4);
    out.push_back(format_version);
    out.push_back(table.index_bits);
    out.push_back(table.value_bits);
    put_u64le(out, table.hash_base);
    put_u64le(out, table.hash_modulus);
    put_u32le(out, std::uint32_t(table.metadata.size()));
    out.insert(out.end(), table.metadata.begin(), table.metadata.end());
    for (std::uint64_t e : table.entries) {
        for (std::size_t i = 0; i < entry_bytes; ++i) {
            out.push_back(std::uint8_t(e >> (8 * i)));
        }
    }
    return out;
}

LookupTable deserialize(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    auto m = r.take(4, "magic");
    if (std::memcmp(m.data(), magic, 4) != 0) {
        throw format_error("bad magic, not a QGT1 table", 0);
    }
    const std::uint8_t version = r.u8("version");
    if (version != format_version) {
        throw format_error("unsupported format version " + std::to_string(version), 4);
    }
    LookupTable table;
    table.index_bits = r.u8("index_bits");
    if (table.index_bits < 1 || table.index_bits > 30) {
        throw format_error("index_bits out of range", 5);
    }
    table.value_bits = r.u8("value_bits");
    if (table.value_bits < 1 || table.value_bits > 64) {
        throw format_error("value_bits out of range", 6);
    }
    table.hash_base = r.u64le("hash base");
    table.hash_modulus = r.u64le("hash modulus");
    const std::uint32_t meta_len = r.u32le("metadata length");
    auto meta = r.take(meta_len, "metadata");
    table.metadata.assign(meta.begin(), meta.end());

    const std::size_t entry_bytes = (table.value_bits + 7) / 8;
    table.entries.resize(table.bucket_count());
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        auto b = r.take(entry_bytes, "table entry");
        std::uint64_t v = 0;
        for (std::size_t j = 0; j < entry_bytes; ++j) {
            v |= std::uint64_t(b[j]) << (8 * j);
        }
        table.entries[i] = v;
    }
    if (r.remaining() != 0) {
        throw format_error("trailing bytes after table entries", r.offset());
    }
    table.validate();
    return table;
}

void save_table(const LookupTable& table, const std::filesystem::path& path)
{
    const auto bytes = serialize(table);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw argument_error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw argument_error("failed to write " + path.string());
    }
}

LookupTable load_table(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw argument_error("cannot open " + path.string());
    }
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) {
        throw argument_error("failed to read " + path.string());
    }
    return deserialize(bytes);
}

} // namespace qgram
