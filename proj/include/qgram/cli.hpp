#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qgram/grover.hpp"

namespace qgram {

/// Lowercase hex of a byte string, two digits per byte (Table-trace style).
std::string hex_of_bytes(std::span<const std::uint8_t> bytes);

/// Lowercase minimal hex of an integer (hash rendering, no leading zeros).
std::string hex_of_value(std::uint64_t value);

/// Parses lowercase/uppercase hex (no 0x prefix) into bytes.
std::vector<std::uint8_t> parse_hex(const std::string& hex);

/// Prints the per-iteration lines and the measurement footer in the
/// simulator's trace shape.
void render_trace(std::ostream& out, const SearchTrace& trace, bool per_iteration_lines);

/// Entry point behind the qgram binary: args exclude the program name.
/// Returns the process exit code. All non-deterministic output (timing,
/// warnings) goes to err; out is byte-stable for fixed flags and seed.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace qgram
