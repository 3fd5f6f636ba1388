#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "randopt/instances.hpp"

namespace randopt {

/// Binary instance container:
///
///   magic "RANDOPT\0" | u16 version | u8 type tag | parameter block |
///   u64 seed | u32 label length | label | u64 payload length | payload
///
/// All integers little-endian, reals IEEE-754 binary64. Graph payloads pack
/// the pair indicators in pair_index order, eight per byte, LSB first.
inline constexpr std::uint16_t kInstanceFormatVersion = 1;

enum class InstanceKind : std::uint8_t { kGraph = 1, kTensor = 2, kKSat = 3 };

InstanceKind kind_of(const Instance& instance) noexcept;
const char* kind_name(InstanceKind kind) noexcept;

std::vector<std::uint8_t> encode_instance(const Instance& instance);
Instance decode_instance(std::span<const std::uint8_t> bytes);

/// Decodes and requires a specific kind; a different tag raises kTypeMismatch.
template <class T>
T decode_instance_as(std::span<const std::uint8_t> bytes);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// Hash of the canonical encoding; identical for identical (params, seed, label).
std::string content_hash(const Instance& instance);

/// Sidecar metadata: kind, version, parameters, seed, label and hex hash.
nlohmann::json instance_metadata(const Instance& instance);

/// Writes `<stem>.rinst` and `<stem>.json`; returns the content hash.
std::string write_instance_file(const std::filesystem::path& stem, const Instance& instance);
Instance read_instance_file(const std::filesystem::path& path);

/// "n m" header line then one "i j" line per edge, 0-based, i < j.
void write_edge_list(std::ostream& out, const ErGraph& graph);

void write_dimacs(std::ostream& out, const KSatFormula& formula);
/// Reads a DIMACS CNF whose clauses all have the same width.
KSatFormula read_dimacs(std::istream& in);

}  // namespace randopt
