#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ghsom/types.hpp"

namespace ghsom {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kModelFormatName = "ghsom-model";

/// Exact textual encoding of a double (hexfloat; "inf", "-inf", "nan").
std::string encode_double(double value);
double decode_double(std::string_view text);

/// `.ghsom` document: JSON with a versioned header, the model body and a
/// SHA-256 digest of the canonical body text.
std::string serialize_model(const Hierarchy& h);

/// Throws ErrorCode::format (with byte offset) on malformed text,
/// ErrorCode::version on an unknown format_version and
/// ErrorCode::integrity when the digest does not match.
Hierarchy deserialize_model(std::string_view text);

/// Written to a temporary sibling and renamed into place.
void save_model(const Hierarchy& h, const std::filesystem::path& path);
Hierarchy load_model(const std::filesystem::path& path);

std::string sha256_hex(std::string_view text);

/// Atomic text file write (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace ghsom
