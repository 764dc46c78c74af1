#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace memscan {

/// Formats a double with up to `sig_digits` significant digits (printf %g,
/// C locale). All file and report emission goes through this so output is
/// byte-reproducible.
std::string format_sig(double value, int sig_digits);

/// Whole-file atomic write: the content lands under a temporary name in the
/// target directory and is renamed into place, so readers never observe a
/// partially written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// FNV-1a 64-bit content digest, rendered as 16 hex characters.
std::uint64_t fnv1a64(std::string_view data);
std::string digest_hex(std::string_view data);

// --- CSV helpers ------------------------------------------------------------
// All CSV emitters write a fixed header and one row per sample with up to
// 9 significant digits. Parsers skip blank lines and '#' comment lines.

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Parses a simple numeric CSV. The first non-comment line is the header.
/// Throws std::runtime_error with a line number on malformed input.
CsvTable parse_csv(std::string_view text, const std::string& origin);

std::string csv_line(const std::vector<double>& values, int sig_digits);

}  // namespace memscan
