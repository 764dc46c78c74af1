#include "memscan/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace memscan {

std::string format_sig(double value, int sig_digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", sig_digits, value);
    return buf;
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::path tmp = dir / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open for writing: " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("rename failed for " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string digest_hex(std::string_view data) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

namespace {

std::string_view trim(std::string_view s) {
    std::size_t a = 0;
    while (a < s.size() && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    std::size_t b = s.size();
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

CsvTable parse_csv(std::string_view text, const std::string& origin) {
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                              : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (std::size_t hash = raw.find('#'); hash != std::string_view::npos) {
            raw = raw.substr(0, hash);
        }
        std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (!header_seen) {
            std::string cell;
            std::istringstream hs{std::string(line)};
            while (std::getline(hs, cell, ',')) {
                table.header.emplace_back(trim(cell));
            }
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        const std::string s(line);
        while (start <= s.size()) {
            std::size_t comma = s.find(',', start);
            std::string cell = s.substr(start, comma == std::string::npos ? std::string::npos
                                                                          : comma - start);
            const std::string c{trim(cell)};
            errno = 0;
            char* end = nullptr;
            double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end != c.c_str() + c.size() || errno == ERANGE) {
                throw std::runtime_error(origin + ": line " + std::to_string(line_no) +
                                         ": not a number: '" + c + "'");
            }
            row.push_back(v);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (row.size() != table.header.size()) {
            throw std::runtime_error(origin + ": line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(table.header.size()) +
                                     " columns, got " + std::to_string(row.size()));
        }
        table.rows.push_back(std::move(row));
    }
    if (!header_seen) {
        throw std::runtime_error(origin + ": empty CSV (no header)");
    }
    return table;
}

std::string csv_line(const std::vector<double>& values, int sig_digits) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_sig(values[i], sig_digits);
    }
    out += '\n';
    return out;
}

}  // namespace memscan
