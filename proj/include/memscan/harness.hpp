#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace memscan {

/// Record of one CLI run: the exact command line, the device spec used, and
/// a content digest per written output.
struct RunManifest {
    std::string command_line;
    std::string spec_path;  // "builtin-default" when no --device was given
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> outputs;  // (path, digest)
};

std::string manifest_text(const RunManifest& manifest);

/// Re-reads every listed output and checks its digest.
bool verify_manifest(const std::filesystem::path& manifest_path);

/// Full command-line interface. Deterministic: identical arguments produce
/// byte-identical stdout, files and manifests. Returns the process exit code;
/// warnings go to `err` without changing it.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memscan
