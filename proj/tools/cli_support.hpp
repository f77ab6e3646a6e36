#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "szero/dataset.hpp"
#include "szero/model.hpp"

namespace szero::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInvariantViolation = 3 };

/// Lowercase hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Dataset from either an IDX image file (labels path optional; derived by
/// replacing "images-idx3" with "labels-idx1") or a .csv file.
struct LoadedData {
    Dataset data;
    std::vector<std::filesystem::path> files;
    std::string sha256;
};
LoadedData load_dataset(const std::string& path, const std::string& labels);

/// "mlp:784-64-10", "linear:2-2" or "cnn:CxHxW-F-C" (3x3 conv with F
/// filters, ReLU, 2x2 max pool, flatten, dense to C classes).
Model parse_arch(const std::string& arch);

/// Writes manifest.json into `dir`, replacing any previous manifest.
void write_manifest(const std::filesystem::path& dir, const std::string& subcommand,
                    const nlohmann::json& flags, const nlohmann::json& extra);

/// --workers, falling back to SZERO_WORKERS, then 1.
std::size_t resolve_workers(std::optional<std::size_t> flag);

}  // namespace szero::cli
