#ifndef DOCGCN_CHECKPOINT_HPP
#define DOCGCN_CHECKPOINT_HPP

#include "docgcn/common.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace docgcn {

/// Binary checkpoint envelope shared by every model type.
///
/// Layout (little-endian):
///   8 bytes   magic "DOCGCNCK"
///   uint32    format version
///   uint64    header length in bytes
///   header    UTF-8 JSON: {"type", "meta", "tensors": [{"name", "rows", "cols"}]}
///   payload   float64 row-major arrays, in header order
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::string type;
    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, Matrix>> tensors;

    void add(std::string name, const Matrix& m) { tensors.emplace_back(std::move(name), m); }
    /// Tensor by name; throws DataError if absent.
    const Matrix& get(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws DataError on missing file, bad magic, unsupported version or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace docgcn

#endif  // DOCGCN_CHECKPOINT_HPP
