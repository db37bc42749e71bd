#include "docgcn/checkpoint.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace docgcn {

namespace {
constexpr std::array<char, 8> kMagic{'D', 'O', 'C', 'G', 'C', 'N', 'C', 'K'};
}

const Matrix& Checkpoint::get(const std::string& name) const {
    for (const auto& [n, m] : tensors)
        if (n == name) return m;
    throw DataError("checkpoint (" + type + "): missing tensor '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json header{{"type", ckpt.type}, {"meta", ckpt.meta}, {"tensors", nlohmann::json::array()}};
    for (const auto& [name, m] : ckpt.tensors)
        header["tensors"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(kMagic.data(), kMagic.size());
    const std::uint32_t version = Checkpoint::kVersion;
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, m] : ckpt.tensors)
        out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing checkpoint: " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw DataError(path.string() + ": not a checkpoint file");
    std::uint32_t version = 0;
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in) throw DataError(path.string() + ": truncated header");
    if (version != Checkpoint::kVersion)
        throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError(path.string() + ": truncated header");

    Checkpoint ckpt;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
        ckpt.type = header.at("type").get<std::string>();
        ckpt.meta = header.at("meta");
        for (const auto& t : header.at("tensors")) {
            Matrix m(t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>());
            in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
            if (!in) throw DataError(path.string() + ": truncated payload");
            ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
    }
    return ckpt;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &n);
    std::ostringstream os;
    for (unsigned int i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
    return os.str();
}

}  // namespace docgcn
