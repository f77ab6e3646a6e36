#include "cli_support.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include "szero/errors.hpp"

namespace szero::cli {

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

LoadedData load_dataset(const std::string& path, const std::string& labels) {
    LoadedData out;
    const std::filesystem::path p(path);
    if (p.extension() == ".csv") {
        out.data = load_csv(p);
        out.files = {p};
    } else {
        std::filesystem::path lab(labels);
        if (labels.empty()) {
            std::string name = p.filename().string();
            const auto pos = name.find("images-idx3");
            if (pos == std::string::npos) {
                throw ConfigError("cannot derive a label file from '" + name + "'; pass --labels");
            }
            name.replace(pos, 11, "labels-idx1");
            lab = p.parent_path() / name;
        }
        out.data = load_idx(p, lab);
        out.files = {p, lab};
    }
    std::string combined;
    for (const auto& f : out.files) combined += sha256_file(f);
    out.sha256 = out.files.size() == 1 ? combined : sha256_hex(combined);
    return out;
}

namespace {

std::vector<std::size_t> split_dims(const std::string& text, char sep) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep)) {
        try {
            std::size_t used = 0;
            const unsigned long v = std::stoul(part, &used);
            if (used != part.size() || v == 0) throw std::invalid_argument(part);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("bad dimension '" + part + "' in architecture");
        }
    }
    return out;
}

}  // namespace

Model parse_arch(const std::string& arch) {
    const auto colon = arch.find(':');
    if (colon == std::string::npos) throw ConfigError("architecture must look like kind:dims");
    const std::string kind = arch.substr(0, colon);
    const std::string dims = arch.substr(colon + 1);
    if (kind == "mlp") return make_mlp(split_dims(dims, '-'));
    if (kind == "linear") {
        const auto w = split_dims(dims, '-');
        if (w.size() != 2) throw ConfigError("linear architecture is linear:IN-CLASSES");
        return make_mlp(w);
    }
    if (kind == "cnn") {
        const auto dash = dims.find('-');
        if (dash == std::string::npos) throw ConfigError("cnn architecture is cnn:CxHxW-F-C");
        const auto input = split_dims(dims.substr(0, dash), 'x');
        const auto rest = split_dims(dims.substr(dash + 1), '-');
        if (input.size() != 3 || rest.size() != 2) throw ConfigError("cnn architecture is cnn:CxHxW-F-C");
        const std::size_t filters = rest[0], classes = rest[1];
        const std::size_t pooled = filters * (input[1] / 2) * (input[2] / 2);
        std::vector<Layer> layers;
        layers.emplace_back(Conv2D{Tensor({filters, input[0], 3, 3}), Tensor({filters}), 1, 1});
        layers.emplace_back(ReLU{});
        layers.emplace_back(MaxPool2D{2, 2});
        layers.emplace_back(Flatten{});
        layers.emplace_back(Dense{Tensor({classes, pooled}), Tensor({classes})});
        return Model({input[0], input[1], input[2]}, std::move(layers));
    }
    throw ConfigError("unknown architecture kind '" + kind + "'");
}

void write_manifest(const std::filesystem::path& dir, const std::string& subcommand,
                    const nlohmann::json& flags, const nlohmann::json& extra) {
    nlohmann::json manifest = extra;
    manifest["subcommand"] = subcommand;
    manifest["flags"] = flags;
    manifest["tool_version"] = kToolVersion;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

std::size_t resolve_workers(std::optional<std::size_t> flag) {
    if (flag) return std::max<std::size_t>(1, *flag);
    if (const char* env = std::getenv("SZERO_WORKERS")) {
        try {
            return std::max<std::size_t>(1, std::stoul(env));
        } catch (const std::exception&) {
            throw ConfigError("SZERO_WORKERS must be a positive integer");
        }
    }
    return 1;
}

}  // namespace szero::cli
