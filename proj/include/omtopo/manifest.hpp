#pragma once

// Run manifests: every output file is listed with its SHA-256 so a later
// verify() can detect modified or missing artifacts.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "omtopo/error.hpp"
#include "omtopo/json_io.hpp"

namespace omtopo {

inline std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
        throw Error("sha256: OpenSSL digest failed");
    std::string hex;
    hex.reserve(2 * len);
    static constexpr char digits[] = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
        hex += digits[digest[i] >> 4];
        hex += digits[digest[i] & 0xF];
    }
    return hex;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, std::string_view text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + p.string() + " for writing");
    out << text;
    if (!out) throw Error("failed writing " + p.string());
}

struct OutputEntry {
    std::string kind;
    std::string path; ///< relative to the manifest directory
    std::string sha256;
};

/// Collects outputs written under one directory.
class Manifest {
public:
    explicit Manifest(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& dir() const noexcept { return dir_; }
    const std::vector<OutputEntry>& outputs() const noexcept { return outputs_; }

    /// Writes `text` to dir/relative and records its checksum.
    void add(const std::string& kind, const std::string& relative, std::string_view text) {
        write_file(dir_ / relative, text);
        outputs_.push_back({kind, relative, sha256_hex(text)});
    }

    json outputs_json() const {
        json a = json::array();
        for (const auto& o : outputs_) a.push_back({{"kind", o.kind}, {"path", o.path}, {"sha256", o.sha256}});
        return a;
    }

private:
    std::filesystem::path dir_;
    std::vector<OutputEntry> outputs_;
};

struct VerifyIssue {
    std::string path;
    std::string problem; ///< "missing" or "checksum mismatch"
};

/// Re-hashes every output listed in a manifest file (paths relative to it).
inline std::vector<VerifyIssue> verify_manifest(const std::filesystem::path& manifest_path) {
    json m;
    try {
        m = json::parse(read_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw ConfigError(manifest_path.string(), std::string("invalid manifest JSON: ") + e.what());
    }
    if (!m.contains("outputs") || !m["outputs"].is_array()) throw ConfigError("outputs", "manifest has no outputs array");
    const auto base = manifest_path.parent_path();
    std::vector<VerifyIssue> issues;
    for (const auto& o : m["outputs"]) {
        const auto rel = o.at("path").get<std::string>();
        const auto p = base / rel;
        if (!std::filesystem::exists(p)) {
            issues.push_back({rel, "missing"});
            continue;
        }
        if (sha256_hex(read_file(p)) != o.at("sha256").get<std::string>()) issues.push_back({rel, "checksum mismatch"});
    }
    return issues;
}

} // namespace omtopo
