#pragma once

// Deterministic userid pseudonymization: AES-128-ECB over the UTF-8 userid
// with PKCS#7 padding, rendered as lowercase hex.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "top/error.hpp"

namespace top::dataset {

using AesKey = std::array<std::uint8_t, 16>;
using AesBlock = std::array<std::uint8_t, 16>;

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline std::vector<std::uint8_t> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw InvalidArgument("hex string has odd length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw InvalidArgument(std::string("invalid hex digit '") + c + "'");
    };
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return out;
}

inline AesKey key_from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 16)
        throw InvalidArgument("AES-128 key must be exactly 16 bytes, got " + std::to_string(bytes.size()));
    AesKey k{};
    std::copy(bytes.begin(), bytes.end(), k.begin());
    return k;
}

/// 32 hex characters.
inline AesKey parse_key_hex(std::string_view hex) {
    if (hex.size() != 32) throw InvalidArgument("AES key must be 32 hex characters, got " + std::to_string(hex.size()));
    return key_from_bytes(from_hex(hex));
}

inline AesKey key_from_env(const char* var = "TOP_AES_KEY") {
    const char* v = std::getenv(var);
    if (v == nullptr || *v == '\0') throw ConfigError(std::string(var) + " is not set");
    try {
        return parse_key_hex(v);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string(var) + ": " + e.what());
    }
}

namespace detail {

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

inline std::vector<std::uint8_t> aes128_ecb(const AesKey& key, std::span<const std::uint8_t> in, bool pad) {
    std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter> ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1)
        throw Error("AES initialisation failed");
    EVP_CIPHER_CTX_set_padding(ctx.get(), pad ? 1 : 0);
    std::vector<std::uint8_t> out(in.size() + 16);
    int n1 = 0, n2 = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &n1, in.data(), static_cast<int>(in.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx.get(), out.data() + n1, &n2) != 1)
        throw Error("AES encryption failed");
    out.resize(static_cast<std::size_t>(n1 + n2));
    return out;
}

} // namespace detail

/// Single-block encryption with no padding.
inline AesBlock aes128_encrypt_block(const AesKey& key, const AesBlock& block) {
    const auto out = detail::aes128_ecb(key, block, false);
    AesBlock b{};
    std::copy(out.begin(), out.end(), b.begin());
    return b;
}

inline std::string anonymize_userid(const AesKey& key, std::string_view userid) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(userid.data());
    return to_hex(detail::aes128_ecb(key, std::span<const std::uint8_t>(p, userid.size()), true));
}

inline std::string anonymize_userid(std::span<const std::uint8_t> key, std::string_view userid) {
    return anonymize_userid(key_from_bytes(key), userid);
}

} // namespace top::dataset
