#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace rectflow {

// FNV-1a 64-bit. Used for config/content fingerprints in manifests and
// artifact headers (lineage checks, not security).
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::string hex16(std::uint64_t v);

// FNV-1a of a file's bytes; throws IoError if unreadable.
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace rectflow
