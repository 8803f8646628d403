#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace designpipe {

std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const uint8_t> data);

// First 8 bytes of the SHA-256 digest, big-endian.
uint64_t hash64(std::string_view data);

std::string base64_encode(std::span<const uint8_t> data);
std::vector<uint8_t> base64_decode(std::string_view text);

}  // namespace designpipe
