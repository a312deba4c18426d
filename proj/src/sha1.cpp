#include "ptfprg/sha1.hpp"

#include <cstring>
#include <vector>

namespace ptfprg {

static uint32_t rotl(uint32_t x, int s) { return (x << s) | (x >> (32 - s)); }

std::string sha1_hex(const std::string& data) {
    uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

    std::vector<uint8_t> msg(data.begin(), data.end());
    uint64_t bit_len = 8ull * msg.size();
    msg.push_back(0x80);
    while (msg.size() % 64 != 56) msg.push_back(0);
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<uint8_t>(bit_len >> (8 * i)));

    for (size_t off = 0; off < msg.size(); off += 64) {
        uint32_t w[80];
        for (int t = 0; t < 16; ++t) {
            w[t] = (uint32_t(msg[off + 4 * t]) << 24) | (uint32_t(msg[off + 4 * t + 1]) << 16) |
                   (uint32_t(msg[off + 4 * t + 2]) << 8) | uint32_t(msg[off + 4 * t + 3]);
        }
        for (int t = 16; t < 80; ++t) w[t] = rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);

        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int t = 0; t < 80; ++t) {
            uint32_t f, k;
            if (t < 20) { f = (b & c) | (~b & d); k = 0x5A827999u; }
            else if (t < 40) { f = b ^ c ^ d; k = 0x6ED9EBA1u; }
            else if (t < 60) { f = (b & c) | (b & d) | (c & d); k = 0x8F1BBCDCu; }
            else { f = b ^ c ^ d; k = 0xCA62C1D6u; }
            uint32_t tmp = rotl(a, 5) + f + e + k + w[t];
            e = d; d = c; c = rotl(b, 30); b = a; a = tmp;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d; h[4] += e;
    }

    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(40);
    for (uint32_t v : h) {
        for (int i = 28; i >= 0; i -= 4) out.push_back(digits[(v >> i) & 15]);
    }
    return out;
}

}  // namespace ptfprg
