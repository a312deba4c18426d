#include "ptfprg/bits.hpp"

#include <stdexcept>

namespace ptfprg {

uint64_t BitReader::read(int nbits) {
    if (nbits < 1 || nbits > 64) throw std::invalid_argument("BitReader::read: nbits out of range");
    if (pos_ + static_cast<uint64_t>(nbits) > bit_length_) {
        throw seed_underflow_error("seed underflow: need " + std::to_string(nbits) +
                                   " bits, have " + std::to_string(bit_length_ - pos_));
    }
    uint64_t out = 0;
    for (int i = 0; i < nbits; ++i) {
        uint64_t p = pos_ + i;
        uint64_t bit = (data_[p >> 3] >> (7 - (p & 7))) & 1u;
        out = (out << 1) | bit;
    }
    pos_ += nbits;
    return out;
}

void BitWriter::write(uint64_t value, int nbits) {
    if (nbits < 1 || nbits > 64) throw std::invalid_argument("BitWriter::write: nbits out of range");
    for (int i = nbits - 1; i >= 0; --i) {
        if (bits_ % 8 == 0) bytes_.push_back(0);
        uint64_t bit = (value >> i) & 1u;
        bytes_.back() |= static_cast<uint8_t>(bit << (7 - (bits_ & 7)));
        ++bits_;
    }
}

static int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::vector<uint8_t> hex_to_bytes(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("hex string must have even length");
    std::vector<uint8_t> out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_digit(hex[i]), lo = hex_digit(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit in seed string");
        out.push_back(static_cast<uint8_t>(hi << 4 | lo));
    }
    return out;
}

std::string bytes_to_hex(const std::vector<uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 15]);
    }
    return out;
}

}  // namespace ptfprg
