#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptfprg {

// Thrown when a seed stream runs out of bits mid-parse.
struct seed_underflow_error : std::runtime_error {
    explicit seed_underflow_error(const std::string& what) : std::runtime_error(what) {}
};

// A stream of bits consumed most-significant-first. All seed parsing in the
// project goes through this interface so the bit order is frozen in one place.
class BitSource {
public:
    virtual ~BitSource() = default;

    // Read the next `nbits` bits (1..64) as a big-endian integer.
    // Throws seed_underflow_error if the stream is exhausted.
    virtual uint64_t read(int nbits) = 0;

    // Total bits handed out so far.
    virtual uint64_t bits_read() const = 0;
};

// BitSource over a byte buffer; bit 7 of byte 0 comes first.
class BitReader final : public BitSource {
public:
    BitReader(const uint8_t* data, uint64_t bit_length)
        : data_(data), bit_length_(bit_length) {}
    explicit BitReader(const std::vector<uint8_t>& bytes)
        : BitReader(bytes.data(), 8 * static_cast<uint64_t>(bytes.size())) {}

    uint64_t read(int nbits) override;
    uint64_t bits_read() const override { return pos_; }
    uint64_t bits_left() const { return bit_length_ - pos_; }

private:
    const uint8_t* data_;
    uint64_t bit_length_;
    uint64_t pos_ = 0;
};

// Big-endian bit packer used to build explicit seed buffers in tests and the CLI.
class BitWriter {
public:
    void write(uint64_t value, int nbits);
    uint64_t bit_length() const { return bits_; }
    const std::vector<uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<uint8_t> bytes_;
    uint64_t bits_ = 0;
};

std::vector<uint8_t> hex_to_bytes(const std::string& hex);  // throws std::invalid_argument
std::string bytes_to_hex(const std::vector<uint8_t>& bytes);

}  // namespace ptfprg
