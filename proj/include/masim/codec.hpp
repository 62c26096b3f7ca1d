#pragma once

#include <cstdint>

#include "masim/types.hpp"

namespace masim::codec {

// Packet geometry: 200 info bits + 16 CRC bits, BCH(255,223) shortened by 7
// known-zero positions to a (248,216) code, t = 4.
inline constexpr int kInfoBits = 200;
inline constexpr int kCrcBits = 16;
inline constexpr int kPayloadBits = kInfoBits + kCrcBits;  // 216
inline constexpr int kCodedBits = 248;
inline constexpr int kShortenBy = 255 - kCodedBits;        // 7
inline constexpr int kCorrectableErrors = 4;

// CRC-16/CCITT-FALSE register over an arbitrary bit vector, bits consumed
// most-significant-bit-first. The polynomial parameter exists for the
// negative-control oracle only.
uint16_t crc16(const BitVec& bits, uint16_t poly = 0x1021, uint16_t init = 0xFFFF);

BitVec crc16_append(const BitVec& info);     // 200 -> 216
bool crc16_check(const BitVec& payload);     // 216 -> remainder match

enum class DecodeStatus { Clean, Corrected, Failed };

struct DecodeOutcome {
    DecodeStatus status = DecodeStatus::Failed;
    int num_bit_errors = 0;   // 1..4 when Corrected
    BitVec bits;              // 200 info bits when status != Failed

    bool ok() const { return status != DecodeStatus::Failed; }
};

BitVec bch_encode(const BitVec& payload);    // 216 -> 248
DecodeOutcome bch_decode(const BitVec& coded);  // 248 -> outcome

}  // namespace masim::codec
