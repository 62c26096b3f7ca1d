#include "masim/codec.hpp"

#include <array>

namespace masim::codec {

uint16_t crc16(const BitVec& bits, uint16_t poly, uint16_t init) {
    uint16_t reg = init;
    for (uint8_t b : bits) {
        const uint16_t msb = (reg >> 15) & 1u;
        reg = static_cast<uint16_t>(reg << 1);
        if (msb ^ (b & 1u)) reg ^= poly;
    }
    return reg;
}

BitVec crc16_append(const BitVec& info) {
    if (info.size() != kInfoBits) throw InputError("crc16_append expects 200 bits");
    BitVec out = info;
    const uint16_t c = crc16(info);
    for (int i = kCrcBits - 1; i >= 0; --i) out.push_back((c >> i) & 1u);
    return out;
}

bool crc16_check(const BitVec& payload) {
    if (payload.size() != kPayloadBits) throw InputError("crc16_check expects 216 bits");
    // Running the register over message+CRC leaves zero iff the CRC matches.
    return crc16(payload) == 0;
}

namespace {

// GF(2^8) generated by x^8 + x^4 + x^3 + x^2 + 1.
struct Gf256 {
    std::array<int, 512> alpha_to{};  // doubled to spare a mod in mul
    std::array<int, 256> index_of{};
    std::array<uint8_t, 33> generator{};  // g(x) for the narrow-sense t=4 code
    int generator_degree = 0;

    Gf256() {
        constexpr int prim = 0x11D;
        int v = 1;
        for (int i = 0; i < 255; ++i) {
            alpha_to[i] = v;
            index_of[v] = i;
            v <<= 1;
            if (v & 0x100) v ^= prim;
        }
        for (int i = 255; i < 512; ++i) alpha_to[i] = alpha_to[i - 255];
        index_of[0] = -1;

        // g(x) = prod over the cyclotomic cosets of {1..8} of (x - alpha^i).
        std::array<bool, 255> is_root{};
        for (int base = 1; base <= 2 * kCorrectableErrors; ++base) {
            int e = base;
            do {
                is_root[e] = true;
                e = (2 * e) % 255;
            } while (e != base);
        }
        std::array<int, 33> g{};
        g[0] = 1;
        int deg = 0;
        for (int e = 0; e < 255; ++e) {
            if (!is_root[e]) continue;
            // multiply g(x) by (x + alpha^e)
            ++deg;
            for (int j = deg; j >= 1; --j)
                g[j] = g[j - 1] ^ mul(g[j], alpha_to[e]);
            g[0] = mul(g[0], alpha_to[e]);
        }
        generator_degree = deg;
        for (int j = 0; j <= deg; ++j) {
            if (g[j] != 0 && g[j] != 1)
                throw NumericError("bch generator is not binary");
            generator[j] = static_cast<uint8_t>(g[j]);
        }
    }

    int mul(int a, int b) const {
        if (a == 0 || b == 0) return 0;
        return alpha_to[index_of[a] + index_of[b]];
    }

    int inv(int a) const { return alpha_to[255 - index_of[a]]; }
};

const Gf256& gf() {
    static const Gf256 table;
    return table;
}

constexpr int kFullLength = 255;
constexpr int kParityBits = 32;

}  // namespace

BitVec bch_encode(const BitVec& payload) {
    if (payload.size() != kPayloadBits) throw InputError("bch_encode expects 216 bits");
    const auto& field = gf();

    // Systematic encoding of the length-223 message (7 virtual zeros up
    // front): parity = x^32 * m(x) mod g(x) via an LFSR over the message bits.
    std::array<uint8_t, kParityBits> parity{};
    auto shift_in = [&](uint8_t bit) {
        const uint8_t feedback = bit ^ parity[kParityBits - 1];
        for (int j = kParityBits - 1; j > 0; --j)
            parity[j] = parity[j - 1] ^ (feedback & field.generator[j]);
        parity[0] = feedback & field.generator[0];
    };
    for (int i = 0; i < kShortenBy; ++i) shift_in(0);  // virtual zeros
    for (uint8_t b : payload) shift_in(b);

    BitVec out = payload;
    out.reserve(kCodedBits);
    for (int j = kParityBits - 1; j >= 0; --j) out.push_back(parity[j]);
    return out;
}

DecodeOutcome bch_decode(const BitVec& coded) {
    if (coded.size() != kCodedBits) throw InputError("bch_decode expects 248 bits");
    const auto& field = gf();

    // Re-insert the 7 shortened zeros; word[i] is the coefficient of
    // x^(254-i), so transmitted bit j sits at word[j + 7].
    std::array<uint8_t, kFullLength> word{};
    for (int j = 0; j < kCodedBits; ++j) word[j + kShortenBy] = coded[j] & 1u;

    BitVec working(coded);
    auto finish = [&](DecodeStatus status, int nerr) {
        DecodeOutcome out;
        BitVec payload(working.begin(), working.begin() + kPayloadBits);
        if (!crc16_check(payload)) {
            out.status = DecodeStatus::Failed;
            return out;
        }
        out.status = status;
        out.num_bit_errors = nerr;
        out.bits.assign(working.begin(), working.begin() + kInfoBits);
        return out;
    };

    // Syndromes S_i = r(alpha^i), i = 1..8.
    std::array<int, 2 * kCorrectableErrors + 1> syn{};
    bool all_zero = true;
    for (int i = 1; i <= 2 * kCorrectableErrors; ++i) {
        int s = 0;
        for (int pos = 0; pos < kFullLength; ++pos) {
            if (!word[pos]) continue;
            s ^= field.alpha_to[(static_cast<long>(i) * (kFullLength - 1 - pos)) % 255];
        }
        syn[i] = s;
        if (s != 0) all_zero = false;
    }
    if (all_zero) return finish(DecodeStatus::Clean, 0);

    // Berlekamp-Massey for the error locator sigma(x). Scratch is sized for
    // degree 2t so that undecodable words cannot overflow; they fall through
    // to the degree checks below and report Failed.
    constexpr int kSigmaLen = 4 * kCorrectableErrors + 2;
    std::array<int, kSigmaLen> sigma{}, prev_sigma{}, tmp{};
    sigma[0] = 1;
    prev_sigma[0] = 1;
    int l = 0;           // current locator degree
    int prev_disc = 1;   // discrepancy at the last length change
    int shift = 1;       // x^shift multiplier for the correction term
    for (int step = 1; step <= 2 * kCorrectableErrors; ++step) {
        int disc = syn[step];
        for (int j = 1; j <= l && j < kSigmaLen; ++j)
            disc ^= field.mul(sigma[j], syn[step - j]);
        if (disc == 0) {
            ++shift;
            continue;
        }
        tmp = sigma;
        const int scale = field.mul(disc, field.inv(prev_disc));
        for (int j = 0; j + shift < kSigmaLen; ++j) {
            if (!prev_sigma[j]) continue;
            sigma[j + shift] ^= field.mul(scale, prev_sigma[j]);
        }
        if (2 * l <= step - 1) {
            l = step - l;
            prev_sigma = tmp;
            prev_disc = disc;
            shift = 1;
        } else {
            ++shift;
        }
    }
    if (l > kCorrectableErrors) return DecodeOutcome{};
    int degree = 0;
    for (int j = kSigmaLen - 1; j >= 1; --j)
        if (sigma[j] != 0) { degree = j; break; }
    if (degree != l || degree == 0 || degree > kCorrectableErrors) return DecodeOutcome{};

    // Chien search: position pos carries x^(254-pos); an error there makes
    // alpha^-(254-pos) a root of sigma.
    int found = 0;
    for (int pos = 0; pos < kFullLength && found < degree; ++pos) {
        const int e = kFullLength - 1 - pos;
        int val = 0;
        for (int j = 0; j <= degree; ++j) {
            if (!sigma[j]) continue;
            val ^= field.mul(sigma[j], field.alpha_to[(static_cast<long>(j) * (255 - e % 255)) % 255]);
        }
        if (val == 0) {
            if (pos < kShortenBy) return DecodeOutcome{};  // virtual position
            working[pos - kShortenBy] ^= 1u;
            ++found;
        }
    }
    if (found != degree) return DecodeOutcome{};
    return finish(DecodeStatus::Corrected, degree);
}

}  // namespace masim::codec
