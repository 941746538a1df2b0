#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "modnet/errors.hpp"

// Little-endian binary encoding helpers shared by the checkpoint and kb
// index formats. Payloads are byte buffers assembled in memory and written
// in one piece, which keeps save -> load -> save byte-identical.

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts are unsupported");

namespace modnet::binio {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    const std::size_t at = out.size();
    out.resize(at + 4);
    std::memcpy(out.data() + at, &v, 4);
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    const std::size_t at = out.size();
    out.resize(at + 8);
    std::memcpy(out.data() + at, &v, 8);
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    const std::size_t at = out.size();
    out.resize(at + 4);
    std::memcpy(out.data() + at, &v, 4);
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    const std::size_t at = out.size();
    out.resize(at + 8);
    std::memcpy(out.data() + at, &v, 8);
}

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t at = 0;
    std::string what;  // for error messages

    void need(std::size_t n) const {
        if (at + n > size) throw FormatError(what + ": truncated file");
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, data + at, 4);
        at += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, data + at, 8);
        at += 8;
        return v;
    }

    float f32() {
        need(4);
        float v;
        std::memcpy(&v, data + at, 4);
        at += 4;
        return v;
    }

    double f64() {
        need(8);
        double v;
        std::memcpy(&v, data + at, 8);
        at += 8;
        return v;
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data + at), n);
        at += n;
        return s;
    }
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace modnet::binio
