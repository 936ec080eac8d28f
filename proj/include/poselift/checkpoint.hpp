#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "poselift/errors.hpp"
#include "poselift/model.hpp"

namespace poselift {

// Checkpoint layout: magic line, u32 manifest length, manifest JSON
// (descriptor, version, seed, step + module extras), then per parameter:
// u16 name length, name, u64 scalar count, raw little-endian doubles.
// Doubles round-trip bit-exactly.

inline constexpr char kCheckpointMagic[] = "PLCKPT1\n";

namespace detail {

inline void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}
inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}
inline void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(os, bits);
}
inline double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace detail

struct Checkpoint {
    nlohmann::json manifest;  // descriptor, version, seed, step, extras
    ParamModel model;
};

inline void save_checkpoint(const std::string& path, const ParamModel& model,
                            nlohmann::json manifest) {
    manifest["descriptor"] = model.desc;
    if (!manifest.contains("version")) manifest["version"] = 1;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open checkpoint for write: " + path);
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    const std::string mtext = manifest.dump();
    detail::put_u32(os, static_cast<std::uint32_t>(mtext.size()));
    os.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(model.params.size()));
    for (const auto& [name, t] : model.params) {
        detail::put_u16(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put_u64(os, t.rows);
        detail::put_u64(os, t.cols);
        for (double d : t.data) detail::put_f64(os, d);
    }
    if (!os) throw FormatError("short write on checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint: " + path);
    char magic[sizeof(kCheckpointMagic) - 1];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw FormatError("bad checkpoint magic: " + path);
    const std::uint32_t mlen = detail::get_u32(is);
    std::string mtext(mlen, '\0');
    is.read(mtext.data(), mlen);
    Checkpoint ck;
    try {
        ck.manifest = nlohmann::json::parse(mtext);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint manifest: ") + e.what());
    }
    ck.model.desc = ck.manifest.at("descriptor");
    const std::uint32_t nparams = detail::get_u32(is);
    for (std::uint32_t p = 0; p < nparams; ++p) {
        const std::uint16_t nlen = detail::get_u16(is);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        Tensor t;
        t.rows = detail::get_u64(is);
        t.cols = detail::get_u64(is);
        t.data.resize(t.rows * t.cols);
        for (double& d : t.data) d = detail::get_f64(is);
        ck.model.params.emplace_back(std::move(name), std::move(t));
    }
    if (!is) throw FormatError("truncated checkpoint: " + path);
    return ck;
}

}  // namespace poselift
