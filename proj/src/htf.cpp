#include "hazeforge/htf.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace hazeforge {

namespace {

static_assert(sizeof(double) == 8 && sizeof(float) == 4, "unexpected float sizes");

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw io_error("write failed: " + path);
}

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw io_error("cannot open: " + path);
    const std::streamsize size = f.tellg();
    f.seekg(0);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw io_error("read failed: " + path);
    return bytes;
}

}  // namespace

std::vector<unsigned char> encode_htf(const Tensor& t) {
    std::vector<unsigned char> out;
    out.reserve(6 + 8 * t.rank() + t.numel() * sizeof(real));
    out.push_back('H');
    out.push_back('T');
    out.push_back('F');
    out.push_back('1');
    out.push_back(sizeof(real) == 8 ? 0 : 1);
    out.push_back(static_cast<unsigned char>(t.rank()));
    for (std::size_t d = 0; d < t.rank(); ++d) put_u64(out, t.extent(d));
    // x86-64 little-endian layout is the file layout.
    const unsigned char* raw = reinterpret_cast<const unsigned char*>(t.data());
    out.insert(out.end(), raw, raw + t.numel() * sizeof(real));
    return out;
}

Tensor decode_htf(const unsigned char* bytes, std::size_t size) {
    if (size < 6 || std::memcmp(bytes, "HTF1", 4) != 0)
        throw format_error("not an HTF1 tensor (bad magic)");
    const unsigned char dtype = bytes[4];
    const unsigned char rank = bytes[5];
    if (dtype > 1) throw format_error("HTF1: unknown dtype code " + std::to_string(dtype));
    std::size_t pos = 6;
    if (size < pos + 8 * static_cast<std::size_t>(rank)) throw format_error("HTF1: truncated header");
    Shape shape(rank);
    std::size_t numel = 1;
    for (unsigned i = 0; i < rank; ++i) {
        shape[i] = static_cast<std::size_t>(get_u64(bytes + pos));
        pos += 8;
        numel *= shape[i];
    }
    const std::size_t elem = dtype == 0 ? 8 : 4;
    if (size != pos + numel * elem) throw format_error("HTF1: payload size mismatch");

    std::vector<real> data(numel);
    if (dtype == 0) {
        for (std::size_t i = 0; i < numel; ++i) {
            double v;
            std::memcpy(&v, bytes + pos + i * 8, 8);
            data[i] = static_cast<real>(v);
        }
    } else {
        for (std::size_t i = 0; i < numel; ++i) {
            float v;
            std::memcpy(&v, bytes + pos + i * 4, 4);
            data[i] = static_cast<real>(v);
        }
    }
    return Tensor::from(std::move(shape), std::move(data));
}

void save_htf(const Tensor& t, const std::string& path) { write_file(path, encode_htf(t)); }

Tensor load_htf(const std::string& path) {
    const auto bytes = read_file(path);
    return decode_htf(bytes.data(), bytes.size());
}

void save_archive(const std::vector<NamedTensor>& entries, const std::string& path) {
    std::vector<std::vector<unsigned char>> blobs;
    blobs.reserve(entries.size());
    for (const auto& e : entries) blobs.push_back(encode_htf(e.tensor));

    std::size_t header = 4 + 8;
    for (const auto& e : entries) header += 2 + e.name.size() + 8 + 8;

    std::vector<unsigned char> out;
    out.push_back('H');
    out.push_back('T');
    out.push_back('A');
    out.push_back('1');
    put_u64(out, entries.size());
    std::size_t offset = header;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& name = entries[i].name;
        if (name.size() > 0xffff) throw format_error("archive entry name too long: " + name);
        out.push_back(static_cast<unsigned char>(name.size() & 0xff));
        out.push_back(static_cast<unsigned char>((name.size() >> 8) & 0xff));
        out.insert(out.end(), name.begin(), name.end());
        put_u64(out, offset);
        put_u64(out, blobs[i].size());
        offset += blobs[i].size();
    }
    for (const auto& b : blobs) out.insert(out.end(), b.begin(), b.end());
    write_file(path, out);
}

std::vector<NamedTensor> load_archive(const std::string& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "HTA1", 4) != 0)
        throw format_error("not an HTF1 archive (bad magic): " + path);
    const std::uint64_t count = get_u64(bytes.data() + 4);
    std::size_t pos = 12;
    std::vector<NamedTensor> entries;
    entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        if (pos + 2 > bytes.size()) throw format_error("archive: truncated index");
        const std::size_t nlen = bytes[pos] | (static_cast<std::size_t>(bytes[pos + 1]) << 8);
        pos += 2;
        if (pos + nlen + 16 > bytes.size()) throw format_error("archive: truncated index");
        std::string name(reinterpret_cast<const char*>(bytes.data() + pos), nlen);
        pos += nlen;
        const std::uint64_t offset = get_u64(bytes.data() + pos);
        pos += 8;
        const std::uint64_t size = get_u64(bytes.data() + pos);
        pos += 8;
        if (offset + size > bytes.size()) throw format_error("archive: entry out of bounds: " + name);
        entries.push_back({std::move(name), decode_htf(bytes.data() + offset, size)});
    }
    return entries;
}

}  // namespace hazeforge
