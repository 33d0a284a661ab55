#include "hinet/util.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hinet/common.hpp"

namespace hinet {

namespace {

inline uint32_t rotl32(uint32_t v, int s) {
    return (v << s) | (v >> (32 - s));
}

}  // namespace

std::string sha1_hex(std::string_view data) {
    uint32_t h[5] = {0x67452301u, 0xefcdab89u, 0x98badcfeu, 0x10325476u,
                     0xc3d2e1f0u};

    // Message is padded with 0x80, zeros, and the 64-bit bit length.
    std::vector<unsigned char> msg(data.begin(), data.end());
    const uint64_t bit_len = static_cast<uint64_t>(msg.size()) * 8;
    msg.push_back(0x80);
    while (msg.size() % 64 != 56) msg.push_back(0x00);
    for (int i = 7; i >= 0; --i)
        msg.push_back(static_cast<unsigned char>((bit_len >> (8 * i)) & 0xff));

    uint32_t w[80];
    for (size_t chunk = 0; chunk < msg.size(); chunk += 64) {
        const unsigned char* p = msg.data() + chunk;
        for (int t = 0; t < 16; ++t) {
            w[t] = (static_cast<uint32_t>(p[4 * t]) << 24) |
                   (static_cast<uint32_t>(p[4 * t + 1]) << 16) |
                   (static_cast<uint32_t>(p[4 * t + 2]) << 8) |
                   static_cast<uint32_t>(p[4 * t + 3]);
        }
        for (int t = 16; t < 80; ++t)
            w[t] = rotl32(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);

        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int t = 0; t < 80; ++t) {
            uint32_t f, k;
            if (t < 20) {
                f = (b & c) | ((~b) & d);
                k = 0x5a827999u;
            } else if (t < 40) {
                f = b ^ c ^ d;
                k = 0x6ed9eba1u;
            } else if (t < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8f1bbcdcu;
            } else {
                f = b ^ c ^ d;
                k = 0xca62c1d6u;
            }
            const uint32_t tmp = rotl32(a, 5) + f + e + k + w[t];
            e = d;
            d = c;
            c = rotl32(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    static const char* hexdig = "0123456789abcdef";
    std::string out(40, '0');
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 8; ++j)
            out[8 * i + j] = hexdig[(h[i] >> (28 - 4 * j)) & 0xf];
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    HINET_CHECK(in.good(), IoError, "cannot open file for reading: ", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    HINET_CHECK(!in.bad(), IoError, "read failed: ", path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    HINET_CHECK(out.good(), IoError, "cannot open file for writing: ", path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    HINET_CHECK(out.good(), IoError, "write failed: ", path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

int CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    fail<DataError>("csv column not found: ", name);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    HINET_CHECK(in.good(), IoError, "cannot open csv: ", path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            HINET_CHECK(fields.size() == table.header.size(), DataError,
                        "csv row width mismatch in ", path, ": expected ",
                        table.header.size(), " fields, got ", fields.size());
            table.rows.push_back(std::move(fields));
        }
    }
    HINET_CHECK(!first, DataError, "csv file has no header row: ", path);
    return table;
}

}  // namespace hinet
