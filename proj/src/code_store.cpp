/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/code_store.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "byte_io.hpp"
#include "fenshses/error.hpp"

namespace fenshses {

namespace {

constexpr std::string_view kMagic = "FBIN";
constexpr uint16_t kVersion = 1;
constexpr size_t kHeaderBytes = 4 + 2 + 4 + 8;

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

CodeDataset::CodeDataset(const std::vector<BinaryCode>& codes) {
    if (codes.empty()) {
        throw EmptyInputError("dataset has no codes");
    }
    m_ = codes.front().length();
    n_ = codes.size();
    stride_ = words_for_bits(m_);
    words_.reserve(n_ * stride_);
    for (const auto& c : codes) {
        if (c.length() != m_) {
            throw InvalidArgument("dataset codes must share one length: " + std::to_string(m_) +
                                  " vs " + std::to_string(c.length()));
        }
        words_.insert(words_.end(), c.words().begin(), c.words().end());
    }
}

CodeDataset::CodeDataset(uint32_t m, std::vector<uint64_t> words)
        : m_(m), n_(0), stride_(words_for_bits(m)), words_(std::move(words)) {
    if (m == 0) {
        throw EmptyInputError("dataset code length is zero");
    }
    if (words_.empty()) {
        throw EmptyInputError("dataset has no codes");
    }
    if (words_.size() % stride_ != 0) {
        throw InvalidArgument("word count is not a multiple of the code stride");
    }
    n_ = words_.size() / stride_;
    if (m % 64 != 0) {
        const uint64_t pad = ~((uint64_t{1} << (m % 64)) - 1);
        for (size_t i = 0; i < n_; ++i) {
            if (words_[(i + 1) * stride_ - 1] & pad) {
                throw InvalidArgument("code " + std::to_string(i) + " has bits set beyond m");
            }
        }
    }
}

BinaryCode CodeDataset::code(size_t id) const {
    auto w = words(id);
    return BinaryCode(m_, std::vector<uint64_t>(w.begin(), w.end()));
}

uint64_t CodeDataset::content_hash() const {
    Fnv1a h;
    h.update_u64(m_);
    h.update_u64(n_);
    for (uint64_t w : words_) {
        h.update_u64(w);
    }
    return h.digest();
}

void Fnv1a::update(const void* data, size_t len) {
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < len; ++i) {
        state_ ^= p[i];
        state_ *= 0x100000001b3ull;
    }
}

void Fnv1a::update_u64(uint64_t v) {
    uint8_t le[8];
    for (int i = 0; i < 8; ++i) {
        le[i] = static_cast<uint8_t>(v >> (8 * i));
    }
    update(le, sizeof le);
}

CodeDataset load_dataset(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    if (bytes.size() < kMagic.size() ||
        std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
        throw FormatError(path.string() + ": not an FBIN file (bad magic)");
    }
    detail::ByteReader in(bytes, path.string());
    in.bytes(kMagic.size());
    const uint16_t version = in.u16();
    if (version != kVersion) {
        throw FormatError(path.string() + ": unsupported FBIN version " + std::to_string(version));
    }
    const uint32_t m = in.u32();
    const uint64_t n = in.u64();
    if (m == 0 || n == 0) {
        throw EmptyInputError(path.string() + ": empty dataset (m=" + std::to_string(m) +
                              ", n=" + std::to_string(n) + ")");
    }
    const size_t stride = words_for_bits(m);
    if (n > (in.remaining() / 8) / stride) {
        throw CorruptionError(path.string() + ": truncated payload, header promises " +
                              std::to_string(n) + " codes");
    }
    std::vector<uint64_t> words(n * stride);
    for (auto& w : words) {
        w = in.u64();
    }
    if (in.remaining() != 0) {
        throw CorruptionError(path.string() + ": " + std::to_string(in.remaining()) +
                              " trailing bytes after payload");
    }
    try {
        return CodeDataset(m, std::move(words));
    } catch (const InvalidArgument& e) {
        throw CorruptionError(path.string() + ": " + e.what());
    }
}

void save_dataset(const CodeDataset& ds, const std::filesystem::path& path) {
    detail::ByteWriter out;
    out.bytes(kMagic);
    out.u16(kVersion);
    out.u32(ds.code_length());
    out.u64(ds.size());
    for (uint64_t w : ds.all_words()) {
        out.u64(w);
    }
    static_assert(kHeaderBytes == 18);
    detail::write_file_synced(path, out.data());
}

CodeDataset load_text_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    std::string line;
    uint32_t m = 0;
    bool have_header = false;
    std::vector<BinaryCode> codes;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        if (!have_header) {
            if (t.substr(0, 2) != "m=") {
                throw FormatError(path.string() + ": first line must be m=<int>");
            }
            try {
                m = static_cast<uint32_t>(std::stoul(std::string(t.substr(2))));
            } catch (const std::exception&) {
                throw FormatError(path.string() + ": bad m= header");
            }
            if (m == 0) {
                throw EmptyInputError(path.string() + ": m is zero");
            }
            have_header = true;
            continue;
        }
        try {
            codes.push_back(parse_code_hex(t, m));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_header) {
        throw FormatError(path.string() + ": missing m=<int> header");
    }
    if (codes.empty()) {
        throw EmptyInputError(path.string() + ": no codes");
    }
    return CodeDataset(codes);
}

void save_text_dataset(const CodeDataset& ds, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "m=" << ds.code_length() << '\n';
    for (size_t i = 0; i < ds.size(); ++i) {
        out << format_code_hex(ds.code(i)) << '\n';
    }
    const std::string s = out.str();
    detail::write_file_synced(path, std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

CodeDataset load_any_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    char head[4] = {};
    in.read(head, 4);
    if (in.gcount() == 4 && std::string_view(head, 4) == kMagic) {
        return load_dataset(path);
    }
    return load_text_dataset(path);
}

BinaryCode parse_code_hex(std::string_view text, uint32_t m) {
    const size_t digits = (m + 3) / 4;
    if (text.size() != digits) {
        throw ParseError("expected " + std::to_string(digits) + " hex digits for m=" +
                         std::to_string(m) + ", got " + std::to_string(text.size()));
    }
    std::vector<uint64_t> words(words_for_bits(m), 0);
    for (size_t k = 0; k < digits; ++k) {
        const int v = hex_value(text[k]);
        if (v < 0) {
            throw ParseError(std::string("invalid hex character '") + text[k] + "'");
        }
        const size_t low_bit = 4 * (digits - 1 - k);
        for (int b = 0; b < 4; ++b) {
            if (((v >> b) & 1) == 0) continue;
            const size_t bit = low_bit + static_cast<size_t>(b);
            if (bit >= m) {
                throw ParseError("hex sets bit " + std::to_string(bit) + " beyond m=" + std::to_string(m));
            }
            words[bit / 64] |= uint64_t{1} << (bit % 64);
        }
    }
    return BinaryCode(m, std::move(words));
}

std::string format_code_hex(const BinaryCode& code) {
    static constexpr char kDigits[] = "0123456789abcdef";
    const size_t digits = (code.length() + 3) / 4;
    std::string out(digits, '0');
    const auto words = code.words();
    for (size_t k = 0; k < digits; ++k) {
        const size_t low_bit = 4 * (digits - 1 - k);
        // A nibble never straddles words since 64 is a multiple of 4.
        out[k] = kDigits[(words[low_bit / 64] >> (low_bit % 64)) & 0xF];
    }
    return out;
}

}  // namespace fenshses
