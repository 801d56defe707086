/*
 * SPDX-License-Identifier: Apache-2.0
 */

// Little-endian byte encoding shared by the FBIN and FIDX formats.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fenshses::detail {

class ByteWriter {
   public:
    void bytes(std::string_view s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void u16(uint16_t v) {
        put_le(v, 2);
    }
    void u32(uint32_t v) {
        put_le(v, 4);
    }
    void u64(uint64_t v) {
        put_le(v, 8);
    }
    void varint(uint64_t v) {
        while (v >= 0x80) {
            buf_.push_back(static_cast<uint8_t>(v | 0x80));
            v >>= 7;
        }
        buf_.push_back(static_cast<uint8_t>(v));
    }
    /// u32 length prefix followed by raw bytes.
    void string(std::string_view s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s);
    }
    const std::vector<uint8_t>& data() const {
        return buf_;
    }

   private:
    void put_le(uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
        }
    }
    std::vector<uint8_t> buf_;
};

/// Bounds-checked reader; running off the end throws CorruptionError.
class ByteReader {
   public:
    ByteReader(std::span<const uint8_t> data, std::string context)
            : data_(data), context_(std::move(context)) {}

    std::string_view bytes(size_t n);
    uint16_t u16() {
        return static_cast<uint16_t>(get_le(2));
    }
    uint32_t u32() {
        return static_cast<uint32_t>(get_le(4));
    }
    uint64_t u64() {
        return get_le(8);
    }
    uint64_t varint();
    std::string string();

    size_t remaining() const {
        return data_.size() - pos_;
    }
    const std::string& context() const {
        return context_;
    }

   private:
    uint64_t get_le(int n);
    void need(size_t n);

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
    std::string context_;
};

std::vector<uint8_t> read_file(const std::filesystem::path& path);

/// Writes the whole buffer and fsyncs before returning.
void write_file_synced(const std::filesystem::path& path, std::span<const uint8_t> data);

}  // namespace fenshses::detail
