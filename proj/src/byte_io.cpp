/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "byte_io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "fenshses/error.hpp"

namespace fenshses::detail {

void ByteReader::need(size_t n) {
    if (remaining() < n) {
        throw CorruptionError(context_ + ": truncated (needed " + std::to_string(n) +
                              " more bytes at offset " + std::to_string(pos_) + ")");
    }
}

std::string_view ByteReader::bytes(size_t n) {
    need(n);
    std::string_view v(reinterpret_cast<const char*>(data_.data()) + pos_, n);
    pos_ += n;
    return v;
}

uint64_t ByteReader::get_le(int n) {
    need(static_cast<size_t>(n));
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
        v |= uint64_t{data_[pos_ + i]} << (8 * i);
    }
    pos_ += static_cast<size_t>(n);
    return v;
}

uint64_t ByteReader::varint() {
    uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        need(1);
        const uint8_t b = data_[pos_++];
        v |= uint64_t{b & 0x7Fu} << shift;
        if ((b & 0x80) == 0) {
            return v;
        }
    }
    throw CorruptionError(context_ + ": varint overflow at offset " + std::to_string(pos_));
}

std::string ByteReader::string() {
    const uint32_t len = u32();
    return std::string(bytes(len));
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError(path.string() + ": read failed");
    }
    return data;
}

void write_file_synced(const std::filesystem::path& path, std::span<const uint8_t> data) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) {
        throw IoError(path.string() + ": cannot open for writing: " + std::strerror(errno));
    }
    size_t written = 0;
    while (written < data.size()) {
        const ssize_t k = ::write(fd, data.data() + written, data.size() - written);
        if (k < 0) {
            if (errno == EINTR) {
                continue;
            }
            const int err = errno;
            ::close(fd);
            throw IoError(path.string() + ": write failed: " + std::strerror(err));
        }
        written += static_cast<size_t>(k);
    }
    if (::fsync(fd) != 0) {
        const int err = errno;
        ::close(fd);
        throw IoError(path.string() + ": fsync failed: " + std::strerror(err));
    }
    if (::close(fd) != 0) {
        throw IoError(path.string() + ": close failed: " + std::strerror(errno));
    }
}

}  // namespace fenshses::detail
