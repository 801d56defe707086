/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fenshses/binary_code.hpp"
#include "fenshses/kernels.hpp"

namespace fenshses {

/// An immutable collection of n codes of m bits each. Ids are 0..n-1 in
/// insertion (file) order. Storage is one contiguous word array.
class CodeDataset {
   public:
    /// Throws EmptyInputError when `codes` is empty, InvalidArgument when
    /// lengths differ.
    explicit CodeDataset(const std::vector<BinaryCode>& codes);

    /// Takes ownership of packed words; validates size and padding bits.
    CodeDataset(uint32_t m, std::vector<uint64_t> words);

    uint32_t code_length() const {
        return m_;
    }
    size_t size() const {
        return n_;
    }
    size_t stride() const {
        return stride_;
    }
    std::span<const uint64_t> words(size_t id) const {
        return std::span<const uint64_t>(words_).subspan(id * stride_, stride_);
    }
    std::span<const uint64_t> all_words() const {
        return words_;
    }
    PackedCodes packed() const {
        return {words_, stride_};
    }
    BinaryCode code(size_t id) const;

    /// FNV-1a over (m, n, words); identifies a dataset inside index files.
    uint64_t content_hash() const;

    friend bool operator==(const CodeDataset&, const CodeDataset&) = default;

   private:
    uint32_t m_;
    size_t n_;
    size_t stride_;
    std::vector<uint64_t> words_;
};

/// FBIN: "FBIN", u16 version (1), u32 m, u64 n, then n records of
/// ceil(m/64) u64 words, all little-endian.
CodeDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const CodeDataset& ds, const std::filesystem::path& path);

/// Text fixtures: first line "m=<int>", then one hex code per line.
/// Blank lines and lines starting with '#' are ignored.
CodeDataset load_text_dataset(const std::filesystem::path& path);
void save_text_dataset(const CodeDataset& ds, const std::filesystem::path& path);

/// Loads FBIN when the file starts with the FBIN magic, text otherwise.
CodeDataset load_any_dataset(const std::filesystem::path& path);

/// Big-endian hex: the first digit carries the highest-numbered bits.
/// Exactly ceil(m/4) digits; case-insensitive.
BinaryCode parse_code_hex(std::string_view text, uint32_t m);
std::string format_code_hex(const BinaryCode& code);

/// 64-bit FNV-1a, shared by the file formats for content fingerprints.
class Fnv1a {
   public:
    void update(const void* data, size_t len);
    void update_u64(uint64_t v);
    uint64_t digest() const {
        return state_;
    }

   private:
    uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace fenshses
