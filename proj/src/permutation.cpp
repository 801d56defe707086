/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include "fenshses/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "byte_io.hpp"
#include "fenshses/error.hpp"

namespace fenshses {

CorrelationMatrix::CorrelationMatrix(uint32_t m, std::vector<double> values) : m_(m), values_(std::move(values)) {
    if (values_.size() != static_cast<size_t>(m) * m) {
        throw InvalidArgument("correlation matrix must have m*m entries");
    }
    for (uint32_t i = 0; i < m; ++i) {
        for (uint32_t j = 0; j < m; ++j) {
            const double v = (*this)(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw InvalidArgument("correlation entries must lie in [0, 1]");
            }
            if (std::abs(v - (*this)(j, i)) > 1e-12) {
                throw InvalidArgument("correlation matrix must be symmetric");
            }
        }
    }
}

CorrelationMatrix CorrelationMatrix::identity(uint32_t m) {
    std::vector<double> v(static_cast<size_t>(m) * m, 0.0);
    for (uint32_t i = 0; i < m; ++i) {
        v[static_cast<size_t>(i) * m + i] = 1.0;
    }
    return CorrelationMatrix(m, std::move(v));
}

CorrelationMatrix estimate_correlations(const CodeDataset& ds, Execution exec) {
    const uint32_t m = ds.code_length();
    const size_t n = ds.size();
    if (n < 2) {
        throw InsufficientDataError("correlation estimation needs at least 2 codes, got " + std::to_string(n));
    }

    // Transpose into one n-bit bitset per column; pair counts are then
    // popcounts of column intersections.
    const size_t col_stride = (n + 63) / 64;
    std::vector<uint64_t> columns(static_cast<size_t>(m) * col_stride, 0);
    for (size_t i = 0; i < n; ++i) {
        const auto w = ds.words(i);
        for (uint32_t b = 0; b < m; ++b) {
            if ((w[b / 64] >> (b % 64)) & 1u) {
                columns[b * col_stride + i / 64] |= uint64_t{1} << (i % 64);
            }
        }
    }
    std::vector<uint64_t> counts(static_cast<size_t>(m) * m);
    if (exec == Execution::parallel) {
        kernels::omp::column_cooccurrence(columns, col_stride, m, counts);
    } else {
        kernels::serial::column_cooccurrence(columns, col_stride, m, counts);
    }

    const double nd = static_cast<double>(n);
    std::vector<double> mean(m);
    std::vector<double> sd(m);
    std::vector<uint32_t> constant;
    for (uint32_t i = 0; i < m; ++i) {
        mean[i] = static_cast<double>(counts[static_cast<size_t>(i) * m + i]) / nd;
        sd[i] = std::sqrt(mean[i] * (1.0 - mean[i]));
        const uint64_t ones = counts[static_cast<size_t>(i) * m + i];
        if (ones == 0 || ones == n) {
            constant.push_back(i);
            sd[i] = 0.0;
        }
    }

    std::vector<double> values(static_cast<size_t>(m) * m, 0.0);
    for (uint32_t i = 0; i < m; ++i) {
        if (sd[i] == 0.0) continue;
        values[static_cast<size_t>(i) * m + i] = 1.0;
        for (uint32_t j = i + 1; j < m; ++j) {
            if (sd[j] == 0.0) continue;
            const double joint = static_cast<double>(counts[static_cast<size_t>(i) * m + j]) / nd;
            const double rho = std::clamp(std::abs(joint - mean[i] * mean[j]) / (sd[i] * sd[j]), 0.0, 1.0);
            values[static_cast<size_t>(i) * m + j] = rho;
            values[static_cast<size_t>(j) * m + i] = rho;
        }
    }
    CorrelationMatrix result(m, std::move(values));
    result.constant_columns_ = std::move(constant);
    return result;
}

Permutation::Permutation(std::vector<uint32_t> mapping) : mapping_(std::move(mapping)) {
    if (mapping_.empty()) {
        throw InvalidArgument("permutation must not be empty");
    }
    std::vector<bool> used(mapping_.size(), false);
    for (uint32_t v : mapping_) {
        if (v >= mapping_.size() || used[v]) {
            throw InvalidArgument("mapping is not a bijection on [0, " + std::to_string(mapping_.size()) + ")");
        }
        used[v] = true;
    }
}

Permutation Permutation::identity(uint32_t m) {
    std::vector<uint32_t> v(m);
    for (uint32_t i = 0; i < m; ++i) v[i] = i;
    return Permutation(std::move(v));
}

Permutation Permutation::inverse() const {
    std::vector<uint32_t> inv(mapping_.size());
    for (uint32_t p = 0; p < mapping_.size(); ++p) {
        inv[mapping_[p]] = p;
    }
    return Permutation(std::move(inv));
}

uint64_t Permutation::hash() const {
    Fnv1a h;
    h.update_u64(mapping_.size());
    for (uint32_t v : mapping_) {
        h.update_u64(v);
    }
    return h.digest();
}

void save_permutation(const Permutation& perm, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "m=" << perm.size() << '\n';
    for (uint32_t p = 0; p < perm.size(); ++p) {
        out << (p ? " " : "") << perm[p];
    }
    out << '\n';
    const std::string s = out.str();
    detail::write_file_synced(path, std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

Permutation load_permutation(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    std::string header;
    std::getline(in, header);
    if (header.rfind("m=", 0) != 0) {
        throw FormatError(path.string() + ": first line must be m=<int>");
    }
    uint32_t m = 0;
    try {
        m = static_cast<uint32_t>(std::stoul(header.substr(2)));
    } catch (const std::exception&) {
        throw FormatError(path.string() + ": bad m= header");
    }
    std::vector<uint32_t> mapping;
    long long v = 0;
    while (in >> v) {
        if (v < 0) {
            throw FormatError(path.string() + ": negative mapping entry");
        }
        mapping.push_back(static_cast<uint32_t>(v));
    }
    if (!in.eof()) {
        throw FormatError(path.string() + ": non-numeric mapping entry");
    }
    if (mapping.size() != m) {
        throw CorruptionError(path.string() + ": expected " + std::to_string(m) + " entries, got " +
                              std::to_string(mapping.size()));
    }
    try {
        return Permutation(std::move(mapping));
    } catch (const InvalidArgument& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

BlockMask::BlockMask(const SubCodeLayout& layout)
        : segment_(layout.total_bits()), segment_count_(layout.segment_count()) {
    for (uint32_t p = 0; p < layout.total_bits(); ++p) {
        segment_[p] = layout.segment_of(p);
    }
}

double objective(const CorrelationMatrix& M, const Permutation& perm, const BlockMask& mask) {
    if (M.size() != perm.size() || M.size() != mask.size()) {
        throw InvalidArgument("objective: matrix, permutation and mask sizes differ");
    }
    const uint32_t m = M.size();
    double total = 0.0;
    for (uint32_t p = 0; p < m; ++p) {
        const auto row = M.row(perm[p]);
        for (uint32_t q = 0; q < m; ++q) {
            if (mask.same_block(p, q)) {
                total += row[perm[q]];
            }
        }
    }
    return total;
}

namespace {

KernighanLinTrace run_kernighan_lin(const CorrelationMatrix& M, const SubCodeLayout& layout,
                                    const KernighanLinOptions& opts, bool trace) {
    const uint32_t m = M.size();
    if (layout.total_bits() != m) {
        throw InvalidArgument("kernighan_lin: layout is for m=" + std::to_string(layout.total_bits()) +
                              " but matrix is " + std::to_string(m) + "x" + std::to_string(m));
    }
    const uint32_t s = layout.segment_count();
    const BlockMask mask(layout);
    Permutation perm = Permutation::identity(m);

    // block_sum[v * s + b] = sum of M[v][perm[q]] over positions q in block b.
    std::vector<double> block_sum(static_cast<size_t>(m) * s, 0.0);
    for (uint32_t v = 0; v < m; ++v) {
        for (uint32_t q = 0; q < m; ++q) {
            block_sum[static_cast<size_t>(v) * s + mask.segment_of(q)] += M(v, perm[q]);
        }
    }
    auto sum = [&](uint32_t v, uint32_t b) { return block_sum[static_cast<size_t>(v) * s + b]; };

    KernighanLinTrace out{perm, {}, objective(M, perm, mask), 0, 0};
    std::mt19937_64 rng(opts.seed);
    std::vector<uint32_t> ties;

    for (uint32_t pass = 0; pass < opts.max_passes; ++pass) {
        ++out.passes;
        bool accepted = false;
        for (uint32_t i = 0; i < m; ++i) {
            const uint32_t a = mask.segment_of(i);
            const uint32_t x = perm[i];
            double best = opts.tolerance;
            ties.clear();
            for (uint32_t j = 0; j < m; ++j) {
                const uint32_t b = mask.segment_of(j);
                if (b == a) continue;
                const uint32_t y = perm[j];
                // Change of objective if x and y trade blocks. Every pair
                // term is counted twice (ordered pairs); diagonals stay put.
                const double after = (sum(x, b) - M(x, y)) + (sum(y, a) - M(y, x));
                const double before = (sum(x, a) - M(x, x)) + (sum(y, b) - M(y, y));
                const double gain = 2.0 * (before - after);
                if (gain > best + opts.tolerance) {
                    best = gain;
                    ties.assign(1, j);
                } else if (gain > opts.tolerance && std::abs(gain - best) <= opts.tolerance) {
                    ties.push_back(j);
                }
            }
            if (ties.empty()) continue;

            uint32_t j = ties.front();
            if (opts.seed != 0 && ties.size() > 1) {
                j = ties[std::uniform_int_distribution<size_t>(0, ties.size() - 1)(rng)];
            }
            const uint32_t b = mask.segment_of(j);
            const uint32_t y = perm[j];
            for (uint32_t v = 0; v < m; ++v) {
                const double delta = M(v, y) - M(v, x);
                block_sum[static_cast<size_t>(v) * s + a] += delta;
                block_sum[static_cast<size_t>(v) * s + b] -= delta;
            }
            perm.swap_positions(i, j);
            accepted = true;
            if (trace) {
                out.objective_after_swap.push_back(objective(M, perm, mask));
            }
        }
        if (!accepted) break;
    }
    out.final_objective = objective(M, perm, mask);
    out.permutation = std::move(perm);
    return out;
}

}  // namespace

Permutation kernighan_lin(const CorrelationMatrix& M, const SubCodeLayout& layout, const KernighanLinOptions& opts) {
    return run_kernighan_lin(M, layout, opts, false).permutation;
}

KernighanLinTrace kernighan_lin_traced(const CorrelationMatrix& M, const SubCodeLayout& layout,
                                       const KernighanLinOptions& opts) {
    return run_kernighan_lin(M, layout, opts, true);
}

BitPermuter::BitPermuter(const Permutation& perm)
        : m_(perm.size()), stride_(words_for_bits(perm.size())), source_bytes_((perm.size() + 7) / 8) {
    table_.assign(source_bytes_ * 256 * stride_, 0);
    for (uint32_t p = 0; p < m_; ++p) {
        const uint32_t src = perm[p];
        const size_t byte = src / 8;
        const uint32_t bit_in_byte = src % 8;
        for (uint32_t value = 0; value < 256; ++value) {
            if ((value >> bit_in_byte) & 1u) {
                table_[(byte * 256 + value) * stride_ + p / 64] |= uint64_t{1} << (p % 64);
            }
        }
    }
}

void BitPermuter::apply(std::span<const uint64_t> in, std::span<uint64_t> out) const {
    std::fill(out.begin(), out.end(), 0);
    for (size_t byte = 0; byte < source_bytes_; ++byte) {
        const auto value = static_cast<uint32_t>((in[byte / 8] >> (8 * (byte % 8))) & 0xFF);
        if (value == 0) continue;
        const uint64_t* row = &table_[(byte * 256 + value) * stride_];
        for (size_t w = 0; w < stride_; ++w) {
            out[w] |= row[w];
        }
    }
}

BinaryCode BitPermuter::apply(const BinaryCode& code) const {
    if (code.length() != m_) {
        throw InvalidArgument("permutation is for m=" + std::to_string(m_) + " but code has m=" +
                              std::to_string(code.length()));
    }
    std::vector<uint64_t> out(stride_);
    apply(code.words(), out);
    return BinaryCode(m_, std::move(out));
}

CodeDataset apply_permutation(const CodeDataset& ds, const Permutation& perm) {
    if (perm.size() != ds.code_length()) {
        throw InvalidArgument("permutation is for m=" + std::to_string(perm.size()) + " but dataset has m=" +
                              std::to_string(ds.code_length()));
    }
    const BitPermuter permuter(perm);
    const size_t stride = ds.stride();
    std::vector<uint64_t> words(ds.size() * stride);
    for (size_t i = 0; i < ds.size(); ++i) {
        permuter.apply(ds.words(i), std::span<uint64_t>(words).subspan(i * stride, stride));
    }
    return CodeDataset(ds.code_length(), std::move(words));
}

}  // namespace fenshses
