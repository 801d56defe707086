/*
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fenshses/search_engine.hpp"

namespace fenshses {

/// Where to find the codes (and permutation) behind an FIDX file. Empty
/// paths fall back to the ones recorded in the index header.
struct IndexLoadOptions {
    std::string data_path;
    std::string permutation_path;
    bool term_match = false;       // also build term-match postings
    bool unpermuted_filter = false;  // also build a plain filter index when the file is permuted
    Execution exec = Execution::serial;
};

/// Loads the dataset, permutation and index named by an FIDX file and
/// checks that their fingerprints match the header.
SearchEngine load_engine(const std::filesystem::path& index_path, const IndexLoadOptions& opts = {});

/// Entry point of the command-line tool. Exit codes: 0 success, 1 usage
/// error, 2 data or format error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fenshses
