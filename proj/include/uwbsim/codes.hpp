// Ternary preamble code table and SFD patterns.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uwbsim {

struct TernaryCode {
    int index = 0;
    std::vector<std::int8_t> symbols; // alphabet {+1, 0, -1}

    int length() const { return static_cast<int>(symbols.size()); }
    int weight() const; // count of nonzero symbols
};

// Built-in table: 16 codes of length 64, weight 34. Pairwise cyclic
// cross-correlation, normalized by code powers, stays <= 0.3; validated once
// at startup by a self-test that throws on violation.
const std::vector<TernaryCode>& preamble_code_table();

// Lookup by index. Unknown index -> std::domain_error.
const TernaryCode& preamble_code(int index);

// Replace the active table (e.g. with standard codes from a file). The new
// table must pass the same self-test. Returns the number of codes loaded.
// File format: one code per line, "index: +0-+-...".
std::size_t load_code_table_file(const std::string& path);
void reset_code_table(); // restore the built-in table

// Parse/serialize a single line of the table file format.
TernaryCode parse_code_line(const std::string& line);
std::string format_code_line(const TernaryCode& code);

// Max normalized cyclic cross-correlation between two codes over all lags.
// With a==b, lag 0 is skipped (autocorrelation sidelobe peak).
double max_cyclic_ncc(const TernaryCode& a, const TernaryCode& b);

// Throws std::runtime_error when any pair exceeds maxCross or any code is
// degenerate. Called lazily before first table use.
void validate_code_table(const std::vector<TernaryCode>& table, double maxCross = 0.3);

// SFD patterns: 4 options, 16 binary (+-1) symbols each, pairwise linear
// normalized correlation peak < 0.5.
const std::vector<std::vector<std::int8_t>>& sfd_pattern_table();
const std::vector<std::int8_t>& sfd_pattern(int sfdType);

} // namespace uwbsim
