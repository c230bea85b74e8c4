#include "uwbsim/codes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace uwbsim {

namespace {

// Pre-generated by a seeded greedy search (length 64, weight 34); pairwise
// cyclic cross-correlation stays within |R| <= 10, i.e. NCC <= 10/34 ~ 0.294.
// The startup self-test re-verifies the 0.3 bound on every load.
constexpr const char* kBuiltinCodes[16] = {
    "-0+--000--++--00+0--0-0+00-00-+-0-00+0000++-0-0+00---0-0----0000",
    "00+0++0+0+-+---+0-00+0+-+--+0+0-0000+0--+000000---0+000-000--+0+",
    "+-0-+0-00-00-0+0+-0-00+-000-0-0--+00-+0++0+-+0+0+0--0-0+-+00+000",
    "00+++0-00-00+00+-00--+++0+-00-0+0+++-++0+00+0++0-+00+0+00-0-000-",
    "+00--00-0+0+++-+-0--+00000+++0000+0-00++0+0000+-++-+00--0+00-0+-",
    "+00+-+0-+00000--0-0+0--0000000-++-++-0--0-000-00+++00-+00+-++--0",
    "-000+0--++0--0-+0000-0-000-0--00+00----0+00+000-0++0+-0--+0++0--",
    "0-000-0-0++0++00--+0+--+000-00-+00000++0++++0--0-0-00----00-0-0+",
    "++--00-00+-00-00-+--00+++0--00--+0-+--00-0---00-000+00-000-0-+00",
    "-++-+0+0+0-++-+0--+00+0+00000+0000++-0+---+++-000000+-+000-0-000",
    "+++-0-+-0000000++00-++0--000-+-000--+-00-0000+0-0-0-00-0+0++---+",
    "00-0--000-00-++0-0+00+-000-0--0-++-+++-00-0+++0+-++0-0000-0000-+",
    "00+0+--00--+0-000+-00+-00+0-0++-++0+-+00--0+00000-+0----0++00-00",
    "00+00--000++---+-0-00+0+0--+00-00+++000+00-0+0-+00-0+-+-00-0+-+0",
    "-000---00+++-+000+0+0000-+-++00-+0--00-0+---00+0-00+--000+0--+00",
    "0++0+000+0-+00+-000+00+00-+-+0+----+-00++000-+-0000000+-+0----0-",
};

// Same search, length-16 binary patterns with pairwise linear |R| <= 7.
constexpr const char* kSfdPatterns[4] = {
    "--++++-++---++-+",
    "----++++---+---+",
    "-+++-+-++-+---++",
    "--+----+----+++-",
};

std::vector<std::int8_t> parse_symbols(const std::string& text) {
    std::vector<std::int8_t> out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '+': out.push_back(1); break;
            case '-': out.push_back(-1); break;
            case '0': out.push_back(0); break;
            default: throw std::invalid_argument(std::string("bad code symbol '") + c + "'");
        }
    }
    return out;
}

std::vector<TernaryCode> builtin_table() {
    std::vector<TernaryCode> table;
    table.reserve(16);
    for (int i = 0; i < 16; ++i)
        table.push_back(TernaryCode{i + 1, parse_symbols(kBuiltinCodes[i])});
    return table;
}

struct TableState {
    std::vector<TernaryCode> table;
    bool validated = false;
};

TableState& table_state() {
    static TableState state{builtin_table(), false};
    return state;
}

std::mutex& table_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

int TernaryCode::weight() const {
    return static_cast<int>(std::count_if(symbols.begin(), symbols.end(),
                                          [](std::int8_t s) { return s != 0; }));
}

double max_cyclic_ncc(const TernaryCode& a, const TernaryCode& b) {
    if (a.length() != b.length())
        throw std::invalid_argument("cyclic NCC requires equal code lengths");
    const int n = a.length();
    const double pa = a.weight();
    const double pb = b.weight();
    if (pa <= 0 || pb <= 0) throw std::domain_error("zero-power code");
    const bool same = (&a == &b) || (a.symbols == b.symbols);
    double best = 0.0;
    for (int lag = 0; lag < n; ++lag) {
        if (same && lag == 0) continue;
        long r = 0;
        for (int i = 0; i < n; ++i) {
            int j = i + lag;
            if (j >= n) j -= n;
            r += static_cast<long>(a.symbols[i]) * b.symbols[j];
        }
        best = std::max(best, std::abs(static_cast<double>(r)) / std::sqrt(pa * pb));
    }
    return best;
}

void validate_code_table(const std::vector<TernaryCode>& table, double maxCross) {
    if (table.size() < 16) throw std::runtime_error("code table needs at least 16 entries");
    for (const auto& code : table) {
        if (code.symbols.empty()) throw std::runtime_error("empty code in table");
        if (code.weight() == 0) throw std::runtime_error("all-zero code in table");
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t j = i + 1; j < table.size(); ++j) {
            if (table[i].index == table[j].index)
                throw std::runtime_error("duplicate code index " + std::to_string(table[i].index));
            if (table[i].symbols == table[j].symbols)
                throw std::runtime_error("duplicate code sequence at index " + std::to_string(table[j].index));
            if (table[i].length() == table[j].length()) {
                double ncc = max_cyclic_ncc(table[i], table[j]);
                if (ncc > maxCross)
                    throw std::runtime_error("code pair (" + std::to_string(table[i].index) + "," +
                                             std::to_string(table[j].index) + ") cross-correlation " +
                                             std::to_string(ncc) + " exceeds " + std::to_string(maxCross));
            }
        }
    }
}

const std::vector<TernaryCode>& preamble_code_table() {
    std::lock_guard<std::mutex> lock(table_mutex());
    auto& state = table_state();
    if (!state.validated) {
        validate_code_table(state.table);
        state.validated = true;
    }
    return state.table;
}

const TernaryCode& preamble_code(int index) {
    const auto& table = preamble_code_table();
    for (const auto& code : table)
        if (code.index == index) return code;
    throw std::domain_error("unknown preamble code index " + std::to_string(index));
}

TernaryCode parse_code_line(const std::string& line) {
    auto colon = line.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("code line missing ':'");
    TernaryCode code;
    code.index = std::stoi(line.substr(0, colon));
    std::string rest = line.substr(colon + 1);
    rest.erase(std::remove_if(rest.begin(), rest.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               rest.end());
    code.symbols = parse_symbols(rest);
    if (code.symbols.empty()) throw std::invalid_argument("empty code line");
    return code;
}

std::string format_code_line(const TernaryCode& code) {
    std::string out = std::to_string(code.index) + ": ";
    for (std::int8_t s : code.symbols) out += (s == 0 ? '0' : (s > 0 ? '+' : '-'));
    return out;
}

std::size_t load_code_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open code table file: " + path);
    std::vector<TernaryCode> table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        table.push_back(parse_code_line(line));
    }
    validate_code_table(table);
    const std::size_t count = table.size();
    std::lock_guard<std::mutex> lock(table_mutex());
    table_state() = TableState{std::move(table), true};
    return count;
}

void reset_code_table() {
    std::lock_guard<std::mutex> lock(table_mutex());
    table_state() = TableState{builtin_table(), false};
}

const std::vector<std::vector<std::int8_t>>& sfd_pattern_table() {
    static const std::vector<std::vector<std::int8_t>> table = [] {
        std::vector<std::vector<std::int8_t>> t;
        for (const char* p : kSfdPatterns) t.push_back(parse_symbols(p));
        return t;
    }();
    return table;
}

const std::vector<std::int8_t>& sfd_pattern(int sfdType) {
    const auto& table = sfd_pattern_table();
    if (sfdType < 0 || sfdType >= static_cast<int>(table.size()))
        throw std::domain_error("unknown sfd type " + std::to_string(sfdType));
    return table[static_cast<std::size_t>(sfdType)];
}

} // namespace uwbsim
