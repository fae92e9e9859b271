#pragma once

// Deterministic string-column indices, the six-type taxonomy cascade
// (Datetime, Identifier, FreeText, StructuredCode, Name, Categorical),
// table-level structural metrics, and the embedding diagnostics (Gini
// variance concentration, mean off-diagonal cosine).
//
// Columns larger than the sample cap are profiled on a seeded uniform
// sample of exactly 1000 non-null cells drawn after sorting the values, so
// every index is invariant to row order. Tokenization splits on ASCII
// whitespace; "alphabetic" means ASCII letters plus the common Unicode
// letter blocks (Latin supplements/extended, Greek, Cyrillic, CJK, kana,
// Hangul) — a fixed, locale-independent rule.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "rankstab/errors.hpp"
#include "rankstab/rng.hpp"

namespace rankstab {

inline constexpr std::size_t kProfileSampleCap = 1000;
inline constexpr std::uint64_t kProfileSampleSeed = 0x5ab1e5eedULL;

enum class TaxonomyTag { Categorical, Name, StructuredCode, FreeText, Identifier, Datetime };

inline const char* taxonomy_name(TaxonomyTag t) {
    switch (t) {
        case TaxonomyTag::Categorical: return "Categorical";
        case TaxonomyTag::Name: return "Name";
        case TaxonomyTag::StructuredCode: return "StructuredCode";
        case TaxonomyTag::FreeText: return "FreeText";
        case TaxonomyTag::Identifier: return "Identifier";
        case TaxonomyTag::Datetime: return "Datetime";
    }
    return "?";
}

inline TaxonomyTag taxonomy_from_name(const std::string& s) {
    if (s == "Categorical") return TaxonomyTag::Categorical;
    if (s == "Name") return TaxonomyTag::Name;
    if (s == "StructuredCode") return TaxonomyTag::StructuredCode;
    if (s == "FreeText") return TaxonomyTag::FreeText;
    if (s == "Identifier") return TaxonomyTag::Identifier;
    if (s == "Datetime") return TaxonomyTag::Datetime;
    throw validation_error("unknown taxonomy tag '" + s + "'");
}

// Newline-delimited lowercase word list.
struct Lexicon {
    std::unordered_set<std::string> words;

    bool contains(const std::string& lower_word) const { return words.count(lower_word) > 0; }

    static Lexicon from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw validation_error("Lexicon: cannot open '" + path + "'");
        Lexicon lex;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            std::transform(line.begin(), line.end(), line.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            lex.words.insert(line);
        }
        return lex;
    }
};

struct ColumnProfile {
    double dictionary_hit_rate = 0.0;  // word tokens found in the word list
    double stopword_density = 0.0;     // word tokens that are stopwords
    double symbol_density = 0.0;       // non-alphanumeric, non-space chars / chars
    double proportion_numeric = 0.0;   // mean per-cell digit fraction
    double date_pattern_hits = 0.0;    // cells matching a date pattern
    double currency_pattern_hits = 0.0;
    double avg_words_per_cell = 0.0;   // whitespace tokens
    double multiword_fraction = 0.0;   // cells with >= 2 tokens
    double titlecase_fraction = 0.0;   // cells whose words all start upper-case
    double uniqueness_ratio = 0.0;     // distinct / sampled cells
    std::int64_t n_cells = 0;          // non-null cells profiled (post sampling)
    std::int64_t n_null = 0;           // nulls in the full column
};

// Decision thresholds for classify_column. The bundled config file carries
// the same defaults and is the CLI-facing source of truth.
struct TaxonomyThresholds {
    double datetime_hits_min = 0.8;
    double identifier_uniqueness_min = 0.95;
    double identifier_dictionary_max = 0.1;
    double freetext_words_min = 4.0;
    double freetext_stopwords_min = 0.1;
    double code_symbol_min = 0.15;
    double code_numeric_min = 0.5;
    double code_currency_min = 0.5;
    double name_multiword_min = 0.3;
    double name_titlecase_min = 0.5;
};

namespace detail {

inline bool is_null_cell(const std::string& s) { return s.empty(); }

// UTF-8 decode of the codepoint starting at i; advances i. Malformed bytes
// are consumed one at a time and reported as U+FFFD.
inline char32_t next_codepoint(const std::string& s, std::size_t& i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        ++i;
        return c;
    }
    int extra =
        (c & 0xE0) == 0xC0 ? 1 : (c & 0xF0) == 0xE0 ? 2 : (c & 0xF8) == 0xF0 ? 3 : -1;
    if (extra < 0 || i + extra >= s.size()) {
        ++i;
        return 0xFFFD;
    }
    char32_t cp = c & (0x3F >> extra);
    for (int k = 1; k <= extra; ++k) {
        const unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += static_cast<std::size_t>(extra) + 1;
    return cp;
}

inline bool is_letter(char32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    if (cp < 0x80) return false;
    return (cp >= 0x00C0 && cp <= 0x024F && cp != 0x00D7 && cp != 0x00F7) ||  // Latin suppl/ext
           (cp >= 0x0370 && cp <= 0x03FF) ||                                  // Greek
           (cp >= 0x0400 && cp <= 0x04FF) ||                                  // Cyrillic
           (cp >= 0x3040 && cp <= 0x30FF) ||                                  // kana
           (cp >= 0x4E00 && cp <= 0x9FFF) ||                                  // CJK
           (cp >= 0xAC00 && cp <= 0xD7AF);                                    // Hangul
}

inline bool is_digit_cp(char32_t cp) { return cp >= '0' && cp <= '9'; }
inline bool is_space_cp(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v';
}

inline std::vector<std::string> whitespace_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// Maximal ASCII-lowercased letter runs of length >= min_len.
inline std::vector<std::string> alpha_words(const std::string& s, std::size_t min_len = 1) {
    std::vector<std::string> out;
    std::string cur;
    std::size_t i = 0;
    while (i < s.size()) {
        const char32_t cp = next_codepoint(s, i);
        if (is_letter(cp)) {
            if (cp < 0x80) {
                cur.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
            } else {
                cur.push_back('\x01');  // opaque marker for non-ASCII letters
            }
        } else {
            if (cur.size() >= min_len) out.push_back(cur);
            cur.clear();
        }
    }
    if (cur.size() >= min_len) out.push_back(cur);
    return out;
}

// Seeded uniform sample of up to cap values, drawn after a canonical sort
// so the result does not depend on row order.
inline std::vector<std::string> canonical_sample(std::vector<std::string> values,
                                                 std::size_t cap, std::uint64_t seed) {
    std::sort(values.begin(), values.end());
    if (values.size() <= cap) return values;
    CounterRng rng(seed, 0);
    std::vector<std::size_t> pick;
    rng.sample_indices(values.size(), cap, pick);
    std::sort(pick.begin(), pick.end());
    std::vector<std::string> out;
    out.reserve(cap);
    for (std::size_t p : pick) out.push_back(std::move(values[p]));
    return out;
}

inline const std::regex& default_date_regex() {
    // ISO dates, slash/dot dates, "March 15, 2024", "15 Mar 2024", "Q1 2024",
    // bare times. Config can override the pattern.
    static const std::regex re(
        R"((\d{4}-\d{1,2}-\d{1,2}([T ]\d{2}:\d{2}(:\d{2})?)?)|(\d{1,2}[/.]\d{1,2}[/.]\d{2,4})|((Jan(uary)?|Feb(ruary)?|Mar(ch)?|Apr(il)?|May|Jun(e)?|Jul(y)?|Aug(ust)?|Sep(tember)?|Oct(ober)?|Nov(ember)?|Dec(ember)?)\.? \d{1,2}(st|nd|rd|th)?,? \d{4})|(\d{1,2} (Jan(uary)?|Feb(ruary)?|Mar(ch)?|Apr(il)?|May|Jun(e)?|Jul(y)?|Aug(ust)?|Sep(tember)?|Oct(ober)?|Nov(ember)?|Dec(ember)?) \d{4})|(Q[1-4][ -]?\d{4})|(\d{1,2}:\d{2}(:\d{2})?( ?[AaPp][Mm])?))",
        std::regex::ECMAScript);
    return re;
}

inline const std::regex& default_currency_regex() {
    static const std::regex re(
        R"(([$£¥€] ?-?\d[\d,]*(\.\d+)?)|(-?\d[\d,]*(\.\d+)? ?(USD|EUR|GBP|JPY|usd|eur)))",
        std::regex::ECMAScript);
    return re;
}

} // namespace detail

struct PatternSet {
    std::regex date = detail::default_date_regex();
    std::regex currency = detail::default_currency_regex();
};

// Deterministic index suite over one column. Null cells (empty strings) are
// excluded from per-cell averages and counted separately; at least one
// non-null value is required.
inline ColumnProfile profile_column(const std::vector<std::string>& values, const Lexicon& wordlist,
                                    const Lexicon& stopwords,
                                    const PatternSet& patterns = PatternSet{}) {
    std::vector<std::string> non_null;
    std::int64_t nulls = 0;
    for (const std::string& v : values) {
        if (detail::is_null_cell(v))
            ++nulls;
        else
            non_null.push_back(v);
    }
    if (non_null.empty()) throw validation_error("profile_column: all cells are null");

    const std::vector<std::string> sample =
        detail::canonical_sample(std::move(non_null), kProfileSampleCap, kProfileSampleSeed);

    ColumnProfile p;
    p.n_cells = static_cast<std::int64_t>(sample.size());
    p.n_null = nulls;

    std::set<std::string> distinct;
    std::uint64_t total_words = 0, dict_hits = 0, stop_hits = 0;
    std::uint64_t total_chars = 0, symbol_chars = 0;
    double digit_fraction_sum = 0.0;
    std::uint64_t date_cells = 0, currency_cells = 0, multiword_cells = 0, titlecase_cells = 0;
    std::uint64_t token_count_sum = 0;

    for (const std::string& cell : sample) {
        distinct.insert(cell);

        std::size_t i = 0;
        std::uint64_t chars = 0, symbols = 0, digits = 0;
        while (i < cell.size()) {
            const char32_t cp = detail::next_codepoint(cell, i);
            if (detail::is_space_cp(cp)) continue;
            ++chars;
            if (detail::is_digit_cp(cp)) ++digits;
            else if (!detail::is_letter(cp)) ++symbols;
        }
        total_chars += chars;
        symbol_chars += symbols;
        if (chars > 0) digit_fraction_sum += static_cast<double>(digits) / chars;

        const std::vector<std::string> tokens = detail::whitespace_tokens(cell);
        token_count_sum += tokens.size();
        if (tokens.size() >= 2) ++multiword_cells;

        bool any_word = false, all_title = true;
        for (const std::string& tok : tokens) {
            if (tok.empty()) continue;
            const unsigned char first = static_cast<unsigned char>(tok[0]);
            if (std::isalpha(first)) {
                any_word = true;
                if (!std::isupper(first)) all_title = false;
            }
        }
        if (any_word && all_title) ++titlecase_cells;

        for (const std::string& w : detail::alpha_words(cell, 1)) {
            ++total_words;
            if (wordlist.contains(w)) ++dict_hits;
            if (stopwords.contains(w)) ++stop_hits;
        }

        if (std::regex_search(cell, patterns.date)) ++date_cells;
        if (std::regex_search(cell, patterns.currency)) ++currency_cells;
    }

    const double cells = static_cast<double>(sample.size());
    p.uniqueness_ratio = static_cast<double>(distinct.size()) / cells;
    p.avg_words_per_cell = static_cast<double>(token_count_sum) / cells;
    p.multiword_fraction = static_cast<double>(multiword_cells) / cells;
    p.titlecase_fraction = static_cast<double>(titlecase_cells) / cells;
    p.date_pattern_hits = static_cast<double>(date_cells) / cells;
    p.currency_pattern_hits = static_cast<double>(currency_cells) / cells;
    p.proportion_numeric = digit_fraction_sum / cells;
    p.symbol_density = total_chars > 0 ? static_cast<double>(symbol_chars) / total_chars : 0.0;
    p.dictionary_hit_rate = total_words > 0 ? static_cast<double>(dict_hits) / total_words : 0.0;
    p.stopword_density = total_words > 0 ? static_cast<double>(stop_hits) / total_words : 0.0;
    return p;
}

// Deterministic decision cascade; every profile maps to exactly one tag.
inline TaxonomyTag classify_column(const ColumnProfile& p,
                                   const TaxonomyThresholds& t = TaxonomyThresholds{}) {
    if (p.date_pattern_hits >= t.datetime_hits_min) return TaxonomyTag::Datetime;
    if (p.uniqueness_ratio >= t.identifier_uniqueness_min &&
        p.dictionary_hit_rate <= t.identifier_dictionary_max)
        return TaxonomyTag::Identifier;
    if (p.avg_words_per_cell >= t.freetext_words_min &&
        p.stopword_density >= t.freetext_stopwords_min)
        return TaxonomyTag::FreeText;
    if (p.symbol_density >= t.code_symbol_min || p.proportion_numeric >= t.code_numeric_min ||
        p.currency_pattern_hits >= t.code_currency_min)
        return TaxonomyTag::StructuredCode;
    if (p.multiword_fraction >= t.name_multiword_min &&
        p.titlecase_fraction >= t.name_titlecase_min)
        return TaxonomyTag::Name;
    return TaxonomyTag::Categorical;
}

struct StructuralMetrics {
    double avg_tokens_per_cell = 0.0;
    double avg_chars_per_cell = 0.0;
    double avg_unique_alpha_words_per_cell = 0.0;  // case-insensitive, length >= 2
    double avg_unique_ngrams_per_cell = 0.0;       // character n-grams, lengths 2-4
    double proportion_unique_values = 0.0;
    double text_col_ratio = 0.0;
};

struct TableColumn {
    std::string name;
    std::vector<std::string> cells;
};

namespace detail {

inline bool parses_as_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    (void)v;
    return end == s.c_str() + s.size();
}

// A text column has at least one non-null cell that is not a number.
inline bool is_text_column(const TableColumn& col) {
    bool any = false;
    for (const std::string& c : col.cells) {
        if (is_null_cell(c)) continue;
        any = true;
        if (!parses_as_number(c)) return true;
    }
    (void)any;
    return false;
}

inline std::size_t count_codepoints(const std::string& s) {
    std::size_t i = 0, n = 0;
    while (i < s.size()) {
        next_codepoint(s, i);
        ++n;
    }
    return n;
}

inline std::size_t unique_ngrams(const std::string& s) {
    // decode once, then slide windows of 2..4 codepoints
    std::vector<std::string> cps;
    std::size_t i = 0;
    while (i < s.size()) {
        const std::size_t start = i;
        next_codepoint(s, i);
        cps.push_back(s.substr(start, i - start));
    }
    std::set<std::string> grams;
    for (std::size_t len = 2; len <= 4; ++len) {
        if (cps.size() < len) break;
        for (std::size_t a = 0; a + len <= cps.size(); ++a) {
            std::string g;
            for (std::size_t b = 0; b < len; ++b) g += cps[a + b];
            grams.insert(std::move(g));
        }
    }
    return grams.size();
}

} // namespace detail

// Table-level structural metrics, computed per text column over the seeded
// 1000-row sample and averaged across text columns. text_col_ratio counts
// text columns over all columns.
inline StructuralMetrics structural_metrics(const std::vector<TableColumn>& table) {
    if (table.empty()) throw validation_error("structural_metrics: empty table");
    StructuralMetrics out;
    std::size_t text_cols = 0;
    double tok = 0, chars = 0, words = 0, grams = 0, uniq = 0;
    for (const TableColumn& col : table) {
        if (!detail::is_text_column(col)) continue;
        std::vector<std::string> non_null;
        for (const std::string& c : col.cells)
            if (!detail::is_null_cell(c)) non_null.push_back(c);
        if (non_null.empty()) continue;
        ++text_cols;
        const std::vector<std::string> sample =
            detail::canonical_sample(std::move(non_null), kProfileSampleCap, kProfileSampleSeed);
        const double cells = static_cast<double>(sample.size());

        std::set<std::string> distinct;
        double t = 0, ch = 0, w = 0, g = 0;
        for (const std::string& cell : sample) {
            distinct.insert(cell);
            t += static_cast<double>(detail::whitespace_tokens(cell).size());
            ch += static_cast<double>(detail::count_codepoints(cell));
            const std::vector<std::string> ws = detail::alpha_words(cell, 2);
            w += static_cast<double>(std::set<std::string>(ws.begin(), ws.end()).size());
            g += static_cast<double>(detail::unique_ngrams(cell));
        }
        tok += t / cells;
        chars += ch / cells;
        words += w / cells;
        grams += g / cells;
        uniq += static_cast<double>(distinct.size()) / cells;
    }
    out.text_col_ratio = static_cast<double>(text_cols) / static_cast<double>(table.size());
    if (text_cols > 0) {
        const double tc = static_cast<double>(text_cols);
        out.avg_tokens_per_cell = tok / tc;
        out.avg_chars_per_cell = chars / tc;
        out.avg_unique_alpha_words_per_cell = words / tc;
        out.avg_unique_ngrams_per_cell = grams / tc;
        out.proportion_unique_values = uniq / tc;
    }
    return out;
}

// Gini coefficient of a nonnegative vector,
//   G = sum_{i,j} |v_i - v_j| / (2 n^2 mean),
// via the sorted prefix form. 0 for uniform vectors, scale-invariant.
inline double gini_concentration(const std::vector<double>& variances) {
    const std::size_t n = variances.size();
    if (n < 2) throw validation_error("gini_concentration: needs >= 2 entries");
    double sum = 0.0;
    for (double v : variances) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw validation_error("gini_concentration: entries must be nonnegative and finite");
        sum += v;
    }
    if (sum <= 0.0) throw validation_error("gini_concentration: all entries are zero");
    std::vector<double> sorted = variances;
    std::sort(sorted.begin(), sorted.end());
    double weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        weighted += static_cast<double>(i + 1) * sorted[i];
    const double nn = static_cast<double>(n);
    return (2.0 * weighted - (nn + 1.0) * sum) / (nn * sum);
}

// Mean cosine similarity over all unordered distinct row pairs.
inline double mean_offdiag_cosine(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.size();
    if (n < 2) throw validation_error("mean_offdiag_cosine: needs >= 2 rows");
    const std::size_t dim = rows.front().size();
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != dim)
            throw validation_error("mean_offdiag_cosine: ragged rows");
        double s = 0.0;
        for (double v : rows[i]) s += v * v;
        norms[i] = std::sqrt(s);
        if (!(norms[i] > 0.0))
            throw validation_error("mean_offdiag_cosine: zero-norm row");
    }
    double total = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dot += rows[i][d] * rows[j][d];
            total += dot / (norms[i] * norms[j]);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

} // namespace rankstab
