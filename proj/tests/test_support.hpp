#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace testsup {

inline std::string fixtures_dir() {
    if (const char* env = std::getenv("RAG_FIXTURES")) return env;
    return "tests/fixtures";
}

inline std::string fixture_path(const std::string& name) {
    return fixtures_dir() + "/" + name;
}

// Frozen expectations generated by tests/oracle/pipeline_reference.py.
inline const nlohmann::json& frozen() {
    static const nlohmann::json data = [] {
        std::ifstream in(fixture_path("frozen.json"));
        if (!in) throw std::runtime_error("cannot open frozen.json; set RAG_FIXTURES");
        return nlohmann::json::parse(in);
    }();
    return data;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

// True iff fn() throws E whose message contains `needle`.
template <class E, class F>
inline bool throws_containing(F&& fn, const std::string& needle) {
    try {
        fn();
    } catch (const E& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    } catch (...) {
        return false;
    }
    return false;
}

// Random document text with mixed sentence lengths, terminators, quotes,
// paragraph breaks, and multibyte runs. Used by the coverage property tests.
template <class Rng>
inline std::string random_document_text(Rng& rng, int min_sentences = 1,
                                        int max_sentences = 200) {
    static const char* kUnicodePool[] = {"h\xC3\xA9llo",
                                         "na\xC3\xAFve",
                                         "\xE6\x97\xA5\xE6\x9C\xAC\xE8\xAA\x9E",
                                         "\xE3\x83\x87\xE3\x83\xBC\xE3\x82\xBF",
                                         "caf\xC3\xA9",
                                         "\xEF\xAC\x81sh"};
    static const char* kSeparators[] = {" ", " ", " ", "\n", "\n\n", "\t", "  "};
    static const char* kTerminators[] = {".", ".", "!", "?", "", "...", ".\"", "?)"};

    std::uniform_int_distribution<int> sent_count(min_sentences, max_sentences);
    std::uniform_int_distribution<int> word_count(1, 12);
    std::uniform_int_distribution<int> word_len(1, 10);
    std::uniform_int_distribution<int> letter(0, 25);
    std::uniform_int_distribution<int> pick_unicode(0, 19);
    std::uniform_int_distribution<int> uni_idx(0, 5);
    std::uniform_int_distribution<int> sep_idx(0, 6);
    std::uniform_int_distribution<int> term_idx(0, 7);

    std::string text;
    const int sentences = sent_count(rng);
    for (int s = 0; s < sentences; ++s) {
        const int words = word_count(rng);
        for (int w = 0; w < words; ++w) {
            if (w > 0) text += " ";
            if (pick_unicode(rng) == 0) {
                text += kUnicodePool[uni_idx(rng)];
            } else {
                const int len = word_len(rng);
                for (int k = 0; k < len; ++k) text += static_cast<char>('a' + letter(rng));
            }
        }
        text += kTerminators[term_idx(rng)];
        if (s + 1 < sentences) text += kSeparators[sep_idx(rng)];
    }
    if (text.empty()) text = "x";
    return text;
}

}  // namespace testsup
