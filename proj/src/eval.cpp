#include "rag/eval.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "rag/errors.hpp"
#include "rag/text.hpp"

namespace rag {

namespace {

constexpr const char* kJudgeSystem =
    "You are grading an answer against a reference. Reply with PASS or FAIL on the first "
    "line, then one sentence of justification.";

bool is_word_cp(UChar32 cp) { return cp >= 0 && u_isalnum(cp); }

// Boundary test on the code point ending at byte `pos`.
bool boundary_before(const std::string& s, std::size_t pos) {
    if (pos == 0) return true;
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    int32_t i = static_cast<int32_t>(pos);
    UChar32 cp;
    U8_PREV(bytes, 0, i, cp);
    return !is_word_cp(cp);
}

// Boundary test on the code point starting at byte `pos`.
bool boundary_after(const std::string& s, std::size_t pos) {
    if (pos >= s.size()) return true;
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const int32_t len = static_cast<int32_t>(s.size());
    int32_t i = static_cast<int32_t>(pos);
    UChar32 cp;
    U8_NEXT(bytes, i, len, cp);
    return !is_word_cp(cp);
}

bool contains_as_word(const std::string& haystack, const std::string& needle) {
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + 1)) {
        if (boundary_before(haystack, pos) && boundary_after(haystack, pos + needle.size())) {
            return true;
        }
    }
    return false;
}

// First line of `text`, ASCII-trimmed and uppercased.
std::string first_line_verdict(const std::string& text) {
    std::string line = text.substr(0, text.find('\n'));
    std::size_t b = 0;
    std::size_t e = line.size();
    while (b < e && is_ascii_space(static_cast<unsigned char>(line[b]))) ++b;
    while (e > b && is_ascii_space(static_cast<unsigned char>(line[e - 1]))) --e;
    std::string out = line.substr(b, e - b);
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
    return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open file for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw ValidationError("failed writing file: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw ValidationError("failed to move " + tmp + " into place: " + ec.message());
    }
}

// Shortest round-trip decimal form, stable across runs.
std::string number_field(double value) { return nlohmann::json(value).dump(); }

}  // namespace

Benchmark load_benchmark(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open benchmark file: " + path);
    }
    Benchmark cases;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("benchmark line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("case_id") || !j["case_id"].is_string() ||
            !j.contains("query") || !j["query"].is_string() || !j.contains("ground_truth") ||
            !j["ground_truth"].is_string() || !j.contains("keywords") ||
            !j["keywords"].is_array()) {
            throw ParseError("benchmark line " + std::to_string(line_no) +
                             ": expected an object with string case_id, query, ground_truth "
                             "and a keywords array");
        }
        BenchmarkCase c;
        c.case_id = j["case_id"].get<std::string>();
        c.query = j["query"].get<std::string>();
        c.ground_truth = j["ground_truth"].get<std::string>();
        if (c.case_id.empty() || c.query.empty() || c.ground_truth.empty()) {
            throw ValidationError("benchmark line " + std::to_string(line_no) +
                                  ": case_id, query, and ground_truth must be non-empty");
        }
        if (!seen.insert(c.case_id).second) {
            throw ValidationError("duplicate case_id \"" + c.case_id + "\" at benchmark line " +
                                  std::to_string(line_no));
        }
        for (const nlohmann::json& kw : j["keywords"]) {
            if (!kw.is_string()) {
                throw ParseError("benchmark line " + std::to_string(line_no) +
                                 ": keywords must be strings");
            }
            std::string keyword = kw.get<std::string>();
            if (normalize_for_match(keyword).empty()) {
                throw ValidationError("case \"" + c.case_id +
                                      "\": keyword is empty after normalization");
            }
            c.keywords.push_back(std::move(keyword));
        }
        if (c.keywords.empty()) {
            throw ValidationError("case \"" + c.case_id + "\" has no keywords");
        }
        cases.push_back(std::move(c));
    }
    if (cases.empty()) {
        throw ValidationError("empty benchmark: " + path);
    }
    return cases;
}

std::string normalize_for_match(std::string_view text) {
    const std::string nfkc = normalize_text(text);
    const auto* bytes = reinterpret_cast<const uint8_t*>(nfkc.data());
    const int32_t len = static_cast<int32_t>(nfkc.size());
    std::string out;
    out.reserve(nfkc.size());
    bool pending_space = false;
    for (int32_t i = 0; i < len;) {
        UChar32 cp;
        U8_NEXT(bytes, i, len, cp);
        if (cp < 0) continue;
        if (u_isUWhiteSpace(cp)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        cp = u_tolower(cp);
        uint8_t buf[U8_MAX_LENGTH];
        int32_t n = 0;
        UBool err = false;
        U8_APPEND(buf, n, U8_MAX_LENGTH, cp, err);
        if (!err) out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
    }
    return out;
}

double keyword_score(const std::string& answer, const std::vector<std::string>& keywords) {
    if (keywords.empty()) {
        throw ValidationError("keyword_score: keyword list is empty");
    }
    const std::string haystack = normalize_for_match(answer);
    int matched = 0;
    for (const std::string& raw : keywords) {
        const std::string needle = normalize_for_match(raw);
        if (needle.empty()) {
            throw ValidationError("keyword_score: keyword \"" + raw +
                                  "\" is empty after normalization");
        }
        if (contains_as_word(haystack, needle)) ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(keywords.size());
}

std::string to_string(JudgeVerdict verdict) {
    switch (verdict) {
        case JudgeVerdict::pass:
            return "pass";
        case JudgeVerdict::fail:
            return "fail";
        case JudgeVerdict::skipped:
            return "skipped";
    }
    throw ValidationError("unknown judge verdict");
}

JudgeOutcome judge(const BenchmarkCase& c, const std::string& answer, LlmClient& client,
                   const ChatOptions& chat) {
    ChatRequest req;
    req.model = chat.model;
    req.max_tokens = chat.max_tokens;
    req.temperature = 0.0;
    req.messages = {{"system", kJudgeSystem},
                    {"user", "Question: " + c.query + "\nReference answer: " + c.ground_truth +
                                 "\nCandidate answer: " + answer}};

    for (int ask = 0; ask < 2; ++ask) {
        ChatResponse resp;
        try {
            resp = client.complete(req);
        } catch (const TransportError&) {
            return {JudgeVerdict::skipped, false};
        } catch (const ProtocolError&) {
            return {JudgeVerdict::skipped, false};
        }
        const std::string verdict = first_line_verdict(resp.text);
        if (verdict == "PASS") return {JudgeVerdict::pass, false};
        if (verdict == "FAIL") return {JudgeVerdict::fail, false};
    }
    return {JudgeVerdict::fail, true};
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json cases = nlohmann::json::array();
    for (const CaseOutcome& c : per_case) {
        cases.push_back({{"case_id", c.case_id},
                         {"keyword_score", c.keyword_score},
                         {"judge_verdict", to_string(c.judge_verdict)},
                         {"judge_anomaly", c.judge_anomaly}});
    }
    return {{"variant", variant},
            {"keyword_mean", keyword_mean},
            {"pass_rate", pass_rate},
            {"per_case", std::move(cases)}};
}

std::vector<EvalReport> run_eval(const Benchmark& benchmark,
                                 const std::vector<EvalVariant>& variants,
                                 LlmClient* judge_client, const ChatOptions& judge_chat,
                                 const std::string& out_dir) {
    if (benchmark.empty()) {
        throw ValidationError("run_eval: benchmark is empty");
    }
    if (variants.empty()) {
        throw ValidationError("run_eval: no variants to evaluate");
    }
    std::unordered_set<std::string> names;
    for (const EvalVariant& v : variants) {
        if (v.name.empty()) {
            throw ValidationError("run_eval: variant name is empty");
        }
        for (char ch : v.name) {
            const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                            (ch >= '0' && ch <= '9') || ch == '_' || ch == '-';
            if (!ok) {
                throw ValidationError("run_eval: variant name \"" + v.name +
                                      "\" must match [A-Za-z0-9_-]");
            }
        }
        if (!names.insert(v.name).second) {
            throw ValidationError("run_eval: duplicate variant name \"" + v.name + "\"");
        }
        if (v.llm == nullptr) {
            throw ValidationError("run_eval: variant \"" + v.name + "\" has no llm client");
        }
        if (v.mode == AnswerMode::grounded) {
            if (v.index == nullptr || v.embedder == nullptr || v.chunks == nullptr) {
                throw ValidationError("run_eval: grounded variant \"" + v.name +
                                      "\" needs an index, an embedder, and a chunk store");
            }
        }
        v.grounding.validate();
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw ValidationError("cannot create output directory " + out_dir + ": " + ec.message());
    }

    // answer() takes retrieval dependencies by reference even in raw mode,
    // where it never touches them
    VectorIndex unused_index(1);
    HashEmbedder unused_embedder;
    ChunkStore unused_chunks;

    std::vector<EvalReport> reports;
    for (const EvalVariant& v : variants) {
        const bool grounded = v.mode == AnswerMode::grounded;
        EvalReport report;
        report.variant = v.name;
        double score_sum = 0.0;
        int judged = 0;
        int passes = 0;
        for (const BenchmarkCase& c : benchmark) {
            const AnswerRecord rec =
                answer(c.query, v.grounding, grounded ? *v.index : unused_index,
                       grounded ? *v.embedder : unused_embedder,
                       grounded ? *v.chunks : unused_chunks, *v.llm, v.mode, v.chat);
            CaseOutcome outcome;
            outcome.case_id = c.case_id;
            outcome.keyword_score = keyword_score(rec.answer, c.keywords);
            if (judge_client != nullptr) {
                const JudgeOutcome j = judge(c, rec.answer, *judge_client, judge_chat);
                outcome.judge_verdict = j.verdict;
                outcome.judge_anomaly = j.anomaly;
                if (j.verdict != JudgeVerdict::skipped) {
                    ++judged;
                    if (j.verdict == JudgeVerdict::pass) ++passes;
                }
            }
            score_sum += outcome.keyword_score;
            report.per_case.push_back(std::move(outcome));
        }
        report.keyword_mean = score_sum / static_cast<double>(benchmark.size());
        report.pass_rate =
            judged > 0 ? static_cast<double>(passes) / static_cast<double>(judged) : 0.0;
        const std::string report_path =
            (std::filesystem::path(out_dir) / (v.name + ".report.json")).string();
        write_file_atomic(report_path, report.to_json().dump(2) + "\n");
        reports.push_back(std::move(report));
    }

    std::string csv = "variant,keyword_mean,pass_rate\n";
    for (const EvalReport& r : reports) {
        csv += r.variant + "," + number_field(r.keyword_mean) + "," + number_field(r.pass_rate) +
               "\n";
    }
    write_file_atomic((std::filesystem::path(out_dir) / "summary.csv").string(), csv);
    return reports;
}

}  // namespace rag
