#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rag/grounder.hpp"
#include "rag/llm.hpp"

namespace rag {

// One graded question: a reference answer plus the key points it must carry.
struct BenchmarkCase {
    std::string case_id;
    std::string query;
    std::string ground_truth;
    std::vector<std::string> keywords;
};

using Benchmark = std::vector<BenchmarkCase>;

// Loads a JSONL benchmark, one {"case_id","query","ground_truth","keywords"}
// object per line. Throws ParseError with the line number for malformed
// lines, ValidationError for duplicate case_ids, empty fields, keywords that
// vanish under normalization, or an empty benchmark.
Benchmark load_benchmark(const std::string& path);

// Matching normal form: NFKC, per-code-point lowercase, whitespace runs
// collapsed to single spaces, ends trimmed.
std::string normalize_for_match(std::string_view text);

// Fraction of keywords present in the answer. Both sides are normalized; a
// keyword counts when it occurs as a contiguous substring bounded by the
// string ends or non-alphanumeric code points. Throws ValidationError on an
// empty keyword list or a keyword that normalizes to nothing.
double keyword_score(const std::string& answer, const std::vector<std::string>& keywords);

enum class JudgeVerdict { pass, fail, skipped };

std::string to_string(JudgeVerdict verdict);

struct JudgeOutcome {
    JudgeVerdict verdict = JudgeVerdict::skipped;
    // Set when neither ask produced a parseable first-line verdict; such
    // cases are graded fail.
    bool anomaly = false;
};

// Grades an answer with the "judge-v1" prompt: the client must reply PASS or
// FAIL on the first line. An unparseable reply is asked once more, then
// graded fail with the anomaly flag. Client transport or protocol failures
// yield skipped, which never enters the pass_rate denominator.
JudgeOutcome judge(const BenchmarkCase& c, const std::string& answer, LlmClient& client,
                   const ChatOptions& chat = {});

struct CaseOutcome {
    std::string case_id;
    double keyword_score = 0.0;
    JudgeVerdict judge_verdict = JudgeVerdict::skipped;
    bool judge_anomaly = false;
};

struct EvalReport {
    std::string variant;
    std::vector<CaseOutcome> per_case;  // benchmark order
    double keyword_mean = 0.0;
    double pass_rate = 0.0;  // passes / judged cases; 0 when nothing was judged

    nlohmann::json to_json() const;
};

// One answering configuration to evaluate. Raw variants leave the retrieval
// fields null; grounded variants must set all three.
struct EvalVariant {
    std::string name;  // report label and file stem, [A-Za-z0-9_-]
    AnswerMode mode = AnswerMode::grounded;
    LlmClient* llm = nullptr;
    ChatOptions chat;
    const VectorIndex* index = nullptr;
    Embedder* embedder = nullptr;
    const ChunkStore* chunks = nullptr;
    GroundingConfig grounding;
};

// Answers every case under every variant and grades the answers. Keyword
// scores are always computed; judging runs only when judge_client is
// non-null. Writes {out_dir}/{variant}.report.json per variant and
// {out_dir}/summary.csv, both atomically, and returns the reports in variant
// order. Validates everything before the first LLM call.
std::vector<EvalReport> run_eval(const Benchmark& benchmark,
                                 const std::vector<EvalVariant>& variants,
                                 LlmClient* judge_client, const ChatOptions& judge_chat,
                                 const std::string& out_dir);

}  // namespace rag
