#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rag/chunker.hpp"
#include "rag/config.hpp"
#include "rag/corpus.hpp"
#include "rag/errors.hpp"
#include "rag/eval.hpp"
#include "rag/grounder.hpp"
#include "rag/index.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Run configuration file")->required();
    cmd->add_option("--set", opts.overrides, "Override a config key (key=value, repeatable)");
}

rag::RunConfig resolve_config(const CommonOpts& opts) {
    rag::RunConfig cfg = rag::load_run_config(opts.config_path);
    for (const std::string& assignment : opts.overrides) {
        rag::apply_override(cfg, assignment);
    }
    cfg.validate();
    return cfg;
}

// Reraises pipeline errors with the document named, keeping the type so the
// exit code stays right.
template <typename Fn>
auto with_document(const std::string& doc_id, Fn&& fn) {
    try {
        return fn();
    } catch (const rag::ChunkingError&) {
        throw;  // already carries the document id
    } catch (const rag::TransportError& e) {
        throw rag::TransportError("document \"" + doc_id + "\": " + e.what(), e.status,
                                  e.retryable);
    } catch (const rag::ProtocolError& e) {
        throw rag::ProtocolError("document \"" + doc_id + "\": " + e.what());
    } catch (const rag::ValidationError& e) {
        throw rag::ValidationError("document \"" + doc_id + "\": " + e.what());
    }
}

int cmd_ingest(const rag::RunConfig& cfg) {
    if (cfg.corpus_path.empty()) {
        throw rag::ValidationError("ingest requires corpus_path");
    }
    if (cfg.index_path.empty()) {
        throw rag::ValidationError("ingest requires index_path");
    }
    const rag::Corpus corpus = rag::load_corpus(cfg.corpus_path);
    if (corpus.empty()) {
        throw rag::ValidationError("empty corpus: " + cfg.corpus_path);
    }
    const std::unique_ptr<rag::Embedder> embedder = rag::make_embedder(cfg);

    std::vector<rag::Chunk> all_chunks;
    std::vector<rag::IndexEntry> entries;
    for (const rag::Document& doc : corpus) {
        std::vector<rag::Chunk> chunks = with_document(
            doc.doc_id, [&] { return rag::chunk_document(doc, cfg.chunking, embedder.get()); });
        std::vector<std::string> texts;
        texts.reserve(chunks.size());
        for (const rag::Chunk& c : chunks) {
            texts.push_back(c.text);
        }
        std::vector<rag::EmbeddingVector> vectors =
            with_document(doc.doc_id, [&] { return embedder->embed_batch(texts); });
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            entries.push_back({chunks[i].chunk_id, doc.doc_id, std::move(vectors[i])});
            all_chunks.push_back(std::move(chunks[i]));
        }
    }

    rag::write_chunks(cfg.resolved_chunks_path(), all_chunks);
    rag::VectorIndex index(embedder->dimension());
    index.upsert(std::move(entries));
    index.save(cfg.index_path);
    std::printf("docs=%zu chunks=%zu dimension=%d\n", corpus.size(), all_chunks.size(),
                index.dimension());
    return 0;
}

int cmd_query(const rag::RunConfig& cfg, const std::string& question,
              const std::string& mode_name) {
    const rag::AnswerMode mode =
        mode_name == "raw" ? rag::AnswerMode::raw : rag::AnswerMode::grounded;
    const std::unique_ptr<rag::LlmClient> llm = rag::make_llm_client(cfg.llm);
    const rag::ChatOptions chat{cfg.llm.model, cfg.llm.max_tokens};

    rag::AnswerRecord record;
    rag::ChunkStore store;
    if (mode == rag::AnswerMode::grounded) {
        if (cfg.index_path.empty()) {
            throw rag::ValidationError("query requires index_path");
        }
        if (cfg.corpus_path.empty()) {
            throw rag::ValidationError("query requires corpus_path");
        }
        const rag::VectorIndex index = rag::VectorIndex::load(cfg.index_path);
        const rag::Corpus corpus = rag::load_corpus(cfg.corpus_path);
        store = rag::ChunkStore::load(cfg.resolved_chunks_path(), corpus);
        const std::unique_ptr<rag::Embedder> embedder = rag::make_embedder(cfg);
        record = rag::answer(question, cfg.grounding, index, *embedder, store, *llm, mode, chat);
    } else {
        // raw mode never touches retrieval state
        const rag::VectorIndex unused(1);
        rag::HashEmbedder hash;
        record = rag::answer(question, cfg.grounding, unused, hash, store, *llm, mode, chat);
    }

    std::printf("%s\n", record.answer.c_str());
    std::printf("Sources:\n");
    if (record.hits.empty()) {
        std::printf("  (none)\n");
    }
    for (const rag::SearchHit& hit : record.hits) {
        const rag::Chunk* chunk = store.find(hit.chunk_id);
        const std::string doc_id = chunk != nullptr ? chunk->doc_id : "?";
        std::printf("  %d. %s (%s) score=%.6f\n", hit.rank, doc_id.c_str(),
                    hit.chunk_id.c_str(), hit.score);
    }
    return 0;
}

int finish_eval(const rag::Benchmark& benchmark, const std::vector<std::string>& variant_names,
                const rag::RunConfig& cfg, rag::LlmClient& llm, const rag::ChatOptions& chat,
                const rag::VectorIndex* index, rag::Embedder* embedder,
                const rag::ChunkStore* store, rag::LlmClient* judge_client,
                const rag::ChatOptions& judge_chat, const std::string& out_dir) {
    std::vector<rag::EvalVariant> variants;
    for (const std::string& name : variant_names) {
        rag::EvalVariant v;
        v.name = name;
        v.llm = &llm;
        v.chat = chat;
        if (name == "rag") {
            v.mode = rag::AnswerMode::grounded;
            v.index = index;
            v.embedder = embedder;
            v.chunks = store;
            v.grounding = cfg.grounding;
        } else {
            v.mode = rag::AnswerMode::raw;
        }
        variants.push_back(std::move(v));
    }

    const std::vector<rag::EvalReport> reports =
        rag::run_eval(benchmark, variants, judge_client, judge_chat, out_dir);

    std::printf("%-10s %13s %10s\n", "variant", "keyword_mean", "pass_rate");
    for (const rag::EvalReport& r : reports) {
        std::printf("%-10s %13.4f %10.4f\n", r.variant.c_str(), r.keyword_mean, r.pass_rate);
    }
    return 0;
}

int cmd_eval(const rag::RunConfig& cfg, const std::string& benchmark_path,
             const std::string& variants_csv, const std::string& judge_mode,
             const std::string& out_dir) {
    const rag::Benchmark benchmark = rag::load_benchmark(benchmark_path);

    std::vector<std::string> variant_names;
    std::string token;
    for (char c : variants_csv + ",") {
        if (c == ',') {
            if (!token.empty()) variant_names.push_back(token);
            token.clear();
        } else {
            token += c;
        }
    }
    if (variant_names.empty()) {
        throw rag::ValidationError("--variants needs at least one of raw, rag");
    }
    bool needs_rag = false;
    for (const std::string& name : variant_names) {
        if (name == "rag") {
            needs_rag = true;
        } else if (name != "raw") {
            throw rag::ValidationError("unknown variant \"" + name + "\" (expected raw or rag)");
        }
    }

    std::unique_ptr<rag::LlmClient> judge_client;
    rag::ChatOptions judge_chat;
    if (judge_mode != "keyword") {
        if (!cfg.judge.has_value()) {
            throw rag::ValidationError("--judge " + judge_mode +
                                       " needs a judge endpoint in the config");
        }
        if (cfg.judge->kind != rag::LlmKind::remote) {
            throw rag::ValidationError("a mock llm is not a valid judge; set judge.kind = remote");
        }
        judge_client = rag::make_llm_client(*cfg.judge);
        judge_chat = {cfg.judge->model, cfg.judge->max_tokens};
    }

    const std::unique_ptr<rag::LlmClient> llm = rag::make_llm_client(cfg.llm);
    const rag::ChatOptions chat{cfg.llm.model, cfg.llm.max_tokens};

    if (needs_rag) {
        if (cfg.index_path.empty()) {
            throw rag::ValidationError("the rag variant requires index_path");
        }
        const rag::VectorIndex index = rag::VectorIndex::load(cfg.index_path);
        const rag::Corpus corpus = rag::load_corpus(cfg.corpus_path);
        const rag::ChunkStore store = rag::ChunkStore::load(cfg.resolved_chunks_path(), corpus);
        const std::unique_ptr<rag::Embedder> embedder = rag::make_embedder(cfg);
        return finish_eval(benchmark, variant_names, cfg, *llm, chat, &index, embedder.get(),
                           &store, judge_client.get(), judge_chat, out_dir);
    }
    return finish_eval(benchmark, variant_names, cfg, *llm, chat, nullptr, nullptr, nullptr,
                       judge_client.get(), judge_chat, out_dir);
}

int cmd_inspect_chunks(const rag::RunConfig& cfg, const std::string& doc_id, bool with_text) {
    if (cfg.corpus_path.empty()) {
        throw rag::ValidationError("inspect-chunks requires corpus_path");
    }
    const rag::Corpus corpus = rag::load_corpus(cfg.corpus_path);
    const rag::Document* doc = nullptr;
    for (const rag::Document& d : corpus) {
        if (d.doc_id == doc_id) {
            doc = &d;
            break;
        }
    }
    if (doc == nullptr) {
        throw rag::ValidationError("unknown doc_id \"" + doc_id + "\" in " + cfg.corpus_path);
    }
    const std::unique_ptr<rag::Embedder> embedder = rag::make_embedder(cfg);
    const std::vector<rag::Chunk> chunks = with_document(
        doc_id, [&] { return rag::chunk_document(*doc, cfg.chunking, embedder.get()); });
    for (const rag::Chunk& c : chunks) {
        nlohmann::json line{{"chunk_id", c.chunk_id},
                            {"doc_id", c.doc_id},
                            {"start", c.span.start},
                            {"end", c.span.end},
                            {"strategy", rag::to_string(c.strategy)}};
        if (with_text) {
            line["token_estimate"] = c.token_estimate;
            line["text"] = c.text;
        }
        std::printf("%s\n", line.dump().c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-grounded question answering over a local corpus"};
    app.require_subcommand(1);

    CommonOpts ingest_opts;
    CLI::App* ingest = app.add_subcommand("ingest", "Chunk, embed, and index the corpus");
    add_common(ingest, ingest_opts);

    CommonOpts query_opts;
    std::string question;
    std::string mode = "grounded";
    CLI::App* query = app.add_subcommand("query", "Answer one question");
    add_common(query, query_opts);
    query->add_option("question", question, "The question to answer")->required();
    query->add_option("--mode", mode, "Answer mode")
        ->check(CLI::IsMember({"grounded", "raw"}));

    CommonOpts eval_opts;
    std::string benchmark_path;
    std::string variants = "raw,rag";
    std::string judge_mode = "keyword";
    std::string out_dir = "eval_out";
    CLI::App* eval = app.add_subcommand("eval", "Score answer variants over a benchmark");
    add_common(eval, eval_opts);
    eval->add_option("--benchmark", benchmark_path, "Benchmark JSONL file")->required();
    eval->add_option("--variants", variants, "Comma-separated subset of raw,rag");
    eval->add_option("--judge", judge_mode, "Grading mode")
        ->check(CLI::IsMember({"keyword", "llm", "both"}));
    eval->add_option("--out", out_dir, "Report directory");

    CommonOpts inspect_opts;
    std::string doc_id;
    bool with_text = false;
    CLI::App* inspect =
        app.add_subcommand("inspect-chunks", "Dump chunk records for one document");
    add_common(inspect, inspect_opts);
    inspect->add_option("--doc", doc_id, "Document id")->required();
    inspect->add_flag("--text", with_text, "Include chunk text and token estimate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(resolve_config(ingest_opts));
        if (query->parsed()) return cmd_query(resolve_config(query_opts), question, mode);
        if (eval->parsed()) {
            return cmd_eval(resolve_config(eval_opts), benchmark_path, variants, judge_mode,
                            out_dir);
        }
        if (inspect->parsed()) {
            return cmd_inspect_chunks(resolve_config(inspect_opts), doc_id, with_text);
        }
    } catch (const rag::UngroundableError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const rag::TransportError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const rag::ProtocolError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const rag::ChunkingError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const rag::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
