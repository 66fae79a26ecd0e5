#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "rag/corpus.hpp"
#include "rag/errors.hpp"
#include "test_support.hpp"

using namespace rag;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("rag_corpus_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        const std::string p = (path / name).string();
        testsup::write_file(p, content);
        return p;
    }
    static inline int counter = 0;
};

}  // namespace

TEST_CASE("load_corpus reads documents in file order") {
    TempDir tmp;
    const std::string p = tmp.file(
        "c.jsonl",
        R"({"doc_id":"d1","title":"One","text":"First doc."})"
        "\n"
        R"({"doc_id":"d2","title":"Two","text":"Second doc.","source_uri":"file:///x","metadata":{"lang":"en"}})"
        "\n");
    const Corpus corpus = load_corpus(p);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].doc_id == "d1");
    CHECK(corpus[0].title == "One");
    CHECK(corpus[0].text == "First doc.");
    CHECK(!corpus[0].source_uri.has_value());
    CHECK(corpus[1].doc_id == "d2");
    CHECK(corpus[1].source_uri.value() == "file:///x");
    CHECK(corpus[1].metadata.at("lang") == "en");
}

TEST_CASE("load_corpus rejects duplicate doc_id naming the id") {
    TempDir tmp;
    const std::string p = tmp.file("c.jsonl",
                                   R"({"doc_id":"d1","title":"a","text":"x."})"
                                   "\n"
                                   R"({"doc_id":"d1","title":"b","text":"y."})"
                                   "\n");
    CHECK(testsup::throws_containing<ValidationError>([&] { load_corpus(p); }, "d1"));
}

TEST_CASE("load_corpus accepts an empty file") {
    TempDir tmp;
    const std::string p = tmp.file("empty.jsonl", "");
    CHECK(load_corpus(p).empty());
}

TEST_CASE("load_corpus reports the line number of malformed JSON") {
    TempDir tmp;
    const std::string p = tmp.file("c.jsonl",
                                   R"({"doc_id":"d1","title":"a","text":"x."})"
                                   "\n{broken\n");
    CHECK(testsup::throws_containing<ParseError>([&] { load_corpus(p); }, "line 2"));
}

TEST_CASE("load_corpus rejects missing or mistyped fields") {
    TempDir tmp;
    CHECK_THROWS_AS(load_corpus(tmp.file("a.jsonl", R"({"doc_id":"d1","title":"a"})" "\n")),
                    ParseError);
    CHECK_THROWS_AS(load_corpus(tmp.file("b.jsonl",
                                         R"({"doc_id":1,"title":"a","text":"x."})" "\n")),
                    ParseError);
    CHECK_THROWS_AS(
        load_corpus(tmp.file(
            "c.jsonl", R"({"doc_id":"d","title":"a","text":"x.","metadata":{"k":3}})" "\n")),
        ParseError);
}

TEST_CASE("load_corpus fails on a missing file") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/path/corpus.jsonl"), ParseError);
}

TEST_CASE("make_document enforces invariants") {
    CHECK_THROWS_AS(make_document("", "t", "text."), ValidationError);
    CHECK(testsup::throws_containing<ValidationError>(
        [] { make_document("d9", "t", "  \r\n \t "); }, "d9"));
    const Document d = make_document("d", "t", "Line\r\nTwo");
    CHECK(d.text == "Line\nTwo");
}

TEST_CASE("fixture corpus loads") {
    const Corpus corpus = load_corpus(testsup::fixture_path("corpus_5docs.jsonl"));
    REQUIRE(corpus.size() == 5);
    CHECK(corpus[0].doc_id == "harbor");
    const auto byid = index_by_id(corpus);
    CHECK(byid.at("glacier")->text.find("Ice cores") != std::string::npos);
}
