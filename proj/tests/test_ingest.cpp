#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "tds/ingest.hpp"

using namespace tds;
using namespace tds::ingest;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("ingest");

// ---- hashing ------------------------------------------------------------------

TEST_CASE("sha256 matches the published test vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("The quick brown fox jumps over the lazy dog") ==
          "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
}

TEST_CASE("sha256 agrees with an independent implementation") {
    CHECK(testfx::ref_sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::vector<std::string> samples = {"", "a", "hello world", std::string(55, 'x'),
                                        std::string(56, 'x'), std::string(64, 'y'),
                                        std::string(1000, 'z'), "\x01\x02\xff binary\n"};
    for (std::size_t i = 0; i < 50; ++i)
        samples.push_back("sample-" + std::to_string(i * 7919) + std::string(i * 3, 'q'));
    for (const auto& s : samples) CHECK(sha256_hex(s) == testfx::ref_sha256_hex(s));
}

TEST_CASE("fingerprint short form feeds entity ids") {
    auto fp = fingerprint_text("abc");
    CHECK(fp.hex.size() == 64);
    CHECK(fp.short_hex() == "ba7816bf8f01cfea");
}

// ---- normalization --------------------------------------------------------------

TEST_CASE("normalize_document collapses whitespace and extracts the title") {
    auto doc = normalize_document("  \n\nA Study of Things\n\nline two\there", FormatHint::plain_text);
    CHECK(doc.title == "A Study of Things");
    CHECK(doc.text == "A Study of Things line two here");
    CHECK(doc.doc_id.substr(0, 2) == "c:");
    CHECK(doc.doc_id.size() == 18);
}

TEST_CASE("normalization is idempotent") {
    auto once = normalize_document("Title\n\nsome   text \t with  gaps", FormatHint::plain_text);
    auto twice = normalize_document(once.text, FormatHint::plain_text);
    CHECK(once.text == twice.text);
    CHECK(once.fp == twice.fp);
}

TEST_CASE("composed and decomposed accents converge") {
    std::string composed = "caf\xc3\xa9 study";           // U+00E9
    std::string decomposed = "cafe\xcc\x81 study";        // e + U+0301
    auto a = normalize_document(composed, FormatHint::plain_text);
    auto b = normalize_document(decomposed, FormatHint::plain_text);
    CHECK(a.text == b.text);
    CHECK(a.fp == b.fp);
}

TEST_CASE("control characters vanish, unicode spaces fold") {
    auto doc = normalize_document("Ti\x01tle\n\nbody\xc2\xa0here", FormatHint::plain_text);
    CHECK(doc.title == "Title");
    CHECK(doc.text == "Title body here");
}

TEST_CASE("invalid utf-8 raises UndecodableInput") {
    CHECK_THROWS_AS(normalize_document("ok \xff\xfe bad", FormatHint::plain_text),
                    UndecodableInput);
}

TEST_CASE("whitespace-only input raises EmptyDocument") {
    CHECK_THROWS_AS(normalize_document("  \n\t \n", FormatHint::plain_text), EmptyDocument);
}

TEST_CASE("title override wins") {
    auto doc = normalize_document("first line\nrest", FormatHint::plain_text, "p", "Given Title");
    CHECK(doc.title == "Given Title");
    CHECK(doc.source_path == "p");
}

// ---- pdf extraction -------------------------------------------------------------

TEST_CASE("plain and flate pdfs round-trip their text") {
    std::vector<std::string> lines = {"Deep Parsing Methods", "",
                                      "We evaluate on the treebank corpus."};
    for (auto pdf : {testfx::make_simple_pdf(lines), testfx::make_flate_pdf(lines)}) {
        auto doc = normalize_document(pdf, FormatHint::pdf);
        CHECK(doc.title == "Deep Parsing Methods");
        CHECK(doc.text == "Deep Parsing Methods We evaluate on the treebank corpus.");
    }
}

TEST_CASE("same content as text and pdf share one fingerprint") {
    std::string text = "Deep Parsing Methods\nWe evaluate on the treebank corpus.";
    auto from_text = normalize_document(text, FormatHint::plain_text);
    auto from_pdf = normalize_document(
        testfx::make_simple_pdf({"Deep Parsing Methods", "We evaluate on the treebank corpus."}),
        FormatHint::pdf);
    CHECK(from_text.fp == from_pdf.fp);
    CHECK(from_text.doc_id == from_pdf.doc_id);
}

TEST_CASE("pdf escapes and parentheses survive") {
    auto text = pdf_extract_text(testfx::make_simple_pdf({"balanced (parens) and \\ slash"}));
    CHECK(text.find("balanced (parens) and \\ slash") != std::string::npos);
}

TEST_CASE("non-pdf bytes raise UndecodableInput") {
    CHECK_THROWS_AS(pdf_extract_text("GIF89a not a pdf"), UndecodableInput);
    CHECK_THROWS_AS(normalize_document("%PDF-1.4 but no stream follows", FormatHint::pdf),
                    EmptyDocument);
}

TEST_CASE("TJ arrays insert spaces on large kerning gaps") {
    std::string content = "BT [(vec)-500(tor)] TJ ET";
    std::string pdf = "%PDF-1.4\n1 0 obj << /Length " + std::to_string(content.size()) +
                      " >>\nstream\n" + content + "\nendstream\nendobj\n%%EOF\n";
    std::string text = pdf_extract_text(pdf);
    CHECK(text.find("vec tor") != std::string::npos);
}

// ---- manifest ----------------------------------------------------------------

TEST_CASE("manifest round-trips and diffs the corpus") {
    testfx::TmpDir tmp;
    Manifest m;
    auto doc = normalize_document("Doc One\nbody text", FormatHint::plain_text, "a.txt");
    m.add(doc.fp, {doc.doc_id, doc.source_path, "2000-01-01T00:00:00Z"});
    m.save(tmp / "manifest.json");

    Manifest back = Manifest::load(tmp / "manifest.json");
    CHECK(back.size() == 1);
    CHECK(back.contains(doc.fp));
    CHECK(back.entries().at(doc.fp.hex).doc_id == doc.doc_id);

    auto doc2 = normalize_document("Doc Two\nother text", FormatHint::plain_text, "b.txt");
    auto fresh = diff_corpus(back, {doc, doc2, doc2});
    REQUIRE(fresh.size() == 1);  // doc known, doc2 deduped
    CHECK(fresh[0].doc_id == doc2.doc_id);
}

TEST_CASE("manifest load is strict about fingerprints") {
    CHECK_THROWS_AS(Manifest::from_json_string("{\"nothex\": {}}"), Error);
    CHECK_THROWS_AS(Manifest::from_json_string("[1,2]"), Error);
    testfx::TmpDir tmp;
    CHECK(Manifest::load(tmp / "absent.json").size() == 0);
}

// ---- cache -------------------------------------------------------------------

TEST_CASE("cache stores by stage and treats corrupt entries as misses") {
    testfx::TmpDir tmp;
    CacheStore cache{tmp.path() / "cache"};
    cache.set_extraction_tag("deadbeef");
    auto fp = fingerprint_text("some doc");

    CHECK(!cache.get(fp, CacheStage::extraction).has_value());
    cache.put(fp, CacheStage::extraction, "[{\"dataset_name\":\"X\"}]");
    auto hit = cache.get(fp, CacheStage::extraction);
    REQUIRE(hit.has_value());
    CHECK(*hit == "[{\"dataset_name\":\"X\"}]");
    CHECK(cache.entry_path(fp, CacheStage::extraction).string().find("extraction-deadbeef") !=
          std::string::npos);

    warnings::reset();
    testfx::write_file(cache.entry_path(fp, CacheStage::extraction), "{not an array");
    CHECK(!cache.get(fp, CacheStage::extraction).has_value());
    CHECK(warnings::count() == 1);

    // A different tag is a different namespace.
    cache.set_extraction_tag("00000000");
    CHECK(!cache.get(fp, CacheStage::extraction).has_value());
}

// ---- corpus scan -----------------------------------------------------------------

TEST_CASE("load_corpus scans recursively, sorted, with per-file fault tolerance") {
    testfx::TmpDir tmp;
    testfx::write_file(tmp / "corpus/b.txt", "Beta Doc\nsecond content");
    testfx::write_file(tmp / "corpus/sub/a.txt", "Alpha Doc\nfirst content");
    testfx::write_file(tmp / "corpus/bad.txt", "broken \xff\xfe bytes");
    testfx::write_file(tmp / "corpus/dup.txt", "Beta Doc\nsecond content");

    warnings::reset();
    auto docs = load_corpus(tmp / "corpus");
    REQUIRE(docs.size() == 2);  // bad skipped, dup collapsed
    CHECK(docs[0].title == "Beta Doc");
    CHECK(docs[1].title == "Alpha Doc");
    CHECK(warnings::count() == 1);

    // A corpus path that is a file lists one path per line.
    testfx::write_file(tmp / "listing.txt", (tmp / "corpus/sub/a.txt").string() + "\n");
    auto listed = load_corpus(tmp / "listing.txt");
    REQUIRE(listed.size() == 1);
    CHECK(listed[0].title == "Alpha Doc");

    CHECK_THROWS_AS(load_corpus(tmp / "missing"), Error);
}

TEST_SUITE_END();
