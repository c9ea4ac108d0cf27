#include <cstring>

#include "bgap/corpus.hpp"
#include "bgap/error.hpp"
#include "bgap/manifest.hpp"
#include "bgap/matrix.hpp"
#include "bgap/stubs.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

using namespace bgap;
using bgap::test::TempDir;

namespace {

std::string conv_line(const std::string& id, std::initializer_list<const char*> roles) {
    nlohmann::json turns = nlohmann::json::array();
    int i = 0;
    for (const char* role : roles)
        turns.push_back({{"role", role}, {"content", "content " + std::to_string(i++)}});
    nlohmann::json j = {{"id", id}, {"task", "coding"}, {"goal", "g"}, {"turns", turns}};
    return j.dump();
}

}  // namespace

TEST_CASE("load_corpus parses well-formed lines in order") {
    TempDir dir("corpus");
    bgap::test::write_file(dir.file("c.jsonl"), conv_line("a", {"user", "assistant"}) + "\n" +
                                                    conv_line("b", {"user"}) + "\n");
    Corpus corpus = load_corpus(dir.file("c.jsonl"), Corpus::Kind::real);
    REQUIRE(corpus.conversations.size() == 2);
    CHECK(corpus.conversations[0].id == "a");
    CHECK(corpus.conversations[1].id == "b");
    CHECK(corpus.conversations[0].task == Task::coding);
}

TEST_CASE("load_corpus rejects assistant-first conversations with line number") {
    TempDir dir("corpus");
    bgap::test::write_file(dir.file("c.jsonl"), conv_line("a", {"user"}) + "\n" +
                                                    conv_line("b", {"assistant", "user"}) + "\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir.file("c.jsonl"), Corpus::Kind::real),
                         doctest::Contains(":2:"), ValidationError);
    try {
        load_corpus(dir.file("c.jsonl"), Corpus::Kind::real);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("first turn must be user") != std::string::npos);
    }
}

TEST_CASE("load_corpus reports malformed JSON lines") {
    TempDir dir("corpus");
    bgap::test::write_file(dir.file("c.jsonl"), conv_line("a", {"user"}) + "\n{broken\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir.file("c.jsonl"), Corpus::Kind::real),
                         doctest::Contains("malformed JSON"), ValidationError);
}

TEST_CASE("load_corpus rejects duplicate ids") {
    TempDir dir("corpus");
    bgap::test::write_file(dir.file("c.jsonl"),
                           conv_line("same", {"user"}) + "\n" + conv_line("same", {"user"}) + "\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir.file("c.jsonl"), Corpus::Kind::real),
                         doctest::Contains("duplicate"), ValidationError);
}

TEST_CASE("consecutive same-role turns are merged and logged") {
    TempDir dir("corpus");
    bgap::test::write_file(dir.file("c.jsonl"),
                           conv_line("a", {"user", "user", "assistant"}) + "\n");
    int repairs = 0;
    Corpus corpus =
        load_corpus(dir.file("c.jsonl"), Corpus::Kind::real, [&](const std::string&) { ++repairs; });
    CHECK(repairs == 1);
    REQUIRE(corpus.conversations[0].turns.size() == 2);
    CHECK(corpus.conversations[0].turns[0].content == "content 0\ncontent 1");
}

TEST_CASE("empty turn content is rejected") {
    Conversation conv;
    conv.id = "x";
    conv.turns = {{Role::user, "   \n "}};
    CHECK_THROWS_AS(validate_conversation(conv), ValidationError);
}

TEST_CASE("corpus load-save-load round-trip is the identity") {
    TempDir dir("corpus");
    Corpus corpus;
    corpus.kind = Corpus::Kind::simulated;
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        Conversation conv = bgap::test::make_conversation(
            "conv-" + std::to_string(i), {"ask " + std::to_string(rng.below(1000)), "follow up"});
        conv.task = i % 2 ? Task::writing : Task::other;
        conv.source = "gen";
        corpus.conversations.push_back(conv);
    }
    save_corpus(dir.file("a.jsonl"), corpus);
    Corpus loaded = load_corpus(dir.file("a.jsonl"), Corpus::Kind::simulated);
    save_corpus(dir.file("b.jsonl"), loaded);
    CHECK(bgap::test::read_file(dir.file("a.jsonl")) == bgap::test::read_file(dir.file("b.jsonl")));
    REQUIRE(loaded.conversations.size() == corpus.conversations.size());
    for (size_t i = 0; i < loaded.conversations.size(); ++i) {
        CHECK(loaded.conversations[i].id == corpus.conversations[i].id);
        CHECK(loaded.conversations[i].goal == corpus.conversations[i].goal);
        CHECK(loaded.conversations[i].turns.size() == corpus.conversations[i].turns.size());
    }
}

TEST_CASE("paper-scale corpus of 5000 conversations loads") {
    TempDir dir("corpus5k");
    std::string lines;
    for (int i = 0; i < 5000; ++i)
        lines += conv_line("c" + std::to_string(i), {"user", "assistant"}) + "\n";
    bgap::test::write_file(dir.file("big.jsonl"), lines);
    Corpus corpus = load_corpus(dir.file("big.jsonl"), Corpus::Kind::real);
    CHECK(corpus.conversations.size() == 5000);
}

TEST_CASE("matrix file: 1x3 row is a 24-byte file and round-trips") {
    TempDir dir("matrix");
    MatF m(1, 3);
    m << 1.0f, 2.0f, 3.0f;
    write_matrix(dir.file("m.bgm"), m, {"row0"});
    CHECK(std::filesystem::file_size(dir.file("m.bgm")) == 24);

    std::string bytes = bgap::test::read_file(dir.file("m.bgm"));
    CHECK(bytes.substr(0, 4) == "BGM1");

    MatrixFile mf = read_matrix(dir.file("m.bgm"));
    CHECK(mf.data == m);
    REQUIRE(mf.row_ids.size() == 1);
    CHECK(mf.row_ids[0] == "row0");
}

TEST_CASE("matrix file: empty matrices are rejected") {
    TempDir dir("matrix");
    CHECK_THROWS_AS(write_matrix(dir.file("m.bgm"), MatF(0, 3)), ValidationError);
}

TEST_CASE("matrix file: size formula 12 + 4nd holds at scale") {
    TempDir dir("matrix");
    MatF m = MatF::Zero(5000, 1024);
    m(4999, 1023) = 1.5f;
    write_matrix(dir.file("big.bgm"), m);
    CHECK(std::filesystem::file_size(dir.file("big.bgm")) == 12u + 4u * 5000u * 1024u);
    MatrixFile mf = read_matrix(dir.file("big.bgm"));
    CHECK(mf.data(4999, 1023) == 1.5f);
}

TEST_CASE("matrix file: round-trip is bit-exact for random finite floats") {
    TempDir dir("matrix");
    Rng rng(99);
    MatF m(37, 11);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            // random finite float bit patterns, including denormals
            uint32_t bits;
            do {
                bits = uint32_t(rng.next_u64());
                float f;
                std::memcpy(&f, &bits, 4);
                if (std::isfinite(f)) break;
            } while (true);
            std::memcpy(&m(i, j), &bits, 4);
        }
    write_matrix(dir.file("r.bgm"), m);
    MatrixFile mf = read_matrix(dir.file("r.bgm"));
    CHECK(std::memcmp(mf.data.data(), m.data(), sizeof(float) * size_t(m.size())) == 0);
}

TEST_CASE("matrix file: corrupted payload and magic are detected") {
    TempDir dir("matrix");
    MatF m = MatF::Ones(4, 4);
    write_matrix(dir.file("m.bgm"), m);

    std::string bytes = bgap::test::read_file(dir.file("m.bgm"));
    bgap::test::write_file(dir.file("short.bgm"), bytes.substr(0, bytes.size() - 4));
    CHECK_THROWS_WITH_AS(read_matrix(dir.file("short.bgm")), doctest::Contains("bytes"),
                         ValidationError);

    bytes[0] = 'X';
    bgap::test::write_file(dir.file("badmagic.bgm"), bytes);
    CHECK_THROWS_WITH_AS(read_matrix(dir.file("badmagic.bgm")), doctest::Contains("magic"),
                         ValidationError);
}

TEST_CASE("match_real_pairs: identical strings embed identically and win") {
    ProviderConfig cfg;
    cfg.base_url = "stub://hash";
    cfg.stub_dim = 1024;
    EmbeddingClient embedder(cfg);
    auto pairs = match_real_pairs({"x"}, {"x", "y"}, embedder);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0] == std::pair<size_t, size_t>{0, 0});
}

TEST_CASE("match_real_pairs: self-matching returns the identity pairing") {
    ProviderConfig cfg;
    cfg.base_url = "stub://hash";
    cfg.stub_dim = 1024;
    EmbeddingClient embedder(cfg);
    std::vector<std::string> goals = {"write a poem", "fix my parser", "plan a trip"};
    auto pairs = match_real_pairs(goals, goals, embedder);
    for (size_t i = 0; i < goals.size(); ++i) CHECK(pairs[i] == std::pair<size_t, size_t>{i, i});
}

TEST_CASE("match_real_pairs equals the brute-force cosine argmax") {
    ProviderConfig cfg;
    cfg.base_url = "stub://hash";
    cfg.stub_dim = 1024;
    EmbeddingClient embedder(cfg);
    std::vector<std::string> a, b;
    for (int i = 0; i < 20; ++i) {
        a.push_back("goal a " + std::to_string(i));
        b.push_back("goal b " + std::to_string(i * 31));
    }
    auto pairs = match_real_pairs(a, b, embedder);

    // independent oracle: raw double loop over full-width stub vectors
    auto cos = [](const std::vector<float>& u, const std::vector<float>& v) {
        double dot = 0, nu = 0, nv = 0;
        for (size_t i = 0; i < u.size(); ++i) {
            dot += double(u[i]) * v[i];
            nu += double(u[i]) * u[i];
            nv += double(v[i]) * v[i];
        }
        return dot / std::sqrt(nu * nv);
    };
    for (size_t i = 0; i < a.size(); ++i) {
        auto ui = HashEmbedBackend::vector_for(a[i], 1024);
        size_t best = 0;
        double best_sim = -2;
        for (size_t j = 0; j < b.size(); ++j) {
            double s = cos(ui, HashEmbedBackend::vector_for(b[j], 1024));
            if (s > best_sim) {
                best_sim = s;
                best = j;
            }
        }
        CHECK(pairs[i].second == best);
    }
}

TEST_CASE("manifest verification fails when an artifact byte changes") {
    TempDir dir("manifest");
    Manifest manifest(dir.path.string());
    bgap::test::write_file(manifest.abs_path("artifact.txt"), "payload v1");
    manifest.record("stage1", "artifact.txt", "cfg", 42);

    CHECK(manifest.verify("stage1", "cfg", 42));
    CHECK(!manifest.verify("stage1", "other-cfg", 42));
    CHECK(!manifest.verify("stage1", "cfg", 43));
    CHECK(manifest.verify_all());

    bgap::test::write_file(manifest.abs_path("artifact.txt"), "payload v2");
    CHECK(!manifest.verify("stage1", "cfg", 42));
    CHECK(!manifest.verify_all());

    Manifest reloaded(dir.path.string());
    reloaded.load();
    CHECK(!reloaded.verify("stage1", "cfg", 42));
}
