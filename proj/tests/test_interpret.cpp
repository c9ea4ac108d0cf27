#include <cmath>

#include "bgap/error.hpp"
#include "bgap/gateway.hpp"
#include "bgap/interpret.hpp"
#include "bgap/stubs.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bgap;

TEST_CASE("categorize_clusters: balanced, real-dominated, sim-dominated") {
    std::vector<long> real = {50, 90, 5};
    std::vector<long> sim = {50, 10, 95};
    auto cats = categorize_clusters(real, sim, 145, 155);
    REQUIRE(cats.size() == 3);

    // share uses normalized fractions, so compute them the same way
    for (const auto& c : cats) {
        double fr = double(c.n_real) / 145.0, fs = double(c.n_sim) / 155.0;
        CHECK(c.real_share == doctest::Approx(fr / (fr + fs)).epsilon(1e-12));
    }
    CHECK(cats[0].category == ClusterCategoryKind::well_captured);
    CHECK(cats[1].category == ClusterCategoryKind::missed);
    CHECK(cats[2].category == ClusterCategoryKind::hallucinated);
}

TEST_CASE("categorize_clusters: equal totals reproduce the plain ratio thresholds") {
    std::vector<long> real = {50, 90, 5, 0};
    std::vector<long> sim = {50, 10, 95, 0};
    auto cats = categorize_clusters(real, sim, 100, 100);
    REQUIRE(cats.size() == 3);  // the empty cluster is excluded
    CHECK(cats[0].real_share == doctest::Approx(0.5));
    CHECK(cats[0].category == ClusterCategoryKind::well_captured);
    CHECK(cats[1].real_share == doctest::Approx(0.9));
    CHECK(cats[1].category == ClusterCategoryKind::missed);
    CHECK(cats[2].real_share == doctest::Approx(0.05));
    CHECK(cats[2].category == ClusterCategoryKind::hallucinated);
}

TEST_CASE("categorize_clusters: every non-empty cluster gets exactly one category") {
    Rng rng(3);
    std::vector<long> real(64), sim(64);
    long tr = 0, ts = 0;
    for (size_t c = 0; c < 64; ++c) {
        real[c] = long(rng.below(30));
        sim[c] = long(rng.below(30));
        tr += real[c];
        ts += sim[c];
    }
    auto cats = categorize_clusters(real, sim, tr, ts);
    size_t non_empty = 0;
    for (size_t c = 0; c < 64; ++c)
        if (real[c] + sim[c] > 0) ++non_empty;
    CHECK(cats.size() == non_empty);
}

TEST_CASE("categorize_clusters validation") {
    CHECK_THROWS_AS(categorize_clusters({1, 2}, {1}, 3, 1), ValidationError);
    CHECK_THROWS_AS(categorize_clusters({1}, {1}, 0, 1), ValidationError);
    CHECK_THROWS_AS(categorize_clusters({1}, {1}, 1, 1, 0.7, 0.3), ValidationError);
}

namespace {

// Plain-loop oracle implementing the same scoring definition: tf = count /
// token count; idf = ln((1+D)/(1+df)) + 1 pooled; category mean; target minus
// mean of the other two.
std::map<std::string, std::array<double, 3>> tfidf_oracle(
    const std::array<std::vector<std::string>, 3>& docs) {
    auto tokens_of = [](const std::string& text) {
        std::vector<std::string> tokens;
        std::string cur;
        for (char ch : text) {
            if (std::isalnum(static_cast<unsigned char>(ch)))
                cur.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
            else if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        }
        if (!cur.empty()) tokens.push_back(cur);
        return tokens;
    };
    auto terms_of = [&](const std::string& text) {
        auto toks = tokens_of(text);
        std::map<std::string, long> counts;
        for (const auto& t : toks) ++counts[t];
        for (size_t i = 0; i + 1 < toks.size(); ++i) ++counts[toks[i] + " " + toks[i + 1]];
        return std::pair{counts, toks.size()};
    };

    long total_docs = 0;
    std::map<std::string, long> df;
    for (const auto& cat : docs) {
        total_docs += long(cat.size());
        for (const auto& doc : cat)
            for (const auto& [term, _] : terms_of(doc).first) ++df[term];
    }

    std::map<std::string, std::array<double, 3>> means;
    for (size_t c = 0; c < 3; ++c) {
        for (const auto& doc : docs[c]) {
            auto [counts, len] = terms_of(doc);
            for (const auto& [term, count] : counts) {
                double tf = double(count) / double(std::max<size_t>(1, len));
                double idf = std::log((1.0 + total_docs) / (1.0 + df[term])) + 1.0;
                means[term][c] += tf * idf / double(docs[c].size());
            }
        }
    }
    std::map<std::string, std::array<double, 3>> scores;
    for (const auto& [term, m] : means)
        for (size_t c = 0; c < 3; ++c)
            scores[term][c] = m[c] - 0.5 * (m[(c + 1) % 3] + m[(c + 2) % 3]);
    return scores;
}

}  // namespace

TEST_CASE("contrastive tfidf matches the hand oracle on a toy corpus") {
    std::array<std::vector<std::string>, 3> docs = {
        std::vector<std::string>{"terse commands", "terse tone"},
        std::vector<std::string>{"polite thanks", "polite greeting"},
        std::vector<std::string>{"rich context", "shared context"}};
    auto result = contrastive_tfidf(docs, /*min_df=*/1, {}, /*top_terms=*/50);
    auto oracle = tfidf_oracle(docs);

    for (size_t cat = 0; cat < 3; ++cat) {
        for (const auto& ts : result[cat]) {
            REQUIRE(oracle.count(ts.term));
            CHECK(std::abs(ts.score - oracle[ts.term][cat]) <= 1e-12);
        }
    }
    // a term confined to one category scores positive there
    auto find = [&](const std::vector<TermScore>& list, const std::string& term) {
        for (const auto& ts : list)
            if (ts.term == term) return ts.score;
        return std::nan("");
    };
    CHECK(find(result[0], "terse") > 0);
    CHECK(find(result[1], "polite") > 0);
    CHECK(find(result[2], "context") > 0);
}

TEST_CASE("a term with identical per-category mean scores zero") {
    std::array<std::vector<std::string>, 3> docs = {
        std::vector<std::string>{"shared alpha"}, std::vector<std::string>{"shared beta"},
        std::vector<std::string>{"shared gamma"}};
    auto result = contrastive_tfidf(docs, 1, {}, 50);
    for (size_t cat = 0; cat < 3; ++cat)
        for (const auto& ts : result[cat])
            if (ts.term == "shared") CHECK(std::abs(ts.score) <= 1e-12);
}

TEST_CASE("raising min_df never adds terms") {
    Rng rng(11);
    std::array<std::vector<std::string>, 3> docs;
    const char* vocab[] = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
    for (size_t c = 0; c < 3; ++c)
        for (int d = 0; d < 12; ++d) {
            std::string doc;
            for (int w = 0; w < 6; ++w) doc += std::string(vocab[rng.below(6)]) + " ";
            docs[c].push_back(doc);
        }
    for (long low = 1; low < 8; ++low) {
        auto loose = contrastive_tfidf(docs, low, {}, 1000);
        auto strict = contrastive_tfidf(docs, low + 1, {}, 1000);
        for (size_t cat = 0; cat < 3; ++cat) {
            std::set<std::string> loose_terms, strict_terms;
            for (const auto& ts : loose[cat]) loose_terms.insert(ts.term);
            for (const auto& ts : strict[cat]) strict_terms.insert(ts.term);
            for (const auto& t : strict_terms) CHECK(loose_terms.count(t) == 1);
        }
    }
}

TEST_CASE("stoplisted terms and low-df terms never appear") {
    std::array<std::vector<std::string>, 3> docs = {
        std::vector<std::string>{"the terse user", "the terse style"},
        std::vector<std::string>{"the polite user"}, std::vector<std::string>{"rare gem here"}};
    auto result = contrastive_tfidf(docs, 2, {"terse"}, 50);
    for (size_t cat = 0; cat < 3; ++cat)
        for (const auto& ts : result[cat]) {
            CHECK(ts.term != "terse");
            CHECK(ts.df >= 2);  // "gem" (df=1) filtered
        }
}

TEST_CASE("top-cluster selection keeps the largest clusters per category") {
    ClusterDocuments clusters;
    clusters[7] = {"a", "b", "c"};
    clusters[3] = {"d", "e"};
    clusters[9] = {"f"};
    auto docs = select_top_cluster_documents(clusters, 2);
    CHECK(docs == std::vector<std::string>{"d", "e", "a", "b", "c"});  // cluster-id order
}

TEST_CASE("empty categories are rejected") {
    std::array<std::vector<std::string>, 3> docs = {
        std::vector<std::string>{"x"}, std::vector<std::string>{}, std::vector<std::string>{"y"}};
    CHECK_THROWS_AS(contrastive_tfidf(docs, 1, {}, 10), ValidationError);
}

TEST_CASE("llm term filter: flagged terms pass through, junk replies degrade safely") {
    ProviderConfig cfg;
    cfg.max_retries = 0;

    {
        auto backend = std::make_shared<ScriptedChatBackend>(
            std::vector<std::string>{"[\"does respond\", \"not asked\"]"});
        ChatClient chat(cfg, backend);
        auto flagged = llm_term_filter({"does respond", "terse tone"}, chat);
        REQUIRE(flagged.size() == 1);
        CHECK(flagged[0] == "does respond");  // unknown terms are ignored
    }
    {
        auto backend = std::make_shared<ScriptedChatBackend>(std::vector<std::string>{"[]"});
        ChatClient chat(cfg, backend);
        CHECK(llm_term_filter({"terse tone"}, chat).empty());
    }
    {
        // provider failure: stoplist unchanged, warning surfaced
        auto backend = std::make_shared<ScriptedChatBackend>(std::vector<std::string>{}, 5);
        ChatClient chat(cfg, backend);
        std::string warning;
        auto flagged = llm_term_filter({"a"}, chat, [&](const std::string& w) { warning = w; });
        CHECK(flagged.empty());
        CHECK(!warning.empty());
    }
}

TEST_CASE("llm term filter is deterministic through the response cache") {
    bgap::test::TempDir dir("termcache");
    ProviderConfig cfg;
    cfg.temperature = 0.0;
    cfg.cache_dir = dir.file("cache");
    auto backend =
        std::make_shared<ScriptedChatBackend>(std::vector<std::string>{"[\"filler term\"]"});
    ChatClient chat(cfg, backend);
    auto first = llm_term_filter({"filler term", "real term"}, chat);
    auto second = llm_term_filter({"filler term", "real term"}, chat);  // served from cache
    CHECK(first == second);
    CHECK(chat.backend_calls() == 1);
}
