#include "bgap/interpret.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <unordered_map>

#include "bgap/error.hpp"
#include "bgap/gateway.hpp"
#include "json.hpp"

namespace bgap {

std::string to_string(ClusterCategoryKind k) {
    switch (k) {
        case ClusterCategoryKind::well_captured: return "well_captured";
        case ClusterCategoryKind::missed: return "missed";
        default: return "hallucinated";
    }
}

std::vector<ClusterCategory> categorize_clusters(const std::vector<long>& counts_real,
                                                 const std::vector<long>& counts_sim,
                                                 long total_real, long total_sim, double tau_lo,
                                                 double tau_hi) {
    if (counts_real.size() != counts_sim.size())
        throw ValidationError("categorize_clusters: k mismatch");
    if (total_real <= 0 || total_sim <= 0)
        throw ValidationError("categorize_clusters: totals must be positive");
    if (!(tau_lo < tau_hi))
        throw ValidationError("categorize_clusters: need tau_lo < tau_hi");

    std::vector<ClusterCategory> out;
    for (size_t c = 0; c < counts_real.size(); ++c) {
        long nr = counts_real[c], ns = counts_sim[c];
        if (nr == 0 && ns == 0) continue;
        double fr = double(nr) / double(total_real);
        double fs = double(ns) / double(total_sim);
        ClusterCategory cat;
        cat.cluster = int(c);
        cat.n_real = nr;
        cat.n_sim = ns;
        cat.real_share = fr / (fr + fs);
        if (cat.real_share >= tau_hi)
            cat.category = ClusterCategoryKind::missed;
        else if (cat.real_share <= tau_lo)
            cat.category = ClusterCategoryKind::hallucinated;
        else
            cat.category = ClusterCategoryKind::well_captured;
        out.push_back(cat);
    }
    return out;
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// term -> raw count within one document, over unigrams and bigrams
std::unordered_map<std::string, long> term_counts(const std::vector<std::string>& tokens) {
    std::unordered_map<std::string, long> counts;
    for (const auto& t : tokens) ++counts[t];
    for (size_t i = 0; i + 1 < tokens.size(); ++i) ++counts[tokens[i] + " " + tokens[i + 1]];
    return counts;
}

}  // namespace

std::vector<std::string> select_top_cluster_documents(const ClusterDocuments& clusters,
                                                      int top_clusters) {
    std::vector<std::pair<int, size_t>> sizes;  // (cluster, doc count)
    for (const auto& [c, docs] : clusters) sizes.emplace_back(c, docs.size());
    std::sort(sizes.begin(), sizes.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (int(sizes.size()) > top_clusters) sizes.resize(size_t(top_clusters));
    std::sort(sizes.begin(), sizes.end());  // cluster-id order keeps output stable

    std::vector<std::string> out;
    for (const auto& [c, _] : sizes) {
        const auto& docs = clusters.at(c);
        out.insert(out.end(), docs.begin(), docs.end());
    }
    return out;
}

std::array<std::vector<TermScore>, 3> contrastive_tfidf(
    const std::array<std::vector<std::string>, 3>& docs_by_category, long min_df,
    const std::set<std::string>& stoplist, int top_terms) {
    for (const auto& docs : docs_by_category)
        if (docs.empty())
            throw ValidationError("contrastive_tfidf: a category has no documents");

    long total_docs = 0;
    for (const auto& docs : docs_by_category) total_docs += long(docs.size());

    // Pooled document frequencies, then per-category mean tf-idf.
    std::unordered_map<std::string, long> df;
    std::array<std::vector<std::unordered_map<std::string, double>>, 3> tf;
    for (size_t cat = 0; cat < 3; ++cat) {
        for (const auto& doc : docs_by_category[cat]) {
            auto tokens = tokenize(doc);
            auto counts = term_counts(tokens);
            std::unordered_map<std::string, double> norm;
            double len = std::max<double>(1.0, double(tokens.size()));
            for (auto& [term, count] : counts) {
                ++df[term];
                norm[term] = double(count) / len;
            }
            tf[cat].push_back(std::move(norm));
        }
    }

    std::unordered_map<std::string, std::array<double, 3>> category_mean;
    for (size_t cat = 0; cat < 3; ++cat) {
        double inv_docs = 1.0 / double(docs_by_category[cat].size());
        for (const auto& doc_tf : tf[cat]) {
            for (const auto& [term, tf_val] : doc_tf) {
                double idf = std::log((1.0 + double(total_docs)) / (1.0 + double(df[term]))) + 1.0;
                category_mean[term][cat] += tf_val * idf * inv_docs;
            }
        }
    }

    std::array<std::vector<TermScore>, 3> out;
    for (const auto& [term, means] : category_mean) {
        if (df[term] < min_df) continue;
        if (stoplist.count(term)) continue;
        for (size_t cat = 0; cat < 3; ++cat) {
            double other = 0.5 * (means[(cat + 1) % 3] + means[(cat + 2) % 3]);
            out[cat].push_back({term, means[cat] - other, df[term]});
        }
    }
    for (auto& list : out) {
        std::sort(list.begin(), list.end(), [](const TermScore& a, const TermScore& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.term < b.term;
        });
        if (int(list.size()) > top_terms) list.resize(size_t(top_terms));
    }
    return out;
}

std::array<std::vector<TermScore>, 3> contrastive_tfidf_by_cluster(
    const std::array<ClusterDocuments, 3>& clusters_by_category, int top_clusters, long min_df,
    const std::set<std::string>& extra_stoplist, int top_terms) {
    std::array<std::vector<std::string>, 3> docs;
    for (size_t cat = 0; cat < 3; ++cat)
        docs[cat] = select_top_cluster_documents(clusters_by_category[cat], top_clusters);

    std::set<std::string> stoplist = english_stopwords();
    stoplist.insert(extra_stoplist.begin(), extra_stoplist.end());
    return contrastive_tfidf(docs, min_df, stoplist, top_terms);
}

const std::set<std::string>& english_stopwords() {
    static const std::set<std::string> kStopwords = {
        "a",       "about",   "above",  "after",   "again",  "against", "all",    "am",
        "an",      "and",     "any",    "are",     "as",     "at",      "be",     "because",
        "been",    "before",  "being",  "below",   "between","both",    "but",    "by",
        "can",     "cannot",  "could",  "did",     "do",     "does",    "doing",  "down",
        "during",  "each",    "few",    "for",     "from",   "further", "had",    "has",
        "have",    "having",  "he",     "her",     "here",   "hers",    "him",    "his",
        "how",     "i",       "if",     "in",      "into",   "is",      "it",     "its",
        "itself",  "just",    "me",     "more",    "most",   "my",      "no",     "nor",
        "not",     "now",     "of",     "off",     "on",     "once",    "only",   "or",
        "other",   "our",     "ours",   "out",     "over",   "own",     "same",   "she",
        "should",  "so",      "some",   "such",    "than",   "that",    "the",    "their",
        "theirs",  "them",    "then",   "there",   "these",  "they",    "this",   "those",
        "through", "to",      "too",    "under",   "until",  "up",      "very",   "was",
        "we",      "were",    "what",   "when",    "where",  "which",   "while",  "who",
        "whom",    "why",     "will",   "with",    "would",  "you",     "your",   "yours"};
    return kStopwords;
}

std::vector<std::string> llm_term_filter(const std::vector<std::string>& terms,
                                         ChatProvider& chat,
                                         const std::function<void(const std::string&)>& warn) {
    if (terms.empty()) throw ValidationError("llm_term_filter: terms must be non-empty");

    std::string prompt =
        "You are reviewing candidate keywords extracted from descriptions of user behavior.\n"
        "Identify the meaningless filler terms: fragments that carry no behavioral meaning on "
        "their own.\nReturn a JSON array containing exactly the meaningless terms, and nothing "
        "else. Return [] if all terms are meaningful.\n\n# Terms\n";
    for (const auto& t : terms) prompt += t + "\n";

    std::string reply;
    try {
        reply = chat.chat("", {{"user", prompt}}).text;
    } catch (const Error& e) {
        if (warn) warn("term filter provider failed, stoplist unchanged: " + std::string(e.what()));
        return {};
    }

    std::vector<std::string> flagged;
    auto open = reply.find('[');
    auto close = reply.rfind(']');
    if (open != std::string::npos && close != std::string::npos && close > open) {
        try {
            auto j = nlohmann::json::parse(reply.substr(open, close - open + 1));
            for (const auto& item : j)
                if (item.is_string()) flagged.push_back(item.get<std::string>());
        } catch (const nlohmann::json::exception&) {
            if (warn) warn("term filter reply was not valid JSON, stoplist unchanged");
        }
    } else if (warn && !reply.empty()) {
        warn("term filter reply had no JSON array, stoplist unchanged");
    }

    // only accept terms we actually asked about
    std::set<std::string> known(terms.begin(), terms.end());
    std::vector<std::string> out;
    for (auto& t : flagged)
        if (known.count(t)) out.push_back(t);
    return out;
}

}  // namespace bgap
