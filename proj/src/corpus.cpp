#include "bgap/corpus.hpp"

#include <fstream>
#include <set>

#include "bgap/error.hpp"
#include "bgap/gateway.hpp"
#include "json.hpp"

namespace bgap {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string to_string(Role r) { return r == Role::user ? "user" : "assistant"; }

Role role_from_string(const std::string& s) {
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw ValidationError("unknown role: " + s);
}

std::string to_string(Task t) {
    switch (t) {
        case Task::coding: return "coding";
        case Task::writing: return "writing";
        default: return "other";
    }
}

Task task_from_string(const std::string& s) {
    if (s == "coding") return Task::coding;
    if (s == "writing") return Task::writing;
    if (s == "other" || s.empty()) return Task::other;
    throw ValidationError("unknown task: " + s);
}

std::string to_string(Corpus::Kind k) {
    return k == Corpus::Kind::real ? "real" : "simulated";
}

Corpus::Kind corpus_kind_from_string(const std::string& s) {
    if (s == "real") return Corpus::Kind::real;
    if (s == "simulated" || s == "sim") return Corpus::Kind::simulated;
    throw ValidationError("unknown corpus kind: " + s);
}

std::vector<std::string> Conversation::user_utterances() const {
    std::vector<std::string> out;
    for (const auto& t : turns)
        if (t.role == Role::user) out.push_back(t.content);
    return out;
}

size_t Conversation::user_turn_count() const {
    size_t n = 0;
    for (const auto& t : turns)
        if (t.role == Role::user) ++n;
    return n;
}

void validate_conversation(Conversation& conv,
                           const std::function<void(const std::string&)>& log) {
    if (conv.id.empty()) throw ValidationError("conversation id must be non-empty");
    if (conv.turns.empty()) throw ValidationError("conversation " + conv.id + " has no turns");

    // Merge consecutive same-role turns: scraped logs contain these and the
    // downstream contract requires strict alternation.
    std::vector<Turn> merged;
    for (auto& t : conv.turns) {
        std::string content = trim(t.content);
        if (content.empty())
            throw ValidationError("conversation " + conv.id + ": empty turn content");
        if (!merged.empty() && merged.back().role == t.role) {
            merged.back().content += "\n" + content;
            if (log) log("conversation " + conv.id + ": merged consecutive " +
                         to_string(t.role) + " turns");
        } else {
            merged.push_back({t.role, content});
        }
    }
    conv.turns = std::move(merged);

    if (conv.turns.front().role != Role::user)
        throw ValidationError("conversation " + conv.id + ": first turn must be user");
    if (conv.user_turn_count() == 0)
        throw ValidationError("conversation " + conv.id + ": no user turns");
}

Corpus load_corpus(const std::string& path, Corpus::Kind kind,
                   const std::function<void(const std::string&)>& log) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file: " + path);

    Corpus corpus;
    corpus.name = path;
    corpus.kind = kind;
    std::set<std::string> seen_ids;

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": malformed JSON: " + e.what());
        }
        Conversation conv;
        try {
            conv.id = j.at("id").get<std::string>();
            conv.source = j.value("source", std::string());
            conv.task = task_from_string(j.value("task", std::string("other")));
            conv.goal = j.value("goal", std::string());
            conv.failed = j.value("failed", false);
            for (const auto& tj : j.at("turns")) {
                Turn t;
                t.role = role_from_string(tj.at("role").get<std::string>());
                t.content = tj.at("content").get<std::string>();
                conv.turns.push_back(std::move(t));
            }
        } catch (const json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            validate_conversation(conv, log);
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen_ids.insert(conv.id).second)
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": duplicate conversation id " + conv.id);
        corpus.conversations.push_back(std::move(conv));
    }
    return corpus;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    for (const auto& conv : corpus.conversations) {
        json j;
        j["id"] = conv.id;
        j["source"] = conv.source;
        j["task"] = to_string(conv.task);
        j["goal"] = conv.goal;
        if (conv.failed) j["failed"] = true;
        json turns = json::array();
        for (const auto& t : conv.turns)
            turns.push_back({{"role", to_string(t.role)}, {"content", t.content}});
        j["turns"] = std::move(turns);
        out << j.dump() << "\n";
    }
}

std::vector<std::pair<size_t, size_t>> match_real_pairs(
    const std::vector<std::string>& goals_a, const std::vector<std::string>& goals_b,
    EmbeddingProvider& embedder) {
    if (goals_a.empty() || goals_b.empty())
        throw ValidationError("match_real_pairs: goal lists must be non-empty");

    MatF emb_a = embedder.embed(goals_a);
    MatF emb_b = embedder.embed(goals_b);

    MatD a = to_double(emb_a);
    MatD b = to_double(emb_b);
    a.rowwise().normalize();
    b.rowwise().normalize();
    // cosine(a_i, b_j) for unit rows is the plain dot product
    Eigen::MatrixXd sim = a * b.transpose();

    std::vector<std::pair<size_t, size_t>> pairs;
    pairs.reserve(goals_a.size());
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
        Eigen::Index best = 0;
        double best_sim = sim(i, 0);
        for (Eigen::Index j = 1; j < sim.cols(); ++j) {
            if (sim(i, j) > best_sim) {
                best_sim = sim(i, j);
                best = j;
            }
        }
        pairs.emplace_back(size_t(i), size_t(best));
    }
    return pairs;
}

}  // namespace bgap
