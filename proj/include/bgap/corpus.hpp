#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bgap/matrix.hpp"

namespace bgap {

enum class Role { user, assistant };

enum class Task { coding, writing, other };

std::string to_string(Role r);
std::string to_string(Task t);
Role role_from_string(const std::string& s);
Task task_from_string(const std::string& s);

struct Turn {
    Role role;
    std::string content;  // non-empty after trimming
};

// One user-assistant conversation. Turns alternate starting with the user.
struct Conversation {
    std::string id;
    std::string source;
    Task task = Task::other;
    std::string goal;
    std::vector<Turn> turns;
    bool failed = false;  // generation aborted; partial transcript retained

    std::vector<std::string> user_utterances() const;
    size_t user_turn_count() const;
};

struct Corpus {
    enum class Kind { real, simulated };

    std::string name;
    Kind kind = Kind::real;
    std::vector<Conversation> conversations;
};

std::string to_string(Corpus::Kind k);
Corpus::Kind corpus_kind_from_string(const std::string& s);

// Validates a single conversation's invariants. Consecutive same-role turns
// are merged with a newline separator (common in scraped chat logs); each
// repair is reported through `log` when provided.
void validate_conversation(Conversation& conv,
                           const std::function<void(const std::string&)>& log = nullptr);

// Reads a JSONL corpus (one conversation object per line). Errors carry the
// offending 1-based line number. Line order is preserved.
Corpus load_corpus(const std::string& path, Corpus::Kind kind,
                   const std::function<void(const std::string&)>& log = nullptr);

void save_corpus(const std::string& path, const Corpus& corpus);

class EmbeddingProvider;

// Pairs every goal in A with its maximal-cosine-similarity goal in B.
// B entries may be reused (non-injective argmax). Ties go to the lowest
// B index.
std::vector<std::pair<size_t, size_t>> match_real_pairs(
    const std::vector<std::string>& goals_a, const std::vector<std::string>& goals_b,
    EmbeddingProvider& embedder);

}  // namespace bgap
