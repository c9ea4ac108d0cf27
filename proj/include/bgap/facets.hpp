#pragma once

#include <array>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bgap/corpus.hpp"
#include "json.hpp"

namespace bgap {

class ChatProvider;

// Order is the canonical assembly order.
enum class FacetId { requests, responses, context, communication_style, damsl, sgd };

inline constexpr std::array<FacetId, 6> kAllFacets = {
    FacetId::requests, FacetId::responses,           FacetId::context,
    FacetId::communication_style, FacetId::damsl,    FacetId::sgd};

std::string to_string(FacetId f);
FacetId facet_from_string(const std::string& s);
// damsl and sgd describe single utterances; the rest whole conversations.
bool facet_is_utterance_level(FacetId f);

// The 12-act user dialog-act vocabulary, in canonical order.
const std::vector<std::string>& sgd_act_vocabulary();
bool is_sgd_act(const std::string& label);

struct FacetDescription {
    std::string conversation_id;
    FacetId facet = FacetId::requests;
    // Conversation-level facets: the parsed JSON object. damsl: array of
    // one-sentence strings, one per user utterance. sgd: array of string
    // arrays (act labels per user utterance, canonical order).
    nlohmann::json payload;
    bool failed = false;
    std::string failure_reason;
};

struct DescribeOptions {
    // History fed to prompts is capped; oldest turns drop first.
    int history_char_budget = 32000;
    std::function<void(const std::string&)> warn;
};

FacetDescription describe_facet(const Conversation& conv, FacetId facet, ChatProvider& chat,
                                const DescribeOptions& options = {});

struct BehaviorRepresentation {
    std::string conversation_id;
    std::vector<FacetId> facet_subset;  // canonical order
    std::string text;
};

// Deterministic rendering: facets in enum order, each under a fixed header;
// structured payloads as "key: value" lines, utterance-level lists as
// "turn i: ..." lines. Every facet in `subset` must be present and clean.
BehaviorRepresentation assemble_representation(const std::vector<FacetDescription>& descs,
                                               const std::set<FacetId>& subset);

enum class GoalCategory { artifact_creation, information_seeking, practical_guidance, other };

std::string to_string(GoalCategory c);

struct GoalLabel {
    GoalCategory category = GoalCategory::other;
    std::string subcategory = "Other";
    bool flagged = false;  // classification fell back after invalid replies
};

bool goal_label_valid(const std::string& category, const std::string& subcategory);

GoalLabel classify_goal(const std::string& goal, ChatProvider& chat);

// coding/writing task assignment from the goal taxonomy.
Task task_from_goal_label(const GoalLabel& label);

// "[user] ..." / "[assistant] ..." lines, newest-first retention under the
// budget. user_only keeps only the user side (the requests facet input).
std::string render_history(const Conversation& conv, int char_budget, bool user_only = false);

// Full-corpus description pass: all (conversation, facet) work items run in
// parallel, results return in conversation-major, facet-minor order.
struct DescribeRun {
    std::vector<FacetDescription> descriptions;
    std::vector<std::string> failed_conversation_ids;  // any failed facet
};

DescribeRun describe_corpus(const Corpus& corpus, const std::set<FacetId>& subset,
                            ChatProvider& chat, const DescribeOptions& options = {},
                            int parallelism = 8);

void save_descriptions(const std::string& path, const std::vector<FacetDescription>& descs);
std::vector<FacetDescription> load_descriptions(const std::string& path);

}  // namespace bgap
