#include "bgap/facets.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "bgap/error.hpp"
#include "bgap/gateway.hpp"
#include "bgap/prompts.hpp"

namespace bgap {

using nlohmann::json;

std::string to_string(FacetId f) {
    switch (f) {
        case FacetId::requests: return "requests";
        case FacetId::responses: return "responses";
        case FacetId::context: return "context";
        case FacetId::communication_style: return "communication_style";
        case FacetId::damsl: return "damsl";
        default: return "sgd";
    }
}

FacetId facet_from_string(const std::string& s) {
    for (FacetId f : kAllFacets)
        if (to_string(f) == s) return f;
    throw ValidationError("unknown facet: " + s);
}

bool facet_is_utterance_level(FacetId f) {
    return f == FacetId::damsl || f == FacetId::sgd;
}

const std::vector<std::string>& sgd_act_vocabulary() {
    static const std::vector<std::string> kActs = {
        "INFORM",         "REQUEST",      "AFFIRM",       "NEGATE",
        "SELECT",         "INFORM_INTENT", "AFFIRM_INTENT", "NEGATE_INTENT",
        "REQUEST_ALTS",   "THANK",        "GOODBYE",      "GREET"};
    return kActs;
}

bool is_sgd_act(const std::string& label) {
    const auto& v = sgd_act_vocabulary();
    return std::find(v.begin(), v.end(), label) != v.end();
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::string& template_for(FacetId f) {
    switch (f) {
        case FacetId::requests: return prompts::requests_facet();
        case FacetId::responses: return prompts::responses_facet();
        case FacetId::context: return prompts::context_facet();
        case FacetId::communication_style: return prompts::communication_style_facet();
        case FacetId::damsl: return prompts::damsl_facet();
        default: return prompts::sgd_facet();
    }
}

// Required leaf paths of each conversation-level facet's JSON reply, in the
// skeleton's order; assembly renders them as "<leaf>: <value>" lines.
const std::vector<std::vector<std::string>>& schema_paths(FacetId f) {
    static const std::map<FacetId, std::vector<std::vector<std::string>>> kPaths = {
        {FacetId::requests,
         {{"specification_and_articulation", "specification_level"},
          {"specification_and_articulation", "underspecified_aspects"},
          {"specification_and_articulation", "articulation_mode"},
          {"goal_decomposition_strategy"},
          {"relevance_to_goal", "goal_adherence"}}},
        {FacetId::responses,
         {{"engagement_and_evaluation", "engagement_level"},
          {"engagement_and_evaluation", "evaluation_mode"},
          {"engagement_and_evaluation", "feedback_specificity"},
          {"response_composition", "action_types"},
          {"steering_mechanism", "directness"},
          {"steering_mechanism", "incremental_reshaping"}}},
        {FacetId::context,
         {{"context_richness", "depth"},
          {"context_richness", "completeness"},
          {"context_richness", "contextualization_vs_directives"},
          {"context_type"},
          {"context_delivery", "distribution"},
          {"context_delivery", "trigger"}}},
        {FacetId::communication_style,
         {{"register_and_tone", "register"},
          {"register_and_tone", "emotional_tone"},
          {"register_and_tone", "tone_shifts"},
          {"verbosity_and_structure", "verbosity"},
          {"verbosity_and_structure", "formatting"},
          {"verbosity_and_structure", "evolution"},
          {"social_conventions", "politeness_markers"},
          {"social_conventions", "agent_relationship"},
          {"request_framing"}}}};
    return kPaths.at(f);
}

const json* lookup_path(const json& j, const std::vector<std::string>& path) {
    const json* cur = &j;
    for (const auto& key : path) {
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
    }
    return cur;
}

std::optional<json> parse_facet_json(FacetId facet, const std::string& reply) {
    auto open = reply.find('{');
    auto close = reply.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        return std::nullopt;
    json parsed;
    try {
        parsed = json::parse(reply.substr(open, close - open + 1));
    } catch (const json::exception&) {
        return std::nullopt;
    }
    for (const auto& path : schema_paths(facet))
        if (!lookup_path(parsed, path)) return std::nullopt;
    return parsed;
}

constexpr const char* kJsonReprompt =
    "Your previous reply was not a valid JSON object in the required format. "
    "Output only the JSON object, with every key from the format, and no other text.";

}  // namespace

std::string render_history(const Conversation& conv, int char_budget, bool user_only) {
    std::vector<std::string> lines;
    for (const auto& t : conv.turns) {
        if (user_only && t.role != Role::user) continue;
        lines.push_back("[" + to_string(t.role) + "] " + t.content);
    }
    // keep the newest lines that fit
    size_t start = 0, total = 0;
    for (size_t i = lines.size(); i-- > 0;) {
        if (total + lines[i].size() + 1 > size_t(char_budget)) {
            start = i + 1;
            break;
        }
        total += lines[i].size() + 1;
    }
    if (start == lines.size() && !lines.empty()) {
        // even the newest line alone exceeds the budget
        std::string tail = lines.back().substr(0, size_t(char_budget));
        return tail;
    }
    std::string out;
    for (size_t i = start; i < lines.size(); ++i) {
        if (!out.empty()) out += "\n";
        out += lines[i];
    }
    return out;
}

FacetDescription describe_facet(const Conversation& conv, FacetId facet, ChatProvider& chat,
                                const DescribeOptions& options) {
    FacetDescription desc;
    desc.conversation_id = conv.id;
    desc.facet = facet;

    if (!facet_is_utterance_level(facet)) {
        bool user_only = facet == FacetId::requests;
        std::string prompt = prompts::render(
            template_for(facet),
            {{"user_goal", conv.goal},
             {"conversation_history", render_history(conv, options.history_char_budget, user_only)}});

        std::vector<ChatMessage> messages = {{"user", prompt}};
        std::string reply = chat.chat("", messages).text;
        auto parsed = parse_facet_json(facet, reply);
        if (!parsed) {
            messages.push_back({"assistant", reply});
            messages.push_back({"user", kJsonReprompt});
            reply = chat.chat("", messages).text;
            parsed = parse_facet_json(facet, reply);
        }
        if (!parsed) {
            desc.failed = true;
            desc.failure_reason = "unparseable " + to_string(facet) + " reply";
            if (options.warn) options.warn(conv.id + ": " + desc.failure_reason);
            return desc;
        }
        desc.payload = std::move(*parsed);
        return desc;
    }

    // Utterance-level facets: one call per user utterance, conversation
    // history capped the same way.
    std::string history = render_history(conv, options.history_char_budget);
    json items = json::array();
    for (const auto& utt : conv.user_utterances()) {
        std::string prompt = prompts::render(template_for(facet),
                                             {{"conversation_history", history},
                                              {"target_user_utterance", utt}});
        std::string reply = trim(chat.chat("", {{"user", prompt}}).text);
        if (facet == FacetId::damsl) {
            if (reply.empty()) {
                reply = trim(chat.chat("", {{"user", prompt}}).text);
                if (reply.empty()) {
                    desc.failed = true;
                    desc.failure_reason = "empty damsl reply";
                    if (options.warn) options.warn(conv.id + ": " + desc.failure_reason);
                    return desc;
                }
            }
            items.push_back(reply);
        } else {
            // comma-separated act labels; unknown labels are dropped
            json acts = json::array();
            std::set<std::string> seen;
            size_t pos = 0;
            while (pos <= reply.size()) {
                size_t comma = reply.find(',', pos);
                std::string token =
                    trim(reply.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos));
                pos = comma == std::string::npos ? reply.size() + 1 : comma + 1;
                if (token.empty()) continue;
                std::transform(token.begin(), token.end(), token.begin(),
                               [](unsigned char c) { return char(std::toupper(c)); });
                if (!is_sgd_act(token)) {
                    if (options.warn)
                        options.warn(conv.id + ": unknown SGD label \"" + token + "\" dropped");
                    continue;
                }
                seen.insert(token);
            }
            for (const auto& act : sgd_act_vocabulary())
                if (seen.count(act)) acts.push_back(act);
            items.push_back(std::move(acts));
        }
    }
    desc.payload = std::move(items);
    return desc;
}

namespace {

std::string facet_header(FacetId f) {
    switch (f) {
        case FacetId::requests: return "Requests:";
        case FacetId::responses: return "Responses:";
        case FacetId::context: return "Context:";
        case FacetId::communication_style: return "Communication style:";
        case FacetId::damsl: return "DAMSL dialog acts:";
        default: return "SGD dialog acts:";
    }
}

std::string value_to_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

}  // namespace

BehaviorRepresentation assemble_representation(const std::vector<FacetDescription>& descs,
                                               const std::set<FacetId>& subset) {
    if (subset.empty()) throw ValidationError("assemble_representation: empty facet subset");

    std::map<FacetId, const FacetDescription*> by_facet;
    std::string conv_id;
    for (const auto& d : descs) {
        if (conv_id.empty()) conv_id = d.conversation_id;
        if (d.conversation_id != conv_id)
            throw ValidationError("assemble_representation: descriptions span conversations");
        if (!subset.count(d.facet)) continue;  // subset restriction ignores the rest
        if (d.failed)
            throw ValidationError("assemble_representation: facet " + to_string(d.facet) +
                                  " failed for " + conv_id);
        by_facet[d.facet] = &d;
    }

    BehaviorRepresentation rep;
    rep.conversation_id = conv_id;
    std::string text;
    for (FacetId f : kAllFacets) {
        if (!subset.count(f)) continue;
        auto it = by_facet.find(f);
        if (it == by_facet.end())
            throw ValidationError("assemble_representation: missing facet " + to_string(f));
        rep.facet_subset.push_back(f);

        if (!text.empty()) text += "\n\n";
        text += facet_header(f);
        const json& payload = it->second->payload;
        if (!facet_is_utterance_level(f)) {
            for (const auto& path : schema_paths(f)) {
                const json* v = lookup_path(payload, path);
                text += "\n" + path.back() + ": " + (v ? value_to_text(*v) : "");
            }
        } else {
            int turn = 1;
            for (const auto& item : payload) {
                std::string line;
                if (f == FacetId::damsl) {
                    line = item.get<std::string>();
                } else {
                    for (const auto& act : item) {
                        if (!line.empty()) line += ", ";
                        line += act.get<std::string>();
                    }
                    if (line.empty()) line = "(none)";
                }
                text += "\nturn " + std::to_string(turn++) + ": " + line;
            }
        }
    }
    rep.text = std::move(text);
    return rep;
}

std::string to_string(GoalCategory c) {
    switch (c) {
        case GoalCategory::artifact_creation: return "Artifact Creation";
        case GoalCategory::information_seeking: return "Information Seeking";
        case GoalCategory::practical_guidance: return "Practical Guidance";
        default: return "Other";
    }
}

bool goal_label_valid(const std::string& category, const std::string& subcategory) {
    static const std::map<std::string, std::set<std::string>> kTaxonomy = {
        {"Artifact Creation", {"Writing", "Coding", "Prompt Generation", "Other"}},
        {"Information Seeking", {"Writing", "Coding", "Math", "Science", "Other"}},
        {"Practical Guidance",
         {"Teaching", "How-To Advice", "Self-Care", "Creative Ideation", "Other"}},
        {"Other", {"Other"}}};
    auto it = kTaxonomy.find(category);
    return it != kTaxonomy.end() && it->second.count(subcategory) > 0;
}

GoalLabel classify_goal(const std::string& goal, ChatProvider& chat) {
    if (trim(goal).empty()) throw ValidationError("classify_goal: goal must be non-empty");

    std::string prompt = prompts::render(prompts::goal_classification(), {{"user_intent", goal}});
    std::vector<ChatMessage> messages = {{"user", prompt}};

    auto parse = [](const std::string& reply) -> std::optional<GoalLabel> {
        auto open = reply.find('{');
        auto close = reply.rfind('}');
        if (open == std::string::npos || close == std::string::npos || close < open)
            return std::nullopt;
        json j;
        try {
            j = json::parse(reply.substr(open, close - open + 1));
        } catch (const json::exception&) {
            return std::nullopt;
        }
        if (!j.contains("category") || !j.contains("subcategory")) return std::nullopt;
        std::string cat = j["category"].is_string() ? j["category"].get<std::string>() : "";
        std::string sub = j["subcategory"].is_string() ? j["subcategory"].get<std::string>() : "";
        if (!goal_label_valid(cat, sub)) return std::nullopt;
        GoalLabel label;
        if (cat == "Artifact Creation") label.category = GoalCategory::artifact_creation;
        else if (cat == "Information Seeking") label.category = GoalCategory::information_seeking;
        else if (cat == "Practical Guidance") label.category = GoalCategory::practical_guidance;
        else label.category = GoalCategory::other;
        label.subcategory = sub;
        return label;
    };

    std::string reply = chat.chat("", messages).text;
    auto label = parse(reply);
    if (!label) {
        messages.push_back({"assistant", reply});
        messages.push_back({"user",
                            "That was not a valid category/subcategory pair from the taxonomy. "
                            "Output only the JSON object with a valid pair."});
        label = parse(chat.chat("", messages).text);
    }
    if (label) return *label;

    GoalLabel fallback;
    fallback.flagged = true;
    return fallback;
}

Task task_from_goal_label(const GoalLabel& label) {
    if (label.subcategory == "Coding") return Task::coding;
    if (label.subcategory == "Writing") return Task::writing;
    return Task::other;
}

DescribeRun describe_corpus(const Corpus& corpus, const std::set<FacetId>& subset,
                            ChatProvider& chat, const DescribeOptions& options,
                            int parallelism) {
    if (subset.empty()) throw ValidationError("describe_corpus: empty facet subset");

    std::vector<FacetId> facets;
    for (FacetId f : kAllFacets)
        if (subset.count(f)) facets.push_back(f);

    const size_t n_items = corpus.conversations.size() * facets.size();
    DescribeRun run;
    run.descriptions.resize(n_items);

    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    int workers = std::max(1, std::min<int>(parallelism, int(n_items)));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t item = next.fetch_add(1);
                if (item >= n_items) return;
                size_t conv_idx = item / facets.size();
                FacetId facet = facets[item % facets.size()];
                try {
                    run.descriptions[item] =
                        describe_facet(corpus.conversations[conv_idx], facet, chat, options);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    std::set<std::string> failed;
    for (const auto& d : run.descriptions)
        if (d.failed) failed.insert(d.conversation_id);
    run.failed_conversation_ids.assign(failed.begin(), failed.end());
    return run;
}

void save_descriptions(const std::string& path, const std::vector<FacetDescription>& descs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    for (const auto& d : descs) {
        json j;
        j["conversation_id"] = d.conversation_id;
        j["facet"] = to_string(d.facet);
        j["payload"] = d.payload;
        if (d.failed) {
            j["failed"] = true;
            j["failure_reason"] = d.failure_reason;
        }
        out << j.dump() << "\n";
    }
}

std::vector<FacetDescription> load_descriptions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::vector<FacetDescription> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        FacetDescription d;
        d.conversation_id = j.at("conversation_id").get<std::string>();
        d.facet = facet_from_string(j.at("facet").get<std::string>());
        d.payload = j.value("payload", json());
        d.failed = j.value("failed", false);
        d.failure_reason = j.value("failure_reason", std::string());
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace bgap
