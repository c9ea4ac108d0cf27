#include "bgap/stubs.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <thread>

#include "bgap/error.hpp"
#include "json.hpp"

namespace bgap {

using nlohmann::json;

void InFlightGauge::enter() {
    int cur = current_.fetch_add(1) + 1;
    total_.fetch_add(1);
    int prev = max_seen_.load();
    while (cur > prev && !max_seen_.compare_exchange_weak(prev, cur)) {
    }
}

void InFlightGauge::leave() { current_.fetch_sub(1); }

namespace {

struct GaugeGuard {
    explicit GaugeGuard(InFlightGauge& g) : gauge(g) { gauge.enter(); }
    ~GaugeGuard() { gauge.leave(); }
    InFlightGauge& gauge;
};

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64: tiny, platform-independent, good enough for stub vectors.
uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double uniform01(uint64_t& state) {
    return double(splitmix64(state) >> 11) * 0x1.0p-53;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

std::string last_user_content(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it)
        if (it->role == "user") return it->content;
    return messages.back().content;
}

// Section of `text` between `begin_marker` and the next `end_marker`
// (or end of string).
std::string section(const std::string& text, const std::string& begin_marker,
                    const std::string& end_marker) {
    size_t b = text.find(begin_marker);
    if (b == std::string::npos) return {};
    b += begin_marker.size();
    size_t e = end_marker.empty() ? std::string::npos : text.find(end_marker, b);
    return text.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

// Surface features of the user side of a conversation excerpt. The buckets
// are coarse on purpose: conversations sharing a behavioral archetype map to
// identical description strings, giving the offline pipeline real cluster
// structure.
struct TextStats {
    int utterances = 0;
    double avg_len = 0;
    double question_frac = 0;
    bool polite = false;
    bool greets = false;
    bool formatted = false;
};

TextStats analyze_user_text(const std::string& text) {
    // Conversation excerpts carry "[user] " / "[assistant] " line prefixes;
    // only the user side feeds the stats. Unprefixed text is all user.
    bool prefixed = contains(text, "[user]");
    TextStats st;
    size_t total_len = 0;
    int questions = 0;
    std::string user_text;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        if (line.empty()) continue;
        if (prefixed) {
            if (line.rfind("[user] ", 0) != 0) continue;
            line = line.substr(7);
        }
        ++st.utterances;
        total_len += line.size();
        if (line.find('?') != std::string::npos) ++questions;
        user_text += line;
        user_text += '\n';
    }
    std::string low = lower(user_text);
    st.polite = contains(low, "please") || contains(low, "thank");
    st.greets = contains(low, "hello") || low.rfind("hi", 0) == 0 || contains(low, "hi ") ||
                contains(low, "hey");
    st.formatted = contains(user_text, "- ") || contains(user_text, "```") ||
                   contains(user_text, "1.");
    if (st.utterances > 0) {
        st.avg_len = double(total_len) / st.utterances;
        st.question_frac = double(questions) / st.utterances;
    }
    return st;
}

std::string verbosity_bucket(const TextStats& st) {
    if (st.avg_len < 40) return "minimal compressed messages";
    if (st.avg_len < 120) return "terse single clause messages";
    if (st.avg_len < 300) return "moderately elaborated messages";
    return "expansive elaborated messages";
}

std::string framing_bucket(const TextStats& st) {
    if (st.question_frac > 0.6) return "interrogative framing throughout";
    if (st.question_frac > 0.2) return "mixed imperative and interrogative framing";
    return "imperative directives without questions";
}

std::string decomposition_bucket(const TextStats& st) {
    if (st.utterances <= 1) return "single shot, entire goal in one utterance";
    if (st.utterances <= 3) return "top down refinement across a few turns";
    return "chained incremental requests across many turns";
}

std::string social_bucket(const TextStats& st) {
    if (st.polite && st.greets) return "greetings and gratitude throughout, social interlocutor";
    if (st.polite) return "gratitude markers present, otherwise transactional";
    return "purely transactional, no pleasantries";
}

std::string requests_reply(const TextStats& st) {
    json j;
    j["specification_and_articulation"] = {
        {"specification_level", st.avg_len < 120 ? "underspecified initial request"
                                                 : "exhaustively specified requests"},
        {"underspecified_aspects", st.formatted ? "constraints enumerated, edge cases omitted"
                                                : "constraints and output format left open"},
        {"articulation_mode", framing_bucket(st)}};
    j["goal_decomposition_strategy"] = decomposition_bucket(st);
    j["relevance_to_goal"] = {
        {"goal_adherence", st.question_frac > 0.4 ? "requests probe capabilities beyond the goal"
                                                  : "requests directly serve the stated goal"}};
    return j.dump();
}

std::string responses_reply(const TextStats& st) {
    json j;
    j["engagement_and_evaluation"] = {
        {"engagement_level", st.utterances > 2 ? "engages with every assistant response"
                                               : "minimal engagement, moves on quickly"},
        {"evaluation_mode", st.polite ? "explicit validation with acceptance"
                                      : "implicit acceptance by continuing"},
        {"feedback_specificity", st.avg_len >= 120 ? "specific actionable feedback"
                                                   : "surface level acknowledgment only"}};
    j["response_composition"] = {
        {"action_types", st.question_frac > 0.4 ? "proactive follow-up questions and suggestions"
                                                : "reactive corrections and confirmations"}};
    j["steering_mechanism"] = {
        {"directness", st.question_frac > 0.4 ? "steers through questions and hints"
                                              : "steers through direct follow-up requests"},
        {"incremental_reshaping", st.utterances > 2 ? "introduces new constraints across turns"
                                                    : "no incremental reshaping"}};
    return j.dump();
}

std::string context_reply(const TextStats& st) {
    json j;
    j["context_richness"] = {
        {"depth", st.avg_len >= 300 ? "rich background, prior attempts, thought process"
                                    : "little background shared"},
        {"completeness", st.avg_len >= 120 ? "most relevant context provided"
                                           : "essential context left out"},
        {"contextualization_vs_directives", st.avg_len < 40
                                                ? "bare directives without situating the task"
                                                : "task situated with some context"}};
    j["context_type"] = st.formatted ? "constraints, preferences, existing solutions"
                                     : "goals and motivations only";
    j["context_delivery"] = {
        {"distribution", st.utterances <= 1 ? "front loaded in the first message"
                                            : "revealed incrementally across turns"},
        {"trigger", st.question_frac > 0.4 ? "revealed in response to questions"
                                           : "volunteered unprompted"}};
    return j.dump();
}

std::string style_reply(const TextStats& st) {
    json j;
    j["register_and_tone"] = {
        {"register", st.polite ? "conversational and courteous" : "terse and professional"},
        {"emotional_tone", st.greets ? "enthusiastic and appreciative" : "neutral and focused"},
        {"tone_shifts", st.utterances > 3 ? "tone flattens as the task progresses"
                                          : "stable tone throughout"}};
    j["verbosity_and_structure"] = {{"verbosity", verbosity_bucket(st)},
                                    {"formatting", st.formatted
                                                       ? "structured lists and code blocks"
                                                       : "plain unformatted prose"},
                                    {"evolution", st.utterances > 2
                                                      ? "messages shorten over turns"
                                                      : "consistent message length"}};
    j["social_conventions"] = {{"politeness_markers", st.polite
                                                          ? "greetings, gratitude, sign offs"
                                                          : "no pleasantries"},
                               {"agent_relationship", social_bucket(st)}};
    j["request_framing"] = framing_bucket(st);
    return j.dump();
}

std::string damsl_reply(const std::string& target) {
    TextStats st = analyze_user_text(target);
    std::string info = st.question_frac > 0 ? "info-request seeking details"
                                            : "task-level statement advancing the goal";
    std::string social = st.polite ? " with conventional politeness markers" : "";
    return "User issues a " + std::string(st.avg_len < 60 ? "compressed " : "elaborated ") +
           info + social + ".";
}

std::string sgd_reply(const std::string& target) {
    std::string low = lower(target);
    std::vector<std::string> acts;
    if (contains(low, "hello") || low.rfind("hi", 0) == 0 || contains(low, "hey"))
        acts.push_back("GREET");
    if (target.find('?') != std::string::npos) acts.push_back("REQUEST");
    if (contains(low, "instead") || contains(low, "alternative") || contains(low, "other option"))
        acts.push_back("REQUEST_ALTS");
    if (contains(low, "yes") || contains(low, "sounds good") || contains(low, "perfect") ||
        contains(low, "works"))
        acts.push_back("AFFIRM");
    if (contains(low, "no,") || contains(low, "wrong") || contains(low, "not what"))
        acts.push_back("NEGATE");
    if (contains(low, "thank")) acts.push_back("THANK");
    if (contains(low, "bye")) acts.push_back("GOODBYE");
    if (acts.empty() || (!contains(low, "?") && low.size() > 20)) acts.push_back("INFORM");
    std::string out;
    for (size_t i = 0; i < acts.size(); ++i) {
        if (i) out += ", ";
        out += acts[i];
    }
    return out;
}

std::string goal_classification_reply(const std::string& prompt) {
    std::string goal = lower(section(prompt, "# User Intent\n", "\n#"));
    std::string category = "Other", sub = "Other";
    if (contains(goal, "code") || contains(goal, "script") || contains(goal, "program") ||
        contains(goal, "function") || contains(goal, "debug")) {
        category = "Artifact Creation";
        sub = "Coding";
    } else if (contains(goal, "write") || contains(goal, "essay") || contains(goal, "story") ||
               contains(goal, "letter") || contains(goal, "poem")) {
        category = "Artifact Creation";
        sub = "Writing";
    } else if (contains(goal, "how to") || contains(goal, "how do")) {
        category = "Practical Guidance";
        sub = "How-To Advice";
    } else if (contains(goal, "what is") || contains(goal, "explain")) {
        category = "Information Seeking";
        sub = "Other";
    }
    json j;
    j["category"] = category;
    j["subcategory"] = sub;
    return j.dump();
}

std::string simulator_reply(const std::string& system, const std::vector<ChatMessage>& messages) {
    std::string goal = section(system, "# User Goal\n", "\n\n#");
    std::string signal = section(system, "respond ONLY with \"", "\"");
    if (signal.empty()) signal = "<|TERMINATE_CONVERSATION|>";

    int own_turns = 0;
    for (const auto& m : messages)
        if (m.role == "assistant") ++own_turns;

    uint64_t h = fnv1a64(goal);
    int target_turns = 1 + int(h % 3);  // 1..3 user turns per persona
    if (own_turns >= target_turns) return signal;

    std::string snippet = goal.substr(0, 60);
    if (own_turns == 0) return "i need help with this: " + snippet;
    if (own_turns == 1) return "ok but can you adjust it? " + snippet.substr(0, 30);
    return "one more change please";
}

std::string assistant_reply(const std::vector<ChatMessage>& messages) {
    std::string last = last_user_content(messages);
    uint64_t h = fnv1a64(last);
    static const char* kOpeners[] = {"Sure, here is what I suggest for",
                                     "Here is a way to approach", "Let me address",
                                     "Here is an updated take on"};
    return std::string(kOpeners[h % 4]) + ": " + last.substr(0, 80);
}

}  // namespace

ChatResult EchoChatBackend::complete(const std::string&, const std::vector<ChatMessage>& messages,
                                     double) {
    GaugeGuard guard(gauge);
    if (messages.empty()) throw ValidationError("echo stub: empty messages");
    return {last_user_content(messages), {.prompt_tokens = 1, .completion_tokens = 1}};
}

ScriptedChatBackend::ScriptedChatBackend(std::vector<std::string> replies, int fail_first)
    : replies_(std::move(replies)), fail_first_(fail_first) {}

ChatResult ScriptedChatBackend::complete(const std::string&, const std::vector<ChatMessage>&,
                                         double) {
    GaugeGuard guard(gauge);
    std::lock_guard lock(mu_);
    if (fail_first_ > 0) {
        --fail_first_;
        throw TransientError("scripted failure (HTTP 429)");
    }
    if (next_ >= replies_.size()) throw ProviderError("scripted stub: replies exhausted");
    return {replies_[next_++], {}};
}

ChatResult LambdaChatBackend::complete(const std::string& system,
                                       const std::vector<ChatMessage>& messages, double) {
    GaugeGuard guard(gauge);
    return {fn_(system, messages), {}};
}

std::vector<float> HashEmbedBackend::vector_for(const std::string& text, int dim) {
    uint64_t state = fnv1a64(text);
    std::vector<float> v(static_cast<size_t>(dim));
    double norm_sq = 0;
    for (int i = 0; i < dim; i += 2) {
        // Box-Muller on splitmix64 uniforms: platform-independent normals.
        double u1 = std::max(uniform01(state), 1e-12);
        double u2 = uniform01(state);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = r * std::cos(2.0 * M_PI * u2);
        double b = r * std::sin(2.0 * M_PI * u2);
        v[size_t(i)] = float(a);
        if (i + 1 < dim) v[size_t(i) + 1] = float(b);
    }
    for (float x : v) norm_sq += double(x) * x;
    float inv = float(1.0 / std::sqrt(norm_sq));
    for (float& x : v) x *= inv;
    return v;
}

std::vector<std::vector<float>> HashEmbedBackend::embed_batch(
    const std::vector<std::string>& texts) {
    GaugeGuard guard(gauge);
    if (sleep_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms_));
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(vector_for(t, dim_));
    return out;
}

ChatResult OfflineChatBackend::complete(const std::string& system,
                                        const std::vector<ChatMessage>& messages, double) {
    GaugeGuard guard(gauge);
    if (messages.empty()) throw ValidationError("offline stub: empty messages");

    if (contains(system, "You are a user simulator"))
        return {simulator_reply(system, messages), {}};
    if (contains(system, "You are a helpful assistant"))
        return {assistant_reply(messages), {}};

    const std::string& prompt = last_user_content(messages);

    if (contains(prompt, "# User Intent")) return {goal_classification_reply(prompt), {}};

    if (contains(prompt, "# Target Utterance")) {
        std::string target = section(prompt, "ONLY to this utterance:\n", "\n\n\n#");
        if (target.empty()) target = section(prompt, "ONLY to this utterance:\n", "\n\n#");
        if (contains(prompt, "Schema-Guided Dialogue")) return {sgd_reply(target), {}};
        return {damsl_reply(target), {}};
    }

    if (contains(prompt, "meaningless filler terms")) return {"[]", {}};

    TextStats st;
    if (contains(prompt, "# User Utterances\n"))
        st = analyze_user_text(section(prompt, "# User Utterances\n", "\n# Analysis Criteria"));
    else
        st = analyze_user_text(section(prompt, "# Conversation\n", "\n# Analysis Criteria"));

    if (contains(prompt, "specification_and_articulation")) return {requests_reply(st), {}};
    if (contains(prompt, "engagement_and_evaluation")) return {responses_reply(st), {}};
    if (contains(prompt, "context_richness")) return {context_reply(st), {}};
    if (contains(prompt, "register_and_tone")) return {style_reply(st), {}};

    // Unrecognized prompt: deterministic generic reply.
    return {"ack:" + std::to_string(fnv1a64(prompt) % 100000), {}};
}

}  // namespace bgap
