#include "bgap/error.hpp"
#include "bgap/facets.hpp"
#include "bgap/gateway.hpp"
#include "bgap/prompts.hpp"
#include "bgap/stubs.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bgap;
using bgap::test::make_conversation;

namespace {

ChatClient scripted(std::vector<std::string> replies) {
    ProviderConfig cfg;
    cfg.max_retries = 0;
    return ChatClient(cfg, std::make_shared<ScriptedChatBackend>(std::move(replies)));
}

const char* kRequestsSkeleton = R"json({
   "specification_and_articulation": {
      "specification_level": "how specified are requests?",
      "underspecified_aspects": "what types of information are left underspecified/specified? (provide high-level descriptions without task-specific details)",
      "articulation_mode": "how does the user articulate their requests (explicit directives, indirect cues, mixed)?"
   },
   "goal_decomposition_strategy": "describe how the user goal decomposed across utterances?",
   "relevance_to_goal": {
      "goal_adherence": "Are the user's requests directly related to the user goal? If not, what other functions do they serve? (provide high-level descriptions without task-specific details)"
   }
})json";

}  // namespace

TEST_CASE("sgd replies parse into the act vocabulary") {
    auto conv = make_conversation("c1", {"can you do this?"});
    auto chat = scripted({"INFORM, REQUEST"});
    FacetDescription desc = describe_facet(conv, FacetId::sgd, chat);
    REQUIRE(!desc.failed);
    REQUIRE(desc.payload.size() == 1);
    CHECK(desc.payload[0] == nlohmann::json::array({"INFORM", "REQUEST"}));
}

TEST_CASE("unknown sgd labels are dropped with a warning") {
    auto conv = make_conversation("c1", {"thanks!"});
    auto chat = scripted({"THANK, BYE"});
    std::vector<std::string> warnings;
    DescribeOptions options;
    options.warn = [&](const std::string& w) { warnings.push_back(w); };
    FacetDescription desc = describe_facet(conv, FacetId::sgd, chat, options);
    CHECK(desc.payload[0] == nlohmann::json::array({"THANK"}));
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("BYE") != std::string::npos);
}

TEST_CASE("sgd act order is canonical regardless of reply order") {
    auto conv = make_conversation("c1", {"hello, can you help?"});
    auto chat = scripted({"REQUEST, GREET, INFORM"});
    FacetDescription desc = describe_facet(conv, FacetId::sgd, chat);
    CHECK(desc.payload[0] == nlohmann::json::array({"INFORM", "REQUEST", "GREET"}));
}

TEST_CASE("requests facet parses the documented JSON skeleton") {
    auto conv = make_conversation("c1", {"build me a widget"});
    auto chat = scripted({kRequestsSkeleton});
    FacetDescription desc = describe_facet(conv, FacetId::requests, chat);
    REQUIRE(!desc.failed);
    CHECK(desc.payload.contains("specification_and_articulation"));
    CHECK(desc.payload.contains("goal_decomposition_strategy"));
    CHECK(desc.payload.contains("relevance_to_goal"));
    CHECK(desc.payload["specification_and_articulation"].contains("specification_level"));
}

TEST_CASE("json parse failure triggers one reprompt, then a flagged failure") {
    auto conv = make_conversation("c1", {"build me a widget"});
    {
        auto chat = scripted({"not json at all", kRequestsSkeleton});
        FacetDescription desc = describe_facet(conv, FacetId::requests, chat);
        CHECK(!desc.failed);  // recovered on the reprompt
    }
    {
        auto chat = scripted({"not json", "still not json"});
        FacetDescription desc = describe_facet(conv, FacetId::requests, chat);
        CHECK(desc.failed);
        CHECK(!desc.failure_reason.empty());
    }
}

TEST_CASE("damsl and sgd produce one entry per user utterance") {
    auto conv = make_conversation("c1", {"first ask", "second ask", "third ask"});
    ProviderConfig cfg;
    ChatClient chat(cfg, std::make_shared<OfflineChatBackend>());
    FacetDescription damsl = describe_facet(conv, FacetId::damsl, chat);
    FacetDescription sgd = describe_facet(conv, FacetId::sgd, chat);
    CHECK(damsl.payload.size() == 3);
    CHECK(sgd.payload.size() == 3);
}

TEST_CASE("assemble: single sgd facet renders the documented text") {
    FacetDescription desc;
    desc.conversation_id = "c1";
    desc.facet = FacetId::sgd;
    desc.payload = nlohmann::json::array({nlohmann::json::array({"INFORM"})});
    BehaviorRepresentation rep = assemble_representation({desc}, {FacetId::sgd});
    CHECK(rep.text == "SGD dialog acts:\nturn 1: INFORM");
}

TEST_CASE("assemble: all six facet headers appear once, in enum order") {
    auto conv = make_conversation("c1", {"please make a small script", "thanks, adjust it?"});
    ProviderConfig cfg;
    ChatClient chat(cfg, std::make_shared<OfflineChatBackend>());
    std::vector<FacetDescription> descs;
    for (FacetId f : kAllFacets) descs.push_back(describe_facet(conv, f, chat));
    std::set<FacetId> all(kAllFacets.begin(), kAllFacets.end());
    BehaviorRepresentation rep = assemble_representation(descs, all);

    const char* headers[] = {"Requests:",  "Responses:",          "Context:",
                             "Communication style:", "DAMSL dialog acts:", "SGD dialog acts:"};
    size_t pos = 0;
    for (const char* header : headers) {
        size_t found = rep.text.find(header);
        REQUIRE(found != std::string::npos);
        CHECK(found >= pos);
        CHECK(rep.text.find(header, found + 1) == std::string::npos);
        pos = found;
    }
    CHECK(rep.facet_subset.size() == 6);
}

TEST_CASE("assembly is a pure function of its inputs") {
    auto conv = make_conversation("c9", {"short one"});
    ProviderConfig cfg;
    ChatClient chat(cfg, std::make_shared<OfflineChatBackend>());
    std::vector<FacetDescription> descs;
    for (FacetId f : kAllFacets) descs.push_back(describe_facet(conv, f, chat));
    std::set<FacetId> all(kAllFacets.begin(), kAllFacets.end());
    CHECK(assemble_representation(descs, all).text == assemble_representation(descs, all).text);
}

TEST_CASE("subset restriction ignores descriptions outside the subset") {
    auto conv = make_conversation("c1", {"request text"});
    ProviderConfig cfg;
    ChatClient chat(cfg, std::make_shared<OfflineChatBackend>());
    std::vector<FacetDescription> all_descs;
    for (FacetId f : kAllFacets) all_descs.push_back(describe_facet(conv, f, chat));
    std::vector<FacetDescription> only_sgd = {all_descs.back()};

    BehaviorRepresentation from_all = assemble_representation(all_descs, {FacetId::sgd});
    BehaviorRepresentation from_one = assemble_representation(only_sgd, {FacetId::sgd});
    CHECK(from_all.text == from_one.text);

    // per-facet evaluation: singleton subsets give six distinct representations
    std::set<std::string> texts;
    for (FacetId f : kAllFacets)
        texts.insert(assemble_representation(all_descs, {f}).text);
    CHECK(texts.size() == 6);
}

TEST_CASE("assemble fails on a missing or failed facet") {
    FacetDescription sgd_ok;
    sgd_ok.conversation_id = "c";
    sgd_ok.facet = FacetId::sgd;
    sgd_ok.payload = nlohmann::json::array();
    CHECK_THROWS_AS(assemble_representation({sgd_ok}, {FacetId::damsl}), ValidationError);

    FacetDescription failed = sgd_ok;
    failed.failed = true;
    CHECK_THROWS_AS(assemble_representation({failed}, {FacetId::sgd}), ValidationError);
}

TEST_CASE("classify_goal accepts valid taxonomy pairs") {
    auto chat = scripted({R"({"category":"Artifact Creation","subcategory":"Coding"})"});
    GoalLabel label = classify_goal("write a parser", chat);
    CHECK(label.category == GoalCategory::artifact_creation);
    CHECK(label.subcategory == "Coding");
    CHECK(!label.flagged);
    CHECK(task_from_goal_label(label) == Task::coding);
}

TEST_CASE("classify_goal retries invalid pairs, then falls back flagged") {
    {
        auto chat = scripted({R"({"category":"Artifact Creation","subcategory":"Math"})",
                              R"({"category":"Information Seeking","subcategory":"Math"})"});
        GoalLabel label = classify_goal("solve x", chat);
        CHECK(label.category == GoalCategory::information_seeking);
        CHECK(label.subcategory == "Math");
    }
    {
        auto chat = scripted({"nonsense", "more nonsense"});
        GoalLabel label = classify_goal("anything", chat);
        CHECK(label.flagged);
        CHECK(label.category == GoalCategory::other);
        CHECK(label.subcategory == "Other");
    }
}

TEST_CASE("classify_goal accepts the catch-all pair") {
    auto chat = scripted({R"({"category":"Other","subcategory":"Other"})"});
    GoalLabel label = classify_goal("hmm", chat);
    CHECK(label.category == GoalCategory::other);
    CHECK(!label.flagged);
}

TEST_CASE("goal taxonomy validation table") {
    CHECK(goal_label_valid("Artifact Creation", "Prompt Generation"));
    CHECK(goal_label_valid("Practical Guidance", "Self-Care"));
    CHECK(!goal_label_valid("Artifact Creation", "Math"));
    CHECK(!goal_label_valid("Other", "Coding"));
    CHECK(!goal_label_valid("Made Up", "Other"));
}

TEST_CASE("history rendering drops oldest turns first under the budget") {
    Conversation conv = make_conversation("c", {"first message", "second message", "third"});
    std::string full = render_history(conv, 32000);
    CHECK(full.find("[user] first message") != std::string::npos);
    CHECK(full.find("[assistant] reply 0") != std::string::npos);

    std::string tight = render_history(conv, 40);
    CHECK(tight.find("first message") == std::string::npos);
    CHECK(tight.find("third") != std::string::npos);

    std::string user_only = render_history(conv, 32000, true);
    CHECK(user_only.find("[assistant]") == std::string::npos);
    CHECK(user_only.find("[user] second message") != std::string::npos);
}

TEST_CASE("describe_corpus returns conversation-major, facet-minor order and failure ids") {
    Corpus corpus;
    corpus.conversations = {make_conversation("a", {"hi"}), make_conversation("b", {"yo"})};
    ProviderConfig cfg;
    ChatClient chat(cfg, std::make_shared<OfflineChatBackend>());
    DescribeRun run = describe_corpus(corpus, {FacetId::requests, FacetId::sgd}, chat, {}, 4);
    REQUIRE(run.descriptions.size() == 4);
    CHECK(run.descriptions[0].conversation_id == "a");
    CHECK(run.descriptions[0].facet == FacetId::requests);
    CHECK(run.descriptions[1].facet == FacetId::sgd);
    CHECK(run.descriptions[2].conversation_id == "b");
    CHECK(run.failed_conversation_ids.empty());
}

TEST_CASE("descriptions round-trip through descriptions.jsonl") {
    bgap::test::TempDir dir("descs");
    auto conv = make_conversation("c1", {"please help me", "thanks"});
    ProviderConfig cfg;
    ChatClient chat(cfg, std::make_shared<OfflineChatBackend>());
    std::vector<FacetDescription> descs;
    for (FacetId f : kAllFacets) descs.push_back(describe_facet(conv, f, chat));
    save_descriptions(dir.file("d.jsonl"), descs);
    auto loaded = load_descriptions(dir.file("d.jsonl"));
    REQUIRE(loaded.size() == descs.size());
    for (size_t i = 0; i < descs.size(); ++i) {
        CHECK(loaded[i].facet == descs[i].facet);
        CHECK(loaded[i].payload == descs[i].payload);
    }
}

TEST_CASE("prompt templates carry their placeholders and render cleanly") {
    for (const std::string* tmpl :
         {&prompts::requests_facet(), &prompts::responses_facet(), &prompts::context_facet(),
          &prompts::communication_style_facet()}) {
        CHECK(tmpl->find("{user_goal}") != std::string::npos);
        CHECK(tmpl->find("{conversation_history}") != std::string::npos);
    }
    CHECK(prompts::damsl_facet().find("{target_user_utterance}") != std::string::npos);
    CHECK(prompts::sgd_facet().find("{target_user_utterance}") != std::string::npos);
    CHECK(prompts::simulator_system().find("{intent}") != std::string::npos);
    CHECK(prompts::simulator_system().find("{termination_signal}") != std::string::npos);

    std::string rendered = prompts::render(prompts::requests_facet(),
                                           {{"user_goal", "G"}, {"conversation_history", "H"}});
    CHECK(rendered.find("{user_goal}") == std::string::npos);
    CHECK(rendered.find("{{") == std::string::npos);  // skeleton braces collapsed
    CHECK(rendered.find("\"specification_and_articulation\": {") != std::string::npos);
}
