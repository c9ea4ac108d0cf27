#include "bgap/error.hpp"
#include "bgap/simgen.hpp"
#include "bgap/stubs.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bgap;

namespace {

std::shared_ptr<ChatProvider> scripted_provider(std::vector<std::string> replies) {
    ProviderConfig cfg;
    cfg.max_retries = 0;
    return std::make_shared<ChatClient>(cfg,
                                        std::make_shared<ScriptedChatBackend>(std::move(replies)));
}

std::shared_ptr<ChatProvider> echo_provider() {
    ProviderConfig cfg;
    return std::make_shared<ChatClient>(cfg, std::make_shared<EchoChatBackend>());
}

std::shared_ptr<ChatProvider> offline_provider() {
    ProviderConfig cfg;
    return std::make_shared<ChatClient>(cfg, std::make_shared<OfflineChatBackend>());
}

}  // namespace

TEST_CASE("termination on the simulator's second call leaves one exchange") {
    ActorSpec sim = make_simulator("scripted", scripted_provider({
                                                   "please build the thing",
                                                   "<|TERMINATE_CONVERSATION|>",
                                               }));
    ActorSpec asst = make_assistant(echo_provider());
    Conversation conv = run_conversation("goal text", sim, asst, 10, "conv-0");
    REQUIRE(conv.turns.size() == 2);
    CHECK(conv.turns[0].role == Role::user);
    CHECK(conv.turns[0].content == "please build the thing");
    CHECK(conv.turns[1].role == Role::assistant);
    CHECK(!conv.failed);
}

TEST_CASE("a never-terminating simulator is capped at max_turns user turns") {
    std::vector<std::string> replies(40, "more please");
    ActorSpec sim = make_simulator("chatty", scripted_provider(replies));
    ActorSpec asst = make_assistant(echo_provider());
    Conversation conv = run_conversation("goal", sim, asst, 10, "conv-1");
    CHECK(conv.user_turn_count() == 10);
    CHECK(conv.turns.size() == 20);
    CHECK(conv.turns.back().role == Role::assistant);
}

TEST_CASE("padded termination signals still terminate (trim-then-exact)") {
    for (const std::string padded : {"  <|TERMINATE_CONVERSATION|>\n", "\t<|TERMINATE_CONVERSATION|>",
                                     "<|TERMINATE_CONVERSATION|>   ", "\n\n<|TERMINATE_CONVERSATION|>\r\n"}) {
        ActorSpec sim = make_simulator("padded", scripted_provider({"one", padded}));
        ActorSpec asst = make_assistant(echo_provider());
        Conversation conv = run_conversation("goal", sim, asst, 10, "conv-2");
        CHECK(conv.user_turn_count() == 1);
        CHECK(!conv.failed);
    }
}

TEST_CASE("a quoted signal inside a longer reply does not terminate") {
    ActorSpec sim = make_simulator(
        "quoting", scripted_provider({"the signal is <|TERMINATE_CONVERSATION|> right?",
                                      "<|TERMINATE_CONVERSATION|>"}));
    ActorSpec asst = make_assistant(echo_provider());
    Conversation conv = run_conversation("goal", sim, asst, 10, "conv-3");
    CHECK(conv.user_turn_count() == 1);
    CHECK(conv.turns[0].content.find("right?") != std::string::npos);
}

TEST_CASE("stored transcripts never contain the termination signal") {
    ActorSpec sim = make_simulator("offline", offline_provider());
    ActorSpec asst = make_assistant(offline_provider());
    for (int g = 0; g < 20; ++g) {
        Conversation conv = run_conversation("goal variant " + std::to_string(g), sim, asst, 6,
                                             "conv-" + std::to_string(g));
        REQUIRE(!conv.turns.empty());
        for (size_t i = 0; i < conv.turns.size(); ++i) {
            CHECK(conv.turns[i].content.find(sim.termination_signal) == std::string::npos);
            CHECK(conv.turns[i].role == (i % 2 == 0 ? Role::user : Role::assistant));
        }
        CHECK(conv.user_turn_count() >= 1);
    }
}

TEST_CASE("provider failure marks the conversation failed, keeping the partial transcript") {
    // simulator succeeds once, then the backend starts failing hard
    ProviderConfig cfg;
    cfg.max_retries = 0;
    auto backend = std::make_shared<ScriptedChatBackend>(std::vector<std::string>{"only reply"});
    ActorSpec sim = make_simulator("flaky", std::make_shared<ChatClient>(cfg, backend));
    ActorSpec asst = make_assistant(echo_provider());
    Conversation conv = run_conversation("goal", sim, asst, 5, "conv-4");
    CHECK(conv.failed);
    CHECK(conv.turns.size() == 2);  // the completed first exchange survives
}

TEST_CASE("simulator template must contain both placeholders") {
    ActorSpec sim = make_simulator("bad", echo_provider());
    sim.system_template = "no placeholders here";
    ActorSpec asst = make_assistant(echo_provider());
    CHECK_THROWS_AS(run_conversation("goal", sim, asst, 3, "x"), ValidationError);
}

TEST_CASE("degenerate mixture weights route everything to one simulator") {
    std::vector<WeightedSimulator> sims;
    sims.push_back({make_simulator("sim-a", offline_provider()), 1.0});
    sims.push_back({make_simulator("sim-b", offline_provider()), 0.0});
    ActorSpec asst = make_assistant(offline_provider());
    std::vector<std::string> goals;
    for (int i = 0; i < 50; ++i) goals.push_back("goal " + std::to_string(i));
    MixtureRun run = run_mixture(goals, sims, asst, 4, 9, 2);
    for (const auto& [conv, sim] : run.assignments) CHECK(sim == "sim-a");
}

TEST_CASE("mixture assignments are deterministic for a fixed seed") {
    auto build = [&] {
        std::vector<WeightedSimulator> sims;
        sims.push_back({make_simulator("sim-a", offline_provider()), 0.5});
        sims.push_back({make_simulator("sim-b", offline_provider()), 0.5});
        ActorSpec asst = make_assistant(offline_provider());
        std::vector<std::string> goals;
        for (int i = 0; i < 200; ++i) goals.push_back("goal " + std::to_string(i));
        return run_mixture(goals, sims, asst, 4, 1234, 4);
    };
    MixtureRun a = build();
    MixtureRun b = build();
    CHECK(a.assignments == b.assignments);
}

TEST_CASE("mixture assignment counts sit within 3 sigma of the binomial mean") {
    std::vector<WeightedSimulator> sims;
    sims.push_back({make_simulator("sim-a", offline_provider()), 0.5});
    sims.push_back({make_simulator("sim-b", offline_provider()), 0.5});
    ActorSpec asst = make_assistant(offline_provider());
    std::vector<std::string> goals;
    for (int i = 0; i < 10000; ++i) goals.push_back("g" + std::to_string(i));
    MixtureRun run = run_mixture(goals, sims, asst, 1, 42, 4);
    long count_a = 0;
    for (const auto& [conv, sim] : run.assignments)
        if (sim == "sim-a") ++count_a;
    double sigma = std::sqrt(10000 * 0.25);
    CHECK(std::abs(double(count_a) - 5000.0) <= 3.0 * sigma);
}

TEST_CASE("mixture weight validation") {
    std::vector<WeightedSimulator> sims;
    sims.push_back({make_simulator("a", offline_provider()), 0.5});
    ActorSpec asst = make_assistant(offline_provider());
    CHECK_THROWS_AS(run_mixture({"g"}, sims, asst, 2, 0), ValidationError);  // one simulator
    sims.push_back({make_simulator("b", offline_provider()), 0.2});
    CHECK_THROWS_AS(run_mixture({"g"}, sims, asst, 2, 0), ValidationError);  // weights != 1
}

TEST_CASE("generated corpora are byte-identical across runs with stub actors") {
    bgap::test::TempDir dir("simgen");
    auto generate = [&](const std::string& name) {
        std::vector<WeightedSimulator> sims;
        sims.push_back({make_simulator("s1", offline_provider()), 0.7});
        sims.push_back({make_simulator("s2", offline_provider()), 0.3});
        ActorSpec asst = make_assistant(offline_provider());
        std::vector<std::string> goals;
        for (int i = 0; i < 40; ++i) goals.push_back("please handle item " + std::to_string(i));
        MixtureRun run = run_mixture(goals, sims, asst, 5, 777, 4);
        save_corpus(dir.file(name), run.corpus);
        save_assignments(dir.file(name + ".assign"), run.assignments);
    };
    generate("a.jsonl");
    generate("b.jsonl");
    CHECK(bgap::test::read_file(dir.file("a.jsonl")) == bgap::test::read_file(dir.file("b.jsonl")));
    CHECK(bgap::test::read_file(dir.file("a.jsonl.assign")) ==
          bgap::test::read_file(dir.file("b.jsonl.assign")));
}
