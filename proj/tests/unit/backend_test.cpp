#include <gtest/gtest.h>

#include <deque>

#include "lami/llm_backend.hpp"
#include "lami/planner.hpp"
#include "oracles.hpp"

namespace lami {
namespace {

std::vector<ChatMessage> start(const std::string& trigger) {
  return {ChatMessage::system("system"), ChatMessage::user(trigger)};
}

Fixture appendix() { return load_fixture(testing::fixture_path("appendix_b.json")); }

TEST(ScriptedBackend, FirstStepIsTheScriptedGetObjects) {
  VirtualClock clock;
  ScriptedBackend backend(appendix(), clock);
  EXPECT_EQ(backend.scripted_steps(), 13u);
  auto history = start("Felix said to Daniel: Can you pass me the fanta bottle?");
  const ChatMessage reply = backend.complete(history, {});
  EXPECT_EQ(reply.role, Role::assistant);
  ASSERT_EQ(reply.tool_calls.size(), 1u);
  EXPECT_EQ(reply.tool_calls[0].function_name, "get_objects");
  EXPECT_EQ(backend.position(), 1u);
}

TEST(ScriptedBackend, EmptyScriptFailsOnFirstRequest) {
  VirtualClock clock;
  ScriptedBackend backend(Fixture{}, clock);
  EXPECT_TRUE(backend.exhausted());
  const auto history = start("x");
  EXPECT_THROW(backend.complete(history, {}), BackendError);
}

TEST(ScriptedBackend, HistoryWithoutSystemMessageIsRejected) {
  VirtualClock clock;
  ScriptedBackend backend(appendix(), clock);
  const std::vector<ChatMessage> history = {ChatMessage::user("hi")};
  EXPECT_THROW(backend.complete(history, {}), BackendError);
}

TEST(ScriptedBackend, LatencyAdvancesTheVirtualClock) {
  VirtualClock clock;
  ScriptedBackend backend(appendix(), clock, 2.0);
  const auto history = start("x");
  backend.complete(history, {});
  EXPECT_DOUBLE_EQ(clock.now(), 2.0);
}

TEST(ScriptedBackend, LatencyOnTheRealClock) {
  RealClock clock;
  ScriptedBackend backend(appendix(), clock, 2.0);
  const auto history = start("x");
  const double before = clock.now();
  backend.complete(history, {});
  const double elapsed = clock.now() - before;
  EXPECT_GE(elapsed, 2.0 - 0.05);
  EXPECT_LE(elapsed, 2.0 + 0.05);
}

TEST(ScriptedBackend, UnexpectedResultIsADivergenceAtThatStep) {
  VirtualClock clock;
  ScriptedBackend backend(appendix(), clock);
  auto history = start("x");
  const ChatMessage first = backend.complete(history, {});
  history.push_back(first);
  history.push_back(ChatMessage::tool_result(first.tool_calls[0].id, "Following objects were observed: nothing."));
  try {
    backend.complete(history, {});
    FAIL() << "expected a divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 1u);
    EXPECT_EQ(e.actual(), "Following objects were observed: nothing.");
    EXPECT_FALSE(e.retryable());
  }
}

TEST(ScriptedBackend, SummaryOutOfTurnIsADivergence) {
  VirtualClock clock;
  ScriptedBackend backend(appendix(), clock);
  auto history = start("x");
  history.push_back(ChatMessage::user(std::string(kSummaryPrompt)));
  EXPECT_THROW(backend.complete(history, {}), DivergenceError);
}

// Records every request and plays back canned responses.
class FakeTransport final : public HttpTransport {
 public:
  struct Call {
    std::string path;
    std::string body;
    std::multimap<std::string, std::string> headers;
  };
  HttpResponse post(const std::string& path, const std::string& body,
                    const std::multimap<std::string, std::string>& headers) override {
    calls->push_back({path, body, headers});
    if (responses->empty()) return {0, "", "no canned response"};
    HttpResponse r = responses->front();
    responses->pop_front();
    return r;
  }
  std::shared_ptr<std::vector<Call>> calls = std::make_shared<std::vector<Call>>();
  std::shared_ptr<std::deque<HttpResponse>> responses = std::make_shared<std::deque<HttpResponse>>();
};

const char* kToolCallBody = R"({"choices":[{"message":{"role":"assistant","content":null,"tool_calls":[
  {"id":"call_9","type":"function","function":{"name":"get_objects","arguments":"{}"}}]}}]})";

struct RemoteFixture {
  VirtualClock clock;
  std::shared_ptr<std::vector<FakeTransport::Call>> calls;
  std::shared_ptr<std::deque<HttpResponse>> responses;
  std::unique_ptr<RemoteBackend> backend;

  explicit RemoteFixture(std::optional<std::int64_t> seed = 42) {
    auto transport = std::make_unique<FakeTransport>();
    calls = transport->calls;
    responses = transport->responses;
    BackendConfig config;
    config.kind = BackendKind::remote;
    config.endpoint = "http://127.0.0.1:9";
    config.seed = seed;
    backend = std::make_unique<RemoteBackend>(config, std::move(transport), clock);
  }
};

std::vector<FunctionSpec> appendix_tools(Scene& scene, const ClipCatalog& catalog) {
  return register_builtin_functions({&scene, nullptr, &catalog, {}}).advertised();
}

TEST(RemoteBackend, RequestCarriesModelToolsAndSeed) {
  RemoteFixture f;
  Scene scene = load_scene(testing::asset("scenarios/appendix_b.json"));
  const ClipCatalog catalog = load_clip_catalog(testing::asset("clips"));
  const auto tools = appendix_tools(scene, catalog);
  f.responses->push_back({200, kToolCallBody, ""});
  const auto history = start("Felix said to Daniel: hi");
  const ChatMessage reply = f.backend->complete(history, tools);

  ASSERT_EQ(f.calls->size(), 1u);
  EXPECT_EQ((*f.calls)[0].path, "/chat/completions");
  const auto body = nlohmann::json::parse((*f.calls)[0].body);
  EXPECT_EQ(body["model"], "gpt-4-1106-preview");
  EXPECT_EQ(body["seed"], 42);
  EXPECT_EQ(body["tool_choice"], "auto");
  EXPECT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  ASSERT_EQ(body["tools"].size(), tools.size());
  EXPECT_EQ(body["tools"][0]["type"], "function");
  EXPECT_EQ(body["tools"][0]["function"]["name"], "get_objects");

  ASSERT_EQ(reply.tool_calls.size(), 1u);
  EXPECT_EQ(reply.tool_calls[0], (ToolCall{"call_9", "get_objects", "{}"}));
}

TEST(RemoteBackend, NoSeedNoToolsMeansNoSuchFields) {
  RemoteFixture f(std::nullopt);
  const auto request = f.backend->build_request(start("x"), {});
  EXPECT_FALSE(request.contains("seed"));
  EXPECT_FALSE(request.contains("tools"));
}

TEST(RemoteBackend, RetriesTransientFailuresWithBackoff) {
  RemoteFixture f;
  f.responses->push_back({503, "overloaded", ""});
  f.responses->push_back({0, "", "connection reset"});
  f.responses->push_back({200, kToolCallBody, ""});
  const auto history = start("x");
  const ChatMessage reply = f.backend->complete(history, {});
  EXPECT_EQ(f.calls->size(), 3u);
  EXPECT_DOUBLE_EQ(f.clock.now(), 0.5 + 2.0);
  EXPECT_EQ(reply.tool_calls.size(), 1u);
}

TEST(RemoteBackend, GivesUpAfterTheBackoffSchedule) {
  RemoteFixture f;
  for (int i = 0; i < 3; ++i) f.responses->push_back({500, "boom", ""});
  const auto history = start("x");
  try {
    f.backend->complete(history, {});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.retryable());
    EXPECT_NE(std::string(e.what()).find("HTTP 500"), std::string::npos);
  }
  EXPECT_EQ(f.calls->size(), 3u);
}

TEST(RemoteBackend, ClientErrorsAreNotRetried) {
  RemoteFixture f;
  f.responses->push_back({401, "unauthorized", ""});
  const auto history = start("x");
  try {
    f.backend->complete(history, {});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.retryable());
  }
  EXPECT_EQ(f.calls->size(), 1u);
}

TEST(RemoteBackend, ParseResponse) {
  const ChatMessage text =
      RemoteBackend::parse_response(R"({"choices":[{"message":{"role":"assistant","content":"Done."}}]})");
  EXPECT_EQ(text.content, "Done.");
  EXPECT_TRUE(text.tool_calls.empty());
  EXPECT_THROW(RemoteBackend::parse_response("{not json"), BackendError);
  EXPECT_THROW(RemoteBackend::parse_response(R"({"choices":[]})"), BackendError);
}

TEST(ChatWire, FunctionSpecsRoundTrip) {
  Scene scene = load_scene(testing::asset("scenarios/appendix_b.json"));
  const ClipCatalog catalog = load_clip_catalog(testing::asset("clips"));
  const Registry registry = register_builtin_functions({&scene, nullptr, &catalog, {}});
  for (const auto& name : registry.names()) {
    const FunctionSpec& spec = registry.find(name)->spec;
    EXPECT_EQ(function_spec_from_wire(to_wire(spec)), spec) << name;
  }
}

TEST(ChatWire, MessagesRoundTrip) {
  ChatMessage assistant;
  assistant.role = Role::assistant;
  assistant.tool_calls = {{"call_1", "speak", R"({"person_name": "Felix", "text": "Hi"})"}};
  for (const auto& m : {ChatMessage::system("s"), ChatMessage::user("u"), assistant,
                        ChatMessage::tool_result("call_1", "You said to Felix: Hi")}) {
    EXPECT_EQ(message_from_wire(to_wire(m)), m);
  }
}

TEST(ChatWire, RoleInvariants) {
  ChatMessage bad = ChatMessage::tool_result("", "x");
  bad.tool_call_id.reset();
  EXPECT_THROW(validate(bad), PreconditionError);
  ChatMessage empty;
  empty.role = Role::assistant;
  EXPECT_THROW(validate(empty), PreconditionError);
  empty.content = "";
  EXPECT_NO_THROW(validate(empty));
}

TEST(BackendConfig, ValidateNamesTheMissingField) {
  BackendConfig remote;
  remote.kind = BackendKind::remote;
  try {
    remote.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), "backend.endpoint");
  }
  BackendConfig scripted;
  EXPECT_THROW(scripted.validate(), ConfigError);
  scripted.fixture_path = testing::fixture_path("appendix_b.json");
  EXPECT_NO_THROW(scripted.validate());
}

// A transport that must never be used.
class TrippedTransport final : public HttpTransport {
 public:
  explicit TrippedTransport(bool* touched) : touched_(touched) {}
  HttpResponse post(const std::string&, const std::string&, const std::multimap<std::string, std::string>&) override {
    *touched_ = true;
    return {0, "", "network disabled"};
  }

 private:
  bool* touched_;
};

TEST(MakeBackend, ScriptedBackendNeverTouchesTheNetwork) {
  bool touched = false;
  VirtualClock clock;
  BackendConfig config;
  config.fixture_path = testing::fixture_path("appendix_b.json");
  auto backend = make_backend(config, clock, std::make_unique<TrippedTransport>(&touched));
  const auto history = start("x");
  backend->complete(history, {});
  EXPECT_NE(dynamic_cast<ScriptedBackend*>(backend.get()), nullptr);
  EXPECT_FALSE(touched);
}

}  // namespace
}  // namespace lami
