#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "gusnet/chat_client.hpp"
#include "gusnet/error.hpp"

using namespace gusnet;
using namespace std::chrono_literals;

namespace {

// Virtual clock: sleep advances time instead of blocking.
struct FakeClock {
  std::chrono::steady_clock::time_point t{};
  std::vector<std::chrono::milliseconds> sleeps;
  std::mutex mu;
  Timing timing() {
    return Timing{[this] {
                    std::lock_guard<std::mutex> l(mu);
                    return t;
                  },
                  [this](std::chrono::milliseconds d) {
                    std::lock_guard<std::mutex> l(mu);
                    sleeps.push_back(d);
                    t += d;
                  }};
  }
};

std::shared_ptr<ChatTransport> scripted(std::vector<HttpResponse> replies, int* calls) {
  auto shared = std::make_shared<std::vector<HttpResponse>>(std::move(replies));
  return std::make_shared<CallbackTransport>("scripted", [shared, calls](const std::string&) {
    const std::size_t i = static_cast<std::size_t>((*calls)++);
    return (*shared)[std::min(i, shared->size() - 1)];
  });
}

const std::vector<ChatMessage> kMessages = {{"system", "s"}, {"user", "u"}};

}  // namespace

TEST(ChatWire, RequestCarriesModelMessagesAndSampling) {
  const auto doc = build_chat_request(kMessages, ChatParams{"m-1", 0.25, 64});
  EXPECT_EQ(doc["model"], "m-1");
  EXPECT_EQ(doc["temperature"], 0.25);
  EXPECT_EQ(doc["max_tokens"], 64);
  ASSERT_EQ(doc["messages"].size(), 2u);
  EXPECT_EQ(doc["messages"][1]["role"], "user");
  EXPECT_EQ(doc["messages"][1]["content"], "u");
}

TEST(ChatWire, ResponseParsing) {
  EXPECT_EQ(parse_chat_response(make_chat_response("{\"a\":1}")), "{\"a\":1}");
  EXPECT_THROW(parse_chat_response("not json"), MalformedResponseError);
  EXPECT_THROW(parse_chat_response("{\"choices\": []}"), MalformedResponseError);
  EXPECT_THROW(parse_chat_response("{\"choices\": [{\"message\": {}}]}"), MalformedResponseError);
}

TEST(ChatClient, StubReplyReturnedVerbatim) {
  int calls = 0;
  const std::string canned = "{\"sentence\": \"x\"}";
  ChatClient client(scripted({{200, make_chat_response(canned), {}}}, &calls));
  const auto r = client.complete(kMessages, {});
  EXPECT_EQ(r.text, canned);
  EXPECT_EQ(r.attempts, 1);
  EXPECT_EQ(r.backoffs, 0);
}

TEST(ChatClient, TwoRateLimitsThenSuccess) {
  int calls = 0;
  FakeClock clock;
  RetryPolicy policy;
  policy.initial_backoff = 100ms;
  ChatClient client(scripted({{429, "", {}}, {429, "", {}}, {200, make_chat_response("ok"), {}}},
                             &calls),
                    policy, clock.timing());
  const auto r = client.complete(kMessages, {});
  EXPECT_EQ(r.text, "ok");
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(r.backoffs, 2);
  ASSERT_EQ(clock.sleeps.size(), 2u);
  EXPECT_EQ(clock.sleeps[0], 100ms);
  EXPECT_EQ(clock.sleeps[1], 200ms);
}

TEST(ChatClient, RetryAfterHeaderExtendsBackoff) {
  int calls = 0;
  FakeClock clock;
  ChatClient client(scripted({{503, "", 3.0}, {200, make_chat_response("ok"), {}}}, &calls),
                    RetryPolicy{}, clock.timing());
  client.complete(kMessages, {});
  ASSERT_EQ(clock.sleeps.size(), 1u);
  EXPECT_EQ(clock.sleeps[0], 3000ms);
}

TEST(ChatClient, ExhaustionCarriesAttemptCount) {
  int calls = 0;
  FakeClock clock;
  RetryPolicy policy;
  policy.max_attempts = 4;
  ChatClient client(scripted({{500, "", {}}}, &calls), policy, clock.timing());
  try {
    client.complete(kMessages, {});
    FAIL();
  } catch (const RetriesExhaustedError& e) {
    EXPECT_EQ(e.attempts(), 4);
    EXPECT_EQ(e.kind(), TransportError::Kind::kRetriesExhausted);
  }
  EXPECT_EQ(calls, 4);
}

TEST(ChatClient, DistinctErrorKinds) {
  int calls = 0;
  FakeClock clock;
  ChatClient auth(scripted({{401, "", {}}}, &calls), RetryPolicy{}, clock.timing());
  EXPECT_THROW(auth.complete(kMessages, {}), AuthError);
  EXPECT_EQ(calls, 1);

  calls = 0;
  ChatClient malformed(scripted({{200, "<html>", {}}}, &calls), RetryPolicy{}, clock.timing());
  try {
    malformed.complete(kMessages, {});
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::kMalformedResponse);
  }

  calls = 0;
  ChatClient rejected(scripted({{400, "bad", {}}}, &calls), RetryPolicy{}, clock.timing());
  try {
    rejected.complete(kMessages, {});
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::kRejected);
  }
  EXPECT_EQ(calls, 1);
}

TEST(ChatClient, ConnectionFailureIsRetried) {
  int calls = 0;
  FakeClock clock;
  ChatClient client(scripted({{0, "", {}}, {200, make_chat_response("ok"), {}}}, &calls),
                    RetryPolicy{}, clock.timing());
  EXPECT_EQ(client.complete(kMessages, {}).attempts, 2);
}

TEST(ChatClient, BackoffWindowIsSharedAcrossThreads) {
  // The first request hits a rate limit; every request issued after that must
  // wait for the shared window even though it never saw a 429 itself.
  std::atomic<int> calls{0};
  FakeClock clock;
  auto transport = std::make_shared<CallbackTransport>("t", [&](const std::string&) {
    return calls++ == 0 ? HttpResponse{429, "", 2.0} : HttpResponse{200, make_chat_response("ok"), {}};
  });
  ChatClient client(transport, RetryPolicy{}, clock.timing());
  client.complete(kMessages, {});  // one backoff of 2 s
  const auto after_first = clock.sleeps.size();
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) threads.emplace_back([&] { client.complete(kMessages, {}); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(after_first, 1u);
  EXPECT_EQ(clock.sleeps.size(), 1u);  // the window had already elapsed
  EXPECT_EQ(calls.load(), 6);
}

TEST(ChatClient, RejectsBadConfiguration) {
  EXPECT_THROW(ChatClient(nullptr), ConfigError);
  RetryPolicy p;
  p.max_attempts = 0;
  int calls = 0;
  EXPECT_THROW(ChatClient(scripted({{200, "", {}}}, &calls), p), ConfigError);
}
