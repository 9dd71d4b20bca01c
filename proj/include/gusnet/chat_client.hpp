#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace gusnet {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatParams {
  std::string model_id = "mistral-7b-instruct";
  double temperature = 0.7;
  int max_tokens = 256;
};

struct HttpResponse {
  int status = 0;  // 0: no response (connection failure)
  std::string body;
  std::optional<double> retry_after_seconds;
};

// One POST of a chat-completions request body. Implementations must be safe
// to call from several threads.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResponse post(const std::string& request_json) = 0;
  virtual std::string name() const = 0;
};

// Transport backed by a callable; used for the offline stub and in tests.
class CallbackTransport : public ChatTransport {
 public:
  using Handler = std::function<HttpResponse(const std::string& request_json)>;
  CallbackTransport(std::string name, Handler handler)
      : name_(std::move(name)), handler_(std::move(handler)) {}
  HttpResponse post(const std::string& request_json) override { return handler_(request_json); }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Handler handler_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
};

// Clock and sleep hooks, replaceable so backoff can be tested without waiting.
struct Timing {
  std::function<std::chrono::steady_clock::time_point()> now;
  std::function<void(std::chrono::milliseconds)> sleep;
  static Timing real();
};

struct ChatResult {
  std::string text;
  int attempts = 1;
  int backoffs = 0;
};

nlohmann::json build_chat_request(const std::vector<ChatMessage>& messages,
                                  const ChatParams& params);
// Extracts choices[0].message.content; throws MalformedResponseError.
std::string parse_chat_response(const std::string& body);
// OpenAI-style response body carrying `content` as the assistant message.
std::string make_chat_response(const std::string& content);

// Chat-completions client with exponential backoff on rate limits (429) and
// transient server failures (5xx, no response). All threads sharing a client
// also share its backoff window.
class ChatClient {
 public:
  explicit ChatClient(std::shared_ptr<ChatTransport> transport, RetryPolicy policy = {},
                      Timing timing = Timing::real());

  ChatResult complete(const std::vector<ChatMessage>& messages, const ChatParams& params);
  std::string backend_name() const { return transport_->name(); }
  const RetryPolicy& policy() const { return policy_; }

 private:
  std::chrono::milliseconds backoff_delay(int backoff_index,
                                          std::optional<double> retry_after) const;
  void wait_for_window();
  void extend_window(std::chrono::milliseconds delay);

  std::shared_ptr<ChatTransport> transport_;
  RetryPolicy policy_;
  Timing timing_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point resume_at_{};
};

}  // namespace gusnet
