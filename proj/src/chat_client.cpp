#include "gusnet/chat_client.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

#include "gusnet/error.hpp"

namespace gusnet {

using nlohmann::json;

Timing Timing::real() {
  return Timing{[] { return std::chrono::steady_clock::now(); },
                [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }};
}

json build_chat_request(const std::vector<ChatMessage>& messages, const ChatParams& params) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return json{{"model", params.model_id},
              {"messages", std::move(msgs)},
              {"temperature", params.temperature},
              {"max_tokens", params.max_tokens}};
}

std::string parse_chat_response(const std::string& body) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw MalformedResponseError("chat response is not a JSON object");
  }
  auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw MalformedResponseError("chat response has no choices");
  }
  const json& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].is_object() ||
      !first["message"].contains("content") || !first["message"]["content"].is_string()) {
    throw MalformedResponseError("chat response choice has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

std::string make_chat_response(const std::string& content) {
  json doc{{"object", "chat.completion"},
           {"choices",
            json::array({{{"index", 0},
                          {"message", {{"role", "assistant"}, {"content", content}}},
                          {"finish_reason", "stop"}}})}};
  return doc.dump();
}

ChatClient::ChatClient(std::shared_ptr<ChatTransport> transport, RetryPolicy policy,
                       Timing timing)
    : transport_(std::move(transport)), policy_(policy), timing_(std::move(timing)) {
  if (!transport_) throw ConfigError("chat client needs a transport");
  if (policy_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

std::chrono::milliseconds ChatClient::backoff_delay(int backoff_index,
                                                    std::optional<double> retry_after) const {
  const double base = static_cast<double>(policy_.initial_backoff.count()) *
                      std::pow(policy_.multiplier, backoff_index);
  double ms = std::min(base, static_cast<double>(policy_.max_backoff.count()));
  if (retry_after) ms = std::max(ms, *retry_after * 1000.0);
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

void ChatClient::wait_for_window() {
  std::chrono::steady_clock::time_point resume;
  {
    std::lock_guard<std::mutex> lock(mu_);
    resume = resume_at_;
  }
  const auto now = timing_.now();
  if (resume > now) {
    timing_.sleep(std::chrono::duration_cast<std::chrono::milliseconds>(resume - now));
  }
}

void ChatClient::extend_window(std::chrono::milliseconds delay) {
  std::lock_guard<std::mutex> lock(mu_);
  resume_at_ = std::max(resume_at_, timing_.now() + delay);
}

ChatResult ChatClient::complete(const std::vector<ChatMessage>& messages,
                                const ChatParams& params) {
  const std::string body = build_chat_request(messages, params).dump();
  ChatResult result;
  int backoffs = 0;
  int last_status = 0;
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    wait_for_window();
    HttpResponse response = transport_->post(body);
    last_status = response.status;
    if (response.status == 200) {
      try {
        result.text = parse_chat_response(response.body);
      } catch (const MalformedResponseError& e) {
        throw MalformedResponseError(e.what(), attempt);
      }
      result.attempts = attempt;
      result.backoffs = backoffs;
      return result;
    }
    if (response.status == 401 || response.status == 403) {
      throw AuthError("authentication failed (HTTP " + std::to_string(response.status) + ")",
                      attempt);
    }
    const bool retryable = response.status == 0 || response.status == 429 ||
                           response.status == 408 || response.status >= 500;
    if (!retryable) {
      throw TransportError(TransportError::Kind::kRejected,
                           "request rejected (HTTP " + std::to_string(response.status) +
                               "): " + response.body.substr(0, 200),
                           attempt);
    }
    if (attempt == policy_.max_attempts) break;
    const auto delay = backoff_delay(backoffs, response.retry_after_seconds);
    spdlog::debug("chat backend {} returned {}, backing off {} ms", transport_->name(),
                  response.status, delay.count());
    extend_window(delay);
    ++backoffs;
  }
  throw RetriesExhaustedError("chat request failed after " +
                                  std::to_string(policy_.max_attempts) +
                                  " attempts (last HTTP status " + std::to_string(last_status) +
                                  ")",
                              policy_.max_attempts);
}

}  // namespace gusnet
