#pragma once

#include <string>

#include "gusnet/chat_client.hpp"

namespace gusnet {

struct HttpEndpoint {
  // Full URL of the chat-completions route,
  // e.g. https://api.openai.com/v1/chat/completions
  std::string url = "https://api.openai.com/v1/chat/completions";
  // Environment variable holding the bearer token.
  std::string api_key_env = "OPENAI_API_KEY";
  bool require_api_key = true;
  int timeout_seconds = 120;
};

// OpenAI-compatible chat-completions transport over HTTP(S).
class HttpTransport : public ChatTransport {
 public:
  // Throws AuthError when require_api_key is set and the variable is unset.
  explicit HttpTransport(HttpEndpoint endpoint);
  HttpResponse post(const std::string& request_json) override;
  std::string name() const override { return "http:" + endpoint_.url; }

 private:
  HttpEndpoint endpoint_;
  std::string origin_;
  std::string path_;
  std::string api_key_;
};

}  // namespace gusnet
