#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "liber/chat_client.hpp"
#include "liber/encoding.hpp"

namespace liber {

struct HttpEndpoint {
  std::string host_url;  // scheme://host[:port]
  std::string path;      // /v1/...

  // Only plain http:// endpoints are supported.
  static HttpEndpoint parse(const std::string& url);
};

struct HttpChatConfig {
  std::string url;
  std::string model = "llama-2-13b-chat";
  std::string api_key;  // sent as a bearer token when non-empty
  double temperature = 0.0;
  // JSON pointer to the completion text.
  std::string completion_pointer = "/choices/0/message/content";
  std::chrono::seconds timeout{120};
};

// POST {model, messages: [{role: "user", content}], temperature}.
// 408, 429, 5xx and connection failures raise TransportError; other non-2xx
// statuses and malformed bodies raise ProtocolError.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatConfig config);

  std::string complete(const std::string& prompt) override;
  std::string kind() const override { return "http"; }

  static std::string request_body(const HttpChatConfig& config, const std::string& prompt);
  static std::string parse_completion(const std::string& body, const std::string& pointer);

 private:
  HttpChatConfig config_;
  HttpEndpoint endpoint_;
};

struct HttpEmbedConfig {
  std::string url;
  std::string model = "bert-base-uncased";
  std::string api_key;
  // JSON pointer per input; "{i}" is replaced by the input position.
  std::string vector_pointer = "/data/{i}/embedding";
  std::chrono::seconds timeout{60};
};

// POST {model, input: [texts]}.
class HttpEmbedClient final : public EmbedClient {
 public:
  explicit HttpEmbedClient(HttpEmbedConfig config);

  std::vector<Vector> embed(const std::vector<std::string>& texts) override;
  std::string kind() const override { return "http"; }

  static std::string request_body(const HttpEmbedConfig& config,
                                  const std::vector<std::string>& texts);
  static std::vector<Vector> parse_vectors(const std::string& body, const std::string& pointer,
                                           std::size_t count);

 private:
  HttpEmbedConfig config_;
  HttpEndpoint endpoint_;
};

}  // namespace liber
