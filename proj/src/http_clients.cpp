#include "liber/http_clients.hpp"

#include <httplib.h>

#include <json.hpp>

#include "liber/errors.hpp"

namespace liber {
namespace {

using nlohmann::json;

httplib::Headers auth_headers(const std::string& api_key) {
  httplib::Headers h;
  if (!api_key.empty()) h.emplace("Authorization", "Bearer " + api_key);
  return h;
}

std::string post_json(const HttpEndpoint& endpoint, const std::string& api_key,
                      std::chrono::seconds timeout, const std::string& body) {
  httplib::Client client(endpoint.host_url);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Post(endpoint.path, auth_headers(api_key), body, "application/json");
  if (!res) {
    throw TransportError("request to " + endpoint.host_url + endpoint.path +
                         " failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 408 || status == 429 || status >= 500) {
    throw TransportError("HTTP " + std::to_string(status) + " from " + endpoint.host_url);
  }
  if (status < 200 || status >= 300) {
    throw ProtocolError("HTTP " + std::to_string(status) + " from " + endpoint.host_url + ": " +
                        res->body.substr(0, 200));
  }
  return res->body;
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
}

}  // namespace

HttpEndpoint HttpEndpoint::parse(const std::string& url) {
  constexpr std::string_view kScheme = "http://";
  if (url.rfind(kScheme, 0) != 0) {
    throw ConfigError("endpoint '" + url + "' must start with http://");
  }
  const auto slash = url.find('/', kScheme.size());
  HttpEndpoint e;
  e.host_url = url.substr(0, slash);
  e.path = slash == std::string::npos ? "/" : url.substr(slash);
  if (e.host_url.size() == kScheme.size()) throw ConfigError("endpoint '" + url + "' has no host");
  return e;
}

HttpChatClient::HttpChatClient(HttpChatConfig config)
    : config_(std::move(config)), endpoint_(HttpEndpoint::parse(config_.url)) {}

std::string HttpChatClient::request_body(const HttpChatConfig& config, const std::string& prompt) {
  json body = {{"model", config.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", config.temperature}};
  return body.dump();
}

std::string HttpChatClient::parse_completion(const std::string& body,
                                             const std::string& pointer) {
  const json doc = parse_body(body);
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(pointer);
  } catch (const json::exception& e) {
    throw ConfigError("invalid completion pointer '" + pointer + "'");
  }
  if (!doc.contains(ptr)) throw ProtocolError("response has no value at " + pointer);
  const auto& value = doc.at(ptr);
  if (!value.is_string()) throw ProtocolError("value at " + pointer + " is not a string");
  return value.get<std::string>();
}

std::string HttpChatClient::complete(const std::string& prompt) {
  const auto body =
      post_json(endpoint_, config_.api_key, config_.timeout, request_body(config_, prompt));
  return parse_completion(body, config_.completion_pointer);
}

HttpEmbedClient::HttpEmbedClient(HttpEmbedConfig config)
    : config_(std::move(config)), endpoint_(HttpEndpoint::parse(config_.url)) {}

std::string HttpEmbedClient::request_body(const HttpEmbedConfig& config,
                                          const std::vector<std::string>& texts) {
  json body = {{"model", config.model}, {"input", texts}};
  return body.dump();
}

std::vector<Vector> HttpEmbedClient::parse_vectors(const std::string& body,
                                                   const std::string& pointer,
                                                   std::size_t count) {
  const json doc = parse_body(body);
  std::vector<Vector> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string p = pointer;
    if (const auto pos = p.find("{i}"); pos != std::string::npos) {
      p.replace(pos, 3, std::to_string(i));
    }
    json::json_pointer ptr;
    try {
      ptr = json::json_pointer(p);
    } catch (const json::exception&) {
      throw ConfigError("invalid vector pointer '" + p + "'");
    }
    if (!doc.contains(ptr)) throw ProtocolError("response has no vector at " + p);
    const auto& arr = doc.at(ptr);
    if (!arr.is_array() || arr.empty()) throw ProtocolError("zero-length embedding at " + p);
    Vector v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t k = 0; k < arr.size(); ++k) {
      if (!arr[k].is_number()) throw ProtocolError("non-numeric embedding entry at " + p);
      v(static_cast<Eigen::Index>(k)) = arr[k].get<double>();
    }
    if (!out.empty() && out.front().size() != v.size()) {
      throw ProtocolError("embedding dimensions differ across inputs");
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Vector> HttpEmbedClient::embed(const std::vector<std::string>& texts) {
  const auto body =
      post_json(endpoint_, config_.api_key, config_.timeout, request_body(config_, texts));
  return parse_vectors(body, config_.vector_pointer, texts.size());
}

}  // namespace liber
