// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "frr/data/api_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "frr/core/hash.hpp"
#include "frr/core/image.hpp"

namespace frr::data {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/:]+)(:(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("api endpoint: malformed url '" + url + "'");
  ParsedUrl p;
  p.origin = m[1].str() + "://" + m[2].str() + (m[3].matched ? m[3].str() : "");
  p.path = m[5].matched ? m[5].str() : "/";
  return p;
}

std::string env_or_throw(const std::string& var) {
  const char* v = std::getenv(var.c_str());
  if (v == nullptr || *v == '\0') throw AuthError("api credentials: environment variable " + var + " is not set");
  return v;
}

std::vector<std::uint8_t> extract_image(const httplib::Response& res, const std::string& id) {
  const auto type = res.get_header_value("Content-Type");
  if (type.rfind("image/", 0) == 0) return {res.body.begin(), res.body.end()};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::exception&) {
    throw MalformedResponse("api response for '" + id + "' is neither an image nor JSON");
  }
  if (!j.is_object() || !j.contains("result") || !j["result"].is_string()) {
    throw MalformedResponse("api response for '" + id + "' has no base64 'result' image");
  }
  try {
    return base64_decode(j["result"].get<std::string>());
  } catch (const IoError&) {
    throw MalformedResponse("api response for '" + id + "' carries invalid base64");
  }
}

}  // namespace

void to_json(nlohmann::json& j, const ApiEndpointConfig& c) {
  j = {{"url", c.url},
       {"token_env", c.token_env},
       {"auth_header", c.auth_header},
       {"auth_scheme", c.auth_scheme},
       {"credential_fields", c.credential_fields},
       {"image_field", c.image_field},
       {"level_fields", c.level_fields},
       {"max_retries", c.max_retries},
       {"initial_backoff_seconds", c.initial_backoff_seconds},
       {"backoff_factor", c.backoff_factor},
       {"timeout_seconds", c.timeout_seconds},
       {"max_upload_bytes", c.max_upload_bytes},
       {"max_side", c.max_side}};
}

void from_json(const nlohmann::json& j, ApiEndpointConfig& c) {
  const ApiEndpointConfig d;
  c.url = j.at("url").get<std::string>();
  c.token_env = j.value("token_env", d.token_env);
  c.auth_header = j.value("auth_header", d.auth_header);
  c.auth_scheme = j.value("auth_scheme", d.auth_scheme);
  c.credential_fields = j.value("credential_fields", d.credential_fields);
  c.image_field = j.value("image_field", d.image_field);
  c.level_fields = j.value("level_fields", d.level_fields);
  c.max_retries = j.value("max_retries", d.max_retries);
  c.initial_backoff_seconds = j.value("initial_backoff_seconds", d.initial_backoff_seconds);
  c.backoff_factor = j.value("backoff_factor", d.backoff_factor);
  c.timeout_seconds = j.value("timeout_seconds", d.timeout_seconds);
  c.max_upload_bytes = j.value("max_upload_bytes", d.max_upload_bytes);
  c.max_side = j.value("max_side", d.max_side);
  for (const auto& [op, field] : c.level_fields) parse_retouch_op(op);
}

ApiOutcome api_retouch(std::span<const std::uint8_t> raw_bytes, const RetouchSpec& ops, const ApiEndpointConfig& config,
                       const std::string& id) {
  const auto url = parse_url(config.url);
  if (raw_bytes.size() > config.max_upload_bytes) {
    throw InvalidArgument("image '" + id + "' is " + std::to_string(raw_bytes.size()) + " bytes, above the endpoint limit");
  }
  const auto input = decode_image(raw_bytes);
  if (input.size(1) > config.max_side || input.size(2) > config.max_side) {
    throw InvalidArgument("image '" + id + "' exceeds the endpoint's maximum side of " + std::to_string(config.max_side));
  }

  httplib::MultipartFormDataItems form;
  form.push_back({config.image_field, base64_encode(raw_bytes), "", ""});
  for (auto op : kAllRetouchOps) {
    const std::string name(to_string(op));
    const auto field = config.level_fields.find(name);
    if (field == config.level_fields.end()) continue;
    int level = 0;
    for (const auto& step : ops) {
      if (step.op == op) level = step.level;
    }
    require(level >= 0 && level <= 100, "retouch level for " + name + " must lie in [0, 100]");
    form.push_back({field->second, std::to_string(level), "", ""});
  }
  for (const auto& [field, var] : config.credential_fields) form.push_back({field, env_or_throw(var), "", ""});
  httplib::Headers headers;
  if (!config.token_env.empty()) {
    const auto token = env_or_throw(config.token_env);
    headers.emplace(config.auth_header, config.auth_scheme.empty() ? token : config.auth_scheme + " " + token);
  }

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  ApiOutcome outcome;
  double backoff = config.initial_backoff_seconds;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= config.backoff_factor;
    }
    ++outcome.attempts;
    auto res = client.Post(url.path, headers, form);
    const int status = res ? res->status : 0;
    outcome.statuses.push_back(status);
    spdlog::info("api request id={} attempt={} status={}", id, outcome.attempts,
                 res ? std::to_string(status) : "no response (" + httplib::to_string(res.error()) + ")");
    if (!res || status >= 500) continue;
    if (status == 401 || status == 403) throw AuthError("api rejected credentials for '" + id + "' (HTTP " + std::to_string(status) + ")");
    if (status == 429) throw QuotaError("api quota exhausted while processing '" + id + "'");
    if (status < 200 || status >= 300) {
      throw ApiRequestError("api rejected '" + id + "' with HTTP " + std::to_string(status));
    }
    outcome.image = extract_image(*res, id);
    torch::Tensor output;
    try {
      output = decode_image(outcome.image);
    } catch (const IoError&) {
      throw MalformedResponse("api response for '" + id + "' is not a decodable image");
    }
    if (output.sizes() != input.sizes()) {
      throw ShapeError("api result for '" + id + "' is " + std::to_string(output.size(2)) + "x" +
                       std::to_string(output.size(1)) + ", expected " + std::to_string(input.size(2)) + "x" +
                       std::to_string(input.size(1)));
    }
    if (attempt > 0) spdlog::info("api request id={} succeeded after {} retries", id, attempt);
    return outcome;
  }
  throw ApiRequestError("api request for '" + id + "' failed after " + std::to_string(outcome.attempts) +
                        " attempts (last status " + std::to_string(outcome.statuses.back()) + ")");
}

}  // namespace frr::data
