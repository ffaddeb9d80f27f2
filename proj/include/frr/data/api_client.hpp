// SPDX-License-Identifier: Apache-2.0
//
// Client for a remote face-beautify HTTP service.
//
// Wire contract: one multipart/form-data POST per image with the image as a
// base64 text field and one integer field per operation level. Credentials
// are read from environment variables at call time, sent either as an
// Authorization-style header or as form fields, and never logged or stored.
// The response is either an image body (Content-Type image/...) or JSON with
// the base64 image under "result".
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "frr/core/error.hpp"
#include "frr/data/retouch.hpp"

namespace frr::data {

class AuthError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "auth_error"; }
};

class QuotaError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "quota_exhausted"; }
};

class MalformedResponse : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "malformed_response"; }
};

/// The request was rejected (4xx other than auth/quota) or transient failures
/// outlasted the retry budget.
class ApiRequestError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "api_request_failed"; }
};

struct ApiEndpointConfig {
  /// http://host[:port]/path or https://host[:port]/path
  std::string url;
  /// Environment variable holding a bearer token; empty disables the header.
  std::string token_env = "FRR_API_TOKEN";
  std::string auth_header = "Authorization";
  std::string auth_scheme = "Bearer";
  /// Extra credential form fields: field name -> environment variable.
  std::map<std::string, std::string> credential_fields;
  std::string image_field = "image_base64";
  /// Form field per operation; defaults follow the common beautify-API names.
  std::map<std::string, std::string> level_fields = {
      {"eye_enlarging", "enlarge_eye"},     {"face_slimming", "thinface"},
      {"skin_whitening", "whitening"},      {"skin_smoothing", "smoothing"},
      {"eyebrow_shaping", "remove_eyebrow"}, {"face_shrinking", "shrink_face"}};
  int max_retries = 3;
  double initial_backoff_seconds = 0.5;
  double backoff_factor = 2.0;
  double timeout_seconds = 30.0;
  std::size_t max_upload_bytes = 2 * 1024 * 1024;
  std::int64_t max_side = 4096;
};

void to_json(nlohmann::json& j, const ApiEndpointConfig& c);
void from_json(const nlohmann::json& j, ApiEndpointConfig& c);

struct ApiOutcome {
  std::vector<std::uint8_t> image;  // retouched image bytes as returned
  int attempts = 0;
  std::vector<int> statuses;  // per attempt, 0 = no response
};

/// Sends `raw_bytes` (an encoded image) with `ops` to the endpoint and returns
/// the retouched image. Retries 5xx and connection failures with exponential
/// backoff. Errors: AuthError (401/403), QuotaError (429), MalformedResponse
/// (undecodable payload), ShapeError naming `id` (dimension mismatch),
/// ApiRequestError (other rejections, retries exhausted), InvalidArgument
/// (image beyond the configured limits).
ApiOutcome api_retouch(std::span<const std::uint8_t> raw_bytes, const RetouchSpec& ops, const ApiEndpointConfig& config,
                       const std::string& id);

}  // namespace frr::data
