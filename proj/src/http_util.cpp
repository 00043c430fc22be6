#include "http_util.hpp"

#include <cstdlib>

#include "nbrag/error.hpp"

namespace nbrag::detail {

HttpTarget split_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos || scheme_end == 0) {
    throw Error(ErrorCode::kConfig, "endpoint url needs a scheme: " + std::string(url));
  }
  auto path_start = url.find('/', scheme_end + 3);
  HttpTarget t;
  t.base = std::string(url.substr(0, path_start));
  t.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
  if (t.base.size() <= scheme_end + 3) {
    throw Error(ErrorCode::kConfig, "endpoint url has no host: " + std::string(url));
  }
  return t;
}

std::string key_from_env(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* value = std::getenv(env_name.c_str());
  if (value == nullptr) {
    throw Error(ErrorCode::kConfig, "environment variable " + env_name + " is not set");
  }
  return value;
}

}  // namespace nbrag::detail
