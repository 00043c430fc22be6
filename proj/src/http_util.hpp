#pragma once

#include <string>
#include <string_view>

namespace nbrag::detail {

struct HttpTarget {
  std::string base;  // scheme://host[:port]
  std::string path;  // starts with '/'
};

/// Throws kConfig for URLs without a scheme or host.
HttpTarget split_url(std::string_view url);

/// Value of the named environment variable, or "" when `env_name` is empty.
/// Throws kConfig when a name is given but the variable is unset.
std::string key_from_env(const std::string& env_name);

}  // namespace nbrag::detail
