#pragma once

#include <string>

namespace tcr {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

Url parse_url(const std::string& url);

struct HttpResult {
  int status = 0;  // 0 when no response was received
  std::string body;
  std::string error;
};

HttpResult http_post_json(const std::string& url, const std::string& body, int timeout_ms);

}  // namespace tcr
