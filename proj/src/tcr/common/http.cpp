#include "tcr/common/http.hpp"

#include <httplib.h>

#include "tcr/common/errors.hpp"

namespace tcr {

Url parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("URL must include a scheme: '" + url + "'");
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http") throw ConfigError("only http:// URLs are supported: '" + url + "'");
  auto path_start = url.find('/', scheme_end + 3);
  Url u;
  if (path_start == std::string::npos) {
    u.origin = url;
    u.path = "/";
  } else {
    u.origin = url.substr(0, path_start);
    u.path = url.substr(path_start);
  }
  if (u.origin.size() <= scheme_end + 3) throw ConfigError("URL has no host: '" + url + "'");
  return u;
}

HttpResult http_post_json(const std::string& url, const std::string& body, int timeout_ms) {
  Url u = parse_url(url);
  httplib::Client cli(u.origin);
  auto sec = timeout_ms / 1000;
  auto usec = (timeout_ms % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  HttpResult out;
  auto res = cli.Post(u.path, body, "application/json");
  if (!res) {
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace tcr
