#include <httplib.h>

#include "lami/llm_backend.hpp"

namespace lami {
namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, double timeout_seconds) {
    // Split "scheme://host:port/prefix" into the client origin and path prefix.
    const auto scheme_end = base_url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = base_url.find('/', host_start);
    origin_ = base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(origin_);
    const auto seconds = static_cast<time_t>(timeout_seconds);
    client_->set_read_timeout(seconds, 0);
    client_->set_write_timeout(seconds, 0);
    client_->set_connection_timeout(10, 0);
  }

  HttpResponse post(const std::string& path, const std::string& body,
                    const std::multimap<std::string, std::string>& headers) override {
    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [key, value] : headers) {
      if (key == "Content-Type") {
        content_type = value;
      } else {
        h.emplace(key, value);
      }
    }
    HttpResponse out;
    auto result = client_->Post(prefix_ + path, h, body, content_type);
    if (!result) {
      out.transport_error = httplib::to_string(result.error());
      return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
  }

 private:
  std::string origin_;
  std::string prefix_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, double timeout_seconds) {
  return std::make_unique<HttplibTransport>(base_url, timeout_seconds);
}

}  // namespace lami
