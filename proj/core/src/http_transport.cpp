#include <httplib.h>

#include <fmt/format.h>

#include "probcoh/elicitation.hpp"
#include "probcoh/error.hpp"

namespace probcoh {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError(fmt::format("endpoint URL '{}' lacks a scheme", url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const HttpRequest& request) override {
        const SplitUrl url = split_url(request.url);
        httplib::Client client(url.origin);
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
        const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - seconds);
        client.set_connection_timeout(seconds.count(), static_cast<time_t>(micros.count()));
        client.set_read_timeout(seconds.count(), static_cast<time_t>(micros.count()));
        client.set_write_timeout(seconds.count(), static_cast<time_t>(micros.count()));

        httplib::Headers headers;
        std::string content_type = "application/json";
        for (const auto& [name, value] : request.headers) {
            if (name == "Content-Type") {
                content_type = value;
            } else {
                headers.emplace(name, value);
            }
        }
        auto result = client.Post(url.path, headers, request.body, content_type);
        HttpResponse response;
        if (!result) {
            response.status = 0;
            response.error = httplib::to_string(result.error());
            return response;
        }
        response.status = result->status;
        response.body = result->body;
        return response;
    }
};

} // namespace

std::shared_ptr<HttpTransport> make_http_transport() {
    return std::make_shared<HttplibTransport>();
}

} // namespace probcoh
