#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "probcoh/catalog.hpp"
#include "probcoh/elicitation.hpp"

using namespace probcoh;
using namespace std::chrono_literals;

namespace {

class LocalServer {
public:
    LocalServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            if (hits == 1 && fail_first) {
                res.status = 503;
                res.set_content("{\"error\":\"overloaded\"}", "application/json");
                return;
            }
            if (delay.count() > 0) std::this_thread::sleep_for(delay);
            nlohmann::json j;
            j["choices"] = nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", "0.35"}}}}});
            res.set_content(j.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    std::atomic<int> hits{0};
    bool fail_first = false;
    std::chrono::milliseconds delay{0};
    std::string last_auth;
    std::string last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ElicitorHooks hooks() {
    ElicitorHooks h;
    h.sleeper = [](std::chrono::milliseconds) {};
    h.getenv = [](const std::string&) { return std::optional<std::string>("sk-local"); };
    return h;
}

} // namespace

TEST(HttpTransport, EndToEndAgainstLocalServer) {
    LocalServer server;
    server.fail_first = true;
    ProviderConfig p;
    p.endpoint_url = server.base();
    p.model_name = "local";
    p.max_retries = 2;
    Elicitor e(p, make_http_transport(), nullptr, hooks());
    const auto r = e.elicit(render_prompt(builtin_catalog()[0], QueryKind::A), 0);
    EXPECT_EQ(r.raw_text, "0.35");
    EXPECT_EQ(r.retries, 1);
    EXPECT_EQ(server.hits.load(), 2);
    EXPECT_EQ(server.last_auth, "Bearer sk-local");
    const auto body = nlohmann::json::parse(server.last_body);
    EXPECT_EQ(body["model"], "local");
    EXPECT_EQ(body["messages"][0]["content"], std::string(kSystemMessage));
}

TEST(HttpTransport, TimeoutReportsStatusZero) {
    LocalServer server;
    server.delay = 1500ms;
    HttpRequest req;
    req.url = server.base() + "/chat/completions";
    req.body = "{}";
    req.timeout = 200ms;
    const auto res = make_http_transport()->post(req);
    EXPECT_EQ(res.status, 0);
    EXPECT_FALSE(res.error.empty());
}

TEST(HttpTransport, ConnectionRefusedReportsStatusZero) {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    HttpRequest req;
    req.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    req.timeout = 500ms;
    EXPECT_EQ(make_http_transport()->post(req).status, 0);
}
