#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "zplke/errors.hpp"
#include "zplke/remote_lm.hpp"

using namespace zplke;
using json = nlohmann::json;

namespace {

// Space tokenizer mirroring the wire format: every token after the first
// carries its leading space, text_offset indexes into the prompt.
json echo_payload(const std::string& prompt) {
    json tokens = json::array(), logprobs = json::array(), offsets = json::array();
    std::size_t pos = 0;
    bool first = true;
    while (pos < prompt.size()) {
        std::size_t start = pos;
        if (!first && prompt[pos] == ' ') ++pos;
        while (pos < prompt.size() && prompt[pos] != ' ') ++pos;
        tokens.push_back(prompt.substr(start, pos - start));
        logprobs.push_back(first ? json(nullptr) : json(-0.5));
        offsets.push_back(start);
        first = false;
    }
    return json{{"choices",
                 json::array({json{{"text", prompt},
                                   {"logprobs",
                                    json{{"tokens", tokens},
                                         {"token_logprobs", logprobs},
                                         {"text_offset", offsets}}}}})}};
}

struct TestServer {
    httplib::Server svr;
    int port = 0;
    std::thread thread;
    std::mutex mu;
    std::vector<std::string> bodies;
    std::vector<httplib::Headers> headers;
    std::function<void(const httplib::Request&, httplib::Response&)> handler;

    TestServer() {
        svr.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard<std::mutex> lock(mu);
                bodies.push_back(req.body);
                headers.push_back(req.headers);
            }
            handler(req, res);
        });
        port = svr.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { svr.listen_after_bind(); });
        while (!svr.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    ~TestServer() {
        svr.stop();
        thread.join();
    }

    RemoteBackend::Config config() const {
        RemoteBackend::Config cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
        cfg.model = "served-model";
        cfg.timeout_seconds = 5;
        return cfg;
    }

    std::size_t request_count() {
        std::lock_guard<std::mutex> lock(mu);
        return bodies.size();
    }
    json last_request() {
        std::lock_guard<std::mutex> lock(mu);
        REQUIRE(!bodies.empty());
        return json::parse(bodies.back());
    }
};

void serve_echo(const httplib::Request& req, httplib::Response& res) {
    const auto prompt = json::parse(req.body).at("prompt").get<std::string>();
    res.set_content(echo_payload(prompt).dump(), "application/json");
}

}  // namespace

TEST_CASE("scoring slices echoed logprobs at the continuation boundary") {
    TestServer server;
    server.handler = serve_echo;
    RemoteBackend backend(server.config());

    const auto scores =
        backend.score_continuation("Feynman 1918 Heisenberg 1901 Einstein", " 1879");
    REQUIRE(scores.size() == 1);
    CHECK(scores[0].token_text == " 1879");
    CHECK(scores[0].logprob == doctest::Approx(-0.5));
    CHECK(scores[0].char_offset == 0);

    const auto req = server.last_request();
    CHECK(req.at("echo") == true);
    CHECK(req.at("max_tokens") == 0);
    CHECK(req.at("logprobs") == 1);
    CHECK(req.at("temperature") == 0);
    CHECK(req.at("model") == "served-model");
    CHECK(req.at("prompt") == "Feynman 1918 Heisenberg 1901 Einstein 1879");
    // Scoring requests never carry sampling parameters.
    CHECK(!req.contains("top_p"));
    CHECK(!req.contains("n"));
}

TEST_CASE("multi-token continuations keep token order and offsets") {
    TestServer server;
    server.handler = serve_echo;
    RemoteBackend backend(server.config());
    const auto scores = backend.score_continuation("a b c", " x yy zzz");
    REQUIRE(scores.size() == 3);
    CHECK(scores[0].token_text == " x");
    CHECK(scores[1].token_text == " yy");
    CHECK(scores[2].token_text == " zzz");
    CHECK(scores[0].char_offset == 0);
    CHECK(scores[1].char_offset == 2);
    CHECK(scores[2].char_offset == 5);
}

TEST_CASE("bearer token travels in the authorization header when configured") {
    TestServer server;
    server.handler = serve_echo;
    auto cfg = server.config();
    cfg.api_key = "sekrit";
    RemoteBackend backend(cfg);
    (void)backend.score_continuation("a b", " c");
    std::lock_guard<std::mutex> lock(server.mu);
    const auto& h = server.headers.back();
    const auto it = h.find("Authorization");
    REQUIRE(it != h.end());
    CHECK(it->second == "Bearer sekrit");

    // Without a key the header is absent.
    TestServer bare;
    bare.handler = serve_echo;
    RemoteBackend plain(bare.config());
    (void)plain.score_continuation("a b", " c");
    std::lock_guard<std::mutex> lock2(bare.mu);
    CHECK(bare.headers.back().find("Authorization") == bare.headers.back().end());
}

TEST_CASE("a continuation that starts mid-token is a protocol error") {
    TestServer server;
    server.handler = serve_echo;
    RemoteBackend backend(server.config());
    CHECK_THROWS_AS(backend.score_continuation("Feynman 1918 Einst", "ein 1879"),
                    ProtocolError);
}

TEST_CASE("persistent server errors exhaust the retry budget") {
    TestServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
        res.set_content("overloaded", "text/plain");
    };
    auto cfg = server.config();
    cfg.max_attempts = 3;
    RemoteBackend backend(cfg);
    try {
        backend.score_continuation("a b", " c");
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.attempts() == 3);
    }
    CHECK(server.request_count() == 3);
}

TEST_CASE("a transient server error is retried and then succeeds") {
    TestServer server;
    std::atomic<int> calls{0};
    server.handler = [&](const httplib::Request& req, httplib::Response& res) {
        if (calls.fetch_add(1) == 0) {
            res.status = 500;
            return;
        }
        serve_echo(req, res);
    };
    RemoteBackend backend(server.config());
    const auto scores = backend.score_continuation("a b", " c");
    CHECK(scores.size() == 1);
    CHECK(server.request_count() == 2);
}

TEST_CASE("client errors are protocol errors and are not retried") {
    TestServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content("bad request", "text/plain");
    };
    RemoteBackend backend(server.config());
    CHECK_THROWS_AS(backend.score_continuation("a b", " c"), ProtocolError);
    CHECK(server.request_count() == 1);
}

TEST_CASE("malformed payloads are protocol errors") {
    TestServer server;
    RemoteBackend backend(server.config());

    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json", "application/json");
    };
    CHECK_THROWS_AS(backend.score_continuation("a b", " c"), ProtocolError);

    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices":[{"text":"x","logprobs":null}]})", "application/json");
    };
    CHECK_THROWS_AS(backend.score_continuation("a b", " c"), ProtocolError);

    // Array lengths that disagree violate the contract.
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices":[{"logprobs":{"tokens":["a"," b"],)"
                        R"("token_logprobs":[null],"text_offset":[0,1]}}]})",
                        "application/json");
    };
    CHECK_THROWS_AS(backend.score_continuation("a b", " c"), ProtocolError);
}

TEST_CASE("a null logprob inside the continuation is a protocol error") {
    TestServer server;
    server.handler = [](const httplib::Request& req, httplib::Response& res) {
        const auto prompt = json::parse(req.body).at("prompt").get<std::string>();
        auto payload = echo_payload(prompt);
        auto& lp = payload["choices"][0]["logprobs"]["token_logprobs"];
        lp[lp.size() - 1] = nullptr;  // backend withholds the final logprob
        res.set_content(payload.dump(), "application/json");
    };
    RemoteBackend backend(server.config());
    CHECK_THROWS_AS(backend.score_continuation("a b", " c"), ProtocolError);
}

TEST_CASE("greedy generation requests k tokens without echo") {
    TestServer server;
    server.handler = [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        REQUIRE(body.at("echo") == false);
        const std::size_t k = body.at("max_tokens").get<std::size_t>();
        json tokens = json::array(), logprobs = json::array(), offsets = json::array();
        for (std::size_t i = 0; i < k; ++i) {
            tokens.push_back("tok" + std::to_string(i));
            logprobs.push_back(-0.1);
            offsets.push_back(i);
        }
        res.set_content(json{{"choices",
                              json::array({json{{"text", ""},
                                                {"logprobs",
                                                 json{{"tokens", tokens},
                                                      {"token_logprobs", logprobs},
                                                      {"text_offset", offsets}}}}})}}
                            .dump(),
                        "application/json");
    };
    RemoteBackend backend(server.config());
    const auto tokens = backend.generate_greedy("a b", 3);
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0] == "tok0");
    CHECK(backend.generate_greedy("a b", 1).size() == 1);
    CHECK_THROWS_AS(backend.generate_greedy("a b", 0), ValidationError);
}

TEST_CASE("backend configuration is validated up front") {
    RemoteBackend::Config cfg;
    cfg.model = "m";
    CHECK_THROWS_AS(RemoteBackend{cfg}, ConfigError);  // no base URL
    cfg.base_url = "http://127.0.0.1:1";
    cfg.model = "";
    CHECK_THROWS_AS(RemoteBackend{cfg}, ConfigError);  // no model
    cfg.model = "m";
    cfg.max_attempts = 0;
    CHECK_THROWS_AS(RemoteBackend{cfg}, ConfigError);  // empty retry budget
}

TEST_CASE("an unreachable host exhausts the budget with a transport error") {
    RemoteBackend::Config cfg;
    cfg.base_url = "http://127.0.0.1:1";  // nothing listens on port 1
    cfg.model = "m";
    cfg.max_attempts = 2;
    cfg.timeout_seconds = 1;
    RemoteBackend backend(cfg);
    try {
        backend.score_continuation("a b", " c");
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.attempts() == 2);
    }
}
