#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "postertree/generation.hpp"

namespace postertree {
namespace {

class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        bodies.push_back(nlohmann::json::parse(req.body));
        auth.push_back(req.get_header_value("Authorization"));
      }
      res.set_content(R"({"choices":[{"text":"<rect id=\"text_0\" x=\"1\" y=\"2\" width=\"3\" height=\"4\"/>"}]})",
                      "application/json");
    });
    server_.Post("/v1/chat", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})", "application/json");
    });
    server_.Post("/v1/broken", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("oops", "text/plain");
    });
    server_.Post("/v1/nochoices", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[]})", "application/json");
    });
    server_.Post("/v1/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1500));
      res.set_content(R"({"choices":[{"text":"late"}]})", "application/json");
    });
    port = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port) + path; }

  int port = 0;
  std::vector<nlohmann::json> bodies;
  std::vector<std::string> auth;

 private:
  httplib::Server server_;
  std::thread thread_;
  std::mutex mu_;
};

ErrorCode error_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

BackendConfig config_for(const std::string& url, double timeout_s = 5) {
  BackendConfig c;
  c.kind = BackendKind::kHttp;
  c.endpoint_url = url;
  c.model_name = "test-model";
  c.api_token_env_var = "POSTERTREE_TEST_TOKEN";
  c.timeout_s = timeout_s;
  return c;
}

TEST(HttpBackend, SendsCompletionBodyAndBearerToken) {
  FakeServer server;
  ::setenv("POSTERTREE_TEST_TOKEN", "sekrit", 1);
  HttpBackend backend(config_for(server.url("/v1/completions")));
  CompletionRequest req;
  req.prompt = "P";
  req.temperature = 0.7;
  req.max_tokens = 99;
  req.stop = {"</svg>"};
  req.seed = 12;
  EXPECT_EQ(backend.complete(req), "<rect id=\"text_0\" x=\"1\" y=\"2\" width=\"3\" height=\"4\"/>");
  ASSERT_EQ(server.bodies.size(), 1u);
  const auto& body = server.bodies[0];
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["prompt"], "P");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(body["max_tokens"], 99);
  EXPECT_EQ(body["n"], 1);
  EXPECT_EQ(body["stop"], nlohmann::json::array({"</svg>"}));
  EXPECT_EQ(body["seed"], 12);
  EXPECT_EQ(server.auth[0], "Bearer sekrit");
  ::unsetenv("POSTERTREE_TEST_TOKEN");
  backend.complete(req);
  EXPECT_EQ(server.auth[1], "");
}

TEST(HttpBackend, DrivesGenerationWithSeededPrefix) {
  FakeServer server;
  HttpBackend backend(config_for(server.url("/v1/completions")));
  const LayoutTree ex = canonicalize(LayoutTree{{100, 100}, {}, {TreeNode::leaf(category::kText, Rect{10, 10, 40, 20})}});
  const auto bundle = assemble_prompt({{"r", ex}}, PromptTest{{100, 100}, {}, {}});
  GenParams p;
  p.candidates = 3;
  const auto result = generate_layout(backend, bundle, p);
  EXPECT_EQ(result.candidates.size(), 3u);
  EXPECT_EQ(server.bodies.size(), 3u);
}

TEST(HttpBackend, ReadsChatShapedChoices) {
  FakeServer server;
  HttpBackend backend(config_for(server.url("/v1/chat")));
  EXPECT_EQ(backend.complete({}), "hello");
}

TEST(HttpBackend, ServerErrorsAreUnavailable) {
  FakeServer server;
  EXPECT_EQ(error_of([&] { HttpBackend(config_for(server.url("/v1/broken"))).complete({}); }), ErrorCode::kBackendUnavailable);
  EXPECT_EQ(error_of([&] { HttpBackend(config_for(server.url("/v1/nochoices"))).complete({}); }), ErrorCode::kBackendUnavailable);
  EXPECT_EQ(error_of([] { HttpBackend::response_text("not json"); }), ErrorCode::kBackendUnavailable);
}

TEST(HttpBackend, SlowServerTimesOut) {
  FakeServer server;
  EXPECT_EQ(error_of([&] { HttpBackend(config_for(server.url("/v1/slow"), 0.3)).complete({}); }), ErrorCode::kTimeout);
}

TEST(HttpBackend, UnreachableAndBadConfig) {
  EXPECT_EQ(error_of([] { HttpBackend(config_for("http://127.0.0.1:1/v1")).complete({}); }), ErrorCode::kBackendUnavailable);
  EXPECT_EQ(error_of([] { HttpBackend(config_for("")); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_of([] { HttpBackend(config_for("localhost/v1")); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace postertree
