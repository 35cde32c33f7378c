#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "laydef/review_server.hpp"
#include "review_fixture.hpp"
#include "support.hpp"

using namespace laydef;
using namespace laydef::testing;
using nlohmann::json;

namespace {

class ReviewHttp : public ::testing::Test {
 protected:
  void SetUp() override {
    service_ = std::make_unique<ReviewService>(review_catalog(), dir_ / "log.jsonl");
    register_review_routes(server_, *service_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto res = client_->Post(path, body, "application/json");
    EXPECT_TRUE(res);
    if (!res) return {0, {}};
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return {0, {}};
    return {res->status, json::parse(res->body)};
  }

  std::string quality_session(int n) {
    auto [status, body] = post("/sessions", json{{"mode", "quality"},
                                                 {"evaluator_id", "ann"},
                                                 {"sample_size", n},
                                                 {"seed", 5},
                                                 {"sources", {"expert", "synth"}}}
                                                .dump());
    EXPECT_EQ(status, 201);
    return body["session_id"].get<std::string>();
  }

  TempDir dir_;
  std::unique_ptr<ReviewService> service_;
  httplib::Server server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_F(ReviewHttp, Health) {
  auto [status, body] = get("/health");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body["status"], "ok");
}

TEST_F(ReviewHttp, QualityRoundTrip) {
  const auto sid = quality_session(2);
  auto [s1, summary] = get("/sessions/" + sid);
  EXPECT_EQ(s1, 200);
  EXPECT_EQ(summary["total"], 2);

  for (int i = 0; i < 2; ++i) {
    auto [sn, item] = get("/sessions/" + sid + "/next");
    ASSERT_EQ(sn, 200);
    EXPECT_EQ(item["position"], i + 1);
    auto [sj, ack] = post("/sessions/" + sid + "/judgments",
                          json{{"item_id", item["item_id"]}, {"hard", true}, {"soft", true}}.dump());
    EXPECT_EQ(sj, 201);
    EXPECT_EQ(ack["judged"], i + 1);
  }
  auto [sd, done] = get("/sessions/" + sid + "/next");
  EXPECT_EQ(sd, 200);
  EXPECT_TRUE(done["done"].get<bool>());

  auto [ss, stats] = get("/sessions/" + sid + "/stats");
  EXPECT_EQ(ss, 200);
  EXPECT_DOUBLE_EQ(stats["overall"]["hard_rate"].get<double>(), 1.0);
}

TEST_F(ReviewHttp, ErrorMapping) {
  auto [bad_json, e1] = post("/sessions", "{not json");
  EXPECT_EQ(bad_json, 400);
  EXPECT_EQ(e1["error"], "validation");

  auto [missing, e2] = get("/sessions/s42");
  EXPECT_EQ(missing, 404);
  EXPECT_EQ(e2["error"], "not_found");

  auto [too_big, e3] = post("/sessions", json{{"mode", "quality"},
                                              {"evaluator_id", "ann"},
                                              {"sample_size", 500},
                                              {"seed", 1},
                                              {"sources", {"expert"}}}
                                             .dump());
  EXPECT_EQ(too_big, 422);
  EXPECT_EQ(e3["error"], "capacity");

  auto [unknown, e4] = post("/sessions", json{{"mode", "quality"},
                                              {"evaluator_id", "ann"},
                                              {"sample_size", 1},
                                              {"seed", 1},
                                              {"sources", {"nope"}}}
                                             .dump());
  EXPECT_EQ(unknown, 422);
  EXPECT_EQ(e4["error"], "integrity");

  const auto sid = quality_session(2);
  auto [sn, item] = get("/sessions/" + sid + "/next");
  auto [hard_only, e5] = post("/sessions/" + sid + "/judgments",
                              json{{"item_id", item["item_id"]}, {"hard", true}, {"soft", false}}.dump());
  EXPECT_EQ(hard_only, 400);
  EXPECT_EQ(e5["error"], "validation");

  auto [wrong_item, e6] =
      post("/sessions/" + sid + "/judgments", json{{"item_id", "expert/zzz"}, {"hard", false}, {"soft", false}}.dump());
  EXPECT_EQ(wrong_item, 409);
  EXPECT_EQ(e6["error"], "conflict");

  auto [no_group, e7] = get("/groups/none/stats");
  EXPECT_EQ(no_group, 404);
}

TEST_F(ReviewHttp, PreferenceGroupStats) {
  auto [status, created] = post("/sessions", json{{"mode", "preference"},
                                                  {"evaluator_id", "ann"},
                                                  {"sample_size", 4},
                                                  {"seed", 2},
                                                  {"systems", {"sysA", "sysB"}},
                                                  {"refs", "expert"}}
                                                 .dump());
  ASSERT_EQ(status, 201);
  const auto sid = created["session_id"].get<std::string>();
  for (int i = 0; i < 4; ++i) {
    auto [sn, item] = get("/sessions/" + sid + "/next");
    EXPECT_FALSE(item.contains("left_system"));
    auto [sj, ack] = post("/sessions/" + sid + "/judgments", json{{"item_id", item["item_id"]}, {"choice", "A"}}.dump());
    EXPECT_EQ(sj, 201);
  }
  auto [sg, g] = get("/groups/sysA-vs-sysB/stats");
  EXPECT_EQ(sg, 200);
  EXPECT_EQ(g["total"], 4);
  EXPECT_EQ(g["wins"]["sysA"].get<int>() + g["wins"]["sysB"].get<int>(), 4);
}
