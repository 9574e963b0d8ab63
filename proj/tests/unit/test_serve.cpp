#include <doctest.h>

#include <nlohmann/json.hpp>

#include "prefnet/eval/eval.hpp"
#include "prefnet/serve/session.hpp"
#include "toy.hpp"

#ifdef PREFNET_HAVE_SERVER
#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "prefnet/serve/server.hpp"
#endif

using namespace prefnet;
using namespace prefnet::serve;
using nlohmann::json;

namespace {

rl::Agent make_agent(std::uint64_t seed) {
  rl::AgentMeta meta;
  meta.model.hidden = 8;
  meta.model.steps = 2;
  meta.alpha_dist = pref::PreferenceDistribution::exponential(46.0);
  meta.seed = seed;
  meta.topology = "toy4";
  return rl::Agent(meta, nn::PolicyValueNet(meta.model, seed));
}

struct Fixture {
  sim::Topology topo = prefnet::test::toy4();
  datagen::Dataset ds = prefnet::test::toy_dataset(topo, 3);
  rl::Agent agent = make_agent(1);

  SessionOptions options(double alpha = 0.01) const {
    SessionOptions o;
    o.env.sla_ms = ds.meta.sla_ms;
    o.preference = {alpha, std::nullopt};
    o.tick_ms = 10;
    return o;
  }
  std::unique_ptr<Session> session(const std::string& id, double alpha = 0.01) const {
    return std::make_unique<Session>(id, agent, topo, ds.splits.test, options(alpha));
  }
};

json control(const std::string& kind, json payload = json::object()) {
  return {{"kind", kind}, {"payload", std::move(payload)}};
}

bool path_avoids(const std::vector<sim::NodeId>& nodes, sim::NodeId node) {
  return std::find(nodes.begin(), nodes.end(), node) == nodes.end();
}

}  // namespace

TEST_SUITE("serve") {
  TEST_CASE("control parsing") {
    auto m = parse_control(json::parse(R"({"kind":"set_preference","payload":{"alpha":0.02},"id":7})"));
    CHECK(m.kind == ControlKind::kSetPreference);
    CHECK(*m.alpha == 0.02);
    CHECK_FALSE(m.beta.has_value());
    CHECK(m.id == 7);
    CHECK(parse_control(control("node_down", {{"node", 2}})).node == 2);
    CHECK(parse_control(control("pause")).kind == ControlKind::kPause);
    CHECK_THROWS_AS(parse_control(control("set_preference")), FormatError);
    CHECK_THROWS_AS(parse_control(control("set_preference", {{"alpha", -1.0}})), FormatError);
    CHECK_THROWS_AS(parse_control(control("node_up", {{"node", "x"}})), FormatError);
    CHECK_THROWS_AS(parse_control(control("warp")), FormatError);
    CHECK_THROWS_AS(parse_control(json::array()), FormatError);
  }

  TEST_CASE("sessions start paused and tick consecutively once resumed") {
    Fixture fx;
    auto s = fx.session("a");
    CHECK_FALSE(s->running());
    CHECK_FALSE(s->tick().has_value());
    CHECK(s->current_tick() == 0);
    auto ack = s->submit(control("resume"));
    CHECK(ack["ok"] == true);
    CHECK(ack["type"] == "ack");
    for (int k = 1; k <= 5; ++k) {
      auto frame = s->tick();
      REQUIRE(frame.has_value());
      CHECK((*frame)["type"] == "telemetry");
      CHECK((*frame)["version"] == kProtocolVersion);
      CHECK((*frame)["tick"] == k);
      CHECK((*frame)["per_node"].size() == fx.topo.num_nodes());
      for (const auto& n : (*frame)["per_node"]) CHECK(n["instance_counts"].size() == sim::kNumVnfTypes);
      for (const char* key : {"session", "alpha", "slav", "vnf_total", "power_total", "reward"})
        CHECK(frame->contains(key));
    }
    s->submit(control("pause"));
    CHECK_FALSE(s->tick().has_value());
    CHECK(s->current_tick() == 5);
  }

  TEST_CASE("a preference change shows up at the next tick") {
    Fixture fx;
    auto s = fx.session("a");
    s->submit(control("resume"));
    CHECK((*s->tick())["alpha"] == 0.01);
    auto ack = s->submit(json{{"kind", "set_preference"}, {"payload", {{"alpha", 0.03}}}, {"id", "x1"}});
    CHECK(ack["ok"] == true);
    CHECK(ack["id"] == "x1");
    CHECK(ack["tick"] == 1);
    auto next = s->tick();
    CHECK((*next)["alpha"] == 0.03);
    CHECK((*next)["tick"] == 2);
    CHECK(s->state()["alpha"] == 0.03);
    CHECK(s->submit(control("set_preference", {{"beta", 0.01}}))["ok"] == false);
  }

  TEST_CASE("node failures reroute and match the scenario runner") {
    Fixture fx;
    auto s = fx.session("a");
    s->submit(control("resume"));
    const std::size_t n = fx.ds.splits.test.size();
    std::vector<json> frames;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == 4) s->submit(control("node_down", {{"node", 1}}));
      if (k == 9) s->submit(control("node_up", {{"node", 1}}));
      frames.push_back(*s->tick());
    }
    eval::Scenario sc;
    sc.events.push_back({4, eval::EventKind::kNodeDown, 0.0, 1});
    sc.events.push_back({9, eval::EventKind::kNodeUp, 0.0, 1});
    auto traj = eval::run_scenario(fx.agent, fx.topo, fx.ds.splits.test, fx.options().env, sc, {0.01, std::nullopt});
    REQUIRE(traj.size() == n);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(frames[k]["vnf_total"] == traj[k].vnf_total);
      CHECK(frames[k]["reward"].get<double>() == traj[k].reward);
      CHECK(frames[k]["per_node"][1]["status"] == (k >= 4 && k < 9 ? "down" : "up"));
      if (k >= 4 && k < 9)
        for (const auto& p : traj[k].paths) CHECK(path_avoids(p.nodes, 1));
    }
    CHECK(s->submit(control("node_down", {{"node", 42}}))["ok"] == false);
  }

  TEST_CASE("sessions are isolated") {
    Fixture fx;
    auto a = fx.session("a"), b = fx.session("b");
    a->submit(control("resume"));
    b->submit(control("resume"));
    a->submit(control("node_down", {{"node", 0}}));
    a->submit(control("set_preference", {{"alpha", 0.05}}));
    auto fa = *a->tick(), fb = *b->tick();
    CHECK(fa["per_node"][0]["status"] == "down");
    CHECK(fb["per_node"][0]["status"] == "up");
    CHECK(fb["alpha"] == 0.01);
    CHECK(b->state()["nodes"][0]["status"] == "up");
  }

  TEST_CASE("reset restores nodes and the initial deployment") {
    Fixture fx;
    auto s = fx.session("a");
    s->submit(control("resume"));
    auto first = *s->tick();
    s->submit(control("node_down", {{"node", 2}}));
    for (int k = 0; k < 3; ++k) s->tick();
    s->submit(control("reset"));
    auto again = *s->tick();
    CHECK(again["per_node"][2]["status"] == "up");
    CHECK(again["vnf_total"] == first["vnf_total"]);
    CHECK(again["per_node"] == first["per_node"]);
  }

  TEST_CASE("malformed controls are rejected with an error ack") {
    Fixture fx;
    auto s = fx.session("a");
    auto bad = s->submit(json{{"kind", "set_preference"}, {"payload", {{"alpha", "high"}}}, {"id", 3}});
    CHECK(bad["ok"] == false);
    CHECK(bad["id"] == 3);
    CHECK(bad["error"].get<std::string>().find("alpha") != std::string::npos);
    CHECK(s->state()["pending_controls"] == 0);
  }

  TEST_CASE("incompatible or missing checkpoints are refused") {
    Fixture fx;
    auto pm = fx.options();
    pm.env.task = rl::Task::kPowerManagement;
    CHECK_THROWS_AS(Session("x", fx.agent, fx.topo, fx.ds.splits.test, pm), ContractViolation);
    CHECK_THROWS_AS(Session("x", fx.agent, fx.topo, {}, fx.options()), ContractViolation);

    prefnet::test::TempDir dir("serve");
    SessionManager manager;
    json req{{"checkpoint", (dir / "missing.ckpt").string()},
             {"topology", prefnet::test::data_path("topologies/toy4.json")},
             {"dataset", dir.path().string()}};
    CHECK_THROWS(manager.create(req, false));
    CHECK_THROWS_AS(manager.create(json{{"topology", "x"}}, false), FormatError);
  }

  TEST_CASE("session manager loads from disk") {
    Fixture fx;
    prefnet::test::TempDir dir("serve");
    fx.agent.save(dir / "agent.ckpt");
    datagen::save_dataset(dir / "ds", fx.ds);
    SessionManager manager;
    json req{{"checkpoint", (dir / "agent.ckpt").string()},
             {"topology", prefnet::test::data_path("topologies/toy4.json")},
             {"dataset", (dir / "ds").string()},
             {"split", "test"},
             {"start", 2},
             {"length", 5},
             {"alpha", 0.02}};
    auto s = manager.create(req, false);
    CHECK(manager.get(s->id()) == s);
    CHECK(s->state()["alpha"] == 0.02);
    auto t = manager.create(req, false);
    CHECK(t->id() != s->id());
    CHECK(manager.remove(s->id()));
    CHECK_FALSE(manager.remove(s->id()));
    CHECK(manager.get(s->id()) == nullptr);
    req["split"] = "holdout";
    CHECK_THROWS_AS(manager.create(req, false), FormatError);
  }

#ifdef PREFNET_HAVE_SERVER
  TEST_CASE("REST and WebSocket protocol") {
    namespace beast = boost::beast;
    namespace http = beast::http;
    namespace websocket = beast::websocket;
    namespace net = boost::asio;
    using tcp = net::ip::tcp;

    Fixture fx;
    prefnet::test::TempDir dir("serve");
    fx.agent.save(dir / "agent.ckpt");
    datagen::save_dataset(dir / "ds", fx.ds);

    Server server("127.0.0.1", 0);
    server.start();
    const auto port = std::to_string(server.port());
    net::io_context ioc;
    tcp::resolver resolver(ioc);
    const auto endpoints = resolver.resolve("127.0.0.1", port);

    auto request = [&](http::verb verb, const std::string& target, const std::string& body) {
      beast::tcp_stream stream(ioc);
      stream.connect(endpoints);
      http::request<http::string_body> req{verb, target, 11};
      req.set(http::field::host, "127.0.0.1");
      req.set(http::field::content_type, "application/json");
      req.body() = body;
      req.prepare_payload();
      http::write(stream, req);
      beast::flat_buffer buffer;
      http::response<http::string_body> res;
      http::read(stream, buffer, res);
      beast::error_code ec;
      stream.socket().shutdown(tcp::socket::shutdown_both, ec);
      return res;
    };

    json create{{"checkpoint", (dir / "agent.ckpt").string()},
                {"topology", prefnet::test::data_path("topologies/toy4.json")},
                {"dataset", (dir / "ds").string()},
                {"tick_ms", 20}};
    auto created = request(http::verb::post, "/sessions", create.dump());
    REQUIRE(created.result() == http::status::created);
    const auto state = json::parse(created.body());
    const std::string id = state["id"];
    CHECK(state["running"] == false);
    CHECK(state["version"] == kProtocolVersion);

    CHECK(request(http::verb::post, "/sessions", "{not json").result() == http::status::bad_request);
    CHECK(request(http::verb::get, "/sessions/nope", "").result() == http::status::not_found);
    auto got = request(http::verb::get, "/sessions/" + id, "");
    CHECK(got.result() == http::status::ok);
    CHECK(json::parse(got.body())["id"] == id);

    websocket::stream<tcp::socket> ws(ioc);
    net::connect(ws.next_layer(), endpoints);
    ws.handshake("127.0.0.1:" + port, "/session/" + id);
    auto read = [&] {
      beast::flat_buffer buffer;
      ws.read(buffer);
      return json::parse(beast::buffers_to_string(buffer.data()));
    };
    auto hello = read();
    CHECK(hello["type"] == "hello");
    CHECK(hello["state"]["id"] == id);

    ws.write(net::buffer(json{{"kind", "resume"}, {"id", 1}}.dump()));
    bool acked = false;
    std::vector<std::int64_t> ticks;
    for (int guard = 0; guard < 200 && (!acked || ticks.size() < 3); ++guard) {
      auto f = read();
      if (f["type"] == "ack") {
        CHECK(f["id"] == 1);
        CHECK(f["ok"] == true);
        acked = true;
      } else if (f["type"] == "telemetry") {
        ticks.push_back(f["tick"]);
      }
    }
    REQUIRE(acked);
    REQUIRE(ticks.size() >= 3);
    for (std::size_t k = 1; k < ticks.size(); ++k) CHECK(ticks[k] == ticks[k - 1] + 1);

    ws.write(net::buffer(json{{"kind", "set_preference"}, {"payload", {{"alpha", 0.04}}}, {"id", 2}}.dump()));
    bool changed = false;
    for (int guard = 0; guard < 200 && !changed; ++guard) {
      auto f = read();
      if (f["type"] == "telemetry") changed = f["alpha"] == 0.04;
    }
    CHECK(changed);

    ws.write(net::buffer(std::string("{oops")));
    bool rejected = false;
    for (int guard = 0; guard < 200 && !rejected; ++guard) {
      auto f = read();
      rejected = f["type"] == "ack" && f["ok"] == false;
    }
    CHECK(rejected);

    CHECK(request(http::verb::delete_, "/sessions/" + id, "").result() == http::status::no_content);
    bool terminal = false;
    for (int guard = 0; guard < 200 && !terminal; ++guard) {
      beast::flat_buffer buffer;
      beast::error_code ec;
      ws.read(buffer, ec);
      if (ec) break;
      terminal = json::parse(beast::buffers_to_string(buffer.data()))["type"] == "terminal";
    }
    CHECK(terminal);
    CHECK(request(http::verb::get, "/sessions/" + id, "").result() == http::status::not_found);
    server.stop();
  }
#endif
}
