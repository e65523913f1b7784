#include "privrisk/service.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "privrisk/error.hpp"
#include "privrisk/workspace.hpp"

namespace privrisk {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kMissingState:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kStateMismatch:
      return 422;
    case ErrorCode::kIo:
      return 500;
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kShapeMismatch:
      return 400;
  }
  return 500;
}

ServiceResponse error_response(int status, std::string_view code,
                               const std::string& message,
                               const std::vector<std::string>& suggestions = {}) {
  ordered_json body = ordered_json::object();
  body["error"] = std::string(code);
  body["message"] = message;
  if (!suggestions.empty()) body["suggestions"] = suggestions;
  return {status, body.dump() + "\n"};
}

ServiceResponse ok(const ordered_json& body, int status = 200) {
  return {status, body.dump() + "\n"};
}

[[noreturn]] void bad_request(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, message);
}

json parse_body(const std::string& body) {
  try {
    json doc = json::parse(body);
    if (!doc.is_object()) bad_request("request body must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    bad_request(std::string("malformed JSON body: ") + e.what());
  }
}

RiskQuery parse_assess(const json& doc) {
  RiskQuery q;
  const auto lost = doc.find("lost");
  if (lost == doc.end() || !lost->is_array() || lost->empty()) {
    bad_request("\"lost\" must be a non-empty array of attribute names");
  }
  for (const auto& item : *lost) {
    if (!item.is_string()) bad_request("\"lost\" entries must be strings");
    q.lost_attributes.push_back(item.get<std::string>());
  }
  if (auto t = doc.find("threshold"); t != doc.end() && !t->is_null()) {
    if (!t->is_number()) bad_request("\"threshold\" must be a number");
    q.threshold = t->get<double>();
  }
  if (auto m = doc.find("model"); m != doc.end() && !m->is_null()) {
    if (!m->is_string()) bad_request("\"model\" must be a string");
    q.model = parse_model_kind(m->get<std::string>());
  }
  return q;
}

TrainOptions parse_train(const json& doc) {
  TrainOptions opt;
  const auto m = doc.find("model");
  if (m == doc.end() || !m->is_string()) bad_request("\"model\" is required");
  opt.model.kind = parse_model_kind(m->get<std::string>());
  try {
    if (doc.contains("epochs")) opt.model.epochs = doc.at("epochs").get<int>();
    if (doc.contains("lr")) opt.model.lr = doc.at("lr").get<double>();
    if (doc.contains("hidden_dim")) opt.model.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
    if (doc.contains("seed")) opt.model.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("batch_size")) opt.model.batch_size = doc.at("batch_size").get<std::size_t>();
    if (doc.contains("split_seed")) opt.split_seed = doc.at("split_seed").get<std::uint64_t>();
    if (doc.contains("optimizer")) {
      const auto name = doc.at("optimizer").get<std::string>();
      if (name == "sgd") {
        opt.model.optimizer = nn::OptimizerKind::kSgd;
      } else if (name != "adam") {
        bad_request("\"optimizer\" must be adam or sgd");
      }
    }
  } catch (const json::exception& e) {
    bad_request(std::string("bad training option: ") + e.what());
  }
  opt.model.validate();
  return opt;
}

}  // namespace

struct Service::Impl {
  explicit Impl(std::filesystem::path root) : workspace(std::move(root)) {}

  Workspace workspace;

  std::mutex snapshot_mu;
  std::shared_ptr<const WorkspaceSnapshot> snapshot;

  std::mutex train_mu;
  std::thread trainer;
  bool training = false;
  ordered_json train_status = ordered_json{{"state", "idle"}};

  httplib::Server server;
  std::thread server_thread;

  std::shared_ptr<const WorkspaceSnapshot> current() {
    std::lock_guard lock(snapshot_mu);
    if (!snapshot) snapshot = workspace.snapshot();
    return snapshot;
  }

  ServiceResponse route(const std::string& method, const std::string& path,
                        const std::map<std::string, std::string>& query,
                        const std::string& body);
  ServiceResponse start_training(const std::string& body);
  ServiceResponse edges(const std::map<std::string, std::string>& query);
};

ServiceResponse Service::Impl::edges(const std::map<std::string, std::string>& query) {
  const auto it = query.find("node");
  if (it == query.end() || it->second.empty()) {
    bad_request("query parameter \"node\" is required");
  }
  const auto snap = current();
  const EcosystemGraph& g = snap->graph();
  const NodeId id = g.resolve(it->second);
  ordered_json out = ordered_json::array();
  for (const auto& p : disclosure_probabilities(g, id)) {
    out.push_back({{"attribute", g.name(p.target)},
                   {"weight", *g.weight(id, p.target)},
                   {"p", p.p}});
  }
  ordered_json in = ordered_json::array();
  for (const auto& nb : g.in_edges(id)) {
    in.push_back({{"attribute", g.name(nb.node)}, {"weight", nb.weight}});
  }
  return ok({{"node", g.name(id)}, {"out", std::move(out)}, {"in", std::move(in)}});
}

ServiceResponse Service::Impl::start_training(const std::string& body) {
  const TrainOptions options = parse_train(parse_body(body));
  std::lock_guard lock(train_mu);
  if (training) {
    return error_response(409, "conflict", "a training run is already in progress");
  }
  if (trainer.joinable()) trainer.join();
  training = true;
  const std::string model(model_kind_id(options.model.kind));
  train_status = {{"state", "running"}, {"model", model}};
  trainer = std::thread([this, options, model] {
    ordered_json status;
    try {
      const TrainReport report = workspace.train(options);
      auto fresh = workspace.snapshot();
      {
        std::lock_guard snap_lock(snapshot_mu);
        snapshot = std::move(fresh);
      }
      status = {{"state", "succeeded"},
                {"model", model},
                {"best_accuracy", report.best_accuracy},
                {"best_epoch", report.best_epoch}};
    } catch (const std::exception& e) {
      status = {{"state", "failed"}, {"model", model}, {"message", e.what()}};
    }
    std::lock_guard done_lock(train_mu);
    train_status = std::move(status);
    training = false;
  });
  return ok(train_status, 202);
}

ServiceResponse Service::Impl::route(const std::string& method, const std::string& path,
                                     const std::map<std::string, std::string>& query,
                                     const std::string& body) {
  const bool get = method == "GET";
  const bool post = method == "POST";
  if (path == "/api/attributes" && get) {
    return ok({{"attributes", current()->graph().names()}});
  }
  if (path == "/api/graph/stats" && get) {
    const GraphStats s = graph_stats(current()->graph());
    return ok({{"n_nodes", s.n_nodes}, {"n_edges", s.n_edges}, {"total_weight", s.total_weight}});
  }
  if (path == "/api/graph/edges" && get) return edges(query);
  if (path == "/api/train" && post) return start_training(body);
  if (path == "/api/train/status" && get) {
    std::lock_guard lock(train_mu);
    return ok(train_status);
  }
  if (path == "/api/assess" && post) {
    const RiskQuery q = parse_assess(parse_body(body));
    return {200, risk_report_json(current()->assess(q))};
  }
  if (path == "/api/report" && get) {
    return {200, accuracy_json({workspace.accuracy_row()})};
  }
  static const char* kRoutes[] = {"/api/attributes", "/api/graph/stats", "/api/graph/edges",
                                  "/api/train", "/api/train/status", "/api/assess",
                                  "/api/report"};
  for (const char* r : kRoutes) {
    if (path == r) {
      return error_response(405, "method-not-allowed", method + " not allowed on " + path);
    }
  }
  return error_response(404, "not-found", "no route " + method + " " + path);
}

Service::Service(std::filesystem::path workspace)
    : impl_(std::make_unique<Impl>(std::move(workspace))) {}

Service::~Service() {
  stop();
  wait_for_training();
}

ServiceResponse Service::handle(const std::string& method, const std::string& path,
                                const std::map<std::string, std::string>& query,
                                const std::string& body) {
  try {
    return impl_->route(method, path, query, body);
  } catch (const Error& e) {
    return error_response(http_status(e.code()), error_code_name(e.code()), e.what(),
                          e.suggestions());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

namespace {

void install_routes(httplib::Server& server, Service& service,
                    const std::optional<std::filesystem::path>& static_dir) {
  if (static_dir) server.set_mount_point("/", static_dir->string());
  auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const ServiceResponse r = service.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get(".*", dispatch);
  server.Post(".*", dispatch);
  server.Put(".*", dispatch);
  server.Delete(".*", dispatch);
}

}  // namespace

int Service::start(const std::string& host, int port,
                   std::optional<std::filesystem::path> static_dir) {
  install_routes(impl_->server, *this, static_dir);
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::listen(const std::string& host, int port,
                     std::optional<std::filesystem::path> static_dir) {
  install_routes(impl_->server, *this, static_dir);
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

void Service::wait_for_training() {
  std::thread t;
  {
    std::lock_guard lock(impl_->train_mu);
    t = std::move(impl_->trainer);
  }
  if (t.joinable()) t.join();
}

}  // namespace privrisk
