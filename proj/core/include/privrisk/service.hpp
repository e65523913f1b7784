#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace privrisk {

struct ServiceResponse {
  int status = 200;
  std::string body;  // JSON
};

// JSON HTTP front end over one workspace.
//
//   GET  /api/attributes          node names in id order
//   GET  /api/graph/stats         {n_nodes, n_edges, total_weight}
//   GET  /api/graph/edges?node=   out/in edges of one attribute
//   POST /api/train               start training (async, single flight)
//   GET  /api/train/status        idle | running | succeeded | failed
//   POST /api/assess              RiskReport, same bytes as `privrisk assess`
//   GET  /api/report              accuracy matrix for the workspace
//
// Readers see the snapshot committed by the last successful training run.
class Service {
 public:
  explicit Service(std::filesystem::path workspace);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Routes a request without a socket; used by the HTTP layer and tests.
  ServiceResponse handle(const std::string& method, const std::string& path,
                         const std::map<std::string, std::string>& query,
                         const std::string& body);

  // Binds and serves on a background thread; returns the bound port
  // (pass 0 for an ephemeral port).
  int start(const std::string& host, int port,
            std::optional<std::filesystem::path> static_dir = std::nullopt);
  // Blocks until stop() is called from elsewhere.
  void listen(const std::string& host, int port,
              std::optional<std::filesystem::path> static_dir = std::nullopt);
  void stop();

  // Waits for an in-flight training run, if any.
  void wait_for_training();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace privrisk
