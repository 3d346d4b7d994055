#pragma once

#include <functional>
#include <memory>
#include <string>

#include "polydub/pipeline/pipeline.hpp"

namespace polydub::pipeline {

struct ServiceConfig {
  int port = 0;  // 0 = pick an ephemeral port
  int workers = 1;
  int queue_capacity = 16;
  std::string artifact_root = "artifacts";
};

// Synchronous request/response dubbing service: POST /dub and GET /health.
// A bounded FIFO queue feeds a fixed worker pool; each worker owns one
// pipeline instance (its own model bundle).
class DubService {
 public:
  DubService(ServiceConfig cfg,
             std::function<std::unique_ptr<DubPipeline>()> pipeline_factory);
  ~DubService();

  void start();
  void stop();
  int port() const { return port_; }
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace polydub::pipeline
