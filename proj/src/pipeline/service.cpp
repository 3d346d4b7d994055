#include "polydub/pipeline/service.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace polydub::pipeline {

using nlohmann::json;

namespace {

json report_to_json(const StageTimingReport& report) {
  json rows = json::array();
  for (const auto& s : report.stages)
    rows.push_back({{"stage", s.stage},
                    {"seconds_per_second", s.seconds_per_second},
                    {"rtf", s.rtf}});
  return rows;
}

}  // namespace

struct DubService::Impl {
  ServiceConfig cfg;
  std::function<std::unique_ptr<DubPipeline>()> factory;

  struct Task {
    DubRequest request;
    std::string out_dir;
    std::promise<DubResult> done;
  };

  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::shared_ptr<Task>> queue;
  bool shutting_down = false;

  std::vector<std::thread> workers;
  httplib::Server server;
  std::thread listener;
  std::atomic<uint64_t> request_counter{0};
  std::atomic<bool> started{false};

  void worker_loop() {
    auto pipeline = factory();
    while (true) {
      std::shared_ptr<Task> task;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return shutting_down || !queue.empty(); });
        if (shutting_down && queue.empty()) return;
        task = queue.front();
        queue.pop_front();
      }
      try {
        task->done.set_value(pipeline->dub(task->request, task->out_dir));
      } catch (...) {
        task->done.set_exception(std::current_exception());
      }
    }
  }

  void handle_dub(const httplib::Request& req, httplib::Response& res) {
    json body;
    DubRequest dub_req;
    try {
      body = json::parse(req.body);
      dub_req.text = body.at("text").get<std::string>();
      dub_req.language = textfront::lang_from_string(body.at("language").get<std::string>());
      dub_req.speaker_id = body.at("speaker_id").get<std::string>();
      dub_req.source_video_id = body.at("source_video_id").get<std::string>();
      if (body.contains("translate_from"))
        dub_req.translate_from =
            textfront::lang_from_string(body["translate_from"].get<std::string>());
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", std::string("bad request: ") + e.what()}}.dump(),
                      "application/json");
      return;
    }

    auto task = std::make_shared<Task>();
    task->request = std::move(dub_req);
    task->out_dir =
        cfg.artifact_root + "/req_" + std::to_string(request_counter.fetch_add(1));
    auto future = task->done.get_future();
    {
      std::lock_guard<std::mutex> lock(mu);
      if (static_cast<int>(queue.size()) >= cfg.queue_capacity) {
        res.status = 503;
        res.set_content(json{{"error", "queue full"}}.dump(), "application/json");
        return;
      }
      queue.push_back(task);
    }
    cv.notify_one();

    try {
      DubResult result = future.get();
      json out{{"artifact", result.artifact_path},
               {"substitution", result.substitution},
               {"audio_seconds", result.audio_seconds},
               {"n_frames", result.n_frames},
               {"end_to_end_rtf", result.report.end_to_end_rtf},
               {"report", report_to_json(result.report)}};
      res.set_content(out.dump(), "application/json");
    } catch (const InvalidRequest& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  }
};

DubService::DubService(ServiceConfig cfg,
                       std::function<std::unique_ptr<DubPipeline>()> pipeline_factory)
    : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  impl_->factory = std::move(pipeline_factory);
}

DubService::~DubService() { stop(); }

void DubService::start() {
  if (impl_->started.exchange(true)) return;
  for (int i = 0; i < std::max(1, impl_->cfg.workers); ++i)
    impl_->workers.emplace_back([this] { impl_->worker_loop(); });

  impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"status", "ok"}}.dump(), "application/json");
  });
  impl_->server.Post("/dub", [this](const httplib::Request& req, httplib::Response& res) {
    impl_->handle_dub(req, res);
  });

  if (impl_->cfg.port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    impl_->server.bind_to_port("127.0.0.1", impl_->cfg.port);
    port_ = impl_->cfg.port;
  }
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void DubService::stop() {
  if (!impl_ || !impl_->started.load()) return;
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->shutting_down = true;
  }
  impl_->cv.notify_all();
  for (auto& w : impl_->workers)
    if (w.joinable()) w.join();
  impl_->workers.clear();
  impl_->started = false;
}

bool DubService::running() const { return impl_->started.load(); }

}  // namespace polydub::pipeline
