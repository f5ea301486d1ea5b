// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>
#include <thread>
#include <vector>

#include "panostage/commands.hpp"
#include "panostage/error.hpp"
#include "panostage/parallel.hpp"

namespace panostage {

// workspace.json, paths relative to the workspace directory:
// {"layout": "layout.json", "mask": "mask.json", "components": "components",
//  "env": "env.exr", "panoramas": {"id": "file.exr"}, "sequence": [...],
//  "policy": "scale_last", "orientation_deg": 0, "wall_threshold": 0.5,
//  "materials": {...}, "emitters": [...], "seed": 0, "spp": 16}
struct WorkspaceConfig {
  fs::path layout;
  std::optional<fs::path> mask;
  fs::path components;
  fs::path env;
  std::map<std::string, fs::path> panoramas;
  std::vector<std::string> sequence;
  CornerPolicy policy = CornerPolicy::scale_last;
  double orientation_deg = 0;
  double wall_threshold = 0.5;
  std::map<std::string, Material> materials;
  std::vector<Emitter> emitters;
  std::uint64_t seed = 0;
  int spp = 16;
};

inline WorkspaceConfig load_workspace(const fs::path& dir) {
  const fs::path file = dir / "workspace.json";
  const std::string what = "workspace.json";
  const json j = detail::parse_json_text(read_text(file), what);
  if (!j.is_object()) throw ValidationError("workspace.json must be an object");
  detail::reject_unknown_keys(j, {"layout", "mask", "components", "env", "panoramas", "sequence", "policy", "orientation_deg",
                                  "wall_threshold", "materials", "emitters", "seed", "spp"}, what);
  WorkspaceConfig w;
  w.layout = dir / detail::get_field<std::string>(j, "layout", what);
  if (j.contains("mask")) w.mask = dir / detail::get_field<std::string>(j, "mask", what);
  w.components = dir / detail::get_field<std::string>(j, "components", what);
  w.env = dir / detail::get_field<std::string>(j, "env", what);
  if (j.contains("panoramas")) {
    const json panoramas = detail::get_field<json>(j, "panoramas", what);
    for (const auto& [id, p] : panoramas.items()) {
      require(p.is_string(), "workspace.json: panorama paths must be strings");
      w.panoramas[id] = dir / p.get<std::string>();
    }
  }
  if (j.contains("sequence")) w.sequence = detail::get_field<std::vector<std::string>>(j, "sequence", what);
  if (j.contains("policy")) w.policy = parse_corner_policy(detail::get_field<std::string>(j, "policy", what));
  if (j.contains("orientation_deg")) w.orientation_deg = detail::get_field<double>(j, "orientation_deg", what);
  if (j.contains("wall_threshold")) w.wall_threshold = detail::get_field<double>(j, "wall_threshold", what);
  if (j.contains("materials")) w.materials = materials_from_json(j["materials"]);
  if (j.contains("emitters")) w.emitters = emitters_from_json(j["emitters"]);
  if (j.contains("seed")) w.seed = detail::get_field<std::uint64_t>(j, "seed", what);
  if (j.contains("spp")) w.spp = detail::get_field<int>(j, "spp", what);
  return w;
}

struct ServiceResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

inline ServiceResponse error_response(int status, const std::string& kind, const std::string& message) {
  return {status, "application/json", json{{"error", {{"code", status}, {"kind", kind}, {"message", message}}}}.dump()};
}

inline ServiceResponse json_response(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

// Maps library exceptions onto HTTP error payloads.
inline ServiceResponse guarded(const std::function<ServiceResponse()>& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    return error_response(400, "validation", e.what());
  } catch (const NumericError& e) {
    return error_response(422, "numeric", e.what());
  } catch (const IoError& e) {
    return error_response(500, "io", e.what());
  } catch (const json::exception& e) {
    return error_response(400, "validation", std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

// Fixed pool of render threads fed from a FIFO queue.
class WorkerPool {
 public:
  explicit WorkerPool(int threads) {
    for (int i = 0; i < std::max(1, threads); ++i) threads_.emplace_back([this] { run(); });
  }
  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
  }
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void submit(std::function<void()> task) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

 private:
  void run() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      task();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::vector<std::jthread> threads_;
};

struct ServiceOptions {
  double render_timeout_s = 30;
  int render_threads = 1;
};

// Staging service over a single workspace. Handlers are plain member
// functions so they can be exercised without a socket; bind() routes them.
class StagingService {
 public:
  StagingService(WorkspaceConfig config, ServiceOptions opts = {})
      : config_(std::move(config)), opts_(opts) {
    std::optional<std::vector<bool>> mask;
    if (config_.mask) mask = load_mask(*config_.mask);
    layout_ = staged_layout(load_layout(config_.layout), mask, config_.wall_threshold);
    library_ = load_component_library(config_.components);
    env_ = std::make_shared<const HdrPanorama>(load_panorama(config_.env));
    materials_ = config_.materials;
    sequence_ = config_.sequence;
    policy_ = config_.policy;
    rebuild();
    pool_ = std::make_unique<WorkerPool>(opts_.render_threads);
  }

  ~StagingService() { pool_.reset(); }

  ServiceResponse get_scene() const {
    return guarded([&] {
      std::lock_guard lock(mu_);
      std::vector<std::string> mesh_paths;
      for (std::size_t i = 0; i < scene_->objects.size(); ++i) mesh_paths.push_back(detail::mesh_file_name(i, scene_->objects[i].name));
      json ids = json::array({"env"});
      for (const auto& [id, p] : config_.panoramas) ids.push_back(id);
      return json_response({{"revision", revision_},
                            {"sequence", sequence_},
                            {"corner_policy", to_string(policy_)},
                            {"plan", plan_to_json(plan_)},
                            {"panoramas", ids},
                            {"scene", scene_to_json(*scene_, mesh_paths)}});
    });
  }

  ServiceResponse get_pano(const std::string& id) const {
    if (id != "env" && !config_.panoramas.contains(id))
      return error_response(404, "not_found", "unknown panorama id '" + id + "'");
    return guarded([&]() -> ServiceResponse {
      const HdrPanorama pano = id == "env" ? *env_ : load_panorama(config_.panoramas.at(id));
      const auto png = encode_preview_png(pano.pixels());
      return {200, "image/png", std::string(png.begin(), png.end())};
    });
  }

  // {"sequence": [...], "policy": "scale_last" | "leave_gap"}
  ServiceResponse post_plan(const std::string& body) {
    return guarded([&] {
      const json j = detail::parse_json_text(body, "plan request");
      if (!j.is_object()) throw ValidationError("plan request must be a JSON object");
      detail::reject_unknown_keys(j, {"sequence", "policy", "revision"}, "plan request");
      const auto sequence = detail::get_field<std::vector<std::string>>(j, "sequence", "plan request");
      if (sequence.empty()) throw ValidationError("the component sequence is empty");
      const CornerPolicy policy =
          j.contains("policy") ? parse_corner_policy(detail::get_field<std::string>(j, "policy", "plan request")) : policy_;
      std::lock_guard lock(mu_);
      if (auto replay = check_revision(j, "plan", body)) return *replay;
      PlacementPlan plan = place_components(layout_, library_, sequence, policy);
      auto scene = std::make_shared<const SceneDescription>(assemble(plan, materials_));
      sequence_ = sequence;
      policy_ = policy;
      plan_ = std::move(plan);
      scene_ = std::move(scene);
      return commit("plan", body, ServiceResponse{200, "application/json", plan_json_text(plan_)});
    });
  }

  // {"slot": "body", "albedo": [r, g, b] | a, "specular": s}
  ServiceResponse post_material(const std::string& body) {
    return guarded([&] {
      json j = detail::parse_json_text(body, "material request");
      if (!j.is_object()) throw ValidationError("material request must be a JSON object");
      const auto slot = detail::get_field<std::string>(j, "slot", "material request");
      const json request = j;
      j.erase("slot");
      j.erase("revision");
      const Material m = material_from_json(j, slot);
      std::lock_guard lock(mu_);
      if (auto replay = check_revision(request, "material", body)) return *replay;
      auto materials = materials_;
      materials[slot] = m;
      auto scene = std::make_shared<const SceneDescription>(assemble(plan_, materials));
      materials_ = std::move(materials);
      scene_ = std::move(scene);
      return commit("material", body,
                    json_response({{"slot", slot}, {"material", material_to_json(m)}, {"revision", revision_ + 1}}));
    });
  }

  // {"view": {"yaw_deg", "pitch_deg", "fov_deg", "width", "height"}, "spp": n, "seed": s}
  ServiceResponse post_preview(const std::string& body) {
    return guarded([&] {
      const json j = body.empty() ? json::object() : detail::parse_json_text(body, "preview request");
      if (!j.is_object()) throw ValidationError("preview request must be a JSON object");
      detail::reject_unknown_keys(j, {"view", "spp", "seed", "revision"}, "preview request");
      PerspectiveView view;
      if (j.contains("view")) {
        const json& v = j["view"];
        detail::reject_unknown_keys(v, {"yaw_deg", "pitch_deg", "fov_deg", "width", "height"}, "view");
        if (v.contains("yaw_deg")) view.yaw_deg = detail::get_field<double>(v, "yaw_deg", "view");
        if (v.contains("pitch_deg")) view.pitch_deg = detail::get_field<double>(v, "pitch_deg", "view");
        if (v.contains("fov_deg")) view.fov_deg = detail::get_field<double>(v, "fov_deg", "view");
        if (v.contains("width")) view.width = detail::get_field<int>(v, "width", "view");
        if (v.contains("height")) view.height = detail::get_field<int>(v, "height", "view");
      }
      validate_view(view);
      PreviewOptions popts{config_.spp, config_.seed, std::nullopt};
      if (j.contains("spp")) popts.samples_per_pixel = detail::get_field<int>(j, "spp", "preview request");
      if (j.contains("seed")) popts.seed = detail::get_field<std::uint64_t>(j, "seed", "preview request");
      require(popts.samples_per_pixel >= 1, "spp must be positive");

      std::shared_ptr<Job> job = std::make_shared<Job>();
      std::shared_ptr<const SceneDescription> scene;
      std::string id;
      {
        std::lock_guard lock(mu_);
        scene = scene_;
        id = "job-" + std::to_string(++job_counter_);
        jobs_[id] = job;
        prune_jobs();
      }
      pool_->submit([job, scene, view, popts] {
        std::string png, error;
        try {
          const auto bytes = encode_preview_png(preview_render(*scene, view, popts));
          png.assign(bytes.begin(), bytes.end());
        } catch (const std::exception& e) {
          error = e.what();
        }
        job->finish(std::move(png), std::move(error));
      });
      if (job->wait_for(opts_.render_timeout_s)) return job_result(id, *job);
      return json_response({{"job_id", id}, {"status", "pending"}}, 202);
    });
  }

  ServiceResponse get_job(const std::string& id) const {
    std::shared_ptr<Job> job;
    {
      std::lock_guard lock(mu_);
      auto it = jobs_.find(id);
      if (it == jobs_.end()) return error_response(404, "not_found", "unknown job id '" + id + "'");
      job = it->second;
    }
    if (!job->wait_for(0)) return json_response({{"job_id", id}, {"status", "pending"}}, 202);
    return job_result(id, *job);
  }

  void bind(httplib::Server& server) {
    auto send = [](httplib::Response& res, const ServiceResponse& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get("/v1/scene", [this, send](const httplib::Request&, httplib::Response& res) { send(res, get_scene()); });
    server.Get(R"(/v1/pano/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, get_pano(req.matches[1]));
    });
    server.Post("/v1/plan", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, post_plan(req.body)); });
    server.Post("/v1/preview", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, post_preview(req.body));
    });
    server.Get(R"(/v1/job/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, get_job(req.matches[1]));
    });
    server.Post("/v1/material", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, post_material(req.body));
    });
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      const auto r = error_response(res.status, res.status == 404 ? "not_found" : "http", "no route for " + req.method + " " + req.path);
      res.set_content(r.body, r.content_type);
    });
  }

 private:
  struct Job {
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    std::string png;
    std::string error;

    void finish(std::string p, std::string e) {
      {
        std::lock_guard lock(mu);
        png = std::move(p);
        error = std::move(e);
        done = true;
      }
      cv.notify_all();
    }
    bool wait_for(double seconds) {
      std::unique_lock lock(mu);
      return cv.wait_for(lock, std::chrono::duration<double>(seconds), [&] { return done; });
    }
  };

  // Mutations may carry the revision they were made against. A replay of the
  // last applied request returns its original response without reapplying
  // it; any other stale revision is a conflict.
  std::optional<ServiceResponse> check_revision(const json& request, const std::string& route, const std::string& body) const {
    if (!request.contains("revision")) return std::nullopt;
    const auto rev = detail::get_field<std::uint64_t>(request, "revision", route + " request");
    if (rev == revision_) return std::nullopt;
    if (last_ && last_->route == route && last_->revision == rev && last_->body == body) return last_->response;
    return error_response(409, "conflict",
                          "request made against revision " + std::to_string(rev) + ", workspace is at " + std::to_string(revision_));
  }

  ServiceResponse commit(const std::string& route, const std::string& body, ServiceResponse response) {
    last_ = LastMutation{route, revision_, body, response};
    ++revision_;
    return response;
  }

  static ServiceResponse job_result(const std::string& id, Job& job) {
    std::lock_guard lock(job.mu);
    if (!job.error.empty()) return error_response(500, "render", "job " + id + " failed: " + job.error);
    return {200, "image/png", job.png};
  }

  SceneDescription assemble(const PlacementPlan& plan, const std::map<std::string, Material>& materials) const {
    return assemble_scene(layout_, plan, library_, *env_, materials, config_.emitters, {config_.orientation_deg});
  }

  void rebuild() {
    if (!sequence_.empty()) plan_ = place_components(layout_, library_, sequence_, policy_);
    scene_ = std::make_shared<const SceneDescription>(assemble(plan_, materials_));
  }

  void prune_jobs() {
    constexpr std::size_t kMaxJobs = 256;
    while (jobs_.size() > kMaxJobs) {
      auto oldest = std::min_element(jobs_.begin(), jobs_.end(), [](const auto& a, const auto& b) {
        return std::stoull(a.first.substr(4)) < std::stoull(b.first.substr(4));
      });
      jobs_.erase(oldest);
    }
  }

  WorkspaceConfig config_;
  ServiceOptions opts_;
  RoomLayout layout_;
  std::vector<KitchenComponent> library_;
  std::shared_ptr<const HdrPanorama> env_;
  std::map<std::string, Material> materials_;
  std::vector<std::string> sequence_;
  CornerPolicy policy_;
  PlacementPlan plan_;
  std::shared_ptr<const SceneDescription> scene_;
  std::uint64_t revision_ = 0;
  struct LastMutation {
    std::string route;
    std::uint64_t revision;
    std::string body;
    ServiceResponse response;
  };
  std::optional<LastMutation> last_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::uint64_t job_counter_ = 0;
  std::unique_ptr<WorkerPool> pool_;
};

}  // namespace panostage
