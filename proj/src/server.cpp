#include "trajcraft/server.hpp"

#include "httplib.h"

#include "trajcraft/errors.hpp"
#include "trajcraft/trajectory.hpp"

namespace trajcraft {

namespace {

using nlohmann::json;

HttpReply error_reply(int status, const std::string& message) {
  return {status, "application/json", json{{"error", message}}.dump()};
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
  }
}

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs a handler body and maps failures to status codes.
template <typename F>
HttpReply guarded(F&& f) {
  try {
    return f();
  } catch (const NotFound& e) {
    return error_reply(404, e.what());
  } catch (const ValidationError& e) {
    return error_reply(400, e.what());
  } catch (const json::exception& e) {
    return error_reply(400, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

int checked_downscale(int factor) {
  if (factor < 1) throw ValidationError("downscale must be at least 1");
  return factor;
}

int checked_radius(int r) {
  if (r < 0 || r > 8) throw ValidationError("splat_radius must lie in [0, 8]");
  return r;
}

void send(httplib::Response& res, const HttpReply& reply) {
  res.status = reply.status;
  res.set_content(reply.body, reply.content_type);
}

}  // namespace

CameraIntrinsics downscaled(const CameraIntrinsics& k, int factor) {
  checked_downscale(factor);
  if (factor == 1) return k;
  CameraIntrinsics out = k;
  const double f = factor;
  out.fx = k.fx / f;
  out.fy = k.fy / f;
  out.cx = (k.cx + 0.5) / f - 0.5;
  out.cy = (k.cy + 0.5) / f - 0.5;
  out.width = std::max(1, k.width / factor);
  out.height = std::max(1, k.height / factor);
  return out;
}

PreviewServer::PreviewServer(Clip clip, ServerOptions options)
    : clip_(std::move(clip)), options_(std::move(options)) {
  clip_.validate();
  checked_downscale(options_.downscale);
  cloud_ = lift_video(clip_.colors, clip_.depths, clip_.intrinsics);
}

PreviewServer::~PreviewServer() { stop(); }

json PreviewServer::preview(int frame_index, const PoseSE3& pose, int splat_radius,
                            int downscale) const {
  if (frame_index < 0 || frame_index >= static_cast<int>(cloud_.frames.size())) {
    throw NotFound("frame_index " + std::to_string(frame_index) + " outside [0, " +
                   std::to_string(cloud_.frames.size()) + ")");
  }
  const CameraIntrinsics k = downscaled(clip_.intrinsics, checked_downscale(downscale));
  const RenderOutput out =
      render_frame(cloud_.frames[frame_index], pose, k, checked_radius(splat_radius));
  return {{"frame_index", frame_index},
          {"width", k.width},
          {"height", k.height},
          {"downscale", downscale},
          {"coverage", coverage(out.mask)},
          {"color_png", base64_encode(encode_png(out.color))},
          {"mask_png", base64_encode(encode_mask_png(out.mask))}};
}

HttpReply PreviewServer::meta() const {
  return {200, "application/json",
          json{{"n", clip_.frame_count()},
               {"width", clip_.intrinsics.width},
               {"height", clip_.intrinsics.height},
               {"intrinsics", intrinsics_to_json(clip_.intrinsics)},
               {"downscale", options_.downscale}}
              .dump()};
}

HttpReply PreviewServer::render(const std::string& body) const {
  return guarded([&] {
    const json req = parse_body(body);
    if (!req.is_object() || !req.contains("pose") || !req.contains("frame_index")) {
      throw ValidationError("expected {pose, frame_index, splat_radius?, downscale?}");
    }
    const PoseSE3 pose = pose_from_json(req.at("pose"));
    const int frame = req.at("frame_index").get<int>();
    const int radius = req.value("splat_radius", 0);
    const int factor = req.value("downscale", options_.downscale);
    return HttpReply{200, "application/json", preview(frame, pose, radius, factor).dump()};
  });
}

HttpReply PreviewServer::interpolate(const std::string& body) const {
  return guarded([&] {
    const json req = parse_body(body);
    std::vector<Keyframe> keys;
    for (const json& k : req.at("keys")) {
      keys.push_back({k.at("index").get<int>(), pose_from_json(k)});
    }
    const Trajectory traj = interpolate_keyframes(keys, req.at("n").get<int>());
    return HttpReply{200, "application/json", trajectory_to_json(traj).dump()};
  });
}

HttpReply PreviewServer::generate_trajectory(const std::string& body) const {
  return guarded([&] {
    const json req = parse_body(body);
    TrajectorySpec spec = spec_from_json(req);
    if (auto* orbit = std::get_if<OrbitParams>(&spec); orbit && !orbit->pivot_depth) {
      orbit->pivot_depth = median_depth(clip_.depths.front());
    }
    const Trajectory traj = generate(spec, req.at("n").get<int>());
    return HttpReply{200, "application/json", trajectory_to_json(traj).dump()};
  });
}

HttpReply PreviewServer::render_trajectory(const std::string& body, int splat_radius,
                                           int downscale) const {
  return guarded([&] {
    const Trajectory traj = trajectory_from_json(parse_body(body));
    if (traj.size() != clip_.frame_count()) {
      throw ValidationError("trajectory has " + std::to_string(traj.size()) +
                            " poses, clip has " + std::to_string(clip_.frame_count()) + " frames");
    }
    std::string lines;
    for (size_t i = 0; i < traj.size(); ++i) {
      lines += preview(static_cast<int>(i), traj[i], splat_radius, downscale).dump();
      lines += '\n';
    }
    return HttpReply{200, "application/x-ndjson", std::move(lines)};
  });
}

void PreviewServer::install_routes() {
  http_ = std::make_unique<httplib::Server>();
  httplib::Server& s = *http_;
  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  s.Get("/meta", [this](const httplib::Request&, httplib::Response& res) { send(res, meta()); });
  s.Post("/render", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, render(req.body));
  });
  s.Post("/trajectory/interpolate", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, interpolate(req.body));
  });
  s.Post("/trajectory/generate", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, generate_trajectory(req.body));
  });
  s.Post("/trajectory/render", [this](const httplib::Request& req, httplib::Response& res) {
    int radius = 0;
    int factor = options_.downscale;
    try {
      if (req.has_param("splat_radius")) radius = std::stoi(req.get_param_value("splat_radius"));
      if (req.has_param("downscale")) factor = std::stoi(req.get_param_value("downscale"));
    } catch (const std::exception&) {
      send(res, error_reply(400, "splat_radius and downscale must be integers"));
      return;
    }
    // Validate and render up front so errors still carry a status code, then stream the
    // per-frame lines in chunks.
    HttpReply reply = render_trajectory(req.body, radius, factor);
    if (reply.status != 200) {
      send(res, reply);
      return;
    }
    auto payload = std::make_shared<std::string>(std::move(reply.body));
    res.set_chunked_content_provider(
        "application/x-ndjson", [payload](size_t offset, httplib::DataSink& sink) {
          if (offset >= payload->size()) {
            sink.done();
            return true;
          }
          size_t end = payload->find('\n', offset);
          end = end == std::string::npos ? payload->size() : end + 1;
          return sink.write(payload->data() + offset, end - offset);
        });
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                             std::exception_ptr) {
    send(res, error_reply(500, "internal error"));
  });
}

void PreviewServer::listen() {
  install_routes();
  if (!http_->listen(options_.host, options_.port)) {
    throw IoError("cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  }
}

int PreviewServer::start() {
  install_routes();
  const int port = options_.port == 0 ? http_->bind_to_any_port(options_.host)
                                      : (http_->bind_to_port(options_.host, options_.port)
                                             ? options_.port
                                             : -1);
  if (port < 0) {
    throw IoError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  worker_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return port;
}

void PreviewServer::stop() {
  if (http_) http_->stop();
  if (worker_.joinable()) worker_.join();
}

}  // namespace trajcraft
