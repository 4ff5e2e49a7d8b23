#pragma once

#include <memory>
#include <string>
#include <thread>

#include "json.hpp"

#include "trajcraft/clip_io.hpp"
#include "trajcraft/renderer.hpp"

namespace httplib {
class Server;
}

namespace trajcraft {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8089;
  /// Preview downscale factor used when a request does not set one.
  int downscale = 2;
};

/// Plain response value so handlers can be exercised without a socket.
struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Intrinsics of the same camera sampled on a grid `factor` times coarser. Pixel centers stay
/// at integer coordinates, so cx' = (cx + 0.5) / factor - 0.5.
CameraIntrinsics downscaled(const CameraIntrinsics& k, int factor);

/// Point-cloud preview service over one clip. The clip is lifted once in the constructor and
/// never modified; every handler is const and safe to call concurrently.
///
///   GET  /healthz
///   GET  /meta                    {n, width, height, intrinsics, downscale}
///   POST /render                  {pose, frame_index, splat_radius?, downscale?}
///   POST /trajectory/render       Trajectory JSON; ?splat_radius=&downscale= ; NDJSON stream
///   POST /trajectory/interpolate  {n, keys: [{index, r, t}]} -> Trajectory JSON
///   POST /trajectory/generate     {n, kind, params} -> Trajectory JSON
class PreviewServer {
 public:
  PreviewServer(Clip clip, ServerOptions options = {});
  ~PreviewServer();
  PreviewServer(const PreviewServer&) = delete;
  PreviewServer& operator=(const PreviewServer&) = delete;

  HttpReply meta() const;
  HttpReply render(const std::string& body) const;
  HttpReply interpolate(const std::string& body) const;
  HttpReply generate_trajectory(const std::string& body) const;
  /// One JSON line per frame, each shaped like a /render reply.
  HttpReply render_trajectory(const std::string& body, int splat_radius, int downscale) const;

  /// Renders frame `frame_index` of the lifted cloud at `pose` and packs the preview.
  nlohmann::json preview(int frame_index, const PoseSE3& pose, int splat_radius,
                         int downscale) const;

  /// Blocks until stop().
  void listen();
  /// Binds (port 0 picks a free one), serves on a background thread and returns the port.
  int start();
  void stop();

 private:
  void install_routes();

  Clip clip_;
  DynamicPointCloud cloud_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> http_;
  std::thread worker_;
};

}  // namespace trajcraft
