// Copyright 2026 The HistoSynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "histosynth/turing/server.h"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace histosynth::turing {
namespace {

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return 400;
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownItem:
      return 404;
    case ErrorCode::kDuplicateRating:
    case ErrorCode::kSessionClosed:
    case ErrorCode::kSessionOpen:
    case ErrorCode::kNoRatings:
      return 409;
  }
  return 500;
}

std::string_view CodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kUnknownSession:
      return "unknown_session";
    case ErrorCode::kUnknownItem:
      return "unknown_item";
    case ErrorCode::kDuplicateRating:
      return "duplicate_rating";
    case ErrorCode::kSessionClosed:
      return "session_closed";
    case ErrorCode::kSessionOpen:
      return "session_open";
    case ErrorCode::kNoRatings:
      return "no_ratings";
  }
  return "error";
}

void SendJson(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_header("Cache-Control", "no-store");
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  SendJson(res, status, {{"error", code}, {"message", message}});
}

template <typename F>
void Guard(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const TuringError& e) {
    SendError(res, StatusFor(e.code()), CodeName(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    SendError(res, 400, "invalid_argument", std::string("malformed request body: ") + e.what());
  } catch (const std::exception& e) {
    spdlog::error("turing server: {}", e.what());
    SendError(res, 500, "internal", e.what());
  }
}

nlohmann::json ParseBody(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  nlohmann::json j = nlohmann::json::parse(req.body);
  if (!j.is_object()) throw TuringError(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return j;
}

std::string ContentType(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

}  // namespace

struct TuringServer::Impl {
  SessionStore& store;
  ServerOptions options;
  httplib::Server server;

  Impl(SessionStore& s, ServerOptions o) : store(s), options(std::move(o)) {}
};

TuringServer::TuringServer(SessionStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
  httplib::Server& srv = impl_->server;
  Impl* impl = impl_.get();

  srv.Post("/sessions", [impl](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] {
      const nlohmann::json body = ParseBody(req);
      const std::string rater = body.value("rater_id", std::string("anonymous"));
      const std::uint64_t seed = body.value("seed", std::uint64_t{0});
      const auto real = body.contains("real") ? body["real"].get<std::vector<std::string>>() : impl->options.default_real;
      const auto synth =
          body.contains("synth") ? body["synth"].get<std::vector<std::string>>() : impl->options.default_synth;
      const std::string id = impl->store.Create(real, synth, rater, seed);
      SendJson(res, 201, {{"session_id", id}, {"total", real.size() + synth.size()}});
    });
  });

  srv.Get(R"(/sessions/([0-9a-f]+)/next)", [impl](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] { SendJson(res, 200, impl->store.Next(req.matches[1])); });
  });

  srv.Post(R"(/sessions/([0-9a-f]+)/ratings)", [impl](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] {
      const nlohmann::json body = ParseBody(req);
      if (!body.contains("item_id") || !body.contains("judgment")) {
        throw TuringError(ErrorCode::kInvalidArgument, "rating needs item_id and judgment");
      }
      SendJson(res, 200,
               impl->store.Rate(req.matches[1], body["item_id"].get<std::string>(),
                                ParseJudgment(body["judgment"].get<std::string>())));
    });
  });

  srv.Post(R"(/sessions/([0-9a-f]+)/close)", [impl](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] { SendJson(res, 200, impl->store.Close(req.matches[1])); });
  });

  srv.Get(R"(/sessions/([0-9a-f]+)/report)", [impl](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] { SendJson(res, 200, impl->store.Report(req.matches[1])); });
  });

  srv.Get(R"(/images/([0-9a-f]+))", [impl](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] {
      const auto path = impl->store.ImageFor(req.matches[1]);
      if (!path) throw TuringError(ErrorCode::kUnknownItem, "unknown image");
      std::ifstream in(*path, std::ios::binary);
      if (!in) throw std::runtime_error("image for item is unreadable");
      std::ostringstream bytes;
      bytes << in.rdbuf();
      res.status = 200;
      res.set_header("Cache-Control", "no-store");
      res.set_content(bytes.str(), ContentType(*path));
    });
  });
}

TuringServer::~TuringServer() { Stop(); }

int TuringServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw std::runtime_error("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void TuringServer::Listen() { impl_->server.listen_after_bind(); }

void TuringServer::Stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace histosynth::turing
