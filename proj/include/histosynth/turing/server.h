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
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "histosynth/turing/session.h"

namespace histosynth::turing {

struct ServerOptions {
  /// Image pools used when POST /sessions names none.
  std::vector<std::string> default_real;
  std::vector<std::string> default_synth;
};

/// HTTP JSON front end over a SessionStore:
///   POST /sessions                 {rater_id, seed?, real?, synth?} -> {session_id, total}
///   GET  /sessions/{id}/next       -> {session_id, item_id, image_url, position, total, answered,
///                                      done, closed}
///   POST /sessions/{id}/ratings    {item_id, judgment: REAL|SYNTH|SKIP}
///   POST /sessions/{id}/close      -> confusion matrix
///   GET  /sessions/{id}/report     -> confusion matrix and per-item sources (closed only)
///   GET  /images/{item_id}         -> image bytes
/// Errors are {"error": code, "message": text} with 400, 404 or 409.
class TuringServer {
 public:
  TuringServer(SessionStore& store, ServerOptions options = {});
  ~TuringServer();

  TuringServer(const TuringServer&) = delete;
  TuringServer& operator=(const TuringServer&) = delete;

  /// Binds to host:port (port 0 picks a free one) and returns the port.
  int Bind(const std::string& host, int port);
  /// Serves until Stop(); blocks.
  void Listen();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace histosynth::turing
