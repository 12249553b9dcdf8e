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
#include "histosynth/turing/session.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <random>

namespace histosynth::turing {
namespace {

std::string RandomToken() {
  static std::mutex mutex;
  static std::random_device device;
  static std::mt19937_64 rng(((std::uint64_t{device()} << 32) ^ device()) ^
                             static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::lock_guard<std::mutex> lock(mutex);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

Source ParseSource(std::string_view s) {
  if (s == "REAL") return Source::kReal;
  if (s == "SYNTH") return Source::kSynth;
  throw std::runtime_error("unknown source '" + std::string(s) + "' in event log");
}

int Index(Source s) { return s == Source::kReal ? 0 : 1; }

}  // namespace

std::string_view SourceName(Source s) { return s == Source::kReal ? "REAL" : "SYNTH"; }

std::string_view JudgmentName(Judgment j) {
  switch (j) {
    case Judgment::kReal:
      return "REAL";
    case Judgment::kSynth:
      return "SYNTH";
    case Judgment::kSkip:
      return "SKIP";
  }
  return "?";
}

Judgment ParseJudgment(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "REAL") return Judgment::kReal;
  if (upper == "SYNTH") return Judgment::kSynth;
  if (upper == "SKIP") return Judgment::kSkip;
  throw TuringError(ErrorCode::kInvalidArgument, "judgment must be REAL, SYNTH or SKIP, got '" + std::string(text) + "'");
}

std::size_t RatingSession::cursor() const {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!ratings.contains(items[i].item_id)) return i;
  }
  return items.size();
}

const SessionItem* RatingSession::FindItem(std::string_view item_id) const {
  for (const SessionItem& item : items) {
    if (item.item_id == item_id) return &item;
  }
  return nullptr;
}

double ConfusionMatrix2x2::accuracy() const {
  const std::uint64_t n = rated();
  return n == 0 ? 0.0 : static_cast<double>(counts[0][0] + counts[1][1]) / static_cast<double>(n);
}

std::int64_t NowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

RatingSession create_session(std::span<const std::string> real_refs, std::span<const std::string> synth_refs,
                             const std::string& rater_id, std::uint64_t seed) {
  if (real_refs.empty() || synth_refs.empty()) {
    throw TuringError(ErrorCode::kInvalidArgument, "a session needs at least one real and one synthetic image");
  }
  RatingSession s;
  s.session_id = RandomToken();
  s.rater_id = rater_id;
  s.seed = seed;
  s.created_ms = NowMs();
  for (const std::string& r : real_refs) s.items.push_back({RandomToken(), Source::kReal, r});
  for (const std::string& r : synth_refs) s.items.push_back({RandomToken(), Source::kSynth, r});
  std::mt19937_64 rng(seed);
  std::shuffle(s.items.begin(), s.items.end(), rng);
  return s;
}

void record_rating(RatingSession& session, const std::string& item_id, Judgment judgment, std::int64_t timestamp_ms) {
  if (session.closed) throw TuringError(ErrorCode::kSessionClosed, "session " + session.session_id + " is closed");
  if (!session.FindItem(item_id)) {
    throw TuringError(ErrorCode::kUnknownItem, "item " + item_id + " is not part of this session");
  }
  if (session.ratings.contains(item_id)) {
    throw TuringError(ErrorCode::kDuplicateRating, "item " + item_id + " was already rated");
  }
  session.ratings[item_id] = Rating{judgment, timestamp_ms, session.rater_id};
}

ConfusionMatrix2x2 Score(const RatingSession& session) {
  ConfusionMatrix2x2 m;
  m.rater_id = session.rater_id;
  for (const SessionItem& item : session.items) {
    auto it = session.ratings.find(item.item_id);
    if (it == session.ratings.end()) {
      ++m.unrated;
    } else if (it->second.judgment == Judgment::kSkip) {
      ++m.skipped;
    } else {
      const int judged = it->second.judgment == Judgment::kReal ? 0 : 1;
      ++m.counts[static_cast<std::size_t>(Index(item.source))][static_cast<std::size_t>(judged)];
    }
  }
  return m;
}

ConfusionMatrix2x2 close_and_score(RatingSession& session, std::int64_t timestamp_ms) {
  (void)timestamp_ms;
  if (session.closed) throw TuringError(ErrorCode::kSessionClosed, "session " + session.session_id + " is closed");
  ConfusionMatrix2x2 m = Score(session);
  if (m.rated() == 0) {
    throw TuringError(ErrorCode::kNoRatings, "session " + session.session_id + " has no REAL/SYNTH ratings");
  }
  session.closed = true;
  return m;
}

nlohmann::json ConfusionToJson(const ConfusionMatrix2x2& m) {
  return {{"rater_id", m.rater_id},
          {"matrix",
           {{"real_judged_real", m.counts[0][0]},
            {"real_judged_synth", m.counts[0][1]},
            {"synth_judged_real", m.counts[1][0]},
            {"synth_judged_synth", m.counts[1][1]}}},
          {"truth_real", m.counts[0][0] + m.counts[0][1]},
          {"truth_synth", m.counts[1][0] + m.counts[1][1]},
          {"judged_real", m.counts[0][0] + m.counts[1][0]},
          {"judged_synth", m.counts[0][1] + m.counts[1][1]},
          {"rated", m.rated()},
          {"skipped", m.skipped},
          {"unrated", m.unrated},
          {"accuracy", m.accuracy()}};
}

nlohmann::json CreateEvent(const RatingSession& s) {
  nlohmann::json items = nlohmann::json::array();
  for (const SessionItem& item : s.items) {
    items.push_back({{"item_id", item.item_id}, {"source", SourceName(item.source)}, {"image", item.image}});
  }
  return {{"v", kEventLogVersion}, {"event", "create"},  {"session_id", s.session_id}, {"rater_id", s.rater_id},
          {"seed", s.seed},        {"timestamp", s.created_ms}, {"items", std::move(items)}};
}

nlohmann::json RateEvent(const std::string& item_id, const Rating& r) {
  return {{"v", kEventLogVersion}, {"event", "rate"}, {"item_id", item_id}, {"judgment", JudgmentName(r.judgment)},
          {"rater_id", r.rater_id}, {"timestamp", r.timestamp_ms}};
}

nlohmann::json CloseEvent(std::int64_t timestamp_ms) {
  return {{"v", kEventLogVersion}, {"event", "close"}, {"timestamp", timestamp_ms}};
}

RatingSession ReplayEvents(std::span<const nlohmann::json> events) {
  if (events.empty()) throw std::runtime_error("empty event log");
  RatingSession s;
  bool created = false;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const nlohmann::json& e = events[k];
    const std::string where = "event " + std::to_string(k);
    try {
      if (e.at("v").get<int>() != kEventLogVersion) {
        throw std::runtime_error(where + ": unsupported version " + e.at("v").dump());
      }
      const std::string type = e.at("event").get<std::string>();
      if (type == "create") {
        if (created) throw std::runtime_error(where + ": second create event");
        created = true;
        s.session_id = e.at("session_id").get<std::string>();
        s.rater_id = e.at("rater_id").get<std::string>();
        s.seed = e.at("seed").get<std::uint64_t>();
        s.created_ms = e.at("timestamp").get<std::int64_t>();
        for (const auto& item : e.at("items")) {
          s.items.push_back({item.at("item_id").get<std::string>(), ParseSource(item.at("source").get<std::string>()),
                             item.at("image").get<std::string>()});
        }
      } else if (!created) {
        throw std::runtime_error(where + ": " + type + " before create");
      } else if (type == "rate") {
        record_rating(s, e.at("item_id").get<std::string>(), ParseJudgment(e.at("judgment").get<std::string>()),
                      e.at("timestamp").get<std::int64_t>());
      } else if (type == "close") {
        close_and_score(s, e.at("timestamp").get<std::int64_t>());
      } else {
        throw std::runtime_error(where + ": unknown event '" + type + "'");
      }
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error(where + ": " + ex.what());
    } catch (const TuringError& ex) {
      throw std::runtime_error(where + ": " + ex.what());
    }
  }
  return s;
}

RatingSession ReplayEventLog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event log " + path.string());
  std::vector<nlohmann::json> events;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ReplayEvents(events);
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path SessionStore::LogPath(const std::string& session_id) const {
  return dir_ / (session_id + ".jsonl");
}

void SessionStore::LoadExisting() {
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    RatingSession s = ReplayEventLog(entry.path());
    auto e = std::make_shared<Entry>();
    std::lock_guard<std::mutex> lock(mutex_);
    for (const SessionItem& item : s.items) item_images_[item.item_id] = item.image;
    e->session = std::move(s);
    sessions_[e->session.session_id] = e;
  }
}

void SessionStore::Append(const std::string& session_id, const nlohmann::json& event) {
  std::ofstream out(LogPath(session_id), std::ios::app);
  if (!out) throw std::runtime_error("cannot append to event log of session " + session_id);
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("failed writing event log of session " + session_id);
}

std::shared_ptr<SessionStore::Entry> SessionStore::Find(const std::string& session_id) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw TuringError(ErrorCode::kUnknownSession, "unknown session " + session_id);
  return it->second;
}

std::string SessionStore::Create(std::span<const std::string> real_refs, std::span<const std::string> synth_refs,
                                 const std::string& rater_id, std::uint64_t seed) {
  auto e = std::make_shared<Entry>();
  e->session = create_session(real_refs, synth_refs, rater_id, seed);
  const std::string id = e->session.session_id;
  Append(id, CreateEvent(e->session));
  std::lock_guard<std::mutex> lock(mutex_);
  for (const SessionItem& item : e->session.items) item_images_[item.item_id] = item.image;
  sessions_[id] = std::move(e);
  return id;
}

nlohmann::json SessionStore::Next(const std::string& session_id) {
  auto e = Find(session_id);
  std::lock_guard<std::mutex> lock(e->mutex);
  const RatingSession& s = e->session;
  nlohmann::json j = {{"session_id", s.session_id},
                      {"total", s.items.size()},
                      {"answered", s.ratings.size()},
                      {"closed", s.closed}};
  const std::size_t c = s.cursor();
  if (s.closed || c == s.items.size()) {
    j["done"] = true;
    return j;
  }
  j["done"] = false;
  j["position"] = c;
  j["item_id"] = s.items[c].item_id;
  j["image_url"] = "/images/" + s.items[c].item_id;
  return j;
}

nlohmann::json SessionStore::Rate(const std::string& session_id, const std::string& item_id, Judgment judgment) {
  auto e = Find(session_id);
  std::lock_guard<std::mutex> lock(e->mutex);
  RatingSession& s = e->session;
  const std::int64_t now = NowMs();
  record_rating(s, item_id, judgment, now);
  try {
    Append(session_id, RateEvent(item_id, s.ratings.at(item_id)));
  } catch (...) {
    s.ratings.erase(item_id);
    throw;
  }
  return {{"accepted", true},
          {"item_id", item_id},
          {"judgment", JudgmentName(judgment)},
          {"answered", s.ratings.size()},
          {"total", s.items.size()},
          {"cursor", s.cursor()}};
}

nlohmann::json SessionStore::Close(const std::string& session_id) {
  auto e = Find(session_id);
  std::lock_guard<std::mutex> lock(e->mutex);
  RatingSession& s = e->session;
  const std::int64_t now = NowMs();
  const ConfusionMatrix2x2 m = close_and_score(s, now);
  try {
    Append(session_id, CloseEvent(now));
  } catch (...) {
    s.closed = false;
    throw;
  }
  nlohmann::json j = ConfusionToJson(m);
  j["session_id"] = session_id;
  j["closed"] = true;
  return j;
}

nlohmann::json SessionStore::Report(const std::string& session_id) {
  auto e = Find(session_id);
  std::lock_guard<std::mutex> lock(e->mutex);
  const RatingSession& s = e->session;
  if (!s.closed) throw TuringError(ErrorCode::kSessionOpen, "session " + session_id + " is still open");
  nlohmann::json j = ConfusionToJson(Score(s));
  j["session_id"] = session_id;
  j["closed"] = true;
  nlohmann::json items = nlohmann::json::array();
  for (const SessionItem& item : s.items) {
    auto it = s.ratings.find(item.item_id);
    items.push_back({{"item_id", item.item_id},
                     {"source", SourceName(item.source)},
                     {"judgment", it == s.ratings.end() ? nlohmann::json(nullptr)
                                                        : nlohmann::json(JudgmentName(it->second.judgment))}});
  }
  j["items"] = std::move(items);
  return j;
}

std::optional<std::string> SessionStore::ImageFor(const std::string& item_id) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = item_images_.find(item_id);
  if (it == item_images_.end()) return std::nullopt;
  return it->second;
}

RatingSession SessionStore::Snapshot(const std::string& session_id) {
  auto e = Find(session_id);
  std::lock_guard<std::mutex> lock(e->mutex);
  return e->session;
}

}  // namespace histosynth::turing
