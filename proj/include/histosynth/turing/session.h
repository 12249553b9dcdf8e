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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace histosynth::turing {

enum class Source { kReal, kSynth };
enum class Judgment { kReal, kSynth, kSkip };

std::string_view SourceName(Source s);
std::string_view JudgmentName(Judgment j);
/// Accepts "REAL", "SYNTH" and "SKIP" (case-insensitive).
Judgment ParseJudgment(std::string_view text);

struct SessionItem {
  std::string item_id;
  Source source = Source::kReal;
  std::string image;  // server-side reference, never sent to clients
};

struct Rating {
  Judgment judgment = Judgment::kSkip;
  std::int64_t timestamp_ms = 0;
  std::string rater_id;
};

struct RatingSession {
  std::string session_id;
  std::string rater_id;
  std::uint64_t seed = 0;
  std::int64_t created_ms = 0;
  std::vector<SessionItem> items;
  std::map<std::string, Rating> ratings;
  bool closed = false;

  /// Index of the first item with no rating or skip; items.size() when done.
  std::size_t cursor() const;
  const SessionItem* FindItem(std::string_view item_id) const;
};

/// counts[truth][judged], REAL = 0 and SYNTH = 1.
struct ConfusionMatrix2x2 {
  std::string rater_id;
  std::array<std::array<std::uint64_t, 2>, 2> counts{};
  std::uint64_t skipped = 0;
  std::uint64_t unrated = 0;

  std::uint64_t rated() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
  double accuracy() const;
  bool operator==(const ConfusionMatrix2x2&) const = default;
};

enum class ErrorCode { kInvalidArgument, kUnknownSession, kUnknownItem, kDuplicateRating, kSessionClosed,
                       kSessionOpen, kNoRatings };

class TuringError : public std::runtime_error {
 public:
  TuringError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Builds a session over both sets in a seeded interleaved order. Item and
/// session ids are random opaque tokens; only the order depends on the seed.
RatingSession create_session(std::span<const std::string> real_refs, std::span<const std::string> synth_refs,
                             const std::string& rater_id, std::uint64_t seed);

/// Throws TuringError for a closed session, an unknown item or a repeated
/// rating; the session is left unchanged in every error case.
void record_rating(RatingSession& session, const std::string& item_id, Judgment judgment,
                   std::int64_t timestamp_ms);

/// Confusion matrix over REAL/SYNTH judgments; skips and unrated items are
/// counted separately. Seals the session. Throws when nothing was rated.
ConfusionMatrix2x2 close_and_score(RatingSession& session, std::int64_t timestamp_ms);

/// Matrix of a session as it stands, without sealing it.
ConfusionMatrix2x2 Score(const RatingSession& session);

nlohmann::json ConfusionToJson(const ConfusionMatrix2x2& m);

inline constexpr int kEventLogVersion = 1;

/// JSON-lines event log: one create event, then rate events, then at most one
/// close event. Each line carries "v": kEventLogVersion.
nlohmann::json CreateEvent(const RatingSession& session);
nlohmann::json RateEvent(const std::string& item_id, const Rating& rating);
nlohmann::json CloseEvent(std::int64_t timestamp_ms);

/// Rebuilds a session from its event log. Throws std::runtime_error on an
/// unknown version or an inconsistent event sequence.
RatingSession ReplayEventLog(const std::filesystem::path& path);
RatingSession ReplayEvents(std::span<const nlohmann::json> events);

std::int64_t NowMs();

/// Thread-safe registry of sessions, each persisted to
/// <dir>/<session_id>.jsonl. Operations on one session are serialised.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  /// Loads any existing logs from the directory.
  void LoadExisting();

  std::string Create(std::span<const std::string> real_refs, std::span<const std::string> synth_refs,
                     const std::string& rater_id, std::uint64_t seed);

  /// Client view of the next item: item_id, position and totals; never the source.
  nlohmann::json Next(const std::string& session_id);
  nlohmann::json Rate(const std::string& session_id, const std::string& item_id, Judgment judgment);
  nlohmann::json Close(const std::string& session_id);
  /// Only available once closed; includes the per-item sources.
  nlohmann::json Report(const std::string& session_id);
  /// Server-side image reference for an item id in any session.
  std::optional<std::string> ImageFor(const std::string& item_id);

  /// Snapshot copy of a session.
  RatingSession Snapshot(const std::string& session_id);
  std::filesystem::path LogPath(const std::string& session_id) const;

 private:
  struct Entry {
    std::mutex mutex;
    RatingSession session;
  };

  std::shared_ptr<Entry> Find(const std::string& session_id);
  void Append(const std::string& session_id, const nlohmann::json& event);

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::map<std::string, std::string> item_images_;
};

}  // namespace histosynth::turing
