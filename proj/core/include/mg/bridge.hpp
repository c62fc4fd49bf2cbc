#pragma once

#include <chrono>
#include <cstddef>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mg/scorer.hpp"

namespace mg {

inline constexpr std::string_view kBridgeProtocol = "mg-scorer/1";

struct BridgeOptions {
  std::chrono::milliseconds handshake_timeout{10000};
  std::chrono::milliseconds request_timeout{30000};

  // Defaults with MG_SCORER_TIMEOUT_MS applied to request_timeout.
  static BridgeOptions from_environment();
};

struct ScoreRequest {
  std::string id;
  std::string source;
  std::string candidate;
  std::optional<std::string> reference;
};

struct BridgeStats {
  std::size_t issued = 0;
  std::size_t answered = 0;
  std::size_t errored = 0;
  std::size_t protocol_errors = 0;  // unparseable or unmatched reply lines
};

// External scorer speaking mg-scorer/1 over a child process's stdin/stdout.
//
// The child first prints a handshake line
//   {"protocol": "mg-scorer/1", "kind": "reference_free"|"reference_based", "name": str}
// and then answers each request line {"id", "source", "candidate", "reference"}
// with {"id", "score": number} or {"id", "error": str}, in any order.
// stderr is collected and its tail is attached to transport errors.
class BridgeScorer final : public Scorer {
 public:
  ~BridgeScorer() override;
  BridgeScorer(const BridgeScorer&) = delete;
  BridgeScorer& operator=(const BridgeScorer&) = delete;

  const ScorerInfo& info() const override;
  double evaluate(const TokenSequence& source, const TokenSequence& candidate,
                  const TokenSequence* reference, std::string_view context_id) const override;

  // Sends a request without waiting. The id must not be in flight already.
  std::future<double> submit(const ScoreRequest& request) const;

  // Waits for a submitted request, failing with BridgeError after the
  // request timeout. Timed-out ids are abandoned and counted as errors.
  double await(const std::string& id, std::future<double>& reply) const;

  BridgeStats stats() const;
  bool alive() const;
  int child_pid() const;
  const std::vector<std::string>& command() const;

 private:
  struct State;
  explicit BridgeScorer(std::shared_ptr<State> state);
  friend std::shared_ptr<BridgeScorer> spawn_scorer(const std::vector<std::string>&,
                                                    const BridgeOptions&);

  std::shared_ptr<State> state_;
};

// Launches the command and completes the handshake.
std::shared_ptr<BridgeScorer> spawn_scorer(const std::vector<std::string>& command,
                                           const BridgeOptions& options = {});

// submit + await.
double bridge_score(const BridgeScorer& scorer, const ScoreRequest& request);

}  // namespace mg
