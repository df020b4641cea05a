#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "tiesched/workload.hpp"

namespace tie {

enum class Policy { FCFS, SEPT, TIE };

enum class BetaMode { Fixed, AdaptiveLinear };

struct ScoreConfig {
  double alpha = 0.9;          // CVaR level
  BetaMode beta_mode = BetaMode::AdaptiveLinear;
  double beta_fixed = 0.1;
  double beta_max = 0.5;
  double q_sat = 128.0;
  double rebuild_threshold = 0.1;
};

// beta under the config at the given waiting-queue length
double compute_beta(const ScoreConfig& cfg, size_t queue_len);

// TIE score: expectation + beta * CVaR
double compute_score(double expectation, double cvar, double beta);

struct QueueEntry {
  uint64_t req_id;
  double key;
  bool predicted = false;
  double expectation = 0.0;
  double cvar = 0.0;
  double beta_at_update = 0.0;
};

// Binary min-heap ordered by (key, req_id) with an id -> position index so
// keys can be updated in O(log n).
class WaitingQueue {
 public:
  void push(const QueueEntry& e);
  void update(uint64_t req_id, double key);  // re-keys an existing entry
  std::optional<QueueEntry> pop_min();       // empty queue is a signal, not a fault
  bool contains(uint64_t req_id) const { return pos_.count(req_id) > 0; }
  size_t size() const { return heap_.size(); }
  bool empty() const { return heap_.empty(); }
  const QueueEntry& at(uint64_t req_id) const;
  QueueEntry& at(uint64_t req_id);
  const std::vector<QueueEntry>& entries() const { return heap_; }
  std::vector<QueueEntry>& entries() { return heap_; }  // pair with rebuild()
  void rebuild();              // restore heap order after external key edits
  bool validate() const;       // full-scan heap property + index consistency

 private:
  bool less(size_t a, size_t b) const;
  void sift_up(size_t i);
  void sift_down(size_t i);
  void place(size_t i);

  std::vector<QueueEntry> heap_;
  std::unordered_map<uint64_t, size_t> pos_;
};

// Policy wrapper owning the waiting queue. Unpredicted entries are keyed by
// max_tokens; predictions re-key to the policy's score; TIE rebuilds all
// predicted keys when beta has drifted past the threshold.
class Scheduler {
 public:
  Scheduler(Policy policy, ScoreConfig cfg) : policy_(policy), cfg_(cfg) {}

  void on_arrival(const Request& req);
  void on_prediction(uint64_t req_id, double expectation, double cvar);
  bool rebuild_if_drifted();               // re-keys all predicted entries
  std::optional<uint64_t> next_request();  // pops; triggers drift rebuild first
  bool waiting_on(uint64_t req_id) const { return queue_.contains(req_id); }
  size_t waiting() const { return queue_.size(); }
  double current_beta() const { return compute_beta(cfg_, queue_.size()); }
  const WaitingQueue& queue() const { return queue_; }
  Policy policy() const { return policy_; }

 private:
  Policy policy_;
  ScoreConfig cfg_;
  WaitingQueue queue_;
  std::multiset<double> betas_in_use_;  // beta_at_update of predicted entries
};

}  // namespace tie
