#include "tiesched/sched.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tie {

double compute_beta(const ScoreConfig& cfg, size_t queue_len) {
  if (cfg.beta_mode == BetaMode::Fixed) {
    if (cfg.beta_fixed < 0.0) throw std::domain_error("compute_beta: beta_fixed must be >= 0");
    return cfg.beta_fixed;
  }
  if (!(cfg.beta_max >= 0.0) || !(cfg.q_sat > 0.0))
    throw std::domain_error("compute_beta: beta_max must be >= 0 and q_sat > 0");
  return cfg.beta_max * std::min(1.0, (double)queue_len / cfg.q_sat);
}

double compute_score(double expectation, double cvar, double beta) {
  if (!std::isfinite(expectation) || !std::isfinite(cvar) || !std::isfinite(beta))
    throw std::domain_error("compute_score: arguments must be finite");
  if (!(expectation > 0.0)) throw std::domain_error("compute_score: expectation must be > 0");
  if (cvar < expectation)
    throw std::invalid_argument("compute_score: cvar below expectation violates the invariant");
  return expectation + beta * cvar;
}

bool WaitingQueue::less(size_t a, size_t b) const {
  if (heap_[a].key != heap_[b].key) return heap_[a].key < heap_[b].key;
  return heap_[a].req_id < heap_[b].req_id;
}

void WaitingQueue::place(size_t i) { pos_[heap_[i].req_id] = i; }

void WaitingQueue::sift_up(size_t i) {
  while (i > 0) {
    size_t parent = (i - 1) / 2;
    if (!less(i, parent)) break;
    std::swap(heap_[i], heap_[parent]);
    place(i);
    place(parent);
    i = parent;
  }
}

void WaitingQueue::sift_down(size_t i) {
  for (;;) {
    size_t l = 2 * i + 1, r = l + 1, smallest = i;
    if (l < heap_.size() && less(l, smallest)) smallest = l;
    if (r < heap_.size() && less(r, smallest)) smallest = r;
    if (smallest == i) break;
    std::swap(heap_[i], heap_[smallest]);
    place(i);
    place(smallest);
    i = smallest;
  }
}

void WaitingQueue::push(const QueueEntry& e) {
  if (!std::isfinite(e.key)) throw std::domain_error("WaitingQueue::push: key must be finite");
  if (pos_.count(e.req_id))
    throw std::invalid_argument("WaitingQueue::push: id " + std::to_string(e.req_id) +
                                " already queued");
  heap_.push_back(e);
  place(heap_.size() - 1);
  sift_up(heap_.size() - 1);
}

void WaitingQueue::update(uint64_t req_id, double key) {
  if (!std::isfinite(key)) throw std::domain_error("WaitingQueue::update: key must be finite");
  auto it = pos_.find(req_id);
  if (it == pos_.end())
    throw std::invalid_argument("WaitingQueue::update: id " + std::to_string(req_id) +
                                " not queued");
  size_t i = it->second;
  heap_[i].key = key;
  sift_up(i);
  sift_down(pos_[req_id]);
}

std::optional<QueueEntry> WaitingQueue::pop_min() {
  if (heap_.empty()) return std::nullopt;
  QueueEntry top = heap_[0];
  pos_.erase(top.req_id);
  if (heap_.size() > 1) {
    heap_[0] = heap_.back();
    heap_.pop_back();
    place(0);
    sift_down(0);
  } else {
    heap_.pop_back();
  }
  return top;
}

const QueueEntry& WaitingQueue::at(uint64_t req_id) const {
  auto it = pos_.find(req_id);
  if (it == pos_.end())
    throw std::invalid_argument("WaitingQueue::at: id " + std::to_string(req_id) + " not queued");
  return heap_[it->second];
}

QueueEntry& WaitingQueue::at(uint64_t req_id) {
  auto it = pos_.find(req_id);
  if (it == pos_.end())
    throw std::invalid_argument("WaitingQueue::at: id " + std::to_string(req_id) + " not queued");
  return heap_[it->second];
}

void WaitingQueue::rebuild() {
  if (heap_.size() > 1)
    for (size_t i = heap_.size() / 2; i-- > 0;) sift_down(i);
  for (size_t i = 0; i < heap_.size(); ++i) place(i);
}

bool WaitingQueue::validate() const {
  if (pos_.size() != heap_.size()) return false;
  for (size_t i = 1; i < heap_.size(); ++i)
    if (less(i, (i - 1) / 2)) return false;
  for (const auto& [id, i] : pos_)
    if (i >= heap_.size() || heap_[i].req_id != id) return false;
  return true;
}

void Scheduler::on_arrival(const Request& req) {
  QueueEntry e;
  e.req_id = req.id;
  // FCFS degenerates to a FIFO keyed by arrival; size-based policies key
  // unpredicted entries by their token budget
  e.key = policy_ == Policy::FCFS ? req.arrival_s : (double)req.max_tokens;
  queue_.push(e);
}

void Scheduler::on_prediction(uint64_t req_id, double expectation, double cvar) {
  if (!queue_.contains(req_id))
    throw std::invalid_argument("Scheduler::on_prediction: id " + std::to_string(req_id) +
                                " not waiting");
  if (policy_ == Policy::FCFS) return;  // arrival order is the schedule
  double beta = policy_ == Policy::SEPT ? 0.0 : compute_beta(cfg_, queue_.size());
  QueueEntry& e = queue_.at(req_id);
  if (e.predicted)
    throw std::invalid_argument("Scheduler::on_prediction: id " + std::to_string(req_id) +
                                " already predicted");
  e.predicted = true;
  e.expectation = expectation;
  e.cvar = cvar;
  e.beta_at_update = beta;
  betas_in_use_.insert(beta);
  queue_.update(req_id, compute_score(expectation, cvar, beta));
}

bool Scheduler::rebuild_if_drifted() {
  if (policy_ != Policy::TIE || betas_in_use_.empty()) return false;
  double now = compute_beta(cfg_, queue_.size());
  double worst = std::max(std::fabs(now - *betas_in_use_.begin()),
                          std::fabs(now - *betas_in_use_.rbegin()));
  if (worst <= cfg_.rebuild_threshold) return false;
  betas_in_use_.clear();
  for (QueueEntry& e : queue_.entries()) {
    if (!e.predicted) continue;
    e.beta_at_update = now;
    e.key = compute_score(e.expectation, e.cvar, now);
    betas_in_use_.insert(now);
  }
  queue_.rebuild();
  return true;
}

std::optional<uint64_t> Scheduler::next_request() {
  rebuild_if_drifted();
  auto e = queue_.pop_min();
  if (!e) return std::nullopt;
  if (e->predicted) betas_in_use_.erase(betas_in_use_.find(e->beta_at_update));
  return e->req_id;
}

}  // namespace tie
