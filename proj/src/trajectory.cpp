#include "advest/trajectory.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace advest {

SplitResult split_partial(const Segment& segment, int partial_coef) {
  const int n = segment.length();
  if (partial_coef < 1 || partial_coef > n)
    throw std::invalid_argument(
        "partial_coef=" + std::to_string(partial_coef) +
        " outside [1, T] for segment length T=" + std::to_string(n));

  SplitResult out;
  out.keep_mask.assign(static_cast<std::size_t>(n), 0);

  int last_done = -1;  // 0-based index of the last terminal step, if any
  for (int j = 0; j < n; ++j)
    if (segment.transitions[j].done) last_done = j;

  if (last_done == n - 1) {
    std::fill(out.keep_mask.begin(), out.keep_mask.end(), 1);
    return out;
  }

  for (int j = 0; j < n; ++j)
    out.keep_mask[static_cast<std::size_t>(j)] =
        (j <= last_done || j + 1 <= partial_coef) ? 1 : 0;

  const int carry_from = std::max(partial_coef, last_done + 1);
  out.carry_tail.assign(segment.transitions.begin() + carry_from,
                        segment.transitions.end());
  return out;
}

RolloutBuffer::RolloutBuffer(int n_actors, int segment_length)
    : capacity_(segment_length) {
  if (n_actors < 1) throw std::invalid_argument("need at least one actor");
  if (segment_length < 1)
    throw std::invalid_argument("segment length must be positive");
  slots_.resize(static_cast<std::size_t>(n_actors));
}

const std::vector<Transition>& RolloutBuffer::slot(int actor_id) const {
  if (actor_id < 0 || actor_id >= n_actors())
    throw std::out_of_range("actor_id " + std::to_string(actor_id) +
                            " outside [0, " + std::to_string(n_actors()) +
                            ")");
  return slots_[static_cast<std::size_t>(actor_id)].items;
}

int RolloutBuffer::size(int actor_id) const {
  return static_cast<int>(slot(actor_id).size());
}

int RolloutBuffer::carried_count(int actor_id) const {
  slot(actor_id);  // bounds check
  return slots_[static_cast<std::size_t>(actor_id)].carried;
}

void RolloutBuffer::push(int actor_id, Transition transition) {
  slot(actor_id);
  Slot& s = slots_[static_cast<std::size_t>(actor_id)];
  if (static_cast<int>(s.items.size()) >= capacity_)
    throw std::runtime_error(
        "rollout buffer overflow for actor " + std::to_string(actor_id) +
        ": pushed past segment length " + std::to_string(capacity_) +
        " without finalize (harness bug)");
  s.items.push_back(std::move(transition));
}

void RolloutBuffer::carryover(int actor_id,
                              std::vector<Transition> carry_tail) {
  slot(actor_id);
  Slot& s = slots_[static_cast<std::size_t>(actor_id)];
  if (!s.items.empty())
    throw std::runtime_error(
        "carryover into a non-empty in-progress segment for actor " +
        std::to_string(actor_id) + " (harness bug)");
  if (static_cast<int>(carry_tail.size()) >= capacity_)
    throw std::runtime_error("carry tail of " +
                             std::to_string(carry_tail.size()) +
                             " transitions does not fit a segment of length " +
                             std::to_string(capacity_));
  s.carried = static_cast<int>(carry_tail.size());
  s.items = std::move(carry_tail);
}

void RolloutBuffer::for_each_pending(
    int actor_id, const std::function<void(Transition&)>& fn) {
  slot(actor_id);
  for (Transition& t : slots_[static_cast<std::size_t>(actor_id)].items)
    fn(t);
}

Segment RolloutBuffer::take_segment(int actor_id, double bootstrap_value) {
  slot(actor_id);
  Slot& s = slots_[static_cast<std::size_t>(actor_id)];
  if (static_cast<int>(s.items.size()) != capacity_)
    throw std::runtime_error(
        "take_segment on a partially filled slot (" +
        std::to_string(s.items.size()) + " of " + std::to_string(capacity_) +
        ") for actor " + std::to_string(actor_id));
  Segment seg;
  seg.transitions = std::move(s.items);
  seg.carried_count = s.carried;
  seg.actor_id = actor_id;
  seg.bootstrap_value = seg.transitions.back().done ? 0.0 : bootstrap_value;
  s.items.clear();
  s.carried = 0;
  return seg;
}

}  // namespace advest
