#pragma once

#include <functional>
#include <vector>

#include "advest/types.hpp"

namespace advest {

struct SplitResult {
  std::vector<char> keep_mask;
  std::vector<Transition> carry_tail;
};

/// Keep/discard decision for one collected segment. When the segment's final
/// step is terminal everything is kept and nothing carried. Otherwise the
/// trailing non-terminated chunk keeps only positions t <= partial_coef
/// (1-based) and the rest is carried verbatim into the next segment; episodes
/// fully contained in the segment are always kept (their truncation bias is
/// zero). Throws when partial_coef is outside [1, T].
SplitResult split_partial(const Segment& segment, int partial_coef);

/// Per-actor accumulation of fixed-length segments. Each slot is owned by one
/// rollout worker during collection and handed over whole via take_segment.
class RolloutBuffer {
 public:
  RolloutBuffer(int n_actors, int segment_length);

  int n_actors() const { return static_cast<int>(slots_.size()); }
  int segment_length() const { return capacity_; }
  int size(int actor_id) const;
  int carried_count(int actor_id) const;
  bool full(int actor_id) const { return size(actor_id) == capacity_; }

  /// Appends one transition; overflowing past the segment length signals a
  /// harness bug and throws.
  void push(int actor_id, Transition transition);

  /// Seeds the next segment with the discarded tail of the previous one.
  /// The actor's in-progress segment must be empty.
  void carryover(int actor_id, std::vector<Transition> carry_tail);

  /// Mutation hook for refreshing value predictions of pending (carried)
  /// transitions before the next advantage computation.
  void for_each_pending(int actor_id,
                        const std::function<void(Transition&)>& fn);

  /// In-progress transitions of one actor (carried tail plus any pushes).
  const std::vector<Transition>& pending(int actor_id) const {
    return slot(actor_id);
  }

  /// Hands the completed segment to the trainer and clears the slot.
  Segment take_segment(int actor_id, double bootstrap_value);

 private:
  const std::vector<Transition>& slot(int actor_id) const;
  int capacity_;
  struct Slot {
    std::vector<Transition> items;
    int carried = 0;
  };
  std::vector<Slot> slots_;
};

}  // namespace advest
