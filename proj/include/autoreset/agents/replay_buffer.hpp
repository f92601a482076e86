#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autoreset/nn/archive.hpp"
#include "autoreset/util/random.hpp"

namespace autoreset::agents {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Fixed-capacity FIFO ring of fixed-width real records, stored column by
/// column in flat arrays. Storage grows lazily up to capacity.
class RingColumns {
 public:
  RingColumns(std::size_t capacity, std::vector<int> widths);

  /// Reserve the slot for a new record (evicting the oldest when full).
  std::size_t push();

  double* field(std::size_t slot, std::size_t f) { return data_[f].data() + slot * widths_[f]; }
  const double* field(std::size_t slot, std::size_t f) const { return data_[f].data() + slot * widths_[f]; }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int width(std::size_t f) const { return widths_[f]; }

  /// Slot of the i-th oldest record.
  std::size_t slot_of(std::size_t i) const;

  /// Uniform slot among current contents; throws std::logic_error when empty.
  std::size_t sample_slot(Rng& rng) const;

  void save(nn::ArchiveWriter& out, const std::string& prefix) const;
  void load(const nn::ArchiveReader& in, const std::string& prefix);

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<int> widths_;
  std::vector<std::vector<double>> data_;
};

struct Transition {
  Vector state;
  Vector action;
  double reward = 0.0;
  Vector next_state;
  bool terminal = false;
};

struct TransitionBatch {
  Matrix states;       // state_dim x B
  Matrix actions;      // action_dim x B
  Vector rewards;      // B
  Matrix next_states;  // state_dim x B
  Vector terminals;    // B, 1.0 for irrecoverable entry
};

/// Uniform-sampling replay of 1-step transitions.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

  void store(const Transition& t);
  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return ring_.capacity(); }
  bool empty() const { return size() == 0; }

  /// i-th oldest stored transition.
  Transition at(std::size_t i) const;

  /// Throws std::logic_error when empty.
  TransitionBatch sample(std::size_t batch_size, Rng& rng) const;

  void save(nn::ArchiveWriter& out, const std::string& prefix) const { ring_.save(out, prefix); }
  void load(const nn::ArchiveReader& in, const std::string& prefix) { ring_.load(in, prefix); }

 private:
  Transition read(std::size_t slot) const;

  int state_dim_;
  int action_dim_;
  RingColumns ring_;
};

/// A reset-episode transition together with its n-step successor state.
struct NStepSegment {
  Vector state;
  Vector action;
  Vector next_state;
  Vector horizon_state;  // s_{t+n'}
  int horizon = 1;       // n', 1 <= n' <= n
};

struct SegmentBatch {
  Matrix states;
  Matrix actions;
  Matrix next_states;
  Matrix horizon_states;
  Eigen::VectorXi horizons;
};

class SegmentBuffer {
 public:
  SegmentBuffer(std::size_t capacity, int state_dim, int action_dim);

  void store(const NStepSegment& seg);
  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return ring_.capacity(); }
  bool empty() const { return size() == 0; }

  NStepSegment at(std::size_t i) const;
  SegmentBatch sample(std::size_t batch_size, Rng& rng) const;

  void save(nn::ArchiveWriter& out, const std::string& prefix) const { ring_.save(out, prefix); }
  void load(const nn::ArchiveReader& in, const std::string& prefix) { ring_.load(in, prefix); }

 private:
  NStepSegment read(std::size_t slot) const;

  int state_dim_;
  int action_dim_;
  RingColumns ring_;
};

/// FIFO store of observations (used for initial-state examples).
class StateBuffer {
 public:
  StateBuffer(std::size_t capacity, int state_dim);

  void store(const Vector& state);
  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return ring_.capacity(); }
  bool empty() const { return size() == 0; }

  Vector at(std::size_t i) const;
  Matrix sample(std::size_t batch_size, Rng& rng) const;

  void save(nn::ArchiveWriter& out, const std::string& prefix) const { ring_.save(out, prefix); }
  void load(const nn::ArchiveReader& in, const std::string& prefix) { ring_.load(in, prefix); }

 private:
  int state_dim_;
  RingColumns ring_;
};

/// Turns a stream of reset-episode steps into n-step segments, holding each
/// step back until its n-step successor is known or the episode ends.
class NStepAccumulator {
 public:
  explicit NStepAccumulator(int n) : n_(n) {}

  /// Record (s, a, s'). Returns the segments that became complete.
  std::vector<NStepSegment> push(const Vector& state, const Vector& action, const Vector& next_state);

  /// Episode ended: flush pending steps with truncated horizons ending at the last state.
  std::vector<NStepSegment> finish();

  std::size_t pending() const { return steps_.size(); }
  int horizon() const { return n_; }

 private:
  struct Step {
    Vector state;
    Vector action;
    Vector next_state;
  };
  int n_;
  std::vector<Step> steps_;
};

}  // namespace autoreset::agents
