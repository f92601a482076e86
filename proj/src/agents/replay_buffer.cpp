#include "autoreset/agents/replay_buffer.hpp"

#include <algorithm>
#include <stdexcept>

namespace autoreset::agents {

RingColumns::RingColumns(std::size_t capacity, std::vector<int> widths)
    : capacity_(capacity), widths_(std::move(widths)), data_(widths_.size()) {
  if (capacity_ == 0) throw std::invalid_argument("ring buffer: capacity must be positive");
}

std::size_t RingColumns::push() {
  const std::size_t slot = next_;
  if (size_ < capacity_) {
    for (std::size_t f = 0; f < widths_.size(); ++f) {
      data_[f].resize((slot + 1) * static_cast<std::size_t>(widths_[f]));
    }
    ++size_;
  }
  next_ = (next_ + 1) % capacity_;
  return slot;
}

std::size_t RingColumns::slot_of(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ring buffer: index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : next_;
  return (oldest + i) % capacity_;
}

std::size_t RingColumns::sample_slot(Rng& rng) const {
  if (size_ == 0) throw std::logic_error("ring buffer: cannot sample from an empty buffer");
  return rng.index(size_);
}

void RingColumns::save(nn::ArchiveWriter& out, const std::string& prefix) const {
  out.add_meta(prefix + ".size", std::to_string(size_));
  out.add_meta(prefix + ".next", std::to_string(next_));
  out.add_meta(prefix + ".capacity", std::to_string(capacity_));
  for (std::size_t f = 0; f < data_.size(); ++f) {
    out.add_array(prefix + ".f" + std::to_string(f), data_[f]);
  }
}

void RingColumns::load(const nn::ArchiveReader& in, const std::string& prefix) {
  const std::size_t cap = std::stoull(in.meta(prefix + ".capacity"));
  const std::size_t size = std::stoull(in.meta(prefix + ".size"));
  const std::size_t next = std::stoull(in.meta(prefix + ".next"));
  if (cap != capacity_) throw nn::ArchiveError("ring buffer '" + prefix + "': capacity mismatch");
  if (size > cap || next >= cap || (size < cap && next != size)) {
    throw nn::ArchiveError("ring buffer '" + prefix + "': inconsistent cursor");
  }
  std::vector<std::vector<double>> data(widths_.size());
  for (std::size_t f = 0; f < widths_.size(); ++f) {
    data[f] = in.array(prefix + ".f" + std::to_string(f), size * static_cast<std::size_t>(widths_[f]));
  }
  size_ = size;
  next_ = next;
  data_ = std::move(data);
}

namespace {

void write_vec(double* dst, const Vector& v, int width, const char* what) {
  if (v.size() != width) throw std::invalid_argument(std::string("replay buffer: ") + what + " dimension mismatch");
  std::copy(v.data(), v.data() + width, dst);
}

Vector read_vec(const double* src, int width) { return Eigen::Map<const Vector>(src, width); }

}  // namespace

// --------------------------------------------------------------- ReplayBuffer

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim, int action_dim)
    : state_dim_(state_dim), action_dim_(action_dim), ring_(capacity, {state_dim, action_dim, 1, state_dim, 1}) {}

void ReplayBuffer::store(const Transition& t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ || t.action.size() != action_dim_) {
    throw std::invalid_argument("replay buffer: transition dimension mismatch");
  }
  const std::size_t slot = ring_.push();
  write_vec(ring_.field(slot, 0), t.state, state_dim_, "state");
  write_vec(ring_.field(slot, 1), t.action, action_dim_, "action");
  *ring_.field(slot, 2) = t.reward;
  write_vec(ring_.field(slot, 3), t.next_state, state_dim_, "next state");
  *ring_.field(slot, 4) = t.terminal ? 1.0 : 0.0;
}

Transition ReplayBuffer::read(std::size_t slot) const {
  return Transition{read_vec(ring_.field(slot, 0), state_dim_), read_vec(ring_.field(slot, 1), action_dim_),
                    *ring_.field(slot, 2), read_vec(ring_.field(slot, 3), state_dim_), *ring_.field(slot, 4) != 0.0};
}

Transition ReplayBuffer::at(std::size_t i) const { return read(ring_.slot_of(i)); }

TransitionBatch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (empty()) throw std::logic_error("replay buffer: cannot sample from an empty buffer");
  const auto b = static_cast<Eigen::Index>(batch_size);
  TransitionBatch batch{Matrix(state_dim_, b), Matrix(action_dim_, b), Vector(b), Matrix(state_dim_, b), Vector(b)};
  for (Eigen::Index j = 0; j < b; ++j) {
    const std::size_t slot = ring_.sample_slot(rng);
    batch.states.col(j) = read_vec(ring_.field(slot, 0), state_dim_);
    batch.actions.col(j) = read_vec(ring_.field(slot, 1), action_dim_);
    batch.rewards(j) = *ring_.field(slot, 2);
    batch.next_states.col(j) = read_vec(ring_.field(slot, 3), state_dim_);
    batch.terminals(j) = *ring_.field(slot, 4);
  }
  return batch;
}

// -------------------------------------------------------------- SegmentBuffer

SegmentBuffer::SegmentBuffer(std::size_t capacity, int state_dim, int action_dim)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      ring_(capacity, {state_dim, action_dim, state_dim, state_dim, 1}) {}

void SegmentBuffer::store(const NStepSegment& seg) {
  if (seg.horizon < 1) throw std::invalid_argument("segment buffer: horizon must be >= 1");
  const std::size_t slot = ring_.push();
  write_vec(ring_.field(slot, 0), seg.state, state_dim_, "state");
  write_vec(ring_.field(slot, 1), seg.action, action_dim_, "action");
  write_vec(ring_.field(slot, 2), seg.next_state, state_dim_, "next state");
  write_vec(ring_.field(slot, 3), seg.horizon_state, state_dim_, "horizon state");
  *ring_.field(slot, 4) = static_cast<double>(seg.horizon);
}

NStepSegment SegmentBuffer::read(std::size_t slot) const {
  return NStepSegment{read_vec(ring_.field(slot, 0), state_dim_), read_vec(ring_.field(slot, 1), action_dim_),
                      read_vec(ring_.field(slot, 2), state_dim_), read_vec(ring_.field(slot, 3), state_dim_),
                      static_cast<int>(*ring_.field(slot, 4))};
}

NStepSegment SegmentBuffer::at(std::size_t i) const { return read(ring_.slot_of(i)); }

SegmentBatch SegmentBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (empty()) throw std::logic_error("segment buffer: cannot sample from an empty buffer");
  const auto b = static_cast<Eigen::Index>(batch_size);
  SegmentBatch batch{Matrix(state_dim_, b), Matrix(action_dim_, b), Matrix(state_dim_, b), Matrix(state_dim_, b),
                     Eigen::VectorXi(b)};
  for (Eigen::Index j = 0; j < b; ++j) {
    const std::size_t slot = ring_.sample_slot(rng);
    batch.states.col(j) = read_vec(ring_.field(slot, 0), state_dim_);
    batch.actions.col(j) = read_vec(ring_.field(slot, 1), action_dim_);
    batch.next_states.col(j) = read_vec(ring_.field(slot, 2), state_dim_);
    batch.horizon_states.col(j) = read_vec(ring_.field(slot, 3), state_dim_);
    batch.horizons(j) = static_cast<int>(*ring_.field(slot, 4));
  }
  return batch;
}

// ---------------------------------------------------------------- StateBuffer

StateBuffer::StateBuffer(std::size_t capacity, int state_dim) : state_dim_(state_dim), ring_(capacity, {state_dim}) {}

void StateBuffer::store(const Vector& state) {
  const std::size_t slot = ring_.push();
  write_vec(ring_.field(slot, 0), state, state_dim_, "state");
}

Vector StateBuffer::at(std::size_t i) const { return read_vec(ring_.field(ring_.slot_of(i), 0), state_dim_); }

Matrix StateBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (empty()) throw std::logic_error("state buffer: cannot sample from an empty buffer");
  Matrix out(state_dim_, static_cast<Eigen::Index>(batch_size));
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j) = read_vec(ring_.field(ring_.sample_slot(rng), 0), state_dim_);
  }
  return out;
}

// ------------------------------------------------------------ NStepAccumulator

std::vector<NStepSegment> NStepAccumulator::push(const Vector& state, const Vector& action, const Vector& next_state) {
  steps_.push_back({state, action, next_state});
  std::vector<NStepSegment> done;
  if (static_cast<int>(steps_.size()) == n_) {
    const Step& oldest = steps_.front();
    done.push_back({oldest.state, oldest.action, oldest.next_state, next_state, n_});
    steps_.erase(steps_.begin());
  }
  return done;
}

std::vector<NStepSegment> NStepAccumulator::finish() {
  std::vector<NStepSegment> done;
  if (steps_.empty()) return done;
  const Vector last = steps_.back().next_state;
  const int m = static_cast<int>(steps_.size());
  for (int k = 0; k < m; ++k) {
    const Step& s = steps_[static_cast<std::size_t>(k)];
    done.push_back({s.state, s.action, s.next_state, last, m - k});
  }
  steps_.clear();
  return done;
}

}  // namespace autoreset::agents
