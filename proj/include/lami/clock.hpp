#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <thread>

namespace lami {

// Session time source in seconds. The real clock sleeps; the virtual clock
// advances instantly and lets a listener observe the time it skips over
// (used to tick the expresser deterministically).
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
  virtual void sleep_for(double seconds) = 0;
};

class RealClock final : public Clock {
 public:
  RealClock() : origin_(std::chrono::steady_clock::now()) {}

  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }

  void sleep_for(double seconds) override {
    if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

class VirtualClock final : public Clock {
 public:
  using AdvanceListener = std::function<void(double from, double to)>;

  double now() const override {
    std::lock_guard lock(mutex_);
    return now_;
  }

  void sleep_for(double seconds) override {
    if (seconds <= 0) return;
    double from = 0;
    double to = 0;
    AdvanceListener listener;
    {
      std::lock_guard lock(mutex_);
      from = now_;
      now_ += seconds;
      to = now_;
      listener = listener_;
    }
    if (listener) listener(from, to);
  }

  void set_listener(AdvanceListener listener) {
    std::lock_guard lock(mutex_);
    listener_ = std::move(listener);
  }

 private:
  mutable std::mutex mutex_;
  double now_ = 0.0;
  AdvanceListener listener_;
};

}  // namespace lami
