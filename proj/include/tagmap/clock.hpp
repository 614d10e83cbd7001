#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

namespace tagmap {

// Seconds-based clock so acquisition pacing and backoff can run against
// simulated time in tests.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
  virtual void sleep_until(double t) = 0;
  void sleep_for(double seconds) { sleep_until(now() + seconds); }
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}

  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }
  void sleep_until(double t) override {
    const double dt = t - now();
    if (dt > 0) std::this_thread::sleep_for(std::chrono::duration<double>(dt));
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

// Sleeping advances the shared time monotonically; never blocks.
class SimulatedClock final : public Clock {
 public:
  double now() const override { return now_.load(); }
  void sleep_until(double t) override {
    double cur = now_.load();
    while (cur < t && !now_.compare_exchange_weak(cur, t)) {
    }
  }

 private:
  std::atomic<double> now_{0.0};
};

// Token bucket shared by all workers talking to one provider.
class RateLimiter {
 public:
  RateLimiter(Clock& clock, double requests_per_second, double burst = 1.0)
      : clock_(clock), rate_(requests_per_second), burst_(burst), tokens_(burst) {}

  // Blocks (on the clock) until a token is available, then consumes it.
  void acquire() {
    if (rate_ <= 0.0) return;
    double wake = 0.0;
    {
      std::lock_guard lock(mutex_);
      const double now = clock_.now();
      if (!started_) {
        last_ = now;
        started_ = true;
      }
      // Time at which the bucket holds one more token than is reserved.
      tokens_ = std::min(burst_, tokens_ + (now - last_) * rate_);
      last_ = now;
      tokens_ -= 1.0;
      wake = tokens_ >= 0.0 ? now : now + (-tokens_) / rate_;
    }
    clock_.sleep_until(wake);
  }

  double rate() const noexcept { return rate_; }

 private:
  Clock& clock_;
  double rate_;
  double burst_;
  double tokens_;
  double last_ = 0.0;
  bool started_ = false;
  std::mutex mutex_;
};

}  // namespace tagmap
