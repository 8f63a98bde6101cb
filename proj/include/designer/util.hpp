#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace designer {

/// Thread-safe named counters for non-fatal anomalies.
class Warnings {
 public:
  void add(const std::string& key, std::size_t n = 1) {
    std::lock_guard lock(mu_);
    counts_[key] += n;
  }
  std::map<std::string, std::size_t> snapshot() const {
    std::lock_guard lock(mu_);
    return counts_;
  }
  std::size_t count(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::size_t> counts_;
};

inline void warn(Warnings* w, const std::string& key) {
  if (w) w->add(key);
}

/// Uniform double in [0, 1) from the top 53 bits; avoids the
/// implementation-defined std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection; n >= 1.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

/// Runs work(i) for i in [0, n) on up to `workers` threads and calls
/// commit(i, result) on the calling thread strictly in index order. If work
/// or commit throws, no further items are started, in-flight work is
/// drained, and the first exception is rethrown after every earlier index
/// has been committed.
template <typename R>
void ordered_parallel_map(std::size_t n, int workers, const std::function<R(std::size_t)>& work,
                          const std::function<void(std::size_t, R&&)>& commit) {
  if (n == 0) return;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) commit(i, work(i));
    return;
  }
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::optional<R>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::size_t next = 0;
  bool stop = false;

  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (stop || next >= n) return;
        i = next++;
      }
      std::optional<R> r;
      std::exception_ptr err;
      try {
        r.emplace(work(i));
      } catch (...) {
        err = std::current_exception();
      }
      {
        std::lock_guard lock(mu);
        if (err) {
          errors[i] = err;
        } else {
          results[i] = std::move(r);
        }
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) threads.emplace_back(worker);

  std::exception_ptr failure;
  for (std::size_t i = 0; i < n && !failure; ++i) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return results[i].has_value() || errors[i] != nullptr; });
    if (errors[i]) {
      failure = errors[i];
      stop = true;
      break;
    }
    R value = std::move(*results[i]);
    results[i].reset();
    lock.unlock();
    try {
      commit(i, std::move(value));
    } catch (...) {
      failure = std::current_exception();
      std::lock_guard relock(mu);
      stop = true;
    }
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace designer
