// Copyright 2026 The strfew Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace strfew {

/// Produces items 0, 1, 2, ... in order. `claim(i)` runs serially in index
/// order (e.g. drawing from a stateful sampler); `build(i, claimed)` may run
/// on worker threads. With zero workers everything runs on the caller.
template <typename Claim, typename Item>
class Prefetcher {
 public:
  Prefetcher(int workers, int depth, std::function<Claim(std::int64_t)> claim,
             std::function<Item(std::int64_t, Claim)> build)
      : depth_(depth < 1 ? 1 : depth), claim_(std::move(claim)), build_(std::move(build)) {
    for (int w = 0; w < workers; ++w) threads_.emplace_back([this] { work(); });
  }

  ~Prefetcher() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  Prefetcher(const Prefetcher&) = delete;
  Prefetcher& operator=(const Prefetcher&) = delete;

  Item next() {
    const std::int64_t i = consumed_;
    if (threads_.empty()) {
      ++consumed_;
      return build_(i, claim_(i));
    }
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return ready_.count(i) > 0; });
    Item item = std::move(ready_.at(i));
    ready_.erase(i);
    ++consumed_;
    lock.unlock();
    cv_.notify_all();
    return item;
  }

 private:
  void work() {
    while (true) {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [&] { return stop_ || next_claim_ < consumed_ + depth_; });
      if (stop_) return;
      const std::int64_t i = next_claim_++;
      Claim c = claim_(i);
      lock.unlock();
      Item item = build_(i, std::move(c));
      lock.lock();
      ready_.emplace(i, std::move(item));
      lock.unlock();
      cv_.notify_all();
    }
  }

  const std::int64_t depth_;
  std::function<Claim(std::int64_t)> claim_;
  std::function<Item(std::int64_t, Claim)> build_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::int64_t, Item> ready_;
  std::int64_t next_claim_ = 0;
  std::int64_t consumed_ = 0;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace strfew
