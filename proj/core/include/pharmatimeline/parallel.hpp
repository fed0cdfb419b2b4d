#pragma once

#include <future>
#include <thread>
#include <vector>

namespace pharmatimeline {

// Applies fn (item -> std::vector<Out>) over contiguous chunks of items and
// concatenates the results in input order, so the output is identical to the
// sequential run whatever the worker count.
template <typename In, typename Fn>
auto parallel_flat_map(const std::vector<In>& items, Fn fn, unsigned workers = 0) {
  using Out = typename decltype(fn(items[0]))::value_type;
  std::vector<Out> out;
  if (workers == 0) workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;

  if (workers <= 1 || items.size() < workers * 4) {
    for (const In& item : items) {
      auto part = fn(item);
      out.insert(out.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
    return out;
  }

  const size_t chunk = (items.size() + workers - 1) / workers;
  std::vector<std::future<std::vector<Out>>> futures;
  for (size_t begin = 0; begin < items.size(); begin += chunk) {
    size_t end = std::min(items.size(), begin + chunk);
    futures.push_back(std::async(std::launch::async, [&items, &fn, begin, end] {
      std::vector<Out> part;
      for (size_t i = begin; i < end; ++i) {
        auto one = fn(items[i]);
        part.insert(part.end(), std::make_move_iterator(one.begin()),
                    std::make_move_iterator(one.end()));
      }
      return part;
    }));
  }
  for (auto& future : futures) {
    auto part = future.get();
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace pharmatimeline
