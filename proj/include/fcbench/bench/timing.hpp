#pragma once

#include <array>
#include <chrono>
#include <cstdint>

namespace fcb::bench {

enum BuildPhase : std::size_t { filter_inserts, model_training, threshold_finding, build_reverse_map_updates };
enum QueryPhase : std::size_t { filter_query, score_inference, query_reverse_map_updates };

inline std::uint64_t now_ns() noexcept {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch()).count());
}

// Contiguous timestamps: each mark charges the time since the previous mark
// to one category, so consecutive phases partition the timed span.
template <std::size_t N>
class Timeline {
 public:
  void start() noexcept { last_ = now_ns(); }
  void mark(std::size_t category) noexcept {
    const auto t = now_ns();
    ns_[category] += t - last_;
    last_ = t;
  }
  void add(std::size_t category, std::uint64_t ns) noexcept { ns_[category] += ns; }
  const std::array<std::uint64_t, N>& totals() const noexcept { return ns_; }

 private:
  std::array<std::uint64_t, N> ns_{};
  std::uint64_t last_ = 0;
};

using BuildTimeline = Timeline<4>;
using QueryTimeline = Timeline<3>;

}  // namespace fcb::bench
