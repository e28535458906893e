#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pracsim/config.h"

namespace pracsim {

// Worker count from PRACSIM_WORKERS, else the hardware concurrency.
unsigned worker_count();

// Runs f(0..n-1) on up to `workers` threads and rethrows the first failure.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < n;) {
          try {
            f(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

struct CampaignResult {
  // Sorted by SimReport::key().
  std::vector<SimReport> reports;
};

// Benign runs for every (mix, mechanism, n_rh); with attack.kind = dos,
// also attacker-present runs (attacker on core 0) and matching runs with
// core 0 idle, for the attack mechanisms at n_rh <= attack.max_n_rh.
// Alone IPCs come from single-core runs without mitigation.
CampaignResult run_campaign(const RunConfig& cfg, unsigned workers);

// Mix names of the reference and attacker-present variants.
std::string idle_variant(const std::string& mix);
std::string attack_variant(const std::string& mix);

}  // namespace pracsim
