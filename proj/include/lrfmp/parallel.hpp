#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>

namespace lrfmp {

// Worker cap for parallel_for; 0 selects the hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs body(i) for i in [0, n) over contiguous chunks. Each index must write only its own output.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Seed of the named sub-stream of a run seed.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

// splitmix64-driven generator with portable uniform and normal draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    double uniform();  // [0, 1)
    double normal();

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lrfmp
