#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fbim {

std::uint64_t splitmix64(std::uint64_t x);

// Stream identifier from a (seed, trajectory, step, purpose) tuple.
std::uint64_t stream_id(std::uint64_t seed, std::uint64_t traj, std::uint64_t step,
                        std::uint64_t purpose);

enum class Purpose : std::uint64_t {
  Config = 1,
  WaveNoise = 2,
  NearNoise = 3,
  Rfd = 4,
  Retry = 5,
  Test = 6,
};

// mt19937_64 seeded from a hashed id; normals by Box-Muller so that the
// sequence does not depend on the standard library implementation.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t id);
  GaussianStream(std::uint64_t seed, std::uint64_t traj, std::uint64_t step, Purpose p);

  double uniform();  // in (0, 1)
  double normal();
  void fill_normal(Eigen::Ref<Eigen::VectorXd> v);
  Eigen::VectorXd normal_vector(Eigen::Index n);
  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fbim
