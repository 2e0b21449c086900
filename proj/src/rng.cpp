#include "fbim/rng.hpp"

#include <cmath>
#include <numbers>

namespace fbim {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_id(std::uint64_t seed, std::uint64_t traj, std::uint64_t step,
                        std::uint64_t purpose) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ traj);
  h = splitmix64(h ^ (step * 0x632be59bd9b4e019ULL));
  return splitmix64(h ^ (purpose << 56));
}

GaussianStream::GaussianStream(std::uint64_t id) : eng_(splitmix64(id)) {}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t traj, std::uint64_t step,
                               Purpose p)
    : GaussianStream(stream_id(seed, traj, step, static_cast<std::uint64_t>(p))) {}

double GaussianStream::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

void GaussianStream::fill_normal(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal();
}

Eigen::VectorXd GaussianStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  fill_normal(v);
  return v;
}

}  // namespace fbim
