#include "mdcompat/rng.hpp"

#include <cmath>

#include "mdcompat/error.hpp"

namespace mdcompat {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv_bytes(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 seeded_engine(const SeedSpec& seed) {
  std::uint64_t state = stream_key(seed);
  std::vector<std::uint32_t> words;
  words.reserve(8);
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t v = splitmix64(state);
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

SeedSpec SeedSpec::child(std::string label) const {
  SeedSpec out = *this;
  out.path.push_back(std::move(label));
  return out;
}

std::string SeedSpec::path_string() const {
  std::string out;
  for (const auto& label : path) {
    if (!out.empty()) out += '/';
    out += label;
  }
  return out;
}

std::uint64_t stream_key(const SeedSpec& seed) {
  std::uint64_t h = kFnvOffset;
  h = fnv_bytes(h, &seed.root_seed, sizeof(seed.root_seed));
  for (const auto& label : seed.path) {
    // Length prefix keeps ("ab","c") distinct from ("a","bc").
    const std::uint64_t len = label.size();
    h = fnv_bytes(h, &len, sizeof(len));
    h = fnv_bytes(h, label.data(), label.size());
  }
  std::uint64_t state = h;
  return splitmix64(state);
}

Stream::Stream(SeedSpec seed)
    : seed_(std::move(seed)), engine_(seeded_engine(seed_)), uniform_(0.0, 1.0) {}

double Stream::uniform() { return uniform_(engine_); }

double Stream::normal() { return normal_(engine_); }

double Stream::chi_squared(double dof) {
  if (!(dof > 0.0)) throw ArgumentError("chi-squared degrees of freedom must be positive");
  std::chi_squared_distribution<double> dist(dof);
  return dist(engine_);
}

Index Stream::uniform_index(Index n) {
  if (n <= 0) throw ArgumentError("uniform_index requires n > 0");
  std::uniform_int_distribution<Index> dist(0, n - 1);
  return dist(engine_);
}

MatrixXd sample_bivariate_normal(Index n, double rho, Stream& rng) {
  if (!(std::abs(rho) <= 1.0)) throw ArgumentError("correlation must lie in [-1, 1]");
  if (n < 0) throw ArgumentError("sample size must be non-negative");
  const double l21 = rho;
  const double l22 = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  MatrixXd out(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    out(i, 0) = z1;
    out(i, 1) = l21 * z1 + l22 * z2;
  }
  return out;
}

MvnSampler::MvnSampler(VectorXd mean, const MatrixXd& cov) : mean_(std::move(mean)) {
  const Index p = mean_.size();
  if (cov.rows() != p || cov.cols() != p) throw ArgumentError("covariance shape does not match mean");
  if (!cov.allFinite()) throw NumericError("covariance has non-finite entries");
  const MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::LDLT<MatrixXd> ldlt(sym);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError("covariance factorization failed; refit the model with a ridge penalty");
  }
  VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, sym.diagonal().cwiseAbs().maxCoeff());
  for (Index i = 0; i < p; ++i) {
    if (d(i) < -1e-10 * scale) {
      throw NumericError("covariance is not positive semidefinite; refit the model with a ridge penalty");
    }
    d(i) = std::sqrt(std::max(0.0, d(i)));
  }
  // sym = P^T L D L^T P, so P^T L sqrt(D) is a square-root factor.
  MatrixXd l = ldlt.matrixL();
  MatrixXd ld = l * d.asDiagonal();
  factor_ = ldlt.transpositionsP().transpose() * ld;
}

VectorXd MvnSampler::operator()(Stream& rng) const {
  VectorXd z(mean_.size());
  for (Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean_ + factor_ * z;
}

VectorXd sample_mvn(const VectorXd& mean, const MatrixXd& cov, Stream& rng) {
  return MvnSampler(mean, cov)(rng);
}

}  // namespace mdcompat
