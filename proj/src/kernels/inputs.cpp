#include "squire/kernels/inputs.hpp"

#include <algorithm>
#include <cmath>

namespace squire {

namespace {
constexpr char kBases[] = "ACGT";

char other_base(Rng& rng, char b) {
  char c = b;
  while (c == b) c = kBases[rng() % 4];
  return c;
}
}  // namespace

std::size_t draw_size(Rng& rng, std::size_t mean, std::size_t lo, std::size_t hi) {
  std::normal_distribution<double> d(static_cast<double>(mean), static_cast<double>(mean) / 4.0);
  const double v = std::round(d(rng));
  return std::clamp(static_cast<std::size_t>(std::max(0.0, v)), lo, hi);
}

std::vector<std::uint64_t> random_keys(Rng& rng, std::size_t n) {
  std::vector<std::uint64_t> keys(n);
  for (auto& k : keys) k = rng();
  return keys;
}

std::pair<std::vector<float>, std::vector<float>> random_signal_pair(Rng& rng, std::size_t n, std::size_t m) {
  std::normal_distribution<double> step(0.0, 1.0);
  std::vector<float> s(n);
  double v = 0;
  for (auto& x : s) {
    v += step(rng);
    x = static_cast<float>(v);
  }
  std::vector<float> r(m);
  std::normal_distribution<double> noise(0.0, 0.25);
  for (std::size_t j = 0; j < m; ++j) {
    const double t = m == 1 ? 0.0 : static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(m - 1);
    const double warped = t + 0.1 * static_cast<double>(n) * std::sin(3.14159265358979 * t / static_cast<double>(n));
    const auto idx = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::max(0.0, warped)));
    r[j] = s[idx] + static_cast<float>(noise(rng));
  }
  return {std::move(s), std::move(r)};
}

std::string random_dna(Rng& rng, std::size_t n) {
  std::string s(n, 'A');
  for (auto& c : s) c = kBases[rng() % 4];
  return s;
}

std::string mutate(Rng& rng, std::string_view seq, double accuracy, MutationCounts* counts) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::string out;
  out.reserve(seq.size() + seq.size() / 8);
  MutationCounts local;
  for (char b : seq) {
    if (u(rng) >= 1.0 - accuracy) {
      out.push_back(b);
      continue;
    }
    switch (rng() % 3) {
      case 0:
        out.push_back(other_base(rng, b));
        ++local.substitutions;
        break;
      case 1:
        out.push_back(kBases[rng() % 4]);
        out.push_back(b);
        ++local.insertions;
        break;
      default:
        ++local.deletions;
        break;
    }
  }
  if (counts != nullptr) *counts = local;
  return out;
}

std::string synthetic_reference(std::uint64_t seed, std::size_t size, const RepeatModel& model) {
  Rng rng(seed);
  const std::size_t family_bp = model.unit_bp * model.copies;
  const auto repeat_bp = static_cast<std::size_t>(model.fraction * static_cast<double>(size));
  const std::size_t families = family_bp == 0 ? 0 : repeat_bp / family_bp;
  std::vector<std::string> segments;
  for (std::size_t f = 0; f < families; ++f) {
    const std::string unit = random_dna(rng, model.unit_bp);
    for (std::size_t c = 0; c < model.copies; ++c) {
      std::string copy = unit;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& b : copy) {
        if (u(rng) < model.divergence) b = other_base(rng, b);
      }
      segments.push_back(std::move(copy));
    }
  }
  // Unique sequence fills the rest in pieces the size of one repeat unit.
  std::size_t used = families * family_bp;
  const std::size_t piece = std::max<std::size_t>(model.unit_bp, 1);
  while (used < size) {
    const std::size_t len = std::min(piece, size - used);
    segments.push_back(random_dna(rng, len));
    used += len;
  }
  std::shuffle(segments.begin(), segments.end(), rng);
  std::string out;
  out.reserve(size);
  for (const auto& s : segments) out += s;
  out.resize(size);
  return out;
}

std::vector<Anchor> random_anchors(Rng& rng, std::size_t n) {
  constexpr std::size_t kDiagonals = 16;
  constexpr std::uint32_t kRefSpan = 10'000'000;
  const std::size_t noise = n / 10;
  const std::size_t per_diag = (n - noise) / kDiagonals;
  std::uniform_int_distribution<std::uint32_t> step(3, 15);
  std::uniform_int_distribution<std::uint32_t> indel(1, 4);
  std::uniform_int_distribution<std::uint32_t> start(0, kRefSpan);
  std::vector<std::uint64_t> keys;
  keys.reserve(n);
  std::uint32_t query_len = 1;
  for (std::size_t d = 0; d < kDiagonals; ++d) {
    std::uint32_t q = static_cast<std::uint32_t>(rng() % 100);
    std::uint32_t r = start(rng);
    const std::size_t count = d + 1 == kDiagonals ? n - noise - per_diag * (kDiagonals - 1) : per_diag;
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t s = step(rng);
      q += s;
      r += s;
      if (rng() % 10 == 0) {
        const std::uint32_t e = indel(rng);
        r = (rng() % 2 == 0) ? r + e : r - std::min(r, e);
      }
      keys.push_back(Anchor{q, r}.key());
      query_len = std::max(query_len, q);
    }
  }
  std::uniform_int_distribution<std::uint32_t> nq(0, query_len);
  for (std::size_t i = 0; i < noise; ++i) keys.push_back(Anchor{nq(rng), start(rng)}.key());
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<Anchor> anchors;
  anchors.reserve(keys.size());
  for (std::uint64_t k : keys) anchors.push_back(Anchor::from_key(k));
  return anchors;
}

}  // namespace squire
